#include "ibr/model.hpp"

#include <sstream>
#include <vector>

namespace ibr {

namespace {

void check(std::vector<std::string>& bad, bool ok, const std::string& what) {
    if (!ok) bad.push_back(what);
}

}  // namespace

InverterParams InverterParams::from_omega(double r, double l, double omega, double v_g_min,
                                          double v_g_max, double u_out_min, double u_out_max,
                                          double pf_min) {
    InverterParams p;
    p.r_filter = r;
    p.l_filter = l;
    p.omega = omega;
    p.freq = omega / kTwoPi;
    p.v_g_min = v_g_min;
    p.v_g_max = v_g_max;
    p.u_out_min = u_out_min;
    p.u_out_max = u_out_max;
    p.pf_min = pf_min;
    p.validate();
    return p;
}

InverterParams InverterParams::from_frequency(double r, double l, double freq, double v_g_min,
                                              double v_g_max, double u_out_min, double u_out_max,
                                              double pf_min) {
    return from_omega(r, l, kTwoPi * freq, v_g_min, v_g_max, u_out_min, u_out_max, pf_min);
}

void InverterParams::validate() const {
    std::vector<std::string> bad;
    check(bad, std::isfinite(r_filter) && r_filter > 0, "r_filter must be > 0");
    check(bad, std::isfinite(l_filter) && l_filter > 0, "l_filter must be > 0");
    check(bad, std::isfinite(omega) && omega >= 0, "omega must be >= 0");
    check(bad, std::abs(omega - kTwoPi * freq) <= 1e-6 * (1.0 + std::abs(omega)),
          "omega must equal 2*pi*freq");
    check(bad, v_g_min > 0 && v_g_min <= v_g_max, "0 < v_g_min <= v_g_max required");
    check(bad, u_out_min > 0 && u_out_min <= u_out_max, "0 < u_out_min <= u_out_max required");
    check(bad, pf_min > 0 && pf_min < 1, "0 < pf_min < 1 required");
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << "invalid inverter parameters:";
        for (const auto& b : bad) msg << "\n  - " << b;
        throw std::invalid_argument(msg.str());
    }
}

StateMatrices build_matrices(const InverterParams& params) {
    const double rl = params.r_filter / params.l_filter;
    const double gain = 3.0 / (2.0 * params.l_filter);
    StateMatrices m;
    m.a_mat << -rl, -params.omega, params.omega, -rl;
    m.b_mat = gain * Eigen::Matrix2d::Identity();
    m.e_vec << -gain, 0.0;
    return m;
}

AuxInput aux_from_phase(const PhaseInput& phase, double v_g, double t, double omega) {
    const double vga = v_g * std::cos(omega * t);
    const double vgb = v_g * std::sin(omega * t);
    return {vga * phase.u_alpha + vgb * phase.u_beta,
            vgb * phase.u_alpha - vga * phase.u_beta};
}

PhaseInput phase_from_aux(const AuxInput& aux, double v_g, double t, double omega) {
    if (!(v_g > kEpsVoltage)) throw SingularGridVoltage(v_g);
    const double c = std::cos(omega * t);
    const double s = std::sin(omega * t);
    return {(c * aux.u_p + s * aux.u_q) / v_g,
            (s * aux.u_p - c * aux.u_q) / v_g};
}

double power_factor(const PowerState& state) {
    const double n = std::hypot(state.p, state.q);
    if (!(n > kEpsState)) throw UndefinedPowerFactor();
    return state.p / n;
}

StateConstraintMargin state_constraint_margin(const PowerState& state, double pf_min) {
    const double pf2 = pf_min * pf_min;
    return {(1.0 - pf2) * state.p * state.p - pf2 * state.q * state.q, state.p >= 0.0};
}

InputConstraintMargins input_constraint_margins(const AuxInput& aux, double v_g,
                                                const InverterParams& params) {
    const double n = aux.norm();
    return {n - params.u_out_min * v_g, params.u_out_max * v_g - n};
}

AuxInput control_law(const PowerState& state, const Setpoint& setpoint, const Gain& gain,
                     double v_g, const StateMatrices& mats) {
    const Eigen::Matrix2d b_inv = mats.b_mat.inverse();
    const Eigen::Vector2d u = -gain.k * (state.vec() - setpoint.vec()) -
                              b_inv * mats.a_mat * setpoint.vec() -
                              b_inv * mats.e_vec * (v_g * v_g);
    return {u.x(), u.y()};
}

PowerState closed_loop_derivative(const PowerState& state, const Setpoint& setpoint,
                                  const Gain& gain, const StateMatrices& mats) {
    const Eigen::Matrix2d acl = mats.a_mat - mats.b_mat * gain.k;
    return PowerState::from(acl * (state.vec() - setpoint.vec()));
}

}  // namespace ibr
