#include "ibr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ibr/rng.hpp"

namespace ibr {

GridVoltageProfile GridVoltageProfile::constant(double v) {
    GridVoltageProfile p;
    p.kind = Kind::constant;
    p.v_const = v;
    return p;
}

GridVoltageProfile GridVoltageProfile::jitter(double v_min, double v_max, double hold,
                                              std::uint64_t seed) {
    GridVoltageProfile p;
    p.kind = Kind::jitter;
    p.v_min = v_min;
    p.v_max = v_max;
    p.hold = hold;
    p.seed = seed;
    return p;
}

GridVoltageProfile GridVoltageProfile::piecewise(std::vector<std::pair<double, double>> pts) {
    GridVoltageProfile p;
    p.kind = Kind::piecewise;
    p.points = std::move(pts);
    return p;
}

ControllerSpec ControllerSpec::static_gain_spec(const Gain& g) {
    ControllerSpec c;
    c.kind = Kind::static_gain;
    c.gain = g;
    return c;
}

ControllerSpec ControllerSpec::lqr_spec(const Eigen::Matrix2d& q, const Eigen::Matrix2d& r) {
    ControllerSpec c;
    c.kind = Kind::lqr;
    c.q_weight = q;
    c.r_weight = r;
    return c;
}

void Scenario::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("scenario: dt must be > 0");
    if (schedule.empty() || schedule.front().first != 0.0)
        throw std::invalid_argument("scenario: schedule must start at t = 0");
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (!(schedule[i].first > schedule[i - 1].first))
            throw std::invalid_argument("scenario: schedule times must strictly increase");
    }
    if (!(duration > 0.0)) throw std::invalid_argument("scenario: duration must be > 0");
}

Setpoint Scenario::setpoint_at(double t) const {
    Setpoint cur = schedule.front().second;
    for (const auto& [ts, sp] : schedule) {
        if (t >= ts - 1e-12) cur = sp;
    }
    return cur;
}

namespace {

// Walks the voltage profile; draws are consumed in time order so a given seed
// yields one fixed v_g sequence regardless of caller.
class VoltageSequencer {
public:
    VoltageSequencer(const GridVoltageProfile& profile)
        : profile_(profile), rng_(profile.seed) {
        if (profile_.kind == GridVoltageProfile::Kind::jitter) {
            current_ = rng_.uniform(profile_.v_min, profile_.v_max);
            next_draw_ = profile_.hold;
        }
    }

    double at(double t) {
        switch (profile_.kind) {
            case GridVoltageProfile::Kind::constant:
                return profile_.v_const;
            case GridVoltageProfile::Kind::jitter:
                while (t >= next_draw_ - 1e-12) {
                    current_ = rng_.uniform(profile_.v_min, profile_.v_max);
                    next_draw_ += profile_.hold;
                }
                return current_;
            case GridVoltageProfile::Kind::piecewise: {
                double v = profile_.points.front().second;
                for (const auto& [ts, vv] : profile_.points) {
                    if (t >= ts - 1e-12) v = vv;
                }
                return v;
            }
        }
        return profile_.v_const;
    }

private:
    GridVoltageProfile profile_;
    Rng rng_;
    double current_ = 0.0;
    double next_draw_ = 0.0;
};

}  // namespace

TrajectoryRecord integrate(const Scenario& scenario, const InverterParams& params) {
    scenario.validate();
    const StateMatrices mats = build_matrices(params);

    Gain gain = scenario.controller.gain;
    if (scenario.controller.kind == ControllerSpec::Kind::lqr) {
        gain = lqr_gain(mats, scenario.controller.q_weight, scenario.controller.r_weight);
    }

    const Eigen::Matrix2d acl = mats.a_mat - mats.b_mat * gain.k;
    const int n_sub = std::max(1, static_cast<int>(std::ceil(scenario.dt * acl.norm())));
    const double h = scenario.dt / n_sub;

    VoltageSequencer voltage(scenario.profile);
    const int n_steps = static_cast<int>(std::floor(scenario.duration / scenario.dt + 1e-9));

    TrajectoryRecord record;
    record.gain_used = gain;
    record.samples.reserve(n_steps + 1);

    Eigen::Vector2d x = scenario.initial_state.vec();
    auto deriv = [&](const Eigen::Vector2d& xx, double tt, double v_g) {
        const Setpoint sp = scenario.setpoint_at(tt);
        const AuxInput u = control_law(PowerState::from(xx), sp, gain, v_g, mats);
        return Eigen::Vector2d(mats.a_mat * xx + mats.b_mat * u.vec() +
                               mats.e_vec * (v_g * v_g));
    };

    for (int i = 0; i <= n_steps; ++i) {
        const double t = i * scenario.dt;
        const double v_g = voltage.at(t);

        TrajectorySample s;
        s.t = t;
        s.p = x.x();
        s.q = x.y();
        const Setpoint sp = scenario.setpoint_at(t);
        const AuxInput u = control_law(PowerState::from(x), sp, gain, v_g, mats);
        s.u_p = u.u_p;
        s.u_q = u.u_q;
        const PhaseInput phase = phase_from_aux(u, v_g, t, params.omega);
        s.u_alpha = phase.u_alpha;
        s.u_beta = phase.u_beta;
        s.v_g = v_g;
        const double nx = std::hypot(x.x(), x.y());
        s.pf = nx > kEpsState ? x.x() / nx : std::numeric_limits<double>::quiet_NaN();
        s.u_out = u.norm() / v_g;
        s.m_state = state_constraint_margin({x.x(), x.y()}, params.pf_min).quadratic_margin;
        const InputConstraintMargins im = input_constraint_margins(u, v_g, params);
        s.m_in_lo = im.lower;
        s.m_in_hi = im.upper;
        record.samples.push_back(s);

        if (i == n_steps) break;
        for (int k = 0; k < n_sub; ++k) {
            const double tk = t + k * h;
            const Eigen::Vector2d k1 = deriv(x, tk, v_g);
            const Eigen::Vector2d k2 = deriv(x + 0.5 * h * k1, tk + 0.5 * h, v_g);
            const Eigen::Vector2d k3 = deriv(x + 0.5 * h * k2, tk + 0.5 * h, v_g);
            const Eigen::Vector2d k4 = deriv(x + h * k3, tk + h, v_g);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!(std::abs(x.x()) < 1e12 && std::abs(x.y()) < 1e12)) {
            throw NonFiniteState(t + scenario.dt);
        }
    }
    return record;
}

namespace {

void record_violation(ViolationStat& stat, double margin, double t) {
    ++stat.count;
    if (margin < stat.worst) stat.worst = margin;
    if (stat.first_time < 0.0) stat.first_time = t;
}

}  // namespace

ViolationSummary monitor(const TrajectoryRecord& traj, const InverterParams& params) {
    ViolationSummary sum;
    for (const TrajectorySample& s : traj.samples) {
        const double in_scale = 1e-9 * params.u_out_max * s.v_g;
        if (s.m_in_lo < -in_scale) record_violation(sum.input_lower, s.m_in_lo, s.t);
        if (s.m_in_hi < -in_scale) record_violation(sum.input_upper, s.m_in_hi, s.t);
        const double nx = std::hypot(s.p, s.q);
        if (std::isfinite(s.pf) && nx > kEpsState) {
            const double pf_margin = s.pf - params.pf_min;
            if (pf_margin < -1e-9) record_violation(sum.power_factor, pf_margin, s.t);
        }
        const double v_scale = 1e-9 * params.u_out_max;
        if (s.u_out - params.u_out_min < -v_scale)
            record_violation(sum.voltage_lower, s.u_out - params.u_out_min, s.t);
        if (params.u_out_max - s.u_out < -v_scale)
            record_violation(sum.voltage_upper, params.u_out_max - s.u_out, s.t);
    }
    return sum;
}

Gain lqr_gain(const StateMatrices& mats, const Eigen::Matrix2d& q_weight,
              const Eigen::Matrix2d& r_weight) {
    const Eigen::Matrix2d b_inv = mats.b_mat.inverse();
    const Eigen::Matrix2d r_inv = r_weight.inverse();

    // Kleinman iteration: solve the Lyapunov equation for the current gain,
    // then K <- R^-1 B^T P. Quadratic convergence from any stabilizing start.
    Eigen::Matrix2d k = b_inv * (mats.a_mat + Eigen::Matrix2d::Identity());
    Eigen::Matrix2d p = Eigen::Matrix2d::Zero();
    for (int it = 0; it < 200; ++it) {
        const Eigen::Matrix2d m = mats.a_mat - mats.b_mat * k;
        Eigen::Matrix3d sys;
        sys << 2.0 * m(0, 0), 2.0 * m(1, 0), 0.0,
               m(0, 1), m(0, 0) + m(1, 1), m(1, 0),
               0.0, 2.0 * m(0, 1), 2.0 * m(1, 1);
        const Eigen::Matrix2d rhs_m = -(q_weight + k.transpose() * r_weight * k);
        const Eigen::Vector3d rhs(rhs_m(0, 0), rhs_m(0, 1), rhs_m(1, 1));
        const Eigen::Vector3d sol = sys.fullPivLu().solve(rhs);
        p << sol(0), sol(1), sol(1), sol(2);
        const Eigen::Matrix2d k_next = r_inv * mats.b_mat.transpose() * p;
        const double delta = (k_next - k).norm();
        k = k_next;
        if (delta < 1e-13 * (1.0 + k.norm())) break;
    }
    const Eigen::Matrix2d residual = mats.a_mat.transpose() * p + p * mats.a_mat -
                                     p * mats.b_mat * r_inv * mats.b_mat.transpose() * p +
                                     q_weight;
    if (residual.norm() > 1e-9) throw RiccatiDiverged(residual.norm());
    const Gain out(k);
    if (!is_hurwitz(mats, out).hurwitz) throw RiccatiDiverged(residual.norm());
    return out;
}

Scenario ride_through_scenario(const InverterParams& params, const ControllerSpec& controller,
                               std::uint64_t jitter_seed) {
    // Jitter band inside the params band; the upper edge keeps the pre-fault
    // feedforward within the voltage annulus (limit 113.30 V at (1300, 120)).
    const double v_lo = std::max(params.v_g_min, 106.0);
    const double v_hi = std::min(params.v_g_max, 113.0);
    Scenario sc;
    sc.duration = 9.0;
    sc.dt = 1e-4;
    sc.initial_state = {1300.0, 120.0};
    sc.schedule = {{0.0, {1300.0, 120.0}}, {3.0, {20.0, 0.0}}, {6.0, {1300.0, 120.0}}};
    sc.profile = GridVoltageProfile::jitter(v_lo, v_hi, 0.01, jitter_seed);
    sc.controller = controller;
    return sc;
}

std::vector<SegmentMetrics> settling_metrics(const TrajectoryRecord& traj,
                                             const std::vector<std::pair<double, Setpoint>>& schedule,
                                             double band) {
    if (!(band > 0.0 && band < 1.0))
        throw std::invalid_argument("settling_metrics: band must lie in (0,1)");
    std::vector<SegmentMetrics> out;
    if (traj.samples.empty()) return out;
    const double t_final = traj.samples.back().t;

    for (std::size_t seg = 0; seg < schedule.size(); ++seg) {
        const double t0 = schedule[seg].first;
        const double t1 = seg + 1 < schedule.size() ? schedule[seg + 1].first : t_final;
        const Setpoint target = schedule[seg].second;
        const double tol_p = band * (1.0 + std::abs(target.p_ref));
        const double tol_q = band * (1.0 + std::abs(target.q_ref));

        SegmentMetrics m;
        m.t_start = t0;
        m.t_end = t1;
        m.target = target;

        double settle_at = t1;
        bool inside = false;
        const TrajectorySample* last = nullptr;
        for (const TrajectorySample& s : traj.samples) {
            if (s.t < t0 - 1e-12 || s.t > t1 + 1e-12) continue;
            last = &s;
            const bool in_band =
                std::abs(s.p - target.p_ref) <= tol_p && std::abs(s.q - target.q_ref) <= tol_q;
            if (in_band && !inside) {
                inside = true;
                settle_at = s.t;
            } else if (!in_band && inside) {
                inside = false;
                settle_at = t1;
            }
        }
        m.settling_time = inside ? std::max(0.0, settle_at - t0) : t1 - t0;
        if (last != nullptr) {
            m.sse_p = last->p - target.p_ref;
            m.sse_q = last->q - target.q_ref;
        }
        out.push_back(m);
    }
    return out;
}

}  // namespace ibr
