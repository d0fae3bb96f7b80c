#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ibr {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Singular grid-voltage transform guard (V).
inline constexpr double kEpsVoltage = 1e-9;
// Undefined power-factor guard on ||(p,q)||.
inline constexpr double kEpsState = 1e-9;

struct SingularGridVoltage : std::domain_error {
    explicit SingularGridVoltage(double v_g)
        : std::domain_error("grid voltage " + std::to_string(v_g) +
                            " V makes the aux/phase transform singular") {}
};

struct UndefinedPowerFactor : std::domain_error {
    UndefinedPowerFactor() : std::domain_error("power factor undefined at (p,q) ~ (0,0)") {}
};

struct NotHurwitz : std::runtime_error {
    NotHurwitz() : std::runtime_error("closed loop is not Hurwitz; no Lyapunov certificate") {}
};

struct RiccatiDiverged : std::runtime_error {
    explicit RiccatiDiverged(double residual)
        : std::runtime_error("Riccati iteration stalled, residual " + std::to_string(residual)) {}
};

struct NonFiniteState : std::runtime_error {
    explicit NonFiniteState(double t)
        : std::runtime_error("state diverged (|component| > 1e12) at t = " + std::to_string(t)) {}
};

struct NoStabilizingGain : std::runtime_error {
    NoStabilizingGain() : std::runtime_error("no sampled gain satisfies the Hurwitz test") {}
};

// Physical and constraint parameters of the grid-connected inverter.
// omega == 2*pi*freq is enforced on construction; build via from_omega or
// from_frequency rather than aggregate-initializing.
struct InverterParams {
    double r_filter = 0.0;   // filter resistance (ohm)
    double l_filter = 0.0;   // filter inductance (H)
    double freq = 0.0;       // grid frequency (Hz)
    double omega = 0.0;      // angular frequency (rad/s)
    double v_g_min = 0.0;    // grid-voltage magnitude bounds (V)
    double v_g_max = 0.0;
    double u_out_min = 0.0;  // inverter output-voltage magnitude bounds (V)
    double u_out_max = 0.0;
    double pf_min = 0.0;     // power-factor lower bound

    static InverterParams from_omega(double r, double l, double omega, double v_g_min,
                                     double v_g_max, double u_out_min, double u_out_max,
                                     double pf_min);
    static InverterParams from_frequency(double r, double l, double freq, double v_g_min,
                                         double v_g_max, double u_out_min, double u_out_max,
                                         double pf_min);

    // Throws std::invalid_argument listing every violated invariant.
    void validate() const;
};

// A, B, E of x_dot = A x + B u + E * v_g^2.
struct StateMatrices {
    Eigen::Matrix2d a_mat;
    Eigen::Matrix2d b_mat;
    Eigen::Vector2d e_vec;
};

struct PowerState {
    double p = 0.0;  // active power (W)
    double q = 0.0;  // reactive power (Var)

    Eigen::Vector2d vec() const { return {p, q}; }
    static PowerState from(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }
};

struct Setpoint {
    double p_ref = 0.0;  // W
    double q_ref = 0.0;  // Var

    Eigen::Vector2d vec() const { return {p_ref, q_ref}; }
    static Setpoint from(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }
};

// Auxiliary control input; ||u|| = U * V_G (V^2).
struct AuxInput {
    double u_p = 0.0;
    double u_q = 0.0;

    Eigen::Vector2d vec() const { return {u_p, u_q}; }
    double norm() const { return std::hypot(u_p, u_q); }
};

// Inverter output voltage in the alpha-beta frame (V).
struct PhaseInput {
    double u_alpha = 0.0;
    double u_beta = 0.0;

    double norm() const { return std::hypot(u_alpha, u_beta); }
};

// Static feedback gain: u = -K (x - x_ref) + feedforward.
struct Gain {
    Eigen::Matrix2d k;

    Gain() : k(Eigen::Matrix2d::Zero()) {}
    explicit Gain(const Eigen::Matrix2d& m) : k(m) {}
    Gain(double k11, double k12, double k21, double k22) {
        k << k11, k12, k21, k22;
    }

    double frobenius() const { return k.norm(); }
};

}  // namespace ibr
