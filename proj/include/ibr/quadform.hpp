#pragma once

#include <utility>

#include "ibr/types.hpp"

namespace ibr {

// z |-> z^T Q z + r^T z + c with Q symmetrized on construction.
// The dim-3 coordinate is fixed as z = [V_G^2, P, Q]^T everywhere.
struct QuadraticForm {
    int dim = 0;
    Eigen::MatrixXd q_mat;
    Eigen::VectorXd r_vec;
    double c = 0.0;

    QuadraticForm() = default;
    QuadraticForm(Eigen::MatrixXd q, Eigen::VectorXd r, double c_in);

    double evaluate(const Eigen::VectorXd& z) const;
};

// [[Q, r/2],[r^T/2, c]]; satisfies [z;1]^T H [z;1] == evaluate(z).
Eigen::MatrixXd homogenize(const QuadraticForm& q);

// F(lambda) = m_b - lambda * m_a, both symmetric, same size.
struct Pencil {
    Eigen::MatrixXd m_b;
    Eigen::MatrixXd m_a;

    Eigen::MatrixXd at(double lambda) const { return m_b - lambda * m_a; }
};

// Power-factor sector in (p, q): diag(1-pf^2, -pf^2).
QuadraticForm state_quadratic_x(double pf_min);

// Same sector embedded in z = [V_G^2, P, Q].
QuadraticForm state_quadratic_z(double pf_min);

// Nonnegative exactly on v_g^2 in [v_g_min^2, v_g_max^2].
QuadraticForm disturbance_quadratic(double v_g_min, double v_g_max);

// Operating-envelope caps rho^2 - P^2 >= 0 and rho^2 - Q^2 >= 0 in z.
std::pair<QuadraticForm, QuadraticForm> envelope_quadratics(double rho);

// d/dt of state_quadratic_x along the closed loop (A-BK)(x - x_ref):
// q = sym(D (A-BK)), r = -D (A-BK) x_ref, c = 0 with D = diag(2(1-pf^2), -2 pf^2).
QuadraticForm invariance_derivative_quadratic(const StateMatrices& mats, const Gain& gain,
                                              const Setpoint& setpoint, double pf_min);

// The annulus bound as two dim-3 quadratics (lower, upper):
// evaluate(lower, z) = ||u(z)||^2 - u_min^2 V_G^2, evaluate(upper, z) = u_max^2 V_G^2 - ||u(z)||^2,
// where u(z) = w - M z, M = [B^-1 E | K], w = (K - B^-1 A) x_ref.
std::pair<QuadraticForm, QuadraticForm> input_quadratics(const StateMatrices& mats,
                                                         const Gain& gain,
                                                         const Setpoint& setpoint,
                                                         double u_out_min, double u_out_max);

struct PencilSet {
    Pencil sc;   // dim 3: (homogenize(Q_b^SC), homogenize(Q_a^SC in x))
    Pencil ic1;  // dim 4: (homogenize(lower IC), homogenize(Q_a^SC in z) + homogenize(Q_a^DC))
    Pencil ic2;  // dim 4: (homogenize(upper IC), same m_a)
};

PencilSet assemble_pencils(const StateMatrices& mats, const Gain& gain, const Setpoint& setpoint,
                           const InverterParams& params);

}  // namespace ibr
