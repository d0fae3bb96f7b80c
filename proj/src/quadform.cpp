#include "ibr/quadform.hpp"

namespace ibr {

QuadraticForm::QuadraticForm(Eigen::MatrixXd q, Eigen::VectorXd r, double c_in)
    : dim(static_cast<int>(q.rows())), q_mat(std::move(q)), r_vec(std::move(r)), c(c_in) {
    if (q_mat.rows() != q_mat.cols() || r_vec.size() != q_mat.rows())
        throw std::invalid_argument("quadratic form dimension mismatch");
    q_mat = 0.5 * (q_mat + q_mat.transpose()).eval();
}

double QuadraticForm::evaluate(const Eigen::VectorXd& z) const {
    if (z.size() != dim) throw std::invalid_argument("evaluate: dimension mismatch");
    return z.dot(q_mat * z) + r_vec.dot(z) + c;
}

Eigen::MatrixXd homogenize(const QuadraticForm& q) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(q.dim + 1, q.dim + 1);
    h.topLeftCorner(q.dim, q.dim) = q.q_mat;
    h.topRightCorner(q.dim, 1) = 0.5 * q.r_vec;
    h.bottomLeftCorner(1, q.dim) = 0.5 * q.r_vec.transpose();
    h(q.dim, q.dim) = q.c;
    return h;
}

QuadraticForm state_quadratic_x(double pf_min) {
    const double pf2 = pf_min * pf_min;
    Eigen::Matrix2d q;
    q << 1.0 - pf2, 0.0, 0.0, -pf2;
    return {q, Eigen::Vector2d::Zero(), 0.0};
}

QuadraticForm state_quadratic_z(double pf_min) {
    const double pf2 = pf_min * pf_min;
    Eigen::Matrix3d q = Eigen::Matrix3d::Zero();
    q(1, 1) = 1.0 - pf2;
    q(2, 2) = -pf2;
    return {q, Eigen::Vector3d::Zero(), 0.0};
}

QuadraticForm disturbance_quadratic(double v_g_min, double v_g_max) {
    const double lo2 = v_g_min * v_g_min;
    const double hi2 = v_g_max * v_g_max;
    Eigen::Matrix3d q = Eigen::Matrix3d::Zero();
    q(0, 0) = -1.0;
    Eigen::Vector3d r(lo2 + hi2, 0.0, 0.0);
    return {q, r, -lo2 * hi2};
}

std::pair<QuadraticForm, QuadraticForm> envelope_quadratics(double rho) {
    Eigen::Matrix3d qp = Eigen::Matrix3d::Zero();
    qp(1, 1) = -1.0;
    Eigen::Matrix3d qq = Eigen::Matrix3d::Zero();
    qq(2, 2) = -1.0;
    return {QuadraticForm{qp, Eigen::Vector3d::Zero(), rho * rho},
            QuadraticForm{qq, Eigen::Vector3d::Zero(), rho * rho}};
}

QuadraticForm invariance_derivative_quadratic(const StateMatrices& mats, const Gain& gain,
                                              const Setpoint& setpoint, double pf_min) {
    const double pf2 = pf_min * pf_min;
    Eigen::Matrix2d d;
    d << 2.0 * (1.0 - pf2), 0.0, 0.0, -2.0 * pf2;
    const Eigen::Matrix2d acl = mats.a_mat - mats.b_mat * gain.k;
    const Eigen::Matrix2d dacl = d * acl;
    return {dacl, Eigen::Vector2d(-dacl * setpoint.vec()), 0.0};
}

std::pair<QuadraticForm, QuadraticForm> input_quadratics(const StateMatrices& mats,
                                                         const Gain& gain,
                                                         const Setpoint& setpoint,
                                                         double u_out_min, double u_out_max) {
    const Eigen::Matrix2d b_inv = mats.b_mat.inverse();
    Eigen::Matrix<double, 2, 3> m;
    m.col(0) = b_inv * mats.e_vec;
    m.rightCols<2>() = gain.k;
    const Eigen::Vector2d w = (gain.k - b_inv * mats.a_mat) * setpoint.vec();

    const Eigen::Matrix3d mtm = m.transpose() * m;
    const Eigen::Vector3d mtw = m.transpose() * w;
    const Eigen::Vector3d lo_cap(u_out_min * u_out_min, 0.0, 0.0);
    const Eigen::Vector3d hi_cap(u_out_max * u_out_max, 0.0, 0.0);

    QuadraticForm lower{mtm, Eigen::Vector3d(-2.0 * mtw - lo_cap), w.squaredNorm()};
    QuadraticForm upper{-mtm, Eigen::Vector3d(2.0 * mtw + hi_cap), -w.squaredNorm()};
    return {lower, upper};
}

PencilSet assemble_pencils(const StateMatrices& mats, const Gain& gain, const Setpoint& setpoint,
                           const InverterParams& params) {
    PencilSet out;
    out.sc.m_b = homogenize(invariance_derivative_quadratic(mats, gain, setpoint, params.pf_min));
    out.sc.m_a = homogenize(state_quadratic_x(params.pf_min));

    const Eigen::MatrixXd m_a_z = homogenize(state_quadratic_z(params.pf_min)) +
                                  homogenize(disturbance_quadratic(params.v_g_min, params.v_g_max));
    auto [lower, upper] =
        input_quadratics(mats, gain, setpoint, params.u_out_min, params.u_out_max);
    out.ic1 = {homogenize(lower), m_a_z};
    out.ic2 = {homogenize(upper), m_a_z};
    return out;
}

}  // namespace ibr
