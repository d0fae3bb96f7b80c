#include "ibr/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ibr/rng.hpp"

namespace ibr {

namespace {

constexpr double kHurwitzEps = 1e-9;
constexpr double kGolden = 0.6180339887498949;

double min_eig(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double eps_psd(const Eigen::MatrixXd& f) { return 1e-8 * (1.0 + f.norm()); }

Eigen::MatrixXd apply_scale(const Eigen::MatrixXd& m, const Eigen::VectorXd& s) {
    if (s.size() == 0) return m;
    return s.asDiagonal() * m * s.asDiagonal();
}

struct EvalResult {
    double g;    // lambda_min of the scaled family
    double eps;  // matching tolerance
};

// lambda-min of F(l) = m_b - sum l_i terms[i], after congruence scaling.
EvalResult eval_family(const Eigen::MatrixXd& m_b, const std::vector<Eigen::MatrixXd>& terms,
                       const Eigen::VectorXd& lambdas, const Eigen::VectorXd& scale) {
    Eigen::MatrixXd f = m_b;
    for (int i = 0; i < static_cast<int>(terms.size()); ++i) f -= lambdas[i] * terms[i];
    f = apply_scale(f, scale);
    return {min_eig(f), eps_psd(f)};
}

// Discrete geometric grid covering [0, lambda_max]; the concave maximum over a
// grid brackets the continuous maximum between the neighbours of the argmax.
std::vector<double> lambda_grid(double lambda_max) {
    std::vector<double> g{0.0};
    for (double v = 1e-9; v < lambda_max; v *= 4.0) g.push_back(v);
    g.push_back(lambda_max);
    return g;
}

}  // namespace

const char* to_string(CertifyStage stage) {
    switch (stage) {
        case CertifyStage::none: return "none";
        case CertifyStage::envelope: return "envelope";
        case CertifyStage::hurwitz: return "hurwitz";
        case CertifyStage::lyapunov: return "lyapunov";
        case CertifyStage::sc: return "state-constraint";
        case CertifyStage::ic_lower: return "input-lower";
        case CertifyStage::ic_upper: return "input-upper";
    }
    return "unknown";
}

HurwitzResult is_hurwitz(const StateMatrices& mats, const Gain& gain) {
    const Eigen::Matrix2d acl = mats.a_mat - mats.b_mat * gain.k;
    const double tr = acl.trace();
    const double det = acl.determinant();
    const double disc = 0.25 * tr * tr - det;
    const double abscissa = disc >= 0.0 ? 0.5 * tr + std::sqrt(disc) : 0.5 * tr;
    return {abscissa < -kHurwitzEps, abscissa};
}

LyapunovCertificate solve_lyapunov(const StateMatrices& mats, const Gain& gain) {
    if (!is_hurwitz(mats, gain).hurwitz) throw NotHurwitz();
    const Eigen::Matrix2d m = mats.a_mat - mats.b_mat * gain.k;
    // Acl^T P + P Acl = -I in the unknowns (p11, p12, p22).
    Eigen::Matrix3d sys;
    sys << 2.0 * m(0, 0), 2.0 * m(1, 0), 0.0,
           m(0, 1), m(0, 0) + m(1, 1), m(1, 0),
           0.0, 2.0 * m(0, 1), 2.0 * m(1, 1);
    const Eigen::Vector3d rhs(-1.0, 0.0, -1.0);
    const Eigen::Vector3d sol = sys.fullPivLu().solve(rhs);
    LyapunovCertificate cert;
    cert.p_mat << sol(0), sol(1), sol(1), sol(2);
    const Eigen::Matrix2d decay = -(m.transpose() * cert.p_mat + cert.p_mat * m);
    cert.decay_margin = min_eig(decay);
    return cert;
}

FamilyFeasibility family_feasible(const Eigen::MatrixXd& m_b,
                                  const std::vector<Eigen::MatrixXd>& terms,
                                  const Eigen::VectorXd& scale, double lambda_max) {
    const int n = static_cast<int>(terms.size());
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(n);
    const std::vector<double> grid = lambda_grid(lambda_max);

    auto value = [&](const Eigen::VectorXd& l) { return eval_family(m_b, terms, l, scale); };

    double best = value(lam).g;
    bool at_bracket_end = false;

    // Coordinate ascent on the jointly concave map l |-> lambda_min(F(l)).
    for (int sweep = 0; sweep < 6; ++sweep) {
        bool improved = false;
        for (int i = 0; i < n; ++i) {
            auto coord = [&](double x) {
                Eigen::VectorXd l = lam;
                l[i] = x;
                return value(l).g;
            };
            int jbest = 0;
            double vbest = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < static_cast<int>(grid.size()); ++j) {
                const double v = coord(grid[j]);
                if (v > vbest) {
                    vbest = v;
                    jbest = j;
                }
            }
            at_bracket_end = at_bracket_end || (jbest == static_cast<int>(grid.size()) - 1);
            double lo = grid[std::max(jbest - 1, 0)];
            double hi = grid[std::min<std::size_t>(jbest + 1, grid.size() - 1)];
            // Golden-section maximization inside the bracket.
            double c = hi - kGolden * (hi - lo);
            double d = lo + kGolden * (hi - lo);
            double fc = coord(c), fd = coord(d);
            while (hi - lo > 1e-10 * (1.0 + hi)) {
                if (fc > fd) {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - kGolden * (hi - lo);
                    fc = coord(c);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + kGolden * (hi - lo);
                    fd = coord(d);
                }
            }
            const double xi = 0.5 * (lo + hi);
            const double vi = coord(xi);
            if (vi > best + 1e-15) {
                lam[i] = xi;
                best = vi;
                improved = true;
            }
        }
        if (!improved) break;
    }

    FamilyFeasibility out;
    const EvalResult peak = value(lam);
    if (peak.g < -peak.eps) {
        out.status = at_bracket_end ? PencilStatus::bracket_exhausted : PencilStatus::infeasible;
        out.lambdas = lam;
        out.margin = peak.g;
        return out;
    }

    // Min-norm multipliers: shrink along the feasible ray t * lam. Target the
    // 0-crossing when the peak clears zero so stored margins stay nonnegative.
    const bool strict = peak.g >= 0.0;
    auto feasible_at = [&](double t) {
        const EvalResult r = value(t * lam);
        return r.g >= (strict ? 0.0 : -r.eps);
    };
    if (feasible_at(0.0)) {
        lam.setZero();
    } else {
        double lo = 0.0, hi = 1.0;
        while (hi - lo > 1e-10) {
            const double mid = 0.5 * (lo + hi);
            if (feasible_at(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lam = hi * lam;
    }
    out.status = PencilStatus::feasible;
    out.lambdas = lam;
    out.margin = value(lam).g;
    return out;
}

PencilFeasibility pencil_feasible(const Pencil& pencil, double lambda_max,
                                  const Eigen::VectorXd& scale) {
    const FamilyFeasibility f = family_feasible(pencil.m_b, {pencil.m_a}, scale, lambda_max);
    return {f.status, f.status == PencilStatus::feasible ? f.lambdas[0] : 0.0, f.margin};
}

CertificationFamilies certification_families(const StateMatrices& mats, const Gain& gain,
                                             const Setpoint& setpoint,
                                             const InverterParams& params,
                                             const LyapunovCertificate& lyap,
                                             const CertifyOptions& opts) {
    CertificationFamilies fam;
    const double rho = opts.pq_envelope;

    // Sector contains the Lyapunov ellipsoid {(x-xr)^T P (x-xr) <= c0}, where
    // c0 makes the ellipsoid cover a Euclidean ball of radius sc_error_radius.
    const double c0 = opts.sc_error_radius * opts.sc_error_radius *
                      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(lyap.p_mat)
                          .eigenvalues()
                          .maxCoeff();
    const Eigen::Vector2d xr = setpoint.vec();
    QuadraticForm ball{-lyap.p_mat, Eigen::Vector2d(2.0 * lyap.p_mat * xr),
                       c0 - xr.dot(lyap.p_mat * xr)};
    fam.sc_b = homogenize(state_quadratic_x(params.pf_min));
    fam.sc_terms = {homogenize(ball)};
    fam.sc_scale = Eigen::Vector3d(rho, rho, 1.0);

    auto [lower, upper] =
        input_quadratics(mats, gain, setpoint, params.u_out_min, params.u_out_max);
    fam.ic1_b = homogenize(lower);
    fam.ic2_b = homogenize(upper);
    auto [cap_p, cap_q] = envelope_quadratics(rho);
    fam.ic_terms = {homogenize(state_quadratic_z(params.pf_min)),
                    homogenize(disturbance_quadratic(params.v_g_min, params.v_g_max)),
                    homogenize(cap_p), homogenize(cap_q)};
    fam.ic_scale = Eigen::Vector4d(params.v_g_max * params.v_g_max, rho, rho, 1.0);
    return fam;
}

CertifyOutcome check_achievable(const Gain& gain, const Setpoint& setpoint,
                                const InverterParams& params, const CertifyOptions& opts) {
    CertifyOutcome out;
    if (std::abs(setpoint.p_ref) > opts.pq_envelope ||
        std::abs(setpoint.q_ref) > opts.pq_envelope) {
        out.failed_at = CertifyStage::envelope;
        return out;
    }
    const StateMatrices mats = build_matrices(params);
    if (!is_hurwitz(mats, gain).hurwitz) {
        out.failed_at = CertifyStage::hurwitz;
        return out;
    }
    LyapunovCertificate lyap;
    try {
        lyap = solve_lyapunov(mats, gain);
    } catch (const NotHurwitz&) {
        out.failed_at = CertifyStage::lyapunov;
        return out;
    }
    if (!(lyap.decay_margin > 0.0) ||
        !(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(lyap.p_mat).eigenvalues().minCoeff() >
          0.0)) {
        out.failed_at = CertifyStage::lyapunov;
        return out;
    }

    const CertificationFamilies fam =
        certification_families(mats, gain, setpoint, params, lyap, opts);

    const FamilyFeasibility sc =
        family_feasible(fam.sc_b, fam.sc_terms, fam.sc_scale, opts.lambda_max);
    if (sc.status != PencilStatus::feasible) {
        out.failed_at = CertifyStage::sc;
        return out;
    }
    const FamilyFeasibility ic1 =
        family_feasible(fam.ic1_b, fam.ic_terms, fam.ic_scale, opts.lambda_max);
    if (ic1.status != PencilStatus::feasible) {
        out.failed_at = CertifyStage::ic_lower;
        return out;
    }
    const FamilyFeasibility ic2 =
        family_feasible(fam.ic2_b, fam.ic_terms, fam.ic_scale, opts.lambda_max);
    if (ic2.status != PencilStatus::feasible) {
        out.failed_at = CertifyStage::ic_upper;
        return out;
    }

    AchievabilityCertificate cert;
    cert.gain = gain;
    cert.lyap = lyap;
    cert.multipliers.lambda_sc = sc.lambdas[0];
    cert.multipliers.lambda_ic1 = ic1.lambdas;
    cert.multipliers.lambda_ic2 = ic2.lambdas;
    cert.psd_margins = {sc.margin, ic1.margin, ic2.margin};
    out.certificate = cert;
    return out;
}

FixedCheckResult check_achievable_fixed(const Gain& gain, const Setpoint& setpoint,
                                        const LyapunovCertificate& lyap,
                                        const Multipliers& multipliers,
                                        const InverterParams& params,
                                        const CertifyOptions& opts) {
    const StateMatrices mats = build_matrices(params);
    const CertificationFamilies fam =
        certification_families(mats, gain, setpoint, params, lyap, opts);

    FixedCheckResult res;
    const EvalResult sc = eval_family(fam.sc_b, fam.sc_terms,
                                      Eigen::VectorXd::Constant(1, multipliers.lambda_sc),
                                      fam.sc_scale);
    const EvalResult i1 = eval_family(fam.ic1_b, fam.ic_terms, multipliers.lambda_ic1,
                                      fam.ic_scale);
    const EvalResult i2 = eval_family(fam.ic2_b, fam.ic_terms, multipliers.lambda_ic2,
                                      fam.ic_scale);
    res.margins = {sc.g, i1.g, i2.g};
    res.ok = sc.g >= -sc.eps && i1.g >= -i1.eps && i2.g >= -i2.eps;
    if (std::abs(setpoint.p_ref) > opts.pq_envelope ||
        std::abs(setpoint.q_ref) > opts.pq_envelope) {
        res.ok = false;
    }
    return res;
}

std::optional<std::pair<Gain, AchievabilityCertificate>> synthesize_gain(
    const Setpoint& setpoint, const InverterParams& params, const SearchConfig& search,
    std::uint64_t seed, const CertifyOptions& opts) {
    Rng rng(seed);
    std::optional<Gain> best;
    std::optional<AchievabilityCertificate> best_cert;
    double best_norm = std::numeric_limits<double>::infinity();

    for (int i = 0; i < search.n_starts; ++i) {
        Gain cand(rng.uniform(-search.k_box, search.k_box),
                  rng.uniform(-search.k_box, search.k_box),
                  rng.uniform(-search.k_box, search.k_box),
                  rng.uniform(-search.k_box, search.k_box));
        if (cand.frobenius() >= best_norm) continue;
        const CertifyOutcome out = check_achievable(cand, setpoint, params, opts);
        if (out.ok()) {
            best = cand;
            best_cert = out.certificate;
            best_norm = cand.frobenius();
        }
    }
    if (!best) return std::nullopt;

    // Coordinate-wise pattern search, keeping feasibility at every accepted step.
    double step = search.k_box * 0.5;
    for (int it = 0; it < search.refine_steps && step >= search.min_step; ++it) {
        bool moved = false;
        for (int idx = 0; idx < 4; ++idx) {
            for (const double dir : {-1.0, 1.0}) {
                Gain cand = *best;
                cand.k(idx / 2, idx % 2) += dir * step;
                if (cand.frobenius() >= best_norm) continue;
                const CertifyOutcome out = check_achievable(cand, setpoint, params, opts);
                if (out.ok()) {
                    best = cand;
                    best_cert = out.certificate;
                    best_norm = cand.frobenius();
                    moved = true;
                }
            }
        }
        if (!moved) step *= search.shrink;
    }
    return std::make_pair(*best, *best_cert);
}

std::optional<Eigen::Vector3d> implication_counterexample(const Gain& gain,
                                                          const Setpoint& setpoint,
                                                          const InverterParams& params,
                                                          int n_samples, double pq_range,
                                                          std::uint64_t seed,
                                                          const CertifyOptions& opts) {
    const StateMatrices mats = build_matrices(params);
    const double pf2 = params.pf_min * params.pf_min;
    Rng rng(seed);
    for (int i = 0; i < n_samples; ++i) {
        const double v_g = rng.uniform(params.v_g_min, params.v_g_max);
        const double p = rng.uniform(-pq_range, pq_range);
        const double q = rng.uniform(-pq_range, pq_range);
        if ((1.0 - pf2) * p * p - pf2 * q * q < 0.0) continue;
        if (std::abs(p) > opts.pq_envelope || std::abs(q) > opts.pq_envelope) continue;
        const AuxInput u = control_law({p, q}, setpoint, gain, v_g, mats);
        const double n2 = u.vec().squaredNorm();
        const double lo2 = params.u_out_min * params.u_out_min * v_g * v_g;
        const double hi2 = params.u_out_max * params.u_out_max * v_g * v_g;
        const double tol = 1e-6 * (1.0 + hi2);
        if (n2 - lo2 < -tol || hi2 - n2 < -tol) {
            return Eigen::Vector3d(v_g * v_g, p, q);
        }
    }
    return std::nullopt;
}

std::optional<Eigen::Vector2d> invariance_counterexample(const Gain& gain,
                                                         const Setpoint& setpoint,
                                                         const InverterParams& params,
                                                         int n_samples, double pq_range,
                                                         std::uint64_t seed,
                                                         const CertifyOptions& opts) {
    const StateMatrices mats = build_matrices(params);
    if (!is_hurwitz(mats, gain).hurwitz) return std::nullopt;
    const LyapunovCertificate lyap = solve_lyapunov(mats, gain);
    const double c0 = opts.sc_error_radius * opts.sc_error_radius *
                      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(lyap.p_mat)
                          .eigenvalues()
                          .maxCoeff();
    // x = x_ref + sqrt(c0) * L^-T d with P = L L^T and d in the unit disk.
    const Eigen::Matrix2d l_inv_t =
        Eigen::Matrix2d(lyap.p_mat.llt().matrixL()).transpose().inverse();
    const double pf2 = params.pf_min * params.pf_min;
    Rng rng(seed);
    for (int i = 0; i < n_samples; ++i) {
        const double r = std::sqrt(rng.uniform01());
        const double th = kTwoPi * rng.uniform01();
        const Eigen::Vector2d d(r * std::cos(th), r * std::sin(th));
        const Eigen::Vector2d x = setpoint.vec() + std::sqrt(c0) * (l_inv_t * d);
        if (std::abs(x.x()) > pq_range || std::abs(x.y()) > pq_range) continue;
        const double margin = (1.0 - pf2) * x.x() * x.x() - pf2 * x.y() * x.y();
        if (margin < -1e-9 * (1.0 + x.squaredNorm())) return x;
    }
    return std::nullopt;
}

}  // namespace ibr
