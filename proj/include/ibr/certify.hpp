#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "ibr/model.hpp"
#include "ibr/quadform.hpp"

namespace ibr {

// Certification-domain settings. Certificates quantify the input implication
// over sector /\ voltage band /\ {|P|,|Q| <= pq_envelope}; the counterexample
// oracles sample the same domain.
struct CertifyOptions {
    double pq_envelope = 1500.0;    // W / Var
    double sc_error_radius = 1.0;   // W; sector-inclusion ellipsoid covers this ball
    double lambda_max = 1e6;        // multiplier search bracket
};

struct HurwitzResult {
    bool hurwitz = false;
    double spectral_abscissa = 0.0;  // max real part of eig(A - BK), 1/s
};

// Trace/determinant test on the 2x2 closed loop; abscissa in closed form.
HurwitzResult is_hurwitz(const StateMatrices& mats, const Gain& gain);

struct LyapunovCertificate {
    Eigen::Matrix2d p_mat;
    double decay_margin = 0.0;  // smallest eigenvalue of -(Acl^T P + P Acl)
};

// Solves (A-BK)^T P + P (A-BK) = -I. Throws NotHurwitz.
LyapunovCertificate solve_lyapunov(const StateMatrices& mats, const Gain& gain);

enum class PencilStatus { feasible, infeasible, bracket_exhausted };

struct PencilFeasibility {
    PencilStatus status = PencilStatus::infeasible;
    double lambda = 0.0;  // smallest feasible multiplier
    double margin = 0.0;  // lambda_min of the scaled pencil at the returned lambda
};

// One-dimensional S-procedure feasibility: smallest lambda >= 0 with
// lambda_min(m_b - lambda m_a) >= -eps_psd, exploiting concavity of
// lambda |-> lambda_min. `scale` is an optional diagonal congruence applied
// before the eigenvalue test (identity when empty).
PencilFeasibility pencil_feasible(const Pencil& pencil, double lambda_max = 1e6,
                                  const Eigen::VectorXd& scale = {});

// Multi-term family F(l) = m_b - sum_i l_i * terms[i]; coordinate ascent on the
// jointly concave lambda_min, then min-norm shrink along the feasible ray.
struct FamilyFeasibility {
    PencilStatus status = PencilStatus::infeasible;
    Eigen::VectorXd lambdas;
    double margin = 0.0;
};

FamilyFeasibility family_feasible(const Eigen::MatrixXd& m_b,
                                  const std::vector<Eigen::MatrixXd>& terms,
                                  const Eigen::VectorXd& scale, double lambda_max = 1e6);

// Multipliers of the three certification conditions. The input conditions carry
// one multiplier per constraint quadratic: [sector, band, cap_p, cap_q].
struct Multipliers {
    double lambda_sc = 0.0;
    Eigen::Vector4d lambda_ic1 = Eigen::Vector4d::Zero();
    Eigen::Vector4d lambda_ic2 = Eigen::Vector4d::Zero();
};

struct AchievabilityCertificate {
    Gain gain;
    LyapunovCertificate lyap;
    Multipliers multipliers;
    std::array<double, 3> psd_margins = {0.0, 0.0, 0.0};  // sc, ic lower, ic upper
};

enum class CertifyStage {
    none,       // certificate granted
    envelope,   // setpoint outside the certification envelope
    hurwitz,
    lyapunov,
    sc,         // sector-inclusion condition
    ic_lower,
    ic_upper,
};

const char* to_string(CertifyStage stage);

struct CertifyOutcome {
    std::optional<AchievabilityCertificate> certificate;
    CertifyStage failed_at = CertifyStage::none;

    bool ok() const { return certificate.has_value(); }
};

// The three certified conditions, as matrix families ready for the feasibility
// search (already congruence-scaled):
//   sc : sector form minus mu * (Lyapunov ellipsoid around the setpoint), dim 3
//   ic1/ic2: input quadratic minus per-constraint multipliers, dim 4
struct CertificationFamilies {
    Eigen::MatrixXd sc_b;
    std::vector<Eigen::MatrixXd> sc_terms;
    Eigen::VectorXd sc_scale;
    Eigen::MatrixXd ic1_b, ic2_b;
    std::vector<Eigen::MatrixXd> ic_terms;
    Eigen::VectorXd ic_scale;
};

CertificationFamilies certification_families(const StateMatrices& mats, const Gain& gain,
                                             const Setpoint& setpoint,
                                             const InverterParams& params,
                                             const LyapunovCertificate& lyap,
                                             const CertifyOptions& opts = {});

// Definition-1 achievability check: Hurwitz -> Lyapunov -> three S-procedure
// conditions. Absence reports the first failed stage.
CertifyOutcome check_achievable(const Gain& gain, const Setpoint& setpoint,
                                const InverterParams& params, const CertifyOptions& opts = {});

struct FixedCheckResult {
    bool ok = false;
    std::array<double, 3> margins = {0.0, 0.0, 0.0};
};

// Membership test at fixed multipliers (no search); this is what makes convex
// hull grouping valid.
FixedCheckResult check_achievable_fixed(const Gain& gain, const Setpoint& setpoint,
                                        const LyapunovCertificate& lyap,
                                        const Multipliers& multipliers,
                                        const InverterParams& params,
                                        const CertifyOptions& opts = {});

struct SearchConfig {
    int n_starts = 1000;       // random multi-start budget
    int refine_steps = 200;    // pattern-search iterations
    double k_box = 0.5;        // element-wise |K_ij| bound for sampling
    double shrink = 0.5;       // pattern-search step shrink factor
    double min_step = 1e-6;    // stop threshold
};

// Problem-P1 gain synthesis: among feasible gains, minimize ||K||_F via random
// multi-start plus coordinate-wise pattern search that keeps feasibility at
// every accepted step. Empty when the budget finds no feasible gain.
std::optional<std::pair<Gain, AchievabilityCertificate>> synthesize_gain(
    const Setpoint& setpoint, const InverterParams& params, const SearchConfig& search,
    std::uint64_t seed, const CertifyOptions& opts = {});

// Independent sampling oracle for the input implication: v_g uniform in the
// band, (p,q) uniform in [pq_range]^2 filtered to the quadratic sector and the
// envelope; returns the first z = [v_g^2, p, q] where the annulus fails.
std::optional<Eigen::Vector3d> implication_counterexample(const Gain& gain,
                                                          const Setpoint& setpoint,
                                                          const InverterParams& params,
                                                          int n_samples, double pq_range,
                                                          std::uint64_t seed,
                                                          const CertifyOptions& opts = {});

// Oracle for the state-constraint certificate: samples the certified Lyapunov
// ellipsoid around the setpoint and returns the first state outside the
// quadratic sector. Absence is vacuous when the loop is not Hurwitz.
std::optional<Eigen::Vector2d> invariance_counterexample(const Gain& gain,
                                                         const Setpoint& setpoint,
                                                         const InverterParams& params,
                                                         int n_samples, double pq_range,
                                                         std::uint64_t seed,
                                                         const CertifyOptions& opts = {});

}  // namespace ibr
