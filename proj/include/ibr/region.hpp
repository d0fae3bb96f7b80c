#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ibr/certify.hpp"

namespace ibr {

struct SetpointGrid {
    double p_min = 0.0, p_max = 0.0;   // W
    double q_min = 0.0, q_max = 0.0;   // Var
    int n_samples = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

// n_samples i.i.d. uniform setpoints; deterministic per seed.
std::vector<Setpoint> sample_setpoints(const SetpointGrid& grid);

struct SampleStatus {
    Setpoint setpoint;
    bool achievable = false;
    CertifyStage failed_at = CertifyStage::none;
    Multipliers multipliers;                       // valid when achievable
    std::array<double, 3> margins = {0, 0, 0};
};

// Fixed-multiplier convex hull of achievable setpoints; every vertex passes
// check_achievable_fixed at the stored (lyap, multipliers).
struct HullGroup {
    Gain gain;
    LyapunovCertificate lyap;
    Multipliers multipliers;
    std::vector<Setpoint> vertices;  // convex position, counterclockwise
    int n_members = 0;               // cluster size before re-verification
};

struct ValidationReport {
    int n_probe = 0;
    int n_pass = 0;
    double pass_fraction = 0.0;
    double worst_margin = 0.0;
    std::vector<Setpoint> failures;
};

struct RegionReport {
    Gain gain;
    std::vector<SampleStatus> samples;
    int n_achievable = 0;
    double rate = 0.0;  // n_achievable / samples.size()
    std::optional<LyapunovCertificate> lyap;  // shared P (gain-only dependent)
    std::vector<HullGroup> hulls;
    std::vector<ValidationReport> hull_validation;
};

// Runs check_achievable on every sample.
RegionReport achievability_rate(const Gain& gain, const std::vector<Setpoint>& samples,
                                const InverterParams& params, const CertifyOptions& opts = {});

struct GainTraceEntry {
    Gain gain;
    bool hurwitz = false;
    double rate = 0.0;
};

struct OptimizeResult {
    Gain best_gain;
    RegionReport best_report;
    std::vector<GainTraceEntry> trace;
    int hurwitz_count = 0;
};

// Monte Carlo sweep over gains sampled element-wise uniform in [k_min, k_max];
// non-Hurwitz gains are skipped (rate 0 in the trace). Throws NoStabilizingGain
// when every sample fails the Hurwitz test.
OptimizeResult optimize_gain(double k_min, double k_max, int n_gain_samples,
                             const std::vector<Setpoint>& samples, const InverterParams& params,
                             std::uint64_t seed, const CertifyOptions& opts = {});

// Clusters certificates by multipliers rounded to lambda_quantum (<= 0 means
// two significant figures per component), re-verifies every member at the
// cluster medoid, and hulls the survivors. Degenerate clusters emit nothing.
std::vector<HullGroup> group_hulls(const RegionReport& report, const InverterParams& params,
                                   double lambda_quantum = 0.0, const CertifyOptions& opts = {});

// Point-in-convex-polygon, boundary inclusive at 1e-9 * scale.
bool hull_contains(const HullGroup& group, const Setpoint& setpoint);

// Samples n_probe points uniformly in the polygon and runs the fixed-multiplier
// check at the group's parameters; the empirical audit behind every exported
// region.
ValidationReport validate_group(const HullGroup& group, int n_probe, const InverterParams& params,
                                std::uint64_t seed, const CertifyOptions& opts = {});

struct CoverEntry {
    Gain gain;
    RegionReport report;
    int newly_covered = 0;
};

struct CoverReport {
    std::vector<CoverEntry> selected;
    double covered_fraction = 0.0;   // of all samples
    std::vector<Setpoint> uncovered;
    std::vector<bool> uncovered_synthesizable;  // per uncovered sample
};

// Greedy set cover: repeatedly add the candidate gain certifying the most
// still-uncovered samples. Uncovered remainder is probed with synthesize_gain.
CoverReport greedy_cover(const std::vector<Setpoint>& samples, const InverterParams& params,
                         const std::vector<Gain>& candidate_gains, int max_gains,
                         const SearchConfig& synth_search, std::uint64_t synth_seed,
                         const CertifyOptions& opts = {});

}  // namespace ibr
