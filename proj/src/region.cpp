#include "ibr/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ibr/rng.hpp"

namespace ibr {

namespace {

// Multipliers flattened to the 9-vector (sc, ic1[4], ic2[4]).
Eigen::Matrix<double, 9, 1> flatten(const Multipliers& m) {
    Eigen::Matrix<double, 9, 1> v;
    v(0) = m.lambda_sc;
    v.segment<4>(1) = m.lambda_ic1;
    v.segment<4>(5) = m.lambda_ic2;
    return v;
}

double round_sig2(double x) {
    if (x == 0.0 || !std::isfinite(x)) return 0.0;
    const double mag = std::pow(10.0, std::floor(std::log10(std::abs(x))) - 1.0);
    return std::round(x / mag) * mag;
}

Eigen::Matrix<double, 9, 1> cluster_key(const Multipliers& m, double lambda_quantum) {
    Eigen::Matrix<double, 9, 1> v = flatten(m);
    for (int i = 0; i < 9; ++i) {
        v(i) = lambda_quantum > 0.0 ? std::round(v(i) / lambda_quantum) * lambda_quantum
                                    : round_sig2(v(i));
    }
    return v;
}

double cross(const Setpoint& o, const Setpoint& a, const Setpoint& b) {
    return (a.p_ref - o.p_ref) * (b.q_ref - o.q_ref) -
           (a.q_ref - o.q_ref) * (b.p_ref - o.p_ref);
}

// Andrew's monotone chain; returns counterclockwise hull without the closing
// point. Collinear inputs yield fewer than 3 vertices.
std::vector<Setpoint> monotone_chain(std::vector<Setpoint> pts) {
    std::sort(pts.begin(), pts.end(), [](const Setpoint& a, const Setpoint& b) {
        return a.p_ref < b.p_ref || (a.p_ref == b.p_ref && a.q_ref < b.q_ref);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Setpoint& a, const Setpoint& b) {
                              return a.p_ref == b.p_ref && a.q_ref == b.q_ref;
                          }),
              pts.end());
    const int n = static_cast<int>(pts.size());
    if (n < 3) return {};
    std::vector<Setpoint> hull(2 * n);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const int lower = k + 1;
    for (int i = n - 2; i >= 0; --i) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull.size() >= 3 ? hull : std::vector<Setpoint>{};
}

}  // namespace

void SetpointGrid::validate() const {
    if (!(p_min <= p_max) || !(q_min <= q_max) || n_samples <= 0)
        throw std::invalid_argument("setpoint grid: need p_min<=p_max, q_min<=q_max, n_samples>0");
}

std::vector<Setpoint> sample_setpoints(const SetpointGrid& grid) {
    grid.validate();
    Rng rng(grid.seed);
    std::vector<Setpoint> out;
    out.reserve(grid.n_samples);
    for (int i = 0; i < grid.n_samples; ++i) {
        out.push_back({rng.uniform(grid.p_min, grid.p_max), rng.uniform(grid.q_min, grid.q_max)});
    }
    return out;
}

RegionReport achievability_rate(const Gain& gain, const std::vector<Setpoint>& samples,
                                const InverterParams& params, const CertifyOptions& opts) {
    RegionReport report;
    report.gain = gain;
    report.samples.reserve(samples.size());
    const StateMatrices mats = build_matrices(params);
    if (is_hurwitz(mats, gain).hurwitz) report.lyap = solve_lyapunov(mats, gain);
    for (const Setpoint& sp : samples) {
        SampleStatus st;
        st.setpoint = sp;
        const CertifyOutcome out = check_achievable(gain, sp, params, opts);
        st.achievable = out.ok();
        st.failed_at = out.failed_at;
        if (out.ok()) {
            st.multipliers = out.certificate->multipliers;
            st.margins = out.certificate->psd_margins;
            ++report.n_achievable;
        }
        report.samples.push_back(st);
    }
    report.rate = samples.empty() ? 0.0
                                  : static_cast<double>(report.n_achievable) /
                                        static_cast<double>(samples.size());
    return report;
}

OptimizeResult optimize_gain(double k_min, double k_max, int n_gain_samples,
                             const std::vector<Setpoint>& samples, const InverterParams& params,
                             std::uint64_t seed, const CertifyOptions& opts) {
    if (n_gain_samples <= 0) throw std::invalid_argument("optimize_gain: n_gain_samples > 0");
    Rng rng(seed);
    const StateMatrices mats = build_matrices(params);
    OptimizeResult res;
    double best_rate = -1.0;
    for (int i = 0; i < n_gain_samples; ++i) {
        Gain cand(rng.uniform(k_min, k_max), rng.uniform(k_min, k_max),
                  rng.uniform(k_min, k_max), rng.uniform(k_min, k_max));
        GainTraceEntry entry;
        entry.gain = cand;
        entry.hurwitz = is_hurwitz(mats, cand).hurwitz;
        if (entry.hurwitz) {
            ++res.hurwitz_count;
            RegionReport rep = achievability_rate(cand, samples, params, opts);
            entry.rate = rep.rate;
            if (rep.rate > best_rate) {
                best_rate = rep.rate;
                res.best_gain = cand;
                res.best_report = std::move(rep);
            }
        }
        res.trace.push_back(entry);
    }
    if (res.hurwitz_count == 0) throw NoStabilizingGain();
    return res;
}

std::vector<HullGroup> group_hulls(const RegionReport& report, const InverterParams& params,
                                   double lambda_quantum, const CertifyOptions& opts) {
    if (!report.lyap) return {};
    std::vector<int> achievable_idx;
    for (int i = 0; i < static_cast<int>(report.samples.size()); ++i) {
        if (report.samples[i].achievable) achievable_idx.push_back(i);
    }
    if (achievable_idx.size() < 3) return {};

    // Cluster by quantized multipliers.
    std::map<std::array<double, 9>, std::vector<int>> clusters;
    for (int idx : achievable_idx) {
        const auto key = cluster_key(report.samples[idx].multipliers, lambda_quantum);
        std::array<double, 9> k;
        Eigen::Map<Eigen::Matrix<double, 9, 1>>(k.data()) = key;
        clusters[k].push_back(idx);
    }

    std::vector<HullGroup> groups;
    for (const auto& [key, members] : clusters) {
        if (members.size() < 3) continue;
        // Medoid: member minimizing total distance to the rest.
        int medoid = members.front();
        double best = std::numeric_limits<double>::infinity();
        for (int i : members) {
            double sum = 0.0;
            const auto vi = flatten(report.samples[i].multipliers);
            for (int j : members) sum += (vi - flatten(report.samples[j].multipliers)).norm();
            if (sum < best) {
                best = sum;
                medoid = i;
            }
        }
        const Multipliers& rep_mult = report.samples[medoid].multipliers;
        std::vector<Setpoint> survivors;
        for (int i : members) {
            const FixedCheckResult chk = check_achievable_fixed(
                report.gain, report.samples[i].setpoint, *report.lyap, rep_mult, params, opts);
            if (chk.ok) survivors.push_back(report.samples[i].setpoint);
        }
        const std::vector<Setpoint> hull = monotone_chain(survivors);
        if (hull.empty()) continue;
        HullGroup g;
        g.gain = report.gain;
        g.lyap = *report.lyap;
        g.multipliers = rep_mult;
        g.vertices = hull;
        g.n_members = static_cast<int>(members.size());
        groups.push_back(std::move(g));
    }
    return groups;
}

bool hull_contains(const HullGroup& group, const Setpoint& setpoint) {
    const int n = static_cast<int>(group.vertices.size());
    if (n < 3) return false;
    double scale = 1.0;
    for (const Setpoint& v : group.vertices) {
        scale = std::max({scale, std::abs(v.p_ref), std::abs(v.q_ref)});
    }
    const double tol = 1e-9 * scale;
    for (int i = 0; i < n; ++i) {
        // CCW polygon: inside points sit left of every edge.
        if (cross(group.vertices[i], group.vertices[(i + 1) % n], setpoint) < -tol) return false;
    }
    return true;
}

ValidationReport validate_group(const HullGroup& group, int n_probe, const InverterParams& params,
                                std::uint64_t seed, const CertifyOptions& opts) {
    if (n_probe <= 0) throw std::invalid_argument("validate_group: n_probe > 0 required");
    double p_lo = group.vertices.front().p_ref, p_hi = p_lo;
    double q_lo = group.vertices.front().q_ref, q_hi = q_lo;
    for (const Setpoint& v : group.vertices) {
        p_lo = std::min(p_lo, v.p_ref);
        p_hi = std::max(p_hi, v.p_ref);
        q_lo = std::min(q_lo, v.q_ref);
        q_hi = std::max(q_hi, v.q_ref);
    }
    Rng rng(seed);
    ValidationReport rep;
    rep.n_probe = n_probe;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    int drawn = 0;
    int guard = 0;
    while (drawn < n_probe && guard < 1000 * n_probe) {
        ++guard;
        const Setpoint probe{rng.uniform(p_lo, p_hi), rng.uniform(q_lo, q_hi)};
        if (!hull_contains(group, probe)) continue;
        ++drawn;
        const FixedCheckResult chk =
            check_achievable_fixed(group.gain, probe, group.lyap, group.multipliers, params, opts);
        const double m = *std::min_element(chk.margins.begin(), chk.margins.end());
        rep.worst_margin = std::min(rep.worst_margin, m);
        if (chk.ok) {
            ++rep.n_pass;
        } else {
            rep.failures.push_back(probe);
        }
    }
    rep.pass_fraction = drawn > 0 ? static_cast<double>(rep.n_pass) / drawn : 0.0;
    return rep;
}

CoverReport greedy_cover(const std::vector<Setpoint>& samples, const InverterParams& params,
                         const std::vector<Gain>& candidate_gains, int max_gains,
                         const SearchConfig& synth_search, std::uint64_t synth_seed,
                         const CertifyOptions& opts) {
    if (candidate_gains.empty()) throw std::invalid_argument("greedy_cover: no candidate gains");
    const int n = static_cast<int>(samples.size());

    std::vector<RegionReport> reports;
    reports.reserve(candidate_gains.size());
    for (const Gain& g : candidate_gains) {
        reports.push_back(achievability_rate(g, samples, params, opts));
    }

    std::vector<bool> covered(n, false);
    std::vector<bool> used(candidate_gains.size(), false);
    CoverReport cover;
    for (int round = 0; round < max_gains; ++round) {
        int best_idx = -1;
        int best_new = 0;
        for (int c = 0; c < static_cast<int>(candidate_gains.size()); ++c) {
            if (used[c]) continue;
            int fresh = 0;
            for (int s = 0; s < n; ++s) {
                if (!covered[s] && reports[c].samples[s].achievable) ++fresh;
            }
            if (fresh > best_new) {
                best_new = fresh;
                best_idx = c;
            }
        }
        if (best_idx < 0) break;
        used[best_idx] = true;
        for (int s = 0; s < n; ++s) {
            if (reports[best_idx].samples[s].achievable) covered[s] = true;
        }
        cover.selected.push_back({candidate_gains[best_idx], reports[best_idx], best_new});
    }

    int n_cov = 0;
    Rng seed_stream(synth_seed);
    for (int s = 0; s < n; ++s) {
        if (covered[s]) {
            ++n_cov;
        } else {
            cover.uncovered.push_back(samples[s]);
            const auto found =
                synthesize_gain(samples[s], params, synth_search, seed_stream.next_u64(), opts);
            cover.uncovered_synthesizable.push_back(found.has_value());
        }
    }
    cover.covered_fraction = n > 0 ? static_cast<double>(n_cov) / n : 0.0;
    return cover;
}

}  // namespace ibr
