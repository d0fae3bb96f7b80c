#include "ibr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ibr {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where, std::vector<std::string>& errors) {
    for (const auto& [key, value] : obj.items()) {
        if (allowed.count(key) == 0) errors.push_back(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

ToolConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }

    std::vector<std::string> errors;
    ToolConfig cfg;

    reject_unknown(root,
                   {"params", "certify", "grid", "gain_search", "synthesis", "oracle", "sim",
                    "lqr", "region", "cover", "output_dir"},
                   "config", errors);

    if (!root.contains("params")) {
        errors.push_back("config: missing required section 'params'");
    } else {
        const json& p = root["params"];
        reject_unknown(p,
                       {"r_filter", "l_filter", "freq", "omega", "v_g_min", "v_g_max",
                        "u_out_min", "u_out_max", "pf_min"},
                       "params", errors);
        double r = 0, l = 0, freq = -1, omega = -1;
        double vg_lo = 0, vg_hi = 0, u_lo = 0, u_hi = 0, pf = 0;
        try {
            read(p, "r_filter", r);
            read(p, "l_filter", l);
            read(p, "freq", freq);
            read(p, "omega", omega);
            read(p, "v_g_min", vg_lo);
            read(p, "v_g_max", vg_hi);
            read(p, "u_out_min", u_lo);
            read(p, "u_out_max", u_hi);
            read(p, "pf_min", pf);
        } catch (const json::exception& e) {
            errors.push_back(std::string("params: ") + e.what());
        }
        if (freq < 0 && omega < 0) {
            errors.push_back("params: need 'freq' or 'omega'");
        } else if (freq >= 0 && omega >= 0 &&
                   std::abs(omega - kTwoPi * freq) > 1e-6 * (1.0 + std::abs(omega))) {
            errors.push_back("params: omega inconsistent with freq (omega must equal 2*pi*freq)");
        }
        if (errors.empty()) {
            try {
                cfg.params = omega >= 0
                                 ? InverterParams::from_omega(r, l, omega, vg_lo, vg_hi, u_lo,
                                                              u_hi, pf)
                                 : InverterParams::from_frequency(r, l, freq, vg_lo, vg_hi, u_lo,
                                                                  u_hi, pf);
            } catch (const std::invalid_argument& e) {
                errors.push_back(e.what());
            }
        }
    }

    if (root.contains("certify")) {
        const json& c = root["certify"];
        reject_unknown(c, {"pq_envelope", "sc_error_radius", "lambda_max"}, "certify", errors);
        read(c, "pq_envelope", cfg.certify.pq_envelope);
        read(c, "sc_error_radius", cfg.certify.sc_error_radius);
        read(c, "lambda_max", cfg.certify.lambda_max);
        if (!(cfg.certify.pq_envelope > 0)) errors.push_back("certify.pq_envelope must be > 0");
        if (!(cfg.certify.sc_error_radius > 0))
            errors.push_back("certify.sc_error_radius must be > 0");
    }

    if (root.contains("grid")) {
        const json& g = root["grid"];
        reject_unknown(g, {"p_min", "p_max", "q_min", "q_max", "n_samples", "seed"}, "grid",
                       errors);
        read(g, "p_min", cfg.grid.p_min);
        read(g, "p_max", cfg.grid.p_max);
        read(g, "q_min", cfg.grid.q_min);
        read(g, "q_max", cfg.grid.q_max);
        read(g, "n_samples", cfg.grid.n_samples);
        read(g, "seed", cfg.grid.seed);
        try {
            cfg.grid.validate();
        } catch (const std::invalid_argument& e) {
            errors.push_back(e.what());
        }
    }

    if (root.contains("gain_search")) {
        const json& g = root["gain_search"];
        reject_unknown(g, {"k_min", "k_max", "n_gain_samples", "seed"}, "gain_search", errors);
        read(g, "k_min", cfg.k_min);
        read(g, "k_max", cfg.k_max);
        read(g, "n_gain_samples", cfg.n_gain_samples);
        read(g, "seed", cfg.gain_seed);
        if (!(cfg.k_min < cfg.k_max)) errors.push_back("gain_search: k_min < k_max required");
        if (cfg.n_gain_samples <= 0) errors.push_back("gain_search: n_gain_samples must be > 0");
    }

    if (root.contains("synthesis")) {
        const json& s = root["synthesis"];
        reject_unknown(s, {"n_starts", "refine_steps", "k_box", "seed"}, "synthesis", errors);
        read(s, "n_starts", cfg.synthesis.n_starts);
        read(s, "refine_steps", cfg.synthesis.refine_steps);
        read(s, "k_box", cfg.synthesis.k_box);
        read(s, "seed", cfg.synthesis_seed);
        if (cfg.synthesis.n_starts < 0) errors.push_back("synthesis: n_starts must be >= 0");
    }

    if (root.contains("oracle")) {
        const json& o = root["oracle"];
        reject_unknown(o, {"n_samples", "pq_range", "seed"}, "oracle", errors);
        read(o, "n_samples", cfg.oracle_samples);
        read(o, "pq_range", cfg.oracle_pq_range);
        read(o, "seed", cfg.oracle_seed);
        if (!(std::isfinite(cfg.oracle_pq_range) && cfg.oracle_pq_range > 0))
            errors.push_back("oracle: pq_range must be finite and > 0");
    }

    if (root.contains("sim")) {
        const json& s = root["sim"];
        reject_unknown(s,
                       {"dt", "jitter_v_min", "jitter_v_max", "jitter_hold", "jitter_seed",
                        "duration"},
                       "sim", errors);
        read(s, "dt", cfg.sim_dt);
        read(s, "jitter_v_min", cfg.jitter_v_min);
        read(s, "jitter_v_max", cfg.jitter_v_max);
        read(s, "jitter_hold", cfg.jitter_hold);
        read(s, "jitter_seed", cfg.jitter_seed);
        read(s, "duration", cfg.sim_duration);
        if (!(cfg.sim_dt > 0)) errors.push_back("sim: dt must be > 0");
        if (!(cfg.jitter_v_min <= cfg.jitter_v_max))
            errors.push_back("sim: jitter_v_min <= jitter_v_max required");
    }

    if (root.contains("lqr")) {
        const json& l = root["lqr"];
        reject_unknown(l, {"q_diag", "r_diag"}, "lqr", errors);
        if (l.contains("q_diag")) {
            auto v = l["q_diag"].get<std::vector<double>>();
            if (v.size() == 2) {
                cfg.lqr_q = Eigen::Vector2d(v[0], v[1]).asDiagonal();
            } else {
                errors.push_back("lqr: q_diag must have 2 entries");
            }
        }
        if (l.contains("r_diag")) {
            auto v = l["r_diag"].get<std::vector<double>>();
            if (v.size() == 2) {
                cfg.lqr_r = Eigen::Vector2d(v[0], v[1]).asDiagonal();
            } else {
                errors.push_back("lqr: r_diag must have 2 entries");
            }
        }
    }

    if (root.contains("region")) {
        const json& r = root["region"];
        reject_unknown(r, {"lambda_quantum", "n_probe", "probe_seed"}, "region", errors);
        read(r, "lambda_quantum", cfg.lambda_quantum);
        read(r, "n_probe", cfg.n_probe);
        read(r, "probe_seed", cfg.probe_seed);
        if (cfg.n_probe <= 0) errors.push_back("region: n_probe must be > 0");
    }

    if (root.contains("cover")) {
        const json& c = root["cover"];
        reject_unknown(c, {"max_gains"}, "cover", errors);
        read(c, "max_gains", cfg.max_gains);
        if (cfg.max_gains <= 0) errors.push_back("cover: max_gains must be > 0");
    }

    read(root, "output_dir", cfg.output_dir);

    // Jitter must stay inside the assumed grid-voltage band for certified runs.
    if (errors.empty()) {
        if (cfg.jitter_v_min < cfg.params.v_g_min || cfg.jitter_v_max > cfg.params.v_g_max)
            errors.push_back("sim: jitter band must lie inside [v_g_min, v_g_max]");
    }

    if (!errors.empty()) {
        std::ostringstream msg;
        msg << "config validation failed:";
        for (const auto& e : errors) msg << "\n  - " << e;
        throw ConfigError(msg.str());
    }
    return cfg;
}

}  // namespace ibr
