#pragma once

#include <cstdint>
#include <string>

#include "ibr/certify.hpp"
#include "ibr/region.hpp"
#include "ibr/sim.hpp"

namespace ibr {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ToolConfig {
    InverterParams params;
    CertifyOptions certify;
    SetpointGrid grid{0.0, 3000.0, -1000.0, 1000.0, 1000, 42};

    double k_min = -0.5, k_max = 0.5;  // optimize_gain sampling box
    int n_gain_samples = 1000;
    std::uint64_t gain_seed = 7;

    SearchConfig synthesis;
    std::uint64_t synthesis_seed = 99;

    int oracle_samples = 100000;
    double oracle_pq_range = 1500.0;
    std::uint64_t oracle_seed = 5;

    double sim_dt = 1e-4;
    double jitter_v_min = 106.0, jitter_v_max = 113.0;
    double jitter_hold = 0.01;
    std::uint64_t jitter_seed = 7;
    double sim_duration = 10.0;

    Eigen::Matrix2d lqr_q = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d lqr_r = 1e-4 * Eigen::Matrix2d::Identity();

    double lambda_quantum = 0.0;  // <= 0: two significant figures
    int n_probe = 200;
    std::uint64_t probe_seed = 13;
    int max_gains = 10;

    std::string output_dir = "out";
};

// Parses and validates the JSON config; unknown keys are rejected and all
// validation failures are reported together. Throws ConfigError.
ToolConfig load_config(const std::string& path);

}  // namespace ibr
