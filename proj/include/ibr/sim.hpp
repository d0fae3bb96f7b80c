#pragma once

#include <cstdint>
#include <vector>

#include "ibr/model.hpp"

namespace ibr {

// Grid-voltage profile: constant, seeded uniform jitter resampled every `hold`
// seconds, or piecewise-constant breakpoints (zero-order hold).
struct GridVoltageProfile {
    enum class Kind { constant, jitter, piecewise };
    Kind kind = Kind::constant;
    double v_const = 0.0;
    double v_min = 0.0, v_max = 0.0;
    double hold = 0.01;  // s
    std::uint64_t seed = 0;
    std::vector<std::pair<double, double>> points;  // (t, v)

    static GridVoltageProfile constant(double v);
    static GridVoltageProfile jitter(double v_min, double v_max, double hold, std::uint64_t seed);
    static GridVoltageProfile piecewise(std::vector<std::pair<double, double>> pts);
};

struct ControllerSpec {
    enum class Kind { static_gain, lqr };
    Kind kind = Kind::static_gain;
    Gain gain;
    Eigen::Matrix2d q_weight = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d r_weight = 1e-4 * Eigen::Matrix2d::Identity();

    static ControllerSpec static_gain_spec(const Gain& g);
    static ControllerSpec lqr_spec(const Eigen::Matrix2d& q, const Eigen::Matrix2d& r);
};

struct Scenario {
    double duration = 0.0;  // s
    double dt = 1e-4;       // s
    PowerState initial_state;
    std::vector<std::pair<double, Setpoint>> schedule;  // strictly increasing, first at t=0
    GridVoltageProfile profile;
    ControllerSpec controller;

    void validate() const;
    Setpoint setpoint_at(double t) const;
};

struct TrajectorySample {
    double t = 0.0;
    double p = 0.0, q = 0.0;
    double u_p = 0.0, u_q = 0.0;
    double u_alpha = 0.0, u_beta = 0.0;
    double v_g = 0.0;
    double pf = 0.0;         // NaN when undefined
    double u_out = 0.0;      // ||u|| / v_g  (V)
    double m_state = 0.0;    // sector quadratic margin (W^2)
    double m_in_lo = 0.0;    // ||u|| - u_min v_g  (V^2)
    double m_in_hi = 0.0;    // u_max v_g - ||u||  (V^2)
};

struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;
    Gain gain_used;  // resolved gain (LQR included)
};

// Fixed-step RK4 on x_dot = A x + B u + E v_g^2 with u recomputed at every
// stage from the stage-time setpoint; v_g is sampled at step start and held.
// Stiff closed loops are integrated with equal sub-steps per sample interval
// (count from ||A-BK||_F) so the spec-default dt stays stable for LQR gains.
// Throws NonFiniteState past +-1e12.
TrajectoryRecord integrate(const Scenario& scenario, const InverterParams& params);

struct ViolationStat {
    int count = 0;
    double worst = 0.0;       // most negative margin, native units
    double first_time = -1.0; // s, -1 when none
};

struct ViolationSummary {
    ViolationStat input_lower;   // ||u|| >= u_min v_g   (V^2)
    ViolationStat input_upper;   // ||u|| <= u_max v_g   (V^2)
    ViolationStat power_factor;  // pf >= pf_min
    ViolationStat voltage_lower; // U >= u_min           (V)
    ViolationStat voltage_upper; // U <= u_max           (V)

    int total() const {
        return input_lower.count + input_upper.count + power_factor.count +
               voltage_lower.count + voltage_upper.count;
    }
};

// Per-sample constraint checks; margins below -1e-9 * scale count as violations.
ViolationSummary monitor(const TrajectoryRecord& traj, const InverterParams& params);

// Continuous-time LQR via Kleinman iteration from the stabilizing start
// K0 = B^-1 (A + I); residual <= 1e-9 enforced. Throws RiccatiDiverged.
Gain lqr_gain(const StateMatrices& mats, const Eigen::Matrix2d& q_weight,
              const Eigen::Matrix2d& r_weight);

// 9 s scenario: (0 s, (1300, 120)) -> (3 s, (20, 0)) -> (6 s, (1300, 120)),
// jitter within [106, 113] V, dt 1e-4, started at the first setpoint.
Scenario ride_through_scenario(const InverterParams& params, const ControllerSpec& controller,
                               std::uint64_t jitter_seed = 7);

struct SegmentMetrics {
    double t_start = 0.0, t_end = 0.0;
    Setpoint target;
    double settling_time = 0.0;  // s from segment start; time to stay in band
    double sse_p = 0.0, sse_q = 0.0;  // terminal deviation (W / Var)
};

// Per schedule segment: time until both |p - p_ref| and |q - q_ref| remain
// within band * (1 + |ref|) for the rest of the segment.
std::vector<SegmentMetrics> settling_metrics(const TrajectoryRecord& traj,
                                             const std::vector<std::pair<double, Setpoint>>& schedule,
                                             double band);

}  // namespace ibr
