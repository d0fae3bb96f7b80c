#pragma once

#include "ibr/types.hpp"

namespace ibr {

// A = [[-R/L, -w],[w, -R/L]], B = (3/2L) I, E = [-3/2L, 0]^T.
StateMatrices build_matrices(const InverterParams& params);

// u_P = vga*ua + vgb*ub, u_Q = vgb*ua - vga*ub with (vga, vgb) = v_g(cos wt, sin wt).
AuxInput aux_from_phase(const PhaseInput& phase, double v_g, double t, double omega);

// Inverse of aux_from_phase. Throws SingularGridVoltage when v_g <= kEpsVoltage.
PhaseInput phase_from_aux(const AuxInput& aux, double v_g, double t, double omega);

// p / sqrt(p^2 + q^2). Throws UndefinedPowerFactor near the origin.
double power_factor(const PowerState& state);

struct StateConstraintMargin {
    double quadratic_margin = 0.0;  // (1-pf^2) p^2 - pf^2 q^2  (W^2)
    bool sign_ok = false;           // p >= 0 (physical half of the sector)
};

// Quadratic sector margin plus the sign of p. Certificates use the quadratic
// form only; monitors require both.
StateConstraintMargin state_constraint_margin(const PowerState& state, double pf_min);

struct InputConstraintMargins {
    double lower = 0.0;  // ||u|| - u_out_min * v_g  (V^2)
    double upper = 0.0;  // u_out_max * v_g - ||u||  (V^2)
};

InputConstraintMargins input_constraint_margins(const AuxInput& aux, double v_g,
                                                const InverterParams& params);

// u = -K (x - x_ref) - B^-1 A x_ref - B^-1 E v_g^2.
AuxInput control_law(const PowerState& state, const Setpoint& setpoint, const Gain& gain,
                     double v_g, const StateMatrices& mats);

// (A - B K)(x - x_ref); the feedforward cancels the v_g^2 disturbance exactly.
PowerState closed_loop_derivative(const PowerState& state, const Setpoint& setpoint,
                                  const Gain& gain, const StateMatrices& mats);

}  // namespace ibr
