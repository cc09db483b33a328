#pragma once

#include <utility>

#include "splitgrid/linear_system.hpp"
#include "splitgrid/types.hpp"

namespace splitgrid {

// ---------------------------------------------------------------------------
// Model parameter blocks
// ---------------------------------------------------------------------------

/// Constant-power load.
struct PQLoad {
    double p = 0.0;
    double q = 0.0;
};

/// Mixture of constant-impedance, constant-current and constant-power load.
/// Coefficients must be normalized: a + b + c == 1 per axis (checked at
/// case-load time).
struct ZipLoad {
    double p0 = 0.0, q0 = 0.0;
    double a_p = 0.0, b_p = 0.0, c_p = 1.0;
    double a_q = 0.0, b_q = 0.0, c_q = 1.0;
};

/// Exponential voltage-dependence load.
struct ExpLoad {
    double p0 = 0.0, q0 = 0.0;
    double p_v = 0.0, q_v = 0.0;
};

/// Reference source: pins the complex voltage of its bus.
struct SlackSource {
    SplitPhasor v_set{1.0, 0.0};
};

/// Fixed active injection with a voltage-magnitude setpoint; reactive power
/// is the free variable of the magnitude constraint.
struct PvBus {
    double p = 0.0;       // active power injected into the network
    double v_mag = 1.0;
};

/// Series RX branch with total shunt susceptance b_sh (pi model).
struct Branch {
    NodeId from = 0;
    NodeId to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_sh = 0.0;
};

/// Steady-state induction machine parameters. The rotor branch is R_r/s
/// alone (no rotor leakage); this is the topology whose torque balance
/// reproduces the slip quadratic used below.
struct IMParams {
    double r_s = 0.0;     // stator resistance
    double x_s = 0.0;     // stator reactance
    double x_m = 0.0;     // magnetizing reactance
    double r_r = 0.0;     // rotor resistance
    int poles = 2;        // even, >= 2
    double omega_s = 0.0; // synchronous speed, rad/s
};

/// Motoring operating point of an induction machine.
struct IMOperatingPoint {
    double torque = 0.0;
    double slip = 0.0;            // in (0, 1]
    double u = 0.0, v = 0.0;      // input admittance Y = u + jv
};

// ---------------------------------------------------------------------------
// PQ family
// ---------------------------------------------------------------------------

/// Split current injection of a constant-PQ load:
///   I_R = (P V_R + Q V_I) / |V|^2,  I_I = (P V_I - Q V_R) / |V|^2.
/// Throws VoltageCollapseError below the per-unit voltage floor.
SplitPhasor pq_currents(const PQLoad& load, SplitPhasor v);

/// First-order linearization of pq_currents at v_prev: analytic 2x2 Jacobian
/// plus history sources hist = I(v_prev) - jac * v_prev.
LinearizedStamp pq_stamp(const PQLoad& load, NodeId node, SplitPhasor v_prev);

/// ZIP polynomial powers at a voltage magnitude.
std::pair<double, double> zip_power(const ZipLoad& load, double v_mag);

/// Exponential-model powers at a voltage magnitude. Throws std::domain_error
/// for v_mag == 0 with a negative exponent.
std::pair<double, double> exp_power(const ExpLoad& load, double v_mag);

/// Split currents of the magnitude-dependent models, obtained by composing
/// their (P, Q) at |v| with the PQ split-current formula.
SplitPhasor zip_currents(const ZipLoad& load, SplitPhasor v);
SplitPhasor exp_currents(const ExpLoad& load, SplitPhasor v);

/// Linearizations carrying the extra dP/d|V| chain-rule terms analytically.
LinearizedStamp zip_stamp(const ZipLoad& load, NodeId node, SplitPhasor v_prev);
LinearizedStamp exp_stamp(const ExpLoad& load, NodeId node, SplitPhasor v_prev);

// ---------------------------------------------------------------------------
// Induction machine
// ---------------------------------------------------------------------------

/// Stable (below-breakdown) motoring slip: the smaller real root in (0, 1]
/// of gamma1 s^2 + gamma2(V) s + gamma3 = 0. Throws TorqueCapabilityError
/// with the breakdown torque when no such root exists.
double im_slip(const IMParams& m, double torque, SplitPhasor v);

/// Input admittance (u, v) of the reduced ladder: R_s + jX_s in series with
/// jX_m parallel R_r/s.
std::pair<double, double> im_admittance(const IMParams& m, double slip);

/// Electric torque developed at a given slip and terminal voltage magnitude
/// (torque-balance identity; used for consistency checks and brute-force
/// oracles).
double im_torque(const IMParams& m, double slip, double v_mag);

/// Breakdown (maximum deliverable) torque at a terminal voltage magnitude.
double im_breakdown_torque(const IMParams& m, double v_mag);

/// Full operating point: slip plus admittance.
IMOperatingPoint im_operating_point(const IMParams& m, double torque, SplitPhasor v);

/// Split terminal currents: I_R = V_R u - V_I v, I_I = V_I u + V_R v with
/// (u, v) evaluated at the torque-consistent slip.
SplitPhasor im_currents(const IMParams& m, double torque, SplitPhasor v);

/// Analytic linearization of im_currents (implicit differentiation through
/// the slip quadratic, complex chain rule through the ladder).
LinearizedStamp im_stamp(const IMParams& m, double torque, NodeId node, SplitPhasor v_prev);

// ---------------------------------------------------------------------------
// Network interconnect
// ---------------------------------------------------------------------------

/// Pi-model branch stamp: series g in each sub-circuit, series and shunt
/// susceptance as cross-sub-circuit couplings. Purely linear, so it stamps
/// the matrix only.
void branch_stamp(SplitSystem& sys, const Branch& br);

}  // namespace splitgrid
