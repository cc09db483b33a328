#pragma once

#include <functional>
#include <vector>

#include "splitgrid/network.hpp"

namespace splitgrid {

struct SolverOptions {
    double tol_v = 1e-8;    // per-unit voltage-update tolerance, inf-norm
    double tol_kcl = 1e-8;  // per-unit current-residual tolerance, inf-norm
    int max_iter = 50;
    double damping = 1.0;   // in (0, 1]; halved up to 4 times on residual increase
    std::vector<SplitPhasor> warm_start;  // empty -> flat start (1, 0)

    /// Debug hook: called with every assembled per-iteration system.
    std::function<void(int iter, const SplitSystem&)> trace;
};

struct IterationRecord {
    double dv_inf = 0.0;
    double kcl_inf = 0.0;
};

struct SolveResult {
    std::vector<SplitPhasor> voltages;  // per bus
    Eigen::VectorXd extras;             // auxiliary unknowns (slack currents, PV Q, ...)
    int iterations = 0;                 // applied Newton updates
    std::vector<IterationRecord> residual_history;
    bool converged = false;
};

/// Row bookkeeping for a case: which buses own auxiliary unknowns and
/// constraint rows, and the resulting system dimension 2n + c.
struct CaseLayout {
    int n_buses = 0;
    std::vector<int> extra_offset;  // per bus; -1 when none
    std::vector<int> extra_count;   // per bus
    int n_extra = 0;
};

CaseLayout make_layout(const NetworkCase& c);

/// Stamp every device and branch at the given iterate into a fresh system.
/// `state` is [V_R(0..n-1), V_I(0..n-1), extras].
SplitSystem assemble(const NetworkCase& c, const CaseLayout& layout,
                     const Eigen::VectorXd& state);

/// Exact (non-linearized) per-bus KCL residual pairs at a candidate state.
std::vector<SplitPhasor> kcl_residual(const NetworkCase& c, const CaseLayout& layout,
                                      const Eigen::VectorXd& state);

/// Newton-Raphson power flow on the split circuit. The case must already be
/// in per-unit (see normalize_case). Non-convergence is reported in the
/// result, not thrown; singular systems and machine capability violations
/// propagate as structured errors.
SolveResult solve_power_flow(const NetworkCase& c, const SolverOptions& opts = {});

}  // namespace splitgrid
