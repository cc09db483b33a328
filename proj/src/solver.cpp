#include "splitgrid/solver.hpp"

#include <cmath>
#include <limits>

namespace splitgrid {

namespace {

SplitPhasor bus_voltage(const Eigen::VectorXd& state, int n, NodeId b) {
    return {state(b), state(n + b)};
}

/// PV buses keep their active injection fixed while the constraint row frees
/// the reactive power; in the load sign convention the device consumes
/// (-P, -Q).
PQLoad pv_as_load(const PvBus& pv, double q_free) { return {-pv.p, -q_free}; }

struct BusCurrentAccumulator {
    std::vector<SplitPhasor> cur;
    explicit BusCurrentAccumulator(int n) : cur(n) {}
    void add(NodeId b, SplitPhasor i) {
        cur[b].re += i.re;
        cur[b].im += i.im;
    }
};

void accumulate_branch_currents(const NetworkCase& c, const Eigen::VectorXd& state,
                                BusCurrentAccumulator& acc) {
    int n = c.n_buses();
    for (const auto& br : c.branches) {
        double zsq = br.r * br.r + br.x * br.x;
        double g = br.r / zsq, b = -br.x / zsq, bsh = 0.5 * br.b_sh;
        SplitPhasor vf = bus_voltage(state, n, br.from);
        SplitPhasor vt = bus_voltage(state, n, br.to);
        acc.add(br.from, {g * (vf.re - vt.re) - b * (vf.im - vt.im) - bsh * vf.im,
                          b * (vf.re - vt.re) + g * (vf.im - vt.im) + bsh * vf.re});
        acc.add(br.to, {g * (vt.re - vf.re) - b * (vt.im - vf.im) - bsh * vt.im,
                        b * (vt.re - vf.re) + g * (vt.im - vf.im) + bsh * vt.re});
    }
}

}  // namespace

CaseLayout make_layout(const NetworkCase& c) {
    CaseLayout l;
    l.n_buses = c.n_buses();
    l.extra_offset.assign(l.n_buses, -1);
    l.extra_count.assign(l.n_buses, 0);
    for (const auto& b : c.buses) {
        int count = 0;
        if (std::holds_alternative<SlackSource>(b.device)) count = 2;
        else if (std::holds_alternative<PvBus>(b.device)) count = 1;
        else if (const auto* g = std::get_if<GlassDevice>(&b.device)) {
            if (g->tmpl.kind == GlassKind::CurrentDependent) count = 2;
        }
        if (count > 0) {
            l.extra_offset[b.id] = l.n_extra;
            l.extra_count[b.id] = count;
            l.n_extra += count;
        }
    }
    return l;
}

SplitSystem assemble(const NetworkCase& c, const CaseLayout& layout,
                     const Eigen::VectorXd& state) {
    const int n = layout.n_buses;
    SplitSystem sys(n, layout.n_extra);

    for (const auto& br : c.branches) branch_stamp(sys, br);

    for (const auto& bus : c.buses) {
        const NodeId id = bus.id;
        const SplitPhasor v = bus_voltage(state, n, id);
        const int k = layout.extra_offset[id];
        const int kcol = k >= 0 ? 2 * n + k : -1;

        if (const auto* s = std::get_if<SlackSource>(&bus.device)) {
            // Auxiliary pair: current drawn from the bus by the source.
            sys.add(sys.real_row(id), kcol, 1.0);
            sys.add(sys.imag_row(id), kcol + 1, 1.0);
            sys.add(sys.extra_row(k), sys.real_row(id), 1.0);
            sys.add_rhs(sys.extra_row(k), s->v_set.re);
            sys.add(sys.extra_row(k + 1), sys.imag_row(id), 1.0);
            sys.add_rhs(sys.extra_row(k + 1), s->v_set.im);
        } else if (const auto* pq = std::get_if<PQLoad>(&bus.device)) {
            sys.stamp_device(pq_stamp(*pq, id, v));
        } else if (const auto* z = std::get_if<ZipLoad>(&bus.device)) {
            sys.stamp_device(zip_stamp(*z, id, v));
        } else if (const auto* e = std::get_if<ExpLoad>(&bus.device)) {
            sys.stamp_device(exp_stamp(*e, id, v));
        } else if (const auto* im = std::get_if<ImDevice>(&bus.device)) {
            sys.stamp_device(im_stamp(im->params, im->torque, id, v));
        } else if (const auto* pv = std::get_if<PvBus>(&bus.device)) {
            double q_prev = state(2 * n + k);
            LinearizedStamp st = pq_stamp(pv_as_load(*pv, q_prev), id, v);
            // dI/dQ column of the free reactive variable.
            double m2 = v.magnitude_sq();
            Eigen::Vector2d jq(-v.im / m2, v.re / m2);
            st.hist -= jq * q_prev;
            sys.stamp_device(st);
            sys.add(sys.real_row(id), kcol, jq(0));
            sys.add(sys.imag_row(id), kcol, jq(1));
            // Linearized magnitude constraint 2 V^i . V^{i+1} = vmag^2 + |V^i|^2.
            sys.add(sys.extra_row(k), sys.real_row(id), 2.0 * v.re);
            sys.add(sys.extra_row(k), sys.imag_row(id), 2.0 * v.im);
            sys.add_rhs(sys.extra_row(k), pv->v_mag * pv->v_mag + m2);
        } else if (const auto* gl = std::get_if<GlassDevice>(&bus.device)) {
            if (gl->tmpl.kind == GlassKind::VoltageDependent) {
                sys.stamp_device(std::get<LinearizedStamp>(glass_stamp(gl->tmpl, id, v)));
            } else {
                SplitPhasor i_prev{state(2 * n + k), state(2 * n + k + 1)};
                auto d = std::get<DualStamp>(glass_stamp(gl->tmpl, id, i_prev));
                // Bus KCL sees the auxiliary currents directly.
                sys.add(sys.real_row(id), kcol, 1.0);
                sys.add(sys.imag_row(id), kcol + 1, 1.0);
                // Device rows: V - res * I = src.
                sys.add(sys.extra_row(k), sys.real_row(id), 1.0);
                sys.add(sys.extra_row(k), kcol, -d.res(0, 0));
                sys.add(sys.extra_row(k), kcol + 1, -d.res(0, 1));
                sys.add_rhs(sys.extra_row(k), d.src(0));
                sys.add(sys.extra_row(k + 1), sys.imag_row(id), 1.0);
                sys.add(sys.extra_row(k + 1), kcol, -d.res(1, 0));
                sys.add(sys.extra_row(k + 1), kcol + 1, -d.res(1, 1));
                sys.add_rhs(sys.extra_row(k + 1), d.src(1));
            }
        }
    }
    return sys;
}

std::vector<SplitPhasor> kcl_residual(const NetworkCase& c, const CaseLayout& layout,
                                      const Eigen::VectorXd& state) {
    const int n = layout.n_buses;
    BusCurrentAccumulator acc(n);
    accumulate_branch_currents(c, state, acc);

    for (const auto& bus : c.buses) {
        const NodeId id = bus.id;
        const SplitPhasor v = bus_voltage(state, n, id);
        const int k = layout.extra_offset[id];
        if (std::holds_alternative<SlackSource>(bus.device)) {
            acc.add(id, {state(2 * n + k), state(2 * n + k + 1)});
        } else if (const auto* pq = std::get_if<PQLoad>(&bus.device)) {
            acc.add(id, pq_currents(*pq, v));
        } else if (const auto* z = std::get_if<ZipLoad>(&bus.device)) {
            acc.add(id, zip_currents(*z, v));
        } else if (const auto* e = std::get_if<ExpLoad>(&bus.device)) {
            acc.add(id, exp_currents(*e, v));
        } else if (const auto* im = std::get_if<ImDevice>(&bus.device)) {
            acc.add(id, im_currents(im->params, im->torque, v));
        } else if (const auto* pv = std::get_if<PvBus>(&bus.device)) {
            acc.add(id, pq_currents(pv_as_load(*pv, state(2 * n + k)), v));
        } else if (const auto* gl = std::get_if<GlassDevice>(&bus.device)) {
            if (gl->tmpl.kind == GlassKind::VoltageDependent) {
                acc.add(id, evaluate(gl->tmpl, v));
            } else {
                acc.add(id, {state(2 * n + k), state(2 * n + k + 1)});
            }
        }
    }
    return acc.cur;
}

namespace {

/// Inf-norm of the exact KCL residual plus the non-KCL device equations
/// (PV magnitude, current-dependent template voltage law).
double full_residual_inf(const NetworkCase& c, const CaseLayout& layout,
                         const Eigen::VectorXd& state) {
    const int n = layout.n_buses;
    double r = 0.0;
    for (const auto& p : kcl_residual(c, layout, state))
        r = std::max({r, std::abs(p.re), std::abs(p.im)});
    for (const auto& bus : c.buses) {
        const int k = layout.extra_offset[bus.id];
        const SplitPhasor v = bus_voltage(state, n, bus.id);
        if (const auto* pv = std::get_if<PvBus>(&bus.device)) {
            r = std::max(r, std::abs(v.magnitude_sq() - pv->v_mag * pv->v_mag));
        } else if (const auto* gl = std::get_if<GlassDevice>(&bus.device)) {
            if (gl->tmpl.kind == GlassKind::CurrentDependent) {
                SplitPhasor i{state(2 * n + k), state(2 * n + k + 1)};
                SplitPhasor pred = evaluate(gl->tmpl, i);
                r = std::max({r, std::abs(v.re - pred.re), std::abs(v.im - pred.im)});
            }
        }
    }
    return r;
}

}  // namespace

SolveResult solve_power_flow(const NetworkCase& c, const SolverOptions& opts) {
    validate_case(c);
    if (!(opts.tol_v > 0.0 && opts.tol_kcl > 0.0) || opts.max_iter < 1 ||
        !(opts.damping > 0.0 && opts.damping <= 1.0))
        throw std::invalid_argument("invalid solver options");

    const CaseLayout layout = make_layout(c);
    const int n = layout.n_buses;
    const int dim = 2 * n + layout.n_extra;

    Eigen::VectorXd state = Eigen::VectorXd::Zero(dim);
    for (const auto& bus : c.buses) {
        SplitPhasor v0{1.0, 0.0};
        if (const auto* s = std::get_if<SlackSource>(&bus.device)) v0 = s->v_set;
        if (!opts.warm_start.empty()) v0 = opts.warm_start.at(bus.id);
        state(bus.id) = v0.re;
        state(n + bus.id) = v0.im;
    }

    SolveResult result;
    double resid_prev = full_residual_inf(c, layout, state);
    int applied = 0;

    for (int it = 1; it <= opts.max_iter; ++it) {
        SplitSystem sys = assemble(c, layout, state);
        if (opts.trace) opts.trace(it, sys);
        Eigen::VectorXd x = sys.solve();

        double dv_full = (x.head(2 * n) - state.head(2 * n)).cwiseAbs().maxCoeff();
        if (dv_full <= opts.tol_v) {
            // At a fixed point of the linearization; certify with exact KCL.
            state = x;
            double resid = full_residual_inf(c, layout, state);
            result.residual_history.push_back({dv_full, resid});
            if (resid <= opts.tol_kcl) {
                result.converged = true;
                break;
            }
            resid_prev = resid;
            continue;
        }

        double alpha = opts.damping;
        Eigen::VectorXd cand;
        double resid = std::numeric_limits<double>::infinity();
        int halvings = 0;
        while (true) {
            cand = state + alpha * (x - state);
            // Voltage floor: keep every bus magnitude above the PQ division
            // floor by further damping.
            bool floored = false;
            for (int b = 0; b < n; ++b) {
                if (std::hypot(cand(b), cand(n + b)) < kVoltageFloor) { floored = true; break; }
            }
            if (floored) {
                if (halvings >= 30) break;
                alpha *= 0.5;
                ++halvings;
                continue;
            }
            try {
                resid = full_residual_inf(c, layout, cand);
            } catch (const std::exception&) {
                if (halvings >= 4) throw;
                alpha *= 0.5;
                ++halvings;
                continue;
            }
            if (resid > resid_prev && halvings < 4) {
                alpha *= 0.5;
                ++halvings;
                continue;
            }
            break;
        }

        double dv = (cand.head(2 * n) - state.head(2 * n)).cwiseAbs().maxCoeff();
        state = cand;
        ++applied;
        resid_prev = resid;
        result.residual_history.push_back({dv, resid});
        if (resid <= opts.tol_kcl && dv <= opts.tol_v) {
            result.converged = true;
            break;
        }
    }

    result.iterations = applied;
    result.voltages.resize(n);
    for (int b = 0; b < n; ++b) result.voltages[b] = {state(b), state(n + b)};
    result.extras = state.tail(layout.n_extra);
    return result;
}

}  // namespace splitgrid
