#include "splitgrid/network.hpp"

#include <cmath>
#include <set>

namespace splitgrid {

int NetworkCase::slack_bus() const {
    for (const auto& b : buses)
        if (std::holds_alternative<SlackSource>(b.device)) return b.id;
    return -1;
}

namespace {

void fail(const std::string& rule) { throw std::invalid_argument("invalid case: " + rule); }

}  // namespace

void validate_case(const NetworkCase& c) {
    const int n = c.n_buses();
    if (n == 0) fail("case has no buses");

    std::set<NodeId> ids;
    int slack_count = 0;
    for (const auto& b : c.buses) {
        if (b.id < 0 || b.id >= n) fail("bus ids must be dense 0..n-1 (bus " + std::to_string(b.id) + ")");
        if (!ids.insert(b.id).second) fail("duplicate bus id " + std::to_string(b.id));
        if (std::holds_alternative<SlackSource>(b.device)) ++slack_count;
    }
    if (slack_count == 0) fail("case must contain exactly one slack bus (found none)");
    if (slack_count > 1) fail("case must contain exactly one slack bus (found " +
                              std::to_string(slack_count) + ")");

    for (const auto& b : c.buses) {
        if (const auto* s = std::get_if<SlackSource>(&b.device)) {
            if (!(s->v_set.magnitude() > 0.0)) fail("slack voltage magnitude must be positive");
        } else if (const auto* z = std::get_if<ZipLoad>(&b.device)) {
            if (std::abs(z->a_p + z->b_p + z->c_p - 1.0) > 1e-9 ||
                std::abs(z->a_q + z->b_q + z->c_q - 1.0) > 1e-9)
                fail("ZIP mixture coefficients must sum to 1 at bus " + std::to_string(b.id));
        } else if (const auto* pv = std::get_if<PvBus>(&b.device)) {
            if (!(pv->v_mag > 0.0)) fail("PV magnitude setpoint must be positive");
        } else if (const auto* im = std::get_if<ImDevice>(&b.device)) {
            const IMParams& p = im->params;
            if (!(p.r_s > 0.0 && p.x_s > 0.0 && p.x_m > 0.0 && p.r_r > 0.0))
                fail("induction machine impedances must be positive at bus " + std::to_string(b.id));
            if (p.poles < 2 || p.poles % 2 != 0) fail("pole count must be even and >= 2");
            if (!(p.omega_s > 0.0)) fail("synchronous speed must be positive");
            if (!(im->torque > 0.0)) fail("machine torque must be positive");
        } else if (const auto* g = std::get_if<GlassDevice>(&b.device)) {
            check_template(g->tmpl);
        }
    }

    for (const auto& br : c.branches) {
        if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n)
            fail("branch endpoint does not exist");
        if (br.from == br.to) fail("branch endpoints must differ");
        if (br.r < 0.0) fail("branch resistance must be nonnegative");
        if (br.r == 0.0 && br.x == 0.0) fail("branch must have nonzero impedance");
    }
}

NetworkCase normalize_case(const NetworkCase& c) {
    if (c.base.per_unit) return c;
    if (!(c.base.s_base > 0.0 && c.base.v_base > 0.0))
        throw std::invalid_argument("SI case requires positive sbase and vbase");

    const double z_base = c.base.v_base * c.base.v_base / c.base.s_base;
    NetworkCase out = c;
    out.base.per_unit = true;

    for (auto& b : out.buses) {
        if (auto* s = std::get_if<SlackSource>(&b.device)) {
            s->v_set.re /= c.base.v_base;
            s->v_set.im /= c.base.v_base;
        } else if (auto* pq = std::get_if<PQLoad>(&b.device)) {
            pq->p /= c.base.s_base;
            pq->q /= c.base.s_base;
        } else if (auto* z = std::get_if<ZipLoad>(&b.device)) {
            z->p0 /= c.base.s_base;
            z->q0 /= c.base.s_base;
        } else if (auto* e = std::get_if<ExpLoad>(&b.device)) {
            e->p0 /= c.base.s_base;
            e->q0 /= c.base.s_base;
        } else if (auto* pv = std::get_if<PvBus>(&b.device)) {
            pv->p /= c.base.s_base;
            pv->v_mag /= c.base.v_base;
        } else if (auto* im = std::get_if<ImDevice>(&b.device)) {
            im->params.r_s /= z_base;
            im->params.x_s /= z_base;
            im->params.x_m /= z_base;
            im->params.r_r /= z_base;
            // Slip invariance under impedance scaling requires the torque to
            // scale with the power base (omega_s untouched).
            im->torque /= c.base.s_base;
        } else if (std::get_if<GlassDevice>(&b.device)) {
            throw std::invalid_argument(
                "glass templates are interpreted in per-unit; SI cases cannot carry them");
        }
    }
    for (auto& br : out.branches) {
        br.r /= z_base;
        br.x /= z_base;
        br.b_sh *= z_base;
    }
    return out;
}

}  // namespace splitgrid
