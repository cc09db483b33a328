#include "splitgrid/devices.hpp"

#include <cmath>
#include <complex>

namespace splitgrid {

namespace {

void require_live_voltage(SplitPhasor v) {
    double m = v.magnitude();
    if (!(m > kVoltageFloor)) throw VoltageCollapseError(m);
}

/// Powers and their magnitude derivatives at |V| = m.
struct PowerPoint {
    double p, q, dp_dm, dq_dm;
};

SplitPhasor power_currents(double p, double q, SplitPhasor v) {
    double m2 = v.magnitude_sq();
    return {(p * v.re + q * v.im) / m2, (p * v.im - q * v.re) / m2};
}

/// Linearization of I = f(P(|V|), Q(|V|), V) with analytic chain-rule terms.
LinearizedStamp power_stamp(const PowerPoint& pp, NodeId node, SplitPhasor v) {
    double m2 = v.magnitude_sq();
    double m4 = m2 * m2;
    double m = std::sqrt(m2);
    double p = pp.p, q = pp.q;
    // Magnitude chain: dP/dV_R = P'(m) V_R / m, etc.
    double pr = pp.dp_dm * v.re / m, pi = pp.dp_dm * v.im / m;
    double qr = pp.dq_dm * v.re / m, qi = pp.dq_dm * v.im / m;

    double num_r = p * v.re + q * v.im;
    double num_i = p * v.im - q * v.re;

    LinearizedStamp s;
    s.node = node;
    s.jac(0, 0) = (p + pr * v.re + qr * v.im) / m2 - 2.0 * v.re * num_r / m4;
    s.jac(0, 1) = (q + pi * v.re + qi * v.im) / m2 - 2.0 * v.im * num_r / m4;
    s.jac(1, 0) = (-q + pr * v.im - qr * v.re) / m2 - 2.0 * v.re * num_i / m4;
    s.jac(1, 1) = (p + pi * v.im - qi * v.re) / m2 - 2.0 * v.im * num_i / m4;

    Eigen::Vector2d cur(num_r / m2, num_i / m2);
    s.hist = cur - s.jac * Eigen::Vector2d(v.re, v.im);
    return s;
}

}  // namespace

SplitPhasor pq_currents(const PQLoad& load, SplitPhasor v) {
    require_live_voltage(v);
    return power_currents(load.p, load.q, v);
}

LinearizedStamp pq_stamp(const PQLoad& load, NodeId node, SplitPhasor v_prev) {
    require_live_voltage(v_prev);
    return power_stamp({load.p, load.q, 0.0, 0.0}, node, v_prev);
}

std::pair<double, double> zip_power(const ZipLoad& load, double v_mag) {
    if (v_mag < 0.0) throw std::domain_error("negative voltage magnitude");
    double p = load.p0 * (load.a_p * v_mag * v_mag + load.b_p * v_mag + load.c_p);
    double q = load.q0 * (load.a_q * v_mag * v_mag + load.b_q * v_mag + load.c_q);
    return {p, q};
}

std::pair<double, double> exp_power(const ExpLoad& load, double v_mag) {
    if (v_mag == 0.0 && (load.p_v < 0.0 || load.q_v < 0.0))
        throw std::domain_error("zero voltage with negative exponent");
    return {load.p0 * std::pow(v_mag, load.p_v), load.q0 * std::pow(v_mag, load.q_v)};
}

SplitPhasor zip_currents(const ZipLoad& load, SplitPhasor v) {
    require_live_voltage(v);
    auto [p, q] = zip_power(load, v.magnitude());
    return power_currents(p, q, v);
}

SplitPhasor exp_currents(const ExpLoad& load, SplitPhasor v) {
    require_live_voltage(v);
    auto [p, q] = exp_power(load, v.magnitude());
    return power_currents(p, q, v);
}

LinearizedStamp zip_stamp(const ZipLoad& load, NodeId node, SplitPhasor v_prev) {
    require_live_voltage(v_prev);
    double m = v_prev.magnitude();
    auto [p, q] = zip_power(load, m);
    PowerPoint pp{p, q,
                  load.p0 * (2.0 * load.a_p * m + load.b_p),
                  load.q0 * (2.0 * load.a_q * m + load.b_q)};
    return power_stamp(pp, node, v_prev);
}

LinearizedStamp exp_stamp(const ExpLoad& load, NodeId node, SplitPhasor v_prev) {
    require_live_voltage(v_prev);
    double m = v_prev.magnitude();
    auto [p, q] = exp_power(load, m);
    PowerPoint pp{p, q,
                  load.p0 * load.p_v * std::pow(m, load.p_v - 1.0),
                  load.q0 * load.q_v * std::pow(m, load.q_v - 1.0)};
    return power_stamp(pp, node, v_prev);
}

// ---------------------------------------------------------------------------
// Induction machine
// ---------------------------------------------------------------------------

namespace {

struct SlipQuadratic {
    double g1, g2, g3;       // gamma coefficients
    double dg2_dm2;          // d gamma2 / d |V|^2
};

SlipQuadratic slip_quadratic(const IMParams& m, double torque, double m2) {
    double xm2 = m.x_m * m.x_m;
    double k = 3.0 * m.poles * m.r_r / (2.0 * m.omega_s * torque);
    SlipQuadratic q;
    q.g1 = xm2 * (m.r_s * m.r_s + m.x_s * m.x_s);
    q.g2 = xm2 * (2.0 * m.r_s * m.r_r - k * m2);
    q.g3 = m.r_r * m.r_r *
           (m.r_s * m.r_s + m.x_s * m.x_s + 2.0 * m.x_s * m.x_m + xm2);
    q.dg2_dm2 = -xm2 * k;
    return q;
}

}  // namespace

double im_breakdown_torque(const IMParams& m, double v_mag) {
    double xm2 = m.x_m * m.x_m;
    double k = 3.0 * m.poles * m.r_r / (2.0 * m.omega_s);
    double g1 = xm2 * (m.r_s * m.r_s + m.x_s * m.x_s);
    double g3 = m.r_r * m.r_r *
                (m.r_s * m.r_s + m.x_s * m.x_s + 2.0 * m.x_s * m.x_m + xm2);
    return k * v_mag * v_mag * xm2 /
           (2.0 * m.r_s * m.r_r * xm2 + 2.0 * std::sqrt(g1 * g3));
}

double im_slip(const IMParams& m, double torque, SplitPhasor v) {
    if (!(torque > 0.0)) throw std::domain_error("torque must be positive");
    double vm = v.magnitude();
    if (!(vm > 0.0)) throw std::domain_error("zero voltage");
    SlipQuadratic q = slip_quadratic(m, torque, v.magnitude_sq());
    double disc = q.g2 * q.g2 - 4.0 * q.g1 * q.g3;
    if (disc < 0.0) throw TorqueCapabilityError(torque, im_breakdown_torque(m, vm));
    double denom = -q.g2 + std::sqrt(disc);
    if (denom <= 0.0) throw TorqueCapabilityError(torque, im_breakdown_torque(m, vm));
    double s = 2.0 * q.g3 / denom;  // smaller root, numerically stable form
    if (!(s > 0.0 && s <= 1.0))
        throw TorqueCapabilityError(torque, im_breakdown_torque(m, vm));
    return s;
}

std::pair<double, double> im_admittance(const IMParams& m, double slip) {
    if (!(slip > 0.0 && slip <= 1.0)) throw std::domain_error("slip outside (0,1]");
    std::complex<double> jxm(0.0, m.x_m);
    std::complex<double> rr(m.r_r / slip, 0.0);
    std::complex<double> z = std::complex<double>(m.r_s, m.x_s) + jxm * rr / (jxm + rr);
    std::complex<double> y = 1.0 / z;
    return {y.real(), y.imag()};
}

double im_torque(const IMParams& m, double slip, double v_mag) {
    double rr_s = m.r_r / slip;
    double dr = m.r_s * rr_s - m.x_s * m.x_m;
    double di = m.r_s * m.x_m + (m.x_s + m.x_m) * rr_s;
    double i_rotor_sq = v_mag * v_mag * m.x_m * m.x_m / (dr * dr + di * di);
    return 3.0 * m.poles / (2.0 * m.omega_s) * i_rotor_sq * rr_s;
}

IMOperatingPoint im_operating_point(const IMParams& m, double torque, SplitPhasor v) {
    IMOperatingPoint op;
    op.torque = torque;
    op.slip = im_slip(m, torque, v);
    std::tie(op.u, op.v) = im_admittance(m, op.slip);
    return op;
}

SplitPhasor im_currents(const IMParams& m, double torque, SplitPhasor v) {
    IMOperatingPoint op = im_operating_point(m, torque, v);
    return {v.re * op.u - v.im * op.v, v.im * op.u + v.re * op.v};
}

LinearizedStamp im_stamp(const IMParams& m, double torque, NodeId node, SplitPhasor vp) {
    double m2 = vp.magnitude_sq();
    double s = im_slip(m, torque, vp);
    SlipQuadratic q = slip_quadratic(m, torque, m2);

    // Implicit differentiation of gamma1 s^2 + gamma2 s + gamma3 = 0.
    double ds_dm2 = -s * q.dg2_dm2 / (2.0 * q.g1 * s + q.g2);

    std::complex<double> jxm(0.0, m.x_m);
    std::complex<double> denom(m.r_r, s * m.x_m);
    std::complex<double> z = std::complex<double>(m.r_s, m.x_s) +
                             jxm * m.r_r / denom;
    std::complex<double> y = 1.0 / z;
    std::complex<double> dz_ds = m.x_m * m.x_m * m.r_r / (denom * denom);
    std::complex<double> dy_ds = -y * y * dz_ds;

    std::complex<double> dy_dvr = dy_ds * ds_dm2 * 2.0 * vp.re;
    std::complex<double> dy_dvi = dy_ds * ds_dm2 * 2.0 * vp.im;

    double u = y.real(), v = y.imag();
    double dur = dy_dvr.real(), dvr = dy_dvr.imag();
    double dui = dy_dvi.real(), dvi = dy_dvi.imag();

    LinearizedStamp st;
    st.node = node;
    // I_R = V_R u - V_I v,  I_I = V_I u + V_R v.
    st.jac(0, 0) = u + vp.re * dur - vp.im * dvr;
    st.jac(0, 1) = vp.re * dui - v - vp.im * dvi;
    st.jac(1, 0) = vp.im * dur + v + vp.re * dvr;
    st.jac(1, 1) = u + vp.im * dui + vp.re * dvi;

    Eigen::Vector2d cur(vp.re * u - vp.im * v, vp.im * u + vp.re * v);
    st.hist = cur - st.jac * Eigen::Vector2d(vp.re, vp.im);
    return st;
}

// ---------------------------------------------------------------------------
// Branch
// ---------------------------------------------------------------------------

void branch_stamp(SplitSystem& sys, const Branch& br) {
    double zsq = br.r * br.r + br.x * br.x;
    if (zsq == 0.0) throw std::invalid_argument("branch with zero impedance");
    double g = br.r / zsq;
    double b = -br.x / zsq;
    double bsh = 0.5 * br.b_sh;

    NodeId f = br.from, t = br.to;
    int fr = sys.real_row(f), fi = sys.imag_row(f);
    int tr = sys.real_row(t), ti = sys.imag_row(t);

    // Series conductance, both sub-circuits.
    sys.stamp_conductance(f, t, g);

    // Series susceptance couples each sub-circuit to the other; the shunt
    // halves couple each node to its own counterpart row.
    sys.add(fr, fi, -(b + bsh));
    sys.add(fr, ti, b);
    sys.add(fi, fr, b + bsh);
    sys.add(fi, tr, -b);

    sys.add(tr, ti, -(b + bsh));
    sys.add(tr, fi, b);
    sys.add(ti, tr, b + bsh);
    sys.add(ti, fr, -b);
}

}  // namespace splitgrid
