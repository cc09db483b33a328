#include <doctest.h>

#include <cmath>
#include <random>

#include "splitgrid/devices.hpp"

using namespace splitgrid;

namespace {

// Central-difference Jacobian of an exact split-current function.
template <typename F>
Eigen::Matrix2d fd_jacobian(F&& currents, SplitPhasor v, double h) {
    Eigen::Matrix2d j;
    SplitPhasor pr = currents({v.re + h, v.im});
    SplitPhasor mr = currents({v.re - h, v.im});
    SplitPhasor pi = currents({v.re, v.im + h});
    SplitPhasor mi = currents({v.re, v.im - h});
    j(0, 0) = (pr.re - mr.re) / (2 * h);
    j(1, 0) = (pr.im - mr.im) / (2 * h);
    j(0, 1) = (pi.re - mi.re) / (2 * h);
    j(1, 1) = (pi.im - mi.im) / (2 * h);
    return j;
}

const IMParams kMachine{0.1, 0.5, 20.0, 0.1, 4, 377.0};

// Brute-force torque-balance slip: scan the stable branch (below the torque
// peak) for the closest torque match. Independent of the quadratic solve.
double scan_slip(const IMParams& m, double torque, double v_mag, double step = 1e-6) {
    double peak_s = step, peak_t = 0.0;
    for (double s = step; s <= 1.0 + 0.5 * step; s += step) {
        double t = im_torque(m, s, v_mag);
        if (t > peak_t) { peak_t = t; peak_s = s; }
    }
    double best_s = step, best_err = 1e300;
    for (double s = step; s <= peak_s + 0.5 * step; s += step) {
        double err = std::abs(im_torque(m, s, v_mag) - torque);
        if (err < best_err) { best_err = err; best_s = s; }
    }
    return best_s;
}

}  // namespace

TEST_CASE("pq_currents unity case") {
    SplitPhasor i = pq_currents({1.0, 0.0}, {1.0, 0.0});
    CHECK(i.re == doctest::Approx(1.0));
    CHECK(i.im == doctest::Approx(0.0));
}

TEST_CASE("pq_currents direct substitution") {
    SplitPhasor i = pq_currents({0.5, 0.2}, {0.9, -0.1});
    CHECK(i.re == doctest::Approx(0.43 / 0.82).epsilon(1e-12));
    CHECK(i.im == doctest::Approx(-0.23 / 0.82).epsilon(1e-12));
}

TEST_CASE("pq_currents inverts the complex power definition") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 200; ++k) {
        SplitPhasor v{u(rng), u(rng)};
        if (v.magnitude() <= 1e-3) continue;
        double p = u(rng), q = u(rng);
        SplitPhasor i = pq_currents({p, q}, v);
        CHECK(v.re * i.re + v.im * i.im == doctest::Approx(p).epsilon(1e-12));
        CHECK(v.im * i.re - v.re * i.im == doctest::Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("pq_currents reports voltage collapse below the floor") {
    CHECK_THROWS_AS(pq_currents({1.0, 0.0}, {5e-5, 5e-5}), VoltageCollapseError);
}

TEST_CASE("pq_stamp analytic values at the unity point") {
    LinearizedStamp s = pq_stamp({1.0, 0.0}, 0, {1.0, 0.0});
    CHECK(s.jac(0, 0) == doctest::Approx(-1.0));
    CHECK(s.jac(0, 1) == doctest::Approx(0.0));
    CHECK(s.jac(1, 0) == doctest::Approx(0.0));
    CHECK(s.jac(1, 1) == doctest::Approx(1.0));
    CHECK(s.hist(0) == doctest::Approx(2.0));
    CHECK(s.hist(1) == doctest::Approx(0.0));
}

TEST_CASE("null PQ device stamps nothing") {
    LinearizedStamp s = pq_stamp({0.0, 0.0}, 0, {0.8, 0.3});
    CHECK(s.jac.isZero(0.0));
    CHECK(s.hist.isZero(0.0));
}

TEST_CASE("zip_power evaluations") {
    ZipLoad z{2.0, 1.0, 0.4, 0.3, 0.3, 0.2, 0.5, 0.3};
    auto [p1, q1] = zip_power(z, 1.0);
    CHECK(p1 == doctest::Approx(2.0));
    CHECK(q1 == doctest::Approx(1.0));
    auto [p0, q0] = zip_power(z, 0.0);
    CHECK(p0 == doctest::Approx(0.3 * 2.0));
    CHECK(q0 == doctest::Approx(0.3 * 1.0));
    ZipLoad pure_z{2.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0};
    CHECK(zip_power(pure_z, 0.9).first == doctest::Approx(0.81 * 2.0));
}

TEST_CASE("exp_power evaluations") {
    ExpLoad e{3.0, 1.5, 2.0, 0.0};
    auto [p, q] = exp_power(e, 0.9);
    CHECK(p == doctest::Approx(3.0 * 0.81));
    CHECK(q == doctest::Approx(1.5));  // zero exponent: constant power
    auto [p1, q1] = exp_power(e, 1.0);
    CHECK(p1 == doctest::Approx(3.0));
    CHECK(q1 == doctest::Approx(1.5));
    ExpLoad neg{1.0, 1.0, -1.0, 0.0};
    CHECK_THROWS_AS(exp_power(neg, 0.0), std::domain_error);
}

TEST_CASE("exponent-2 exponential equals pure-impedance ZIP") {
    ExpLoad e{1.2, 0.7, 2.0, 2.0};
    ZipLoad z{1.2, 0.7, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0};
    for (double m : {0.5, 0.9, 1.0, 1.3}) {
        CHECK(exp_power(e, m).first == doctest::Approx(zip_power(z, m).first).epsilon(1e-14));
        CHECK(exp_power(e, m).second == doctest::Approx(zip_power(z, m).second).epsilon(1e-14));
    }
}

TEST_CASE("constant-power ZIP behaves exactly like a PQ load") {
    ZipLoad z{0.8, 0.4, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0};
    PQLoad pq{0.8, 0.4};
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.3, 1.5);
    for (int k = 0; k < 20; ++k) {
        SplitPhasor v{u(rng), u(rng) - 0.9};
        SplitPhasor a = zip_currents(z, v);
        SplitPhasor b = pq_currents(pq, v);
        CHECK(a.re == b.re);
        CHECK(a.im == b.im);
    }
}

TEST_CASE("device stamps match central finite differences") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    PQLoad pq{0.7, -0.3};
    ZipLoad zip{1.1, 0.6, 0.25, 0.35, 0.4, 0.1, 0.2, 0.7};
    ExpLoad ex{0.9, 0.5, 1.4, 3.1};
    for (int k = 0; k < 10; ++k) {
        SplitPhasor v{1.0 + u(rng), u(rng)};
        auto check = [&](const LinearizedStamp& st, auto&& cur) {
            Eigen::Matrix2d fd = fd_jacobian(cur, v, 1e-6);
            double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
            CHECK((st.jac - fd).cwiseAbs().maxCoeff() / scale <= 1e-6);
        };
        check(pq_stamp(pq, 0, v), [&](SplitPhasor w) { return pq_currents(pq, w); });
        check(zip_stamp(zip, 0, v), [&](SplitPhasor w) { return zip_currents(zip, w); });
        check(exp_stamp(ex, 0, v), [&](SplitPhasor w) { return exp_currents(ex, w); });
    }
    // The machine operates at SI volt scale.
    std::uniform_real_distribution<double> uv(340.0, 390.0);
    for (int k = 0; k < 10; ++k) {
        SplitPhasor v{uv(rng), 40.0 * u(rng)};
        LinearizedStamp st = im_stamp(kMachine, 10.0, 0, v);
        Eigen::Matrix2d fd =
            fd_jacobian([&](SplitPhasor w) { return im_currents(kMachine, 10.0, w); }, v, 1e-3);
        double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
        CHECK((st.jac - fd).cwiseAbs().maxCoeff() / scale <= 1e-6);
    }
}

TEST_CASE("im_slip satisfies its quadratic and matches the brute-force scan") {
    double s = im_slip(kMachine, 10.0, {375.59, 0.0});
    // Residual of the quadratic.
    double m2 = 375.59 * 375.59;
    double xm2 = kMachine.x_m * kMachine.x_m;
    double g1 = xm2 * (kMachine.r_s * kMachine.r_s + kMachine.x_s * kMachine.x_s);
    double g2 = xm2 * (2 * kMachine.r_s * kMachine.r_r -
                       3.0 * kMachine.poles * kMachine.r_r / (2.0 * kMachine.omega_s * 10.0) * m2);
    double g3 = kMachine.r_r * kMachine.r_r *
                (kMachine.r_s * kMachine.r_s + kMachine.x_s * kMachine.x_s +
                 2 * kMachine.x_s * kMachine.x_m + xm2);
    CHECK(std::abs(g1 * s * s + g2 * s + g3) <= 1e-9 * g3);
    CHECK(std::abs(s - scan_slip(kMachine, 10.0, 375.59)) <= 1e-5);
}

TEST_CASE("doubling torque increases slip on the stable branch") {
    double s1 = im_slip(kMachine, 10.0, {375.59, 0.0});
    double s2 = im_slip(kMachine, 20.0, {375.59, 0.0});
    CHECK(s2 > s1);
    CHECK(std::abs(s2 - scan_slip(kMachine, 20.0, 375.59)) <= 1e-5);
}

TEST_CASE("torque beyond breakdown raises a capability error") {
    try {
        im_slip(kMachine, 1e6, {375.59, 0.0});
        FAIL("expected TorqueCapabilityError");
    } catch (const TorqueCapabilityError& e) {
        CHECK(e.requested() == doctest::Approx(1e6));
        CHECK(e.breakdown() > 0.0);
        CHECK(e.breakdown() < 1e6);
        // Just below breakdown must still solve.
        CHECK_NOTHROW(im_slip(kMachine, 0.999 * e.breakdown(), {375.59, 0.0}));
        CHECK_THROWS_AS(im_slip(kMachine, 1.001 * e.breakdown(), {375.59, 0.0}),
                        TorqueCapabilityError);
    }
}

TEST_CASE("im_admittance open-rotor limit and passivity") {
    // R_r/s dominates: Y -> 1/(R_s + j(X_s + X_m)).
    IMParams m = kMachine;
    double s_small = m.r_r / (1e5 * m.x_m);
    auto [u, v] = im_admittance(m, s_small);
    std::complex<double> lim = 1.0 / std::complex<double>(m.r_s, m.x_s + m.x_m);
    CHECK(u == doctest::Approx(lim.real()).epsilon(0.01));
    CHECK(v == doctest::Approx(lim.imag()).epsilon(0.01));
    for (double s : {0.001, 0.01, 0.1, 0.5, 1.0})
        CHECK(im_admittance(m, s).first > 0.0);
}

TEST_CASE("slip from im_slip reproduces the commanded torque") {
    for (double t : {5.0, 10.0, 20.0}) {
        for (double vm : {340.0, 375.59, 400.0}) {
            double s = im_slip(kMachine, t, {vm, 0.0});
            CHECK(im_torque(kMachine, s, vm) == doctest::Approx(t).epsilon(1e-3));
        }
    }
}

TEST_CASE("im_currents at zero imaginary voltage reduce to V*(u, v)") {
    SplitPhasor v{356.81, 0.0};
    double s = im_slip(kMachine, 10.0, v);
    auto [u, b] = im_admittance(kMachine, s);
    SplitPhasor i = im_currents(kMachine, 10.0, v);
    CHECK(i.re == doctest::Approx(v.re * u).epsilon(1e-12));
    CHECK(i.im == doctest::Approx(v.re * b).epsilon(1e-12));
}

TEST_CASE("rotating the voltage rotates the current by the same angle") {
    SplitPhasor v{356.81, 0.0};
    SplitPhasor i0 = im_currents(kMachine, 10.0, v);
    double th = 30.0 * M_PI / 180.0;
    SplitPhasor vr{v.re * std::cos(th), v.re * std::sin(th)};
    SplitPhasor ir = im_currents(kMachine, 10.0, vr);
    CHECK(ir.re == doctest::Approx(i0.re * std::cos(th) - i0.im * std::sin(th)).epsilon(1e-9));
    CHECK(ir.im == doctest::Approx(i0.re * std::sin(th) + i0.im * std::cos(th)).epsilon(1e-9));
}

TEST_CASE("branch with x=0 stamps a pure conductance") {
    SplitSystem sys(2);
    branch_stamp(sys, {0, 1, 1.0, 0.0, 0.0});
    SplitSystem ref(2);
    ref.stamp_conductance(0, 1, 1.0);
    CHECK((sys.matrix() - ref.matrix()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("branch stamp matches the analytic pi-model currents") {
    Branch br{0, 1, 0.02, 0.1, 0.04};
    SplitSystem sys(2);
    branch_stamp(sys, br);
    // Pick a random voltage state and compare matrix*V against the exact
    // branch device currents.
    Eigen::VectorXd v(4);
    v << 1.02, 0.97, -0.03, 0.05;
    std::complex<double> vf(v(0), v(2)), vt(v(1), v(3));
    std::complex<double> y = 1.0 / std::complex<double>(br.r, br.x);
    std::complex<double> i_f = y * (vf - vt) + std::complex<double>(0, br.b_sh / 2.0) * vf;
    std::complex<double> i_t = y * (vt - vf) + std::complex<double>(0, br.b_sh / 2.0) * vt;
    Eigen::VectorXd i = sys.matrix() * v;
    CHECK(i(0) == doctest::Approx(i_f.real()).epsilon(1e-12));
    CHECK(i(2) == doctest::Approx(i_f.imag()).epsilon(1e-12));
    CHECK(i(1) == doctest::Approx(i_t.real()).epsilon(1e-12));
    CHECK(i(3) == doctest::Approx(i_t.imag()).epsilon(1e-12));
}
