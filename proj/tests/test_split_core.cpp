#include <doctest.h>

#include <random>

#include "splitgrid/linear_system.hpp"

using namespace splitgrid;

TEST_CASE("zero conductance leaves the matrix unchanged") {
    SplitSystem sys(2);
    sys.stamp_conductance(0, 1, 0.0);
    CHECK(sys.matrix().isZero(0.0));
}

TEST_CASE("grounded conductance hits both sub-circuit diagonals") {
    SplitSystem sys(3);
    sys.stamp_conductance(1, std::nullopt, 10.0);
    CHECK(sys.matrix()(1, 1) == doctest::Approx(10.0));
    CHECK(sys.matrix()(4, 4) == doctest::Approx(10.0));
    CHECK(sys.matrix().sum() == doctest::Approx(20.0));
}

TEST_CASE("stamping is superposition: g=3 then g=7 equals g=10") {
    SplitSystem a(2), b(2);
    a.stamp_conductance(0, 1, 3.0);
    a.stamp_conductance(0, 1, 7.0);
    b.stamp_conductance(0, 1, 10.0);
    CHECK((a.matrix() - b.matrix()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("non-finite conductance is rejected") {
    SplitSystem sys(2);
    CHECK_THROWS_AS(sys.stamp_conductance(0, 1, std::nan("")), std::invalid_argument);
}

TEST_CASE("diagonal device stamp reduces to a grounded conductance") {
    SplitSystem a(2), b(2);
    LinearizedStamp s;
    s.node = 0;
    s.jac << 4.0, 0.0, 0.0, 4.0;
    a.stamp_device(s);
    b.stamp_conductance(0, std::nullopt, 4.0);
    CHECK((a.matrix() - b.matrix()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(a.rhs().isZero(0.0));
}

TEST_CASE("pure history source only touches the rhs") {
    SplitSystem sys(2);
    LinearizedStamp s;
    s.node = 1;
    s.hist << 2.5, -1.5;
    sys.stamp_device(s);
    CHECK(sys.matrix().isZero(0.0));
    CHECK(sys.rhs()(1) == doctest::Approx(-2.5));
    CHECK(sys.rhs()(3) == doctest::Approx(1.5));
}

TEST_CASE("device stamp rejects invalid node") {
    SplitSystem sys(2);
    LinearizedStamp s;
    s.node = 5;
    CHECK_THROWS_AS(sys.stamp_device(s), std::invalid_argument);
}

TEST_CASE("identity system solves to the rhs") {
    SplitSystem sys(2);
    for (int k = 0; k < 4; ++k) sys.add(k, k, 1.0);
    for (int k = 0; k < 4; ++k) sys.add_rhs(k, 1.0 + k);
    Eigen::VectorXd x = sys.solve();
    for (int k = 0; k < 4; ++k) CHECK(x(k) == doctest::Approx(1.0 + k));
}

TEST_CASE("2-bus conductance network matches hand elimination") {
    // Bus 0 driven by a fixed 1 A injection, g=2 to bus 1, g=5 from bus 1
    // to ground. Hand elimination: V1 = 1/2 - ... solve
    //   [ 2 -2 ] [V0]   [1]
    //   [-2  7 ] [V1] = [0]  ->  V1 = 2/10 = 0.2, V0 = (1 + 2*0.2)/2 = 0.7
    SplitSystem sys(2);
    sys.stamp_conductance(0, 1, 2.0);
    sys.stamp_conductance(1, std::nullopt, 5.0);
    sys.add_rhs(0, 1.0);
    sys.add_rhs(2, 1.0);  // same injection in the imaginary sub-circuit
    Eigen::VectorXd x = sys.solve();
    CHECK(x(0) == doctest::Approx(0.7));
    CHECK(x(1) == doctest::Approx(0.2));
    CHECK(x(2) == doctest::Approx(0.7));
    CHECK(x(3) == doctest::Approx(0.2));
}

TEST_CASE("floating node raises a singular-system error naming a row") {
    SplitSystem sys(2);
    sys.stamp_conductance(0, std::nullopt, 1.0);  // bus 1 left floating
    try {
        sys.solve();
        FAIL("expected SingularSystemError");
    } catch (const SingularSystemError& e) {
        CHECK(e.row() >= 0);
        CHECK(e.row() < 4);
    }
}

TEST_CASE("solve residual bound holds on a random well-conditioned system") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SplitSystem sys(3, 2);
    int d = sys.dimension();
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) sys.add(r, c, u(rng) + (r == c ? 4.0 : 0.0));
        sys.add_rhs(r, 100.0 * u(rng));
    }
    Eigen::VectorXd x = sys.solve();
    double resid = (sys.matrix() * x - sys.rhs()).cwiseAbs().maxCoeff();
    double bound = 1e-9 * std::max(1.0, sys.rhs().cwiseAbs().maxCoeff());
    CHECK(resid <= bound);
}

TEST_CASE("stamping order does not matter") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    std::vector<LinearizedStamp> stamps;
    for (int k = 0; k < 6; ++k) {
        LinearizedStamp s;
        s.node = k % 3;
        s.jac << u(rng), u(rng), u(rng), u(rng);
        s.hist << u(rng), u(rng);
        stamps.push_back(s);
    }
    SplitSystem fwd(3), rev(3);
    for (const auto& s : stamps) fwd.stamp_device(s);
    for (auto it = stamps.rbegin(); it != stamps.rend(); ++it) rev.stamp_device(*it);
    CHECK((fwd.matrix() - rev.matrix()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK((fwd.rhs() - rev.rhs()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}
