#include "splitgrid/glass.hpp"

#include <array>
#include <cmath>
#include <mutex>

namespace splitgrid {

const std::vector<std::pair<int, int>>& monomial_exponents(int order) {
    if (order < 0 || order > kMaxGlassOrder)
        throw std::invalid_argument("order outside [0, 6]");
    static std::array<std::vector<std::pair<int, int>>, kMaxGlassOrder + 1> cache;
    static std::once_flag once;
    std::call_once(once, [] {
        for (int n = 0; n <= kMaxGlassOrder; ++n) {
            auto& v = cache[n];
            for (int d = 0; d <= n; ++d) {
                if (d == 0) {
                    v.emplace_back(0, 0);
                } else if (d == 1) {
                    v.emplace_back(1, 0);
                    v.emplace_back(0, 1);
                } else if (d == 2) {
                    v.emplace_back(1, 1);
                    v.emplace_back(2, 0);
                    v.emplace_back(0, 2);
                } else {
                    v.emplace_back(d, 0);
                    v.emplace_back(0, d);
                    for (int k = 1; k < d; ++k) v.emplace_back(d - k, k);
                }
            }
        }
    });
    return cache[order];
}

int monomial_index(int order, int e_r, int e_i) {
    const auto& exps = monomial_exponents(order);
    for (int k = 0; k < static_cast<int>(exps.size()); ++k)
        if (exps[k].first == e_r && exps[k].second == e_i) return k;
    return -1;
}

Eigen::VectorXd basis_vector(int order, SplitPhasor b, SplitPhasor center) {
    const auto& exps = monomial_exponents(order);
    double dr = b.re - center.re;
    double di = b.im - center.im;
    // Power tables avoid repeated pow() and its domain quirks at 0^0.
    std::array<double, kMaxGlassOrder + 1> pr{}, pi{};
    pr[0] = pi[0] = 1.0;
    for (int d = 1; d <= order; ++d) {
        pr[d] = pr[d - 1] * dr;
        pi[d] = pi[d - 1] * di;
    }
    Eigen::VectorXd v(static_cast<int>(exps.size()));
    for (int k = 0; k < v.size(); ++k)
        v(k) = pr[exps[k].first] * pi[exps[k].second];
    return v;
}

Eigen::VectorXd differentiate_coeffs(int order, const Eigen::VectorXd& coeffs, int wrt) {
    const auto& exps = monomial_exponents(order);
    if (coeffs.size() != static_cast<int>(exps.size()))
        throw std::invalid_argument("coefficient length mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(coeffs.size());
    for (int k = 0; k < coeffs.size(); ++k) {
        auto [er, ei] = exps[k];
        int e = wrt == 0 ? er : ei;
        if (e == 0 || coeffs(k) == 0.0) continue;
        int idx = wrt == 0 ? monomial_index(order, er - 1, ei)
                           : monomial_index(order, er, ei - 1);
        out(idx) += e * coeffs(k);
    }
    return out;
}

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

Eigen::VectorXd shift_coefficients(int order, const Eigen::VectorXd& coeffs,
                                   SplitPhasor from_center, SplitPhasor to_center) {
    const auto& exps = monomial_exponents(order);
    if (coeffs.size() != static_cast<int>(exps.size()))
        throw std::invalid_argument("coefficient length mismatch");
    // (B - c_from)^e = ((B - c_to) + (c_to - c_from))^e, expanded binomially.
    double sr = to_center.re - from_center.re;
    double si = to_center.im - from_center.im;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(coeffs.size());
    for (int k = 0; k < coeffs.size(); ++k) {
        if (coeffs(k) == 0.0) continue;
        auto [er, ei] = exps[k];
        for (int a = 0; a <= er; ++a) {
            double fr = binom(er, a) * std::pow(sr, er - a);
            for (int b = 0; b <= ei; ++b) {
                double fi = binom(ei, b) * std::pow(si, ei - b);
                out(monomial_index(order, a, b)) += coeffs(k) * fr * fi;
            }
        }
    }
    return out;
}

void check_template(const GlassTemplate& t) {
    if (t.order < 0 || t.order > kMaxGlassOrder)
        throw std::invalid_argument("template order outside [0, 6]");
    int m = basis_size(t.order);
    if (t.coeffs_r.size() != m || t.coeffs_i.size() != m)
        throw std::invalid_argument("coefficient vector length != M(N)");
    if (!t.coeffs_r.allFinite() || !t.coeffs_i.allFinite())
        throw std::invalid_argument("non-finite template coefficient");
}

SplitPhasor evaluate(const GlassTemplate& t, SplitPhasor b) {
    check_template(t);
    Eigen::VectorXd phi = basis_vector(t.order, b, SplitPhasor{0.0, 0.0});
    return {t.coeffs_r.dot(phi), t.coeffs_i.dot(phi)};
}

Eigen::Matrix2d jacobian(const GlassTemplate& t, SplitPhasor b) {
    check_template(t);
    Eigen::VectorXd phi = basis_vector(t.order, b, SplitPhasor{0.0, 0.0});
    Eigen::Matrix2d j;
    j(0, 0) = differentiate_coeffs(t.order, t.coeffs_r, 0).dot(phi);
    j(0, 1) = differentiate_coeffs(t.order, t.coeffs_r, 1).dot(phi);
    j(1, 0) = differentiate_coeffs(t.order, t.coeffs_i, 0).dot(phi);
    j(1, 1) = differentiate_coeffs(t.order, t.coeffs_i, 1).dot(phi);
    return j;
}

GlassStamp glass_stamp(const GlassTemplate& t, NodeId node, SplitPhasor prev) {
    Eigen::Matrix2d j = jacobian(t, prev);
    SplitPhasor a = evaluate(t, prev);
    Eigen::Vector2d hist =
        Eigen::Vector2d(a.re, a.im) - j * Eigen::Vector2d(prev.re, prev.im);
    if (t.kind == GlassKind::VoltageDependent) {
        LinearizedStamp s;
        s.node = node;
        s.jac = j;
        s.hist = hist;
        return s;
    }
    DualStamp d;
    d.node = node;
    d.res = j;     // dV/dI block
    d.src = hist;  // independent voltage source pair
    return d;
}

}  // namespace splitgrid
