#include "splitgrid/linear_system.hpp"

#include <cmath>
#include <numeric>

namespace splitgrid {

SplitSystem::SplitSystem(int n_buses, int n_extra)
    : n_buses_(n_buses),
      matrix_(Eigen::MatrixXd::Zero(2 * n_buses + n_extra, 2 * n_buses + n_extra)),
      rhs_(Eigen::VectorXd::Zero(2 * n_buses + n_extra)) {
    if (n_buses < 0 || n_extra < 0) throw std::invalid_argument("negative system size");
}

void SplitSystem::check_node(NodeId a) const {
    if (a < 0 || a >= n_buses_) throw std::invalid_argument("node index out of range");
}

void SplitSystem::stamp_conductance(NodeId a, std::optional<NodeId> b, double g) {
    if (!std::isfinite(g)) throw std::invalid_argument("non-finite conductance");
    check_node(a);
    if (!b) {
        matrix_(real_row(a), real_row(a)) += g;
        matrix_(imag_row(a), imag_row(a)) += g;
        return;
    }
    check_node(*b);
    if (a == *b) throw std::invalid_argument("conductance endpoints must differ");
    for (auto row : {&SplitSystem::real_row, &SplitSystem::imag_row}) {
        int ra = (this->*row)(a), rb = (this->*row)(*b);
        matrix_(ra, ra) += g;
        matrix_(rb, rb) += g;
        matrix_(ra, rb) -= g;
        matrix_(rb, ra) -= g;
    }
}

void SplitSystem::stamp_device(const LinearizedStamp& s) {
    check_node(s.node);
    if (!s.jac.allFinite() || !s.hist.allFinite())
        throw std::invalid_argument("non-finite stamp");
    int r = real_row(s.node), i = imag_row(s.node);
    matrix_(r, r) += s.jac(0, 0);
    matrix_(r, i) += s.jac(0, 1);
    matrix_(i, r) += s.jac(1, 0);
    matrix_(i, i) += s.jac(1, 1);
    rhs_(r) -= s.hist(0);
    rhs_(i) -= s.hist(1);
}

void SplitSystem::add(int row, int col, double v) {
    matrix_(row, col) += v;
}

void SplitSystem::add_rhs(int row, double v) {
    rhs_(row) += v;
}

Eigen::VectorXd SplitSystem::solve() const {
    const int n = dimension();
    Eigen::MatrixXd lu = matrix_;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);

    const double scale = lu.cwiseAbs().maxCoeff();
    const double pivot_floor = 1e-12 * std::max(scale, 1.0);

    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(lu(k, k));
        for (int r = k + 1; r < n; ++r) {
            double a = std::abs(lu(r, k));
            if (a > best) { best = a; piv = r; }
        }
        if (best < pivot_floor) {
            throw SingularSystemError(perm[piv],
                "singular system: pivot " + std::to_string(best) +
                " below threshold at row " + std::to_string(perm[piv]));
        }
        if (piv != k) {
            lu.row(k).swap(lu.row(piv));
            std::swap(perm[k], perm[piv]);
        }
        for (int r = k + 1; r < n; ++r) {
            double f = lu(r, k) / lu(k, k);
            lu(r, k) = f;
            lu.row(r).tail(n - k - 1) -= f * lu.row(k).tail(n - k - 1);
        }
    }

    auto back_solve = [&](const Eigen::VectorXd& b) {
        Eigen::VectorXd y(n);
        for (int r = 0; r < n; ++r) {
            double s = b(perm[r]);
            for (int c = 0; c < r; ++c) s -= lu(r, c) * y(c);
            y(r) = s;
        }
        Eigen::VectorXd x(n);
        for (int r = n - 1; r >= 0; --r) {
            double s = y(r);
            for (int c = r + 1; c < n; ++c) s -= lu(r, c) * x(c);
            x(r) = s / lu(r, r);
        }
        return x;
    };

    Eigen::VectorXd x = back_solve(rhs_);
    // One refinement pass keeps the residual bound honest on scaled systems.
    Eigen::VectorXd resid = rhs_ - matrix_ * x;
    x += back_solve(resid);
    return x;
}

}  // namespace splitgrid
