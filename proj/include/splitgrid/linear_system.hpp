#pragma once

#include <Eigen/Dense>
#include <optional>

#include "splitgrid/types.hpp"

namespace splitgrid {

/// One device's per-iteration contribution to the split-circuit system:
/// a 2x2 Jacobian block (siemens) evaluated at the previous iterate plus a
/// pair of independent history current sources.
///
/// Sign convention (repo-wide): device currents are positive flowing out of
/// the bus into the device; sources inject negative device current.
struct LinearizedStamp {
    NodeId node = 0;
    Eigen::Matrix2d jac = Eigen::Matrix2d::Zero();  // [dIR/dVR dIR/dVI; dII/dVR dII/dVI]
    Eigen::Vector2d hist = Eigen::Vector2d::Zero();
};

/// The assembled per-iteration linear system of the split circuit.
///
/// Unknown ordering: real-voltage rows 0..n-1, imaginary-voltage rows
/// n..2n-1, then constraint/auxiliary rows. KCL rows read
///   sum_devices (jac * V + hist) = 0
/// so stamping adds jac entries to the matrix and subtracts hist from rhs.
class SplitSystem {
public:
    SplitSystem(int n_buses, int n_extra = 0);

    int n_buses() const { return n_buses_; }
    int dimension() const { return static_cast<int>(matrix_.rows()); }

    int real_row(NodeId a) const { return a; }
    int imag_row(NodeId a) const { return n_buses_ + a; }
    int extra_row(int k) const { return 2 * n_buses_ + k; }

    /// Two-terminal conductance, stamped identically into the real and
    /// imaginary sub-circuits. Pass b = nullopt for a grounded element.
    void stamp_conductance(NodeId a, std::optional<NodeId> b, double g);

    /// Grounded nonlinear-device block: jac into the (real,imag) rows of
    /// s.node, hist onto the rhs per the sign convention above.
    void stamp_device(const LinearizedStamp& s);

    void add(int row, int col, double v);
    void add_rhs(int row, double v);

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    const Eigen::VectorXd& rhs() const { return rhs_; }

    /// Dense LU with partial pivoting plus one step of iterative refinement.
    /// Throws SingularSystemError naming the offending row when a pivot falls
    /// below 1e-12 of the largest matrix entry.
    Eigen::VectorXd solve() const;

private:
    void check_node(NodeId a) const;

    int n_buses_;
    Eigen::MatrixXd matrix_;
    Eigen::VectorXd rhs_;
};

}  // namespace splitgrid
