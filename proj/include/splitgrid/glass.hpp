#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "splitgrid/linear_system.hpp"
#include "splitgrid/types.hpp"

namespace splitgrid {

/// Whether the template maps voltages to currents (stamps as conductances,
/// VCCS and an independent current source) or currents to voltages (stamps
/// as resistances, CCVS and an independent voltage source).
enum class GlassKind { VoltageDependent, CurrentDependent };

inline constexpr int kMaxGlassOrder = 6;

/// Number of bivariate monomials up to total degree `order`.
constexpr int basis_size(int order) { return (order + 1) * (order + 2) / 2; }

/// Canonical monomial ordering as (exponent of B_R, exponent of B_I) pairs.
/// Degrees 0-2 are [1, B_R, B_I, B_R B_I, B_R^2, B_I^2]; every higher degree
/// d appends pure terms [B_R^d, B_I^d] first, then the mixed terms
/// [B_R^{d-1} B_I, ..., B_R B_I^{d-1}].
const std::vector<std::pair<int, int>>& monomial_exponents(int order);

/// Index of monomial (e_r, e_i) in the canonical ordering, or -1.
int monomial_index(int order, int e_r, int e_i);

/// Monomials of (B - center) in canonical order. Rejects order > 6.
Eigen::VectorXd basis_vector(int order, SplitPhasor b, SplitPhasor center);

/// Coefficients of the partial derivative of a polynomial given in the
/// canonical basis. `wrt` is 0 for B_R, 1 for B_I. Same-length vector.
Eigen::VectorXd differentiate_coeffs(int order, const Eigen::VectorXd& coeffs, int wrt);

/// Re-express coefficients given about `from_center` as coefficients about
/// `to_center` (binomial shift; a polynomial identity).
Eigen::VectorXd shift_coefficients(int order, const Eigen::VectorXd& coeffs,
                                   SplitPhasor from_center, SplitPhasor to_center);

/// Semi-empirical polynomial surface for a pair of dependent electrical
/// variables. Coefficients are stored in the absolute basis (expansion
/// center folded in); `center` is retained as fitting metadata, and
/// `range_*` record the training window when the template came from a fit.
struct GlassTemplate {
    GlassKind kind = GlassKind::VoltageDependent;
    int order = 0;
    SplitPhasor center{0.0, 0.0};
    Eigen::VectorXd coeffs_r;
    Eigen::VectorXd coeffs_i;
    std::optional<std::pair<double, double>> range_r;  // trained B_R window
    std::optional<std::pair<double, double>> range_i;  // trained B_I window
};

/// Validate lengths/finiteness; throws std::invalid_argument.
void check_template(const GlassTemplate& t);

/// Dependent pair A at an independent pair B.
SplitPhasor evaluate(const GlassTemplate& t, SplitPhasor b);

/// Analytic 2x2 Jacobian [dA_R/dB_R dA_R/dB_I; dA_I/dB_R dA_I/dB_I].
Eigen::Matrix2d jacobian(const GlassTemplate& t, SplitPhasor b);

/// Dual of LinearizedStamp for current-dependent templates: a branch
/// V = res * I + src realized with auxiliary current unknowns.
struct DualStamp {
    NodeId node = 0;
    Eigen::Matrix2d res = Eigen::Matrix2d::Zero();
    Eigen::Vector2d src = Eigen::Vector2d::Zero();
};

using GlassStamp = std::variant<LinearizedStamp, DualStamp>;

/// Linearization at the previous iterate of the independent pair B.
GlassStamp glass_stamp(const GlassTemplate& t, NodeId node, SplitPhasor prev);

}  // namespace splitgrid
