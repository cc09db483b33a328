#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "splitgrid/devices.hpp"
#include "splitgrid/glass.hpp"

namespace splitgrid {

/// One measurement sample: terminal voltage and current phasors with an
/// optional exogenous tag (e.g. load torque) and timestamp.
struct MeasurementRecord {
    SplitPhasor v;
    SplitPhasor i;
    std::optional<double> tag;
    std::optional<double> time;
};

enum class CenterPolicy { Zero, DataMean };

struct FitConfig {
    GlassKind kind = GlassKind::VoltageDependent;
    int order = 1;
    CenterPolicy center_policy = CenterPolicy::DataMean;
    double ridge = 0.0;
    int min_records = 0;  // raised to M(N) when lower
};

struct DesignMatrix {
    Eigen::MatrixXd x;          // n_records x M(N), centered basis
    Eigen::VectorXd target_r;
    Eigen::VectorXd target_i;
    SplitPhasor center;
};

struct FitReport {
    GlassTemplate tmpl;
    double rmse_r = 0.0;
    double rmse_i = 0.0;
    double max_abs_residual = 0.0;
    double condition_number = 1.0;
    int n_records = 0;
    std::vector<int> unidentifiable;  // canonical monomial indices set to 0
};

/// Row k is the centered basis vector of record k's independent pair; the
/// targets are the dependent pair per config.kind. Throws
/// InsufficientRecordsError.
DesignMatrix build_design_matrix(std::span<const MeasurementRecord> records,
                                 const FitConfig& config);

/// Two independent linear least-squares solves (real-part and imaginary-part
/// coefficient rows) sharing one design matrix, by orthogonal factorization.
/// Zero-variance monomial columns are dropped, reported unidentifiable and
/// their coefficients set to 0. Residual rank deficiency with ridge == 0
/// throws DegenerateExcitationError naming the offending monomials.
FitReport fit(std::span<const MeasurementRecord> records, const FitConfig& config);

// ---------------------------------------------------------------------------
// Synthesis of measurement data from physics models
// ---------------------------------------------------------------------------

struct ImMachine {
    IMParams params;
};

using PhysicsModel = std::variant<PQLoad, ZipLoad, ExpLoad, ImMachine>;

/// Grid of voltage sample points with optional exogenous (torque) tags and
/// additive Gaussian measurement noise on the currents.
struct SweepSpec {
    std::vector<double> re_points;
    std::vector<double> im_points{0.0};
    std::vector<double> tags;     // torque values for ImMachine; may be empty
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

struct SynthesisResult {
    std::vector<MeasurementRecord> records;
    int skipped = 0;  // infeasible points (e.g. torque beyond breakdown)
};

/// Steady-state physics evaluation at every grid point. Deterministic for a
/// fixed seed; infeasible points are skipped and counted.
SynthesisResult synthesize(const PhysicsModel& model, const SweepSpec& sweep);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationRow {
    MeasurementRecord record;
    SplitPhasor predicted;
    bool extrapolated = false;  // independent pair outside the trained window
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    double rmse_r = 0.0;
    double rmse_i = 0.0;
    double max_abs_residual = 0.0;
    double extrapolation_fraction = 0.0;
};

ValidationReport validate(const GlassTemplate& t,
                          std::span<const MeasurementRecord> records);

}  // namespace splitgrid
