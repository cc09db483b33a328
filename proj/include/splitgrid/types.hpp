#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitgrid {

/// Complex electrical quantity stored as rectangular (real, imaginary) parts.
/// This is the universal state variable of the split-circuit formulation.
struct SplitPhasor {
    double re = 0.0;
    double im = 0.0;

    double magnitude() const { return std::hypot(re, im); }
    double magnitude_sq() const { return re * re + im * im; }
    double angle() const { return std::atan2(im, re); }

    SplitPhasor operator+(const SplitPhasor& o) const { return {re + o.re, im + o.im}; }
    SplitPhasor operator-(const SplitPhasor& o) const { return {re - o.re, im - o.im}; }
    SplitPhasor operator*(double k) const { return {re * k, im * k}; }

    bool finite() const { return std::isfinite(re) && std::isfinite(im); }
};

/// Dense bus index. Each bus owns two unknowns: a real-voltage row and an
/// imaginary-voltage row. The ground/reference node is implicit and never
/// allocated a row.
using NodeId = int;

// ---------------------------------------------------------------------------
// Structured errors
// ---------------------------------------------------------------------------

/// Linear system is singular (structurally or numerically).
class SingularSystemError : public std::runtime_error {
public:
    SingularSystemError(int row, const std::string& what)
        : std::runtime_error(what), row_(row) {}
    int row() const { return row_; }

private:
    int row_;
};

/// Device voltage magnitude fell below the per-unit floor.
class VoltageCollapseError : public std::runtime_error {
public:
    explicit VoltageCollapseError(double v_mag)
        : std::runtime_error("voltage collapse at device: |V| = " + std::to_string(v_mag)),
          v_mag_(v_mag) {}
    double v_mag() const { return v_mag_; }

private:
    double v_mag_;
};

/// Commanded torque exceeds the machine's breakdown capability at the
/// given voltage.
class TorqueCapabilityError : public std::runtime_error {
public:
    TorqueCapabilityError(double requested, double breakdown)
        : std::runtime_error("torque exceeds capability: requested " +
                             std::to_string(requested) + ", breakdown " +
                             std::to_string(breakdown)),
          requested_(requested), breakdown_(breakdown) {}
    double requested() const { return requested_; }
    double breakdown() const { return breakdown_; }

private:
    double requested_;
    double breakdown_;
};

/// Design matrix is rank deficient without regularization; carries the
/// indices of the unidentifiable monomial columns.
class DegenerateExcitationError : public std::runtime_error {
public:
    DegenerateExcitationError(std::vector<int> columns, const std::string& what)
        : std::runtime_error(what), columns_(std::move(columns)) {}
    const std::vector<int>& columns() const { return columns_; }

private:
    std::vector<int> columns_;
};

/// Not enough measurement records to fit the requested order.
class InsufficientRecordsError : public std::runtime_error {
public:
    InsufficientRecordsError(int have, int need)
        : std::runtime_error("insufficient records: have " + std::to_string(have) +
                             ", need " + std::to_string(need)),
          have_(have), need_(need) {}
    int have() const { return have_; }
    int need() const { return need_; }

private:
    int have_;
    int need_;
};

/// File parsing failure with location.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, int line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
          file_(file), line_(line) {}
    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

/// Per-unit voltage floor for PQ-type divisions; below it devices report a
/// structured error instead of returning huge currents.
inline constexpr double kVoltageFloor = 1e-4;

}  // namespace splitgrid
