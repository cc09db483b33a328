#pragma once

#include <string>

#include "splitgrid/fitting.hpp"
#include "splitgrid/network.hpp"

namespace splitgrid {

/// Parse a case file, validate its invariants and normalize it to per-unit.
/// Failures throw ParseError with file/line, or std::invalid_argument for
/// rule violations.
NetworkCase load_case(const std::string& path);

/// Measurement CSV with header time,v_re,v_im,i_re,i_im,tag (time and tag
/// may be empty). Save/load round trips are value-exact: numbers are
/// rendered with shortest round-trip precision.
std::vector<MeasurementRecord> load_measurements(const std::string& path);
void save_measurements(std::span<const MeasurementRecord> records,
                       const std::string& path);

/// Self-describing template file: every coefficient is labeled with its
/// (e_R, e_I) exponent pair, so the canonical ordering is a
/// storage-independent concern.
GlassTemplate load_template(const std::string& path);
void save_template(const GlassTemplate& t, const std::string& path);

/// Shortest representation that parses back to the identical double.
std::string format_double(double x);

}  // namespace splitgrid
