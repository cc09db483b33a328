#pragma once

#include <string>
#include <variant>
#include <vector>

#include "splitgrid/devices.hpp"
#include "splitgrid/glass.hpp"

namespace splitgrid {

struct ImDevice {
    IMParams params;
    double torque = 0.0;
};

struct GlassDevice {
    GlassTemplate tmpl;
};

using Device = std::variant<SlackSource, PQLoad, ZipLoad, ExpLoad, PvBus, ImDevice, GlassDevice>;

struct Bus {
    NodeId id = 0;
    Device device;
};

/// Unit declaration of a case. Internal computation is always per-unit;
/// absolute-SI inputs are normalized at the load boundary using these bases.
struct UnitBase {
    bool per_unit = true;
    double s_base = 1.0;  // VA
    double v_base = 1.0;  // V
};

/// A complete steady-state case: buses with attached device models plus the
/// branch interconnect. Bus ids must be dense 0..n-1 with exactly one slack.
struct NetworkCase {
    UnitBase base;
    std::vector<Bus> buses;
    std::vector<Branch> branches;

    int n_buses() const { return static_cast<int>(buses.size()); }
    int slack_bus() const;
};

/// Enforce case invariants (dense ids, exactly one slack, valid branch
/// endpoints, normalized ZIP mixtures, device parameter sanity).
/// Throws std::invalid_argument naming the violated rule.
void validate_case(const NetworkCase& c);

/// Convert an absolute-SI case to the internal per-unit frame. No-op for
/// per-unit cases.
NetworkCase normalize_case(const NetworkCase& c);

}  // namespace splitgrid
