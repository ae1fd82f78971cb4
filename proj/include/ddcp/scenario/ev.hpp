#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddcp/grid/network.hpp"

namespace ddcp::scenario {

struct EvConfig {
    double penetration = 0.0;  // fraction of customers with a charger
    double charger_kw = 10.0;
    std::uint32_t seed = 42;
    double power_factor = 1.0;

    void check() const;  // throws std::invalid_argument
};

struct EvAssignment {
    std::vector<int> counts;  // chargers per bus, indexed like NetworkCase::buses
    // Bus index of every customer slot after the seeded shuffle; the first
    // total() slots hold chargers.
    std::vector<int> ordering;

    int total() const;
};

/// Deterministic allocation: one slot per customer, shuffled by Fisher-Yates
/// driven by mt19937(seed), truncated at ceil(p * customers).
EvAssignment allocate_chargers(const grid::NetworkCase& net, const EvConfig& cfg);

/// Number of chargers for a penetration level.
int charger_count(int customers, double penetration);

enum class LoadMode { Snapshot, Horizon };

struct LoadSet {
    LoadMode mode = LoadMode::Horizon;
    std::vector<int> hours;                  // source hour of each modeled step
    std::vector<std::vector<double>> p_kw;   // [bus][step]
    std::vector<std::vector<double>> q_kvar; // [bus][step]

    int horizon() const { return static_cast<int>(hours.size()); }
};

/// Hour with the largest total active demand (first one on ties).
int peak_hour(const grid::NetworkCase& net);

/// Base demand plus simultaneous charging at rated power.
LoadSet build_loads(const grid::NetworkCase& net, const EvAssignment& assignment, const EvConfig& cfg,
                    LoadMode mode);

/// Convenience: allocate and build in one call.
LoadSet scenario_loads(const grid::NetworkCase& net, const EvConfig& cfg, LoadMode mode);

struct ScenarioConfig {
    EvConfig ev;
    LoadMode mode = LoadMode::Snapshot;
};

// key = value lines, '#' comments. Keys: penetration, charger_kw, seed,
// power_factor, mode (snapshot|horizon).
ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig parse_scenario_text(const std::string& text);

const char* to_string(LoadMode mode);

}  // namespace ddcp::scenario
