#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ddcp::grid {

class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public GridError {
public:
    using GridError::GridError;
};

class TopologyError : public GridError {
public:
    using GridError::GridError;
};

class UnitError : public GridError {
public:
    using GridError::GridError;
};

enum class BusId : int {};

inline int raw(BusId id) { return static_cast<int>(id); }

enum class BusKind { Substation, Load };

struct BusSpec {
    BusId id{};
    BusKind kind = BusKind::Load;
    int customers = 0;
    std::vector<double> p_kw;    // one entry per hour
    std::vector<double> q_kvar;  // same length as p_kw
    bool bess_candidate = false;

    friend bool operator==(const BusSpec&, const BusSpec&) = default;
};

struct BranchSpec {
    BusId from{};
    BusId to{};
    double r_ohm = 0.0;
    double x_ohm = 0.0;
    double ampacity_a = 0.0;
    double length_m = 0.0;
    bool is_breaker = false;
    std::string cable_type;

    friend bool operator==(const BranchSpec&, const BranchSpec&) = default;
};

struct CableType {
    std::string name;
    double ampacity_a = 0.0;
    double r_ohm_per_km = 0.0;
    double x_ohm_per_km = 0.0;
    double cost_per_m = 0.0;
    bool is_breaker = false;
    double fixed_cost = 0.0;

    /// Capital cost of installing this type on a branch of the given length.
    double cost(double length_m) const { return is_breaker ? fixed_cost : cost_per_m * length_m; }

    friend bool operator==(const CableType&, const CableType&) = default;
};

using CableCatalog = std::vector<CableType>;

/// Throws UnitError when an entry breaks the catalog invariants.
void validate_catalog(const CableCatalog& catalog);

/// Conductor prices per metre and breaker fixed costs of the bundled catalog.
const CableCatalog& default_catalog();

const CableType* find_cable(const CableCatalog& catalog, const std::string& name);

/// Radial feeder. Buses keep file order; after validation every branch points
/// away from the substation.
struct NetworkCase {
    std::vector<BusSpec> buses;
    std::vector<BranchSpec> branches;
    double base_kv = 12.47;
    double base_mva = 10.0;
    double v_min = 0.95;
    double v_max = 1.05;
    // Either one value for every hour or one per hour.
    std::vector<double> substation_v{1.0};

    int horizon() const { return buses.empty() ? 0 : static_cast<int>(buses.front().p_kw.size()); }
    int bus_index(BusId id) const;  // -1 when absent
    int branch_index(BusId from, BusId to) const;  // either orientation, -1 when absent
    int substation_index() const;
    double substation_vpu(int hour) const;
    int total_customers() const;

    friend bool operator==(const NetworkCase&, const NetworkCase&) = default;
};

/// Checks every invariant and orients branches root-outward. Throws
/// TopologyError, UnitError or ParseError.
void validate(NetworkCase& net);
NetworkCase validated(NetworkCase net);

struct Topology {
    int root = -1;
    std::vector<int> parent_branch;               // per bus, -1 at the root
    std::vector<std::vector<int>> child_branches;  // per bus
    std::vector<int> branch_from, branch_to;      // bus indices per branch
    std::vector<int> depth;                       // hops from the root, per bus
    std::vector<int> bfs_order;                   // buses, root first

    std::vector<int> upstream(int bus) const;
    std::vector<int> downstream(int bus) const;
    /// Hop distance of a branch: depth of its upstream bus.
    int branch_hops(int branch) const { return depth[branch_from[branch]]; }
};

Topology topology(const NetworkCase& net);

/// System bases derived from base_mva and base_kv.
struct PerUnit {
    double base_kv = 0.0;
    double base_mva = 0.0;

    explicit PerUnit(const NetworkCase& net) : base_kv(net.base_kv), base_mva(net.base_mva) {}
    PerUnit(double kv, double mva) : base_kv(kv), base_mva(mva) {}

    double z_base_ohm() const { return base_kv * base_kv / base_mva; }
    double i_base_a() const;
    double s_base_kva() const { return base_mva * 1000.0; }

    double ohm_to_pu(double ohm) const { return ohm / z_base_ohm(); }
    double pu_to_ohm(double pu) const { return pu * z_base_ohm(); }
    double amp_to_pu(double a) const { return a / i_base_a(); }
    double pu_to_amp(double pu) const { return pu * i_base_a(); }
    double kw_to_pu(double kw) const { return kw / s_base_kva(); }
    double pu_to_kw(double pu) const { return pu * s_base_kva(); }
    double kwh_to_puh(double kwh) const { return kwh / s_base_kva(); }
    double puh_to_kwh(double puh) const { return puh * s_base_kva(); }
};

/// Replaces a branch's conductor or breaker. Conductors take the new per-km
/// impedance times length; breakers keep their impedance.
NetworkCase apply_upgrade(const NetworkCase& net, BusId from, BusId to, const CableType& cable);

/// |Z_after| / |Z_before| for an upgrade, 1 when impedance is unchanged.
double impedance_ratio(const BranchSpec& before, const BranchSpec& after);

/// Moves the feeder to another nominal voltage; ohmic data stays, per-unit
/// impedances follow the new base.
NetworkCase rebase_voltage(const NetworkCase& net, double new_kv);

}  // namespace ddcp::grid
