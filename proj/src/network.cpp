#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "ddcp/grid/network.hpp"

namespace ddcp::grid {

int NetworkCase::bus_index(BusId id) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == id) return static_cast<int>(i);
    }
    return -1;
}

int NetworkCase::branch_index(BusId from, BusId to) const {
    for (std::size_t k = 0; k < branches.size(); ++k) {
        const auto& b = branches[k];
        if ((b.from == from && b.to == to) || (b.from == to && b.to == from)) return static_cast<int>(k);
    }
    return -1;
}

int NetworkCase::substation_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].kind == BusKind::Substation) return static_cast<int>(i);
    }
    return -1;
}

double NetworkCase::substation_vpu(int hour) const {
    if (substation_v.size() == 1) return substation_v.front();
    return substation_v.at(static_cast<std::size_t>(hour));
}

int NetworkCase::total_customers() const {
    int n = 0;
    for (const auto& b : buses) n += b.customers;
    return n;
}

double PerUnit::i_base_a() const { return base_mva * 1e6 / (std::sqrt(3.0) * base_kv * 1e3); }

void validate_catalog(const CableCatalog& catalog) {
    std::set<std::string> names;
    for (const auto& c : catalog) {
        if (c.name.empty()) throw UnitError("cable type without a name");
        if (!names.insert(c.name).second) throw UnitError(fmt::format("duplicate cable type '{}'", c.name));
        if (!(c.ampacity_a > 0.0)) throw UnitError(fmt::format("cable '{}' has nonpositive ampacity", c.name));
        if (c.is_breaker) {
            if (!(c.fixed_cost > 0.0) || c.cost_per_m != 0.0) {
                throw UnitError(fmt::format("breaker '{}' needs a positive fixed cost and no per-metre price", c.name));
            }
        } else {
            if (!(c.cost_per_m > 0.0)) throw UnitError(fmt::format("conductor '{}' needs a positive price", c.name));
            if (!(c.r_ohm_per_km >= 0.0) || !std::isfinite(c.x_ohm_per_km)) {
                throw UnitError(fmt::format("conductor '{}' has invalid impedance", c.name));
            }
        }
    }
}

const CableCatalog& default_catalog() {
    static const CableCatalog catalog = [] {
        CableCatalog c{
            {"120mm2", 325.0, 0.196, 0.112, 98.0, false, 0.0},
            {"150mm2", 370.0, 0.159, 0.108, 115.0, false, 0.0},
            {"185mm2", 420.0, 0.127, 0.105, 130.0, false, 0.0},
            {"240mm2", 485.0, 0.0976, 0.101, 155.0, false, 0.0},
            {"300mm2", 540.0, 0.0786, 0.098, 180.0, false, 0.0},
            {"400mm2", 610.0, 0.0625, 0.095, 220.0, false, 0.0},
            {"500mm2", 690.0, 0.0509, 0.092, 260.0, false, 0.0},
            {"630mm2", 780.0, 0.0410, 0.090, 310.0, false, 0.0},
            {"800mm2", 860.0, 0.0340, 0.088, 380.0, false, 0.0},
            {"2x500mm2", 1200.0, 0.02545, 0.046, 460.0, false, 0.0},
            {"CB-630", 630.0, 0.0, 0.0, 0.0, true, 18000.0},
            {"CB-1250", 1250.0, 0.0, 0.0, 0.0, true, 24000.0},
        };
        validate_catalog(c);
        return c;
    }();
    return catalog;
}

const CableType* find_cable(const CableCatalog& catalog, const std::string& name) {
    for (const auto& c : catalog) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

void validate(NetworkCase& net) {
    if (!(net.base_kv > 0.0) || !std::isfinite(net.base_kv)) throw UnitError("base_kv must be positive");
    if (!(net.base_mva > 0.0) || !std::isfinite(net.base_mva)) throw UnitError("base_mva must be positive");
    if (!(net.v_min >= 0.0) || !(net.v_max > net.v_min)) throw UnitError("voltage limits need 0 <= v_min < v_max");
    if (net.buses.empty()) throw TopologyError("network has no buses");

    const std::size_t T = net.buses.front().p_kw.size();
    if (T == 0) throw ParseError("load series are empty");
    int substations = 0;
    std::set<int> ids;
    for (const auto& b : net.buses) {
        if (!ids.insert(raw(b.id)).second) throw TopologyError(fmt::format("duplicate bus id {}", raw(b.id)));
        if (b.kind == BusKind::Substation) ++substations;
        if (b.customers < 0) throw UnitError(fmt::format("bus {} has a negative customer count", raw(b.id)));
        if (b.p_kw.size() != T || b.q_kvar.size() != T) {
            throw ParseError(fmt::format("bus {} load series length differs from the horizon {}", raw(b.id), T));
        }
        for (std::size_t t = 0; t < T; ++t) {
            if (!std::isfinite(b.p_kw[t]) || !std::isfinite(b.q_kvar[t])) {
                throw ParseError(fmt::format("bus {} has a non-finite load", raw(b.id)));
            }
        }
    }
    if (substations != 1) throw TopologyError(fmt::format("expected exactly one substation, found {}", substations));
    if (net.substation_v.empty() || (net.substation_v.size() != 1 && net.substation_v.size() != T)) {
        throw ParseError("substation voltage must have one value or one per hour");
    }
    for (double v : net.substation_v) {
        if (!(v > 0.0)) throw UnitError("substation voltage must be positive");
    }

    std::set<std::pair<int, int>> seen;
    for (const auto& br : net.branches) {
        const int a = raw(br.from), b = raw(br.to);
        if (net.bus_index(br.from) < 0 || net.bus_index(br.to) < 0) {
            throw TopologyError(fmt::format("branch ({}, {}) references an unknown bus", a, b));
        }
        if (a == b) throw TopologyError(fmt::format("branch ({}, {}) is a self loop", a, b));
        if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
            throw TopologyError(fmt::format("duplicate branch ({}, {})", a, b));
        }
        if (!(br.ampacity_a > 0.0)) throw UnitError(fmt::format("branch ({}, {}) has nonpositive ampacity", a, b));
        if (!(br.length_m >= 0.0)) throw UnitError(fmt::format("branch ({}, {}) has negative length", a, b));
        if (!(br.r_ohm >= 0.0) || !std::isfinite(br.r_ohm) || !std::isfinite(br.x_ohm)) {
            throw UnitError(fmt::format("branch ({}, {}) has invalid impedance", a, b));
        }
    }
    if (net.branches.size() + 1 != net.buses.size()) {
        throw TopologyError(fmt::format("{} buses need {} branches for a radial feeder, found {}", net.buses.size(),
                                        net.buses.size() - 1, net.branches.size()));
    }

    // Breadth-first orientation from the substation.
    const int n = static_cast<int>(net.buses.size());
    std::vector<std::vector<int>> adj(n);
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        adj[net.bus_index(net.branches[k].from)].push_back(static_cast<int>(k));
        adj[net.bus_index(net.branches[k].to)].push_back(static_cast<int>(k));
    }
    std::vector<bool> visited(n, false);
    std::vector<bool> oriented(net.branches.size(), false);
    std::queue<int> q;
    const int root = net.substation_index();
    q.push(root);
    visited[root] = true;
    while (!q.empty()) {
        const int i = q.front();
        q.pop();
        for (int k : adj[i]) {
            if (oriented[k]) continue;
            auto& br = net.branches[k];
            const int other = net.bus_index(br.from) == i ? net.bus_index(br.to) : net.bus_index(br.from);
            if (visited[other]) {
                throw TopologyError(fmt::format("branches form a cycle through bus {}", raw(net.buses[other].id)));
            }
            if (br.from != net.buses[i].id) std::swap(br.from, br.to);
            oriented[k] = true;
            visited[other] = true;
            q.push(other);
        }
    }
    for (int i = 0; i < n; ++i) {
        if (!visited[i]) throw TopologyError(fmt::format("bus {} is disconnected", raw(net.buses[i].id)));
    }
}

NetworkCase validated(NetworkCase net) {
    validate(net);
    return net;
}

std::vector<int> Topology::upstream(int bus) const {
    if (parent_branch[bus] < 0) return {};
    return {branch_from[parent_branch[bus]]};
}

std::vector<int> Topology::downstream(int bus) const {
    std::vector<int> out;
    for (int k : child_branches[bus]) out.push_back(branch_to[k]);
    return out;
}

Topology topology(const NetworkCase& net) {
    Topology t;
    const int n = static_cast<int>(net.buses.size());
    t.root = net.substation_index();
    t.parent_branch.assign(n, -1);
    t.child_branches.assign(n, {});
    t.depth.assign(n, 0);
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const int f = net.bus_index(net.branches[k].from);
        const int to = net.bus_index(net.branches[k].to);
        t.branch_from.push_back(f);
        t.branch_to.push_back(to);
        t.parent_branch[to] = static_cast<int>(k);
        t.child_branches[f].push_back(static_cast<int>(k));
    }
    std::queue<int> q;
    q.push(t.root);
    while (!q.empty()) {
        const int i = q.front();
        q.pop();
        t.bfs_order.push_back(i);
        for (int k : t.child_branches[i]) {
            t.depth[t.branch_to[k]] = t.depth[i] + 1;
            q.push(t.branch_to[k]);
        }
    }
    return t;
}

NetworkCase apply_upgrade(const NetworkCase& net, BusId from, BusId to, const CableType& cable) {
    const int k = net.branch_index(from, to);
    if (k < 0) throw TopologyError(fmt::format("unknown branch ({}, {})", raw(from), raw(to)));
    NetworkCase out = net;
    BranchSpec& br = out.branches[k];
    if (br.is_breaker != cable.is_breaker) {
        throw UnitError(fmt::format("cannot install {} '{}' on {} branch ({}, {})",
                                    cable.is_breaker ? "breaker" : "conductor", cable.name,
                                    br.is_breaker ? "breaker" : "conductor", raw(from), raw(to)));
    }
    if (br.cable_type == cable.name && br.ampacity_a == cable.ampacity_a) return out;
    br.ampacity_a = cable.ampacity_a;
    br.cable_type = cable.name;
    if (!cable.is_breaker) {
        br.r_ohm = cable.r_ohm_per_km * br.length_m / 1000.0;
        br.x_ohm = cable.x_ohm_per_km * br.length_m / 1000.0;
    }
    return out;
}

double impedance_ratio(const BranchSpec& before, const BranchSpec& after) {
    const double z0 = std::hypot(before.r_ohm, before.x_ohm);
    const double z1 = std::hypot(after.r_ohm, after.x_ohm);
    if (z0 == 0.0) return z1 == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return z1 / z0;
}

NetworkCase rebase_voltage(const NetworkCase& net, double new_kv) {
    if (!(new_kv > 0.0) || !std::isfinite(new_kv)) throw UnitError("rebase voltage must be positive");
    NetworkCase out = net;
    out.base_kv = new_kv;
    return out;
}

}  // namespace ddcp::grid
