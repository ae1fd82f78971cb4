#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the optimization code.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ddcp/grid/network.hpp"
#include "ddcp/scenario/ev.hpp"

namespace oracle {

using ddcp::grid::BusId;
using ddcp::grid::NetworkCase;

inline std::string data(const std::string& name) { return std::string(DDCP_DATA_DIR) + "/" + name; }

struct SweepResult {
    std::vector<std::vector<double>> v;  // [bus][step], squared p.u.
    std::vector<std::vector<double>> l;  // [branch][step], squared p.u.
    std::vector<std::vector<double>> P, Q;
    double losses = 0.0;  // sum of r * l over branches and steps, p.u.
    bool converged = true;
};

// Backward/forward sweep on the branch flow equations, fixed point in
// (P, Q, l, v). Branch endpoints are taken from the oriented case.
inline SweepResult sweep(const NetworkCase& net, const ddcp::scenario::LoadSet& loads) {
    const int n = static_cast<int>(net.buses.size());
    const int m = static_cast<int>(net.branches.size());
    const int T = loads.horizon();
    const double zb = net.base_kv * net.base_kv / net.base_mva;
    const double sb = net.base_mva * 1000.0;
    std::vector<int> from(m), to(m), parent(n, -1);
    for (int k = 0; k < m; ++k) {
        from[k] = net.bus_index(net.branches[k].from);
        to[k] = net.bus_index(net.branches[k].to);
        parent[to[k]] = k;
    }
    // Buses ordered so that every bus comes after its parent.
    std::vector<int> order;
    std::vector<int> depth(n, -1);
    const int root = net.substation_index();
    depth[root] = 0;
    order.push_back(root);
    for (std::size_t head = 0; head < order.size(); ++head) {
        for (int k = 0; k < m; ++k) {
            if (from[k] == order[head] && depth[to[k]] < 0) {
                depth[to[k]] = depth[order[head]] + 1;
                order.push_back(to[k]);
            }
        }
    }
    SweepResult out;
    out.v.assign(n, std::vector<double>(T));
    out.l.assign(m, std::vector<double>(T, 0.0));
    out.P.assign(m, std::vector<double>(T, 0.0));
    out.Q.assign(m, std::vector<double>(T, 0.0));
    for (int t = 0; t < T; ++t) {
        const double vs = net.substation_vpu(loads.hours[t]);
        for (int i = 0; i < n; ++i) out.v[i][t] = vs * vs;
        for (int it = 0; it < 10000; ++it) {
            std::vector<double> P(n, 0.0), Q(n, 0.0);  // flow into each bus from its parent
            for (auto o = order.rbegin(); o != order.rend(); ++o) {
                const int j = *o;
                if (parent[j] < 0) continue;
                const int k = parent[j];
                const double r = net.branches[k].r_ohm / zb, x = net.branches[k].x_ohm / zb;
                double pj = loads.p_kw[j][t] / sb, qj = loads.q_kvar[j][t] / sb;
                for (int c = 0; c < m; ++c) {
                    if (from[c] == j) {
                        pj += P[to[c]];
                        qj += Q[to[c]];
                    }
                }
                P[j] = pj + r * out.l[k][t];
                Q[j] = qj + x * out.l[k][t];
            }
            double change = 0.0;
            for (int j : order) {
                if (parent[j] < 0) continue;
                const int k = parent[j];
                const double r = net.branches[k].r_ohm / zb, x = net.branches[k].x_ohm / zb;
                const double vi = out.v[from[k]][t];
                const double l = (P[j] * P[j] + Q[j] * Q[j]) / vi;
                const double vj = vi - 2.0 * (r * P[j] + x * Q[j]) + (r * r + x * x) * l;
                change = std::max({change, std::abs(l - out.l[k][t]), std::abs(vj - out.v[j][t])});
                out.l[k][t] = l;
                out.v[j][t] = vj;
                out.P[k][t] = P[j];
                out.Q[k][t] = Q[j];
            }
            if (change < 1e-15) break;
            if (it == 9999) out.converged = false;
        }
    }
    for (int k = 0; k < m; ++k) {
        for (int t = 0; t < T; ++t) out.losses += net.branches[k].r_ohm / zb * out.l[k][t];
    }
    return out;
}

// Random radial feeder: bus b attaches to a random earlier bus. Loads and
// impedances are in ranges typical of a medium-voltage lateral.
inline NetworkCase random_feeder(std::mt19937& rng, int buses, int hours) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    NetworkCase net;
    net.base_kv = 12.47;
    net.base_mva = 10.0;
    for (int b = 0; b < buses; ++b) {
        ddcp::grid::BusSpec bus;
        bus.id = BusId{b + 1};
        bus.kind = b == 0 ? ddcp::grid::BusKind::Substation : ddcp::grid::BusKind::Load;
        bus.customers = b == 0 ? 0 : 1 + static_cast<int>(U(rng) * 20);
        for (int t = 0; t < hours; ++t) {
            const double p = b == 0 ? 0.0 : 50.0 + 450.0 * U(rng);
            bus.p_kw.push_back(p);
            bus.q_kvar.push_back(p * (0.1 + 0.3 * U(rng)));
        }
        net.buses.push_back(bus);
    }
    for (int b = 1; b < buses; ++b) {
        const int parent = static_cast<int>(U(rng) * b);
        ddcp::grid::BranchSpec br;
        br.from = BusId{parent + 1};
        br.to = BusId{b + 1};
        br.length_m = 200.0 + 1300.0 * U(rng);
        br.r_ohm = (0.05 + 0.25 * U(rng)) * br.length_m / 1000.0;
        br.x_ohm = (0.08 + 0.1 * U(rng)) * br.length_m / 1000.0;
        br.ampacity_a = 400.0;
        br.cable_type = "test";
        net.branches.push_back(br);
    }
    net.substation_v = {1.0 + 0.02 * U(rng)};
    ddcp::grid::validate(net);
    return net;
}

inline ddcp::scenario::LoadSet base_loads(const NetworkCase& net) {
    ddcp::scenario::LoadSet s;
    s.mode = ddcp::scenario::LoadMode::Horizon;
    for (int t = 0; t < net.horizon(); ++t) s.hours.push_back(t);
    for (const auto& b : net.buses) {
        s.p_kw.push_back(b.p_kw);
        s.q_kvar.push_back(b.q_kvar);
    }
    return s;
}

}  // namespace oracle
