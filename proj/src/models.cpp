#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <fmt/format.h>

#include "ddcp/planning/models.hpp"

namespace ddcp::planning {

using conic::kInf;
using conic::Relation;
using conic::Term;
using grid::NetworkCase;
using grid::PerUnit;
using scenario::LoadSet;

void BessParams::check() const {
    auto bad = [](const char* what) { throw PlanningError(fmt::format("invalid storage parameter: {}", what)); };
    if (!(e_min_kwh >= 0.0) || !(e_max_kwh > e_min_kwh)) bad("need 0 <= e_min_kwh < e_max_kwh");
    if (!(soc_min >= 0.0) || !(soc_max > soc_min) || soc_max > 1.0) bad("need 0 <= soc_min < soc_max <= 1");
    if (!(eta_charge > 0.0 && eta_charge <= 1.0)) bad("eta_charge");
    if (!(eta_discharge > 0.0 && eta_discharge <= 1.0)) bad("eta_discharge");
    if (!(c_cap > 0.0)) bad("c_cap");
    if (!(c_rate_charge > 0.0) || !(c_rate_discharge > 0.0)) bad("c-rates");
    if (!(k_inv > 0.0)) bad("k_inv");
    if (!(dt_h > 0.0)) bad("dt_h");
}

std::string BessParams::describe() const {
    return fmt::format(
        "E_cap [{}, {}] kWh, SOC [{}, {}], eta_ch {}, eta_dis {}, c_cap {} $/kWh, C_rate_ch {} /h, "
        "C_rate_dis {} /h, K_inv {}, dt {} h",
        e_min_kwh, e_max_kwh, soc_min, soc_max, eta_charge, eta_discharge, c_cap, c_rate_charge, c_rate_discharge,
        k_inv, dt_h);
}

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Vdq: return "vdq";
        case ModelKind::Vcu: return "vcu";
        case ModelKind::Vmbp: return "vmbp";
        case ModelKind::RelaxedVmbp: return "rvmbp";
        case ModelKind::EnhancedVmbp: return "evmbp";
    }
    return "model";
}

double loading_pct(double current_a, double rated_a) { return current_a / rated_a * 100.0; }

double violation_pct(double loading) { return std::max(0.0, loading - 100.0); }

std::vector<int> bess_candidate_buses(const NetworkCase& net) {
    std::vector<int> out;
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        if (net.buses[i].bess_candidate && net.buses[i].kind != grid::BusKind::Substation) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

std::vector<grid::CableType> cable_menu(const grid::BranchSpec& branch, const grid::CableCatalog& catalog,
                                        double relaxed_peak_a) {
    const double required = kSizingMargin * relaxed_peak_a;
    std::vector<grid::CableType> menu;
    for (const auto& c : catalog) {
        if (c.is_breaker == branch.is_breaker && c.ampacity_a >= required) menu.push_back(c);
    }
    if (menu.empty()) {
        throw PlanningError(fmt::format("no {} in the catalog is rated for {:.1f} A on branch ({}, {})",
                                        branch.is_breaker ? "breaker" : "conductor", required, grid::raw(branch.from),
                                        grid::raw(branch.to)));
    }
    return menu;
}

double default_lambda(const NetworkCase& net, const grid::CableCatalog& catalog) {
    double worst = 0.0;
    for (const auto& br : net.branches) {
        for (const auto& c : catalog) {
            if (c.is_breaker == br.is_breaker) worst = std::max(worst, c.cost(br.length_m));
        }
    }
    return 1e6 * std::max(worst, 1.0);
}

namespace {

class Builder {
public:
    Builder(const NetworkCase& net, const LoadSet& loads, Model& m)
        : net_(net), loads_(loads), m_(m), topo_(grid::topology(net)), pu_(net) {
        if (loads.p_kw.size() != net.buses.size() || loads.q_kvar.size() != net.buses.size()) {
            throw PlanningError("load set does not match the network's buses");
        }
        T_ = loads.horizon();
        if (T_ < 1) throw PlanningError("load set has no time steps");
        for (std::size_t i = 0; i < net.buses.size(); ++i) {
            if (static_cast<int>(loads.p_kw[i].size()) != T_ || static_cast<int>(loads.q_kvar[i].size()) != T_) {
                throw PlanningError("load series length does not match the horizon");
            }
        }
        for (int h : loads.hours) {
            if (h < 0 || h >= net.horizon()) throw PlanningError("load set refers to an hour outside the network data");
        }
        m_.horizon = T_;
        m_.hours = loads.hours;
        m_.s_base_kva = pu_.s_base_kva();
        tag_ = to_string(m.kind);
    }

    int T() const { return T_; }
    const grid::Topology& topo() const { return topo_; }
    const PerUnit& pu() const { return pu_; }

    std::string bname(int k) const {
        return fmt::format("{}-{}", grid::raw(net_.branches[k].from), grid::raw(net_.branches[k].to));
    }
    std::string name(const char* sym, const std::string& where, int t) const {
        return t < 0 ? fmt::format("{}.{}[{}]", tag_, sym, where) : fmt::format("{}.{}[{}].t{}", tag_, sym, where, t);
    }
    std::string bus_name(int i) const { return fmt::format("{}", grid::raw(net_.buses[i].id)); }

    double r_pu(int k) const { return pu_.ohm_to_pu(net_.branches[k].r_ohm); }
    double x_pu(int k) const { return pu_.ohm_to_pu(net_.branches[k].x_ohm); }
    double imax_pu(int k) const { return pu_.amp_to_pu(net_.branches[k].ampacity_a); }
    double vs2(int t) const {
        const double v = net_.substation_vpu(loads_.hours[t]);
        return v * v;
    }

    // Flow variables with voltage bounds; lower voltage bound only when strict.
    void flows(bool strict_vmin) {
        auto& p = m_.program;
        const int nb = static_cast<int>(net_.branches.size());
        const int nn = static_cast<int>(net_.buses.size());
        auto& f = m_.flow;
        f.P.assign(nb, {});
        f.Q.assign(nb, {});
        f.l.assign(nb, {});
        f.v.assign(nn, {});
        const double vmax2 = net_.v_max * net_.v_max;
        const double vmin2 = strict_vmin ? net_.v_min * net_.v_min : 0.0;
        for (int t = 0; t < T_; ++t) {
            for (int i = 0; i < nn; ++i) {
                if (i == topo_.root) {
                    f.v[i].push_back(p.add_variable(name("v", bus_name(i), t), vs2(t), vs2(t)));
                } else {
                    f.v[i].push_back(p.add_variable(name("v", bus_name(i), t), vmin2, vmax2));
                }
            }
            for (int k = 0; k < nb; ++k) {
                f.P[k].push_back(p.add_variable(name("P", bname(k), t), -kInf, kInf));
                f.Q[k].push_back(p.add_variable(name("Q", bname(k), t), -kInf, kInf));
                f.l[k].push_back(p.add_variable(name("l", bname(k), t), 0.0, kInf));
            }
            f.Ps.push_back(p.add_variable(name("Ps", bus_name(topo_.root), t), -kInf, kInf));
            f.Qs.push_back(p.add_variable(name("Qs", bus_name(topo_.root), t), -kInf, kInf));
        }
    }

    void cones() {
        auto& f = m_.flow;
        for (std::size_t k = 0; k < net_.branches.size(); ++k) {
            const int from = topo_.branch_from[k];
            for (int t = 0; t < T_; ++t) {
                m_.program.add_rotated_cone(f.v[from][t], f.l[k][t], {f.P[k][t], f.Q[k][t]},
                                            name("cone", bname(static_cast<int>(k)), t));
            }
        }
    }

    void voltage_drop(int k, double r, double x) {
        auto& f = m_.flow;
        const int i = topo_.branch_from[k], j = topo_.branch_to[k];
        for (int t = 0; t < T_; ++t) {
            m_.program.add_linear({{f.v[i][t], 1.0},
                                   {f.v[j][t], -1.0},
                                   {f.P[k][t], -2.0 * r},
                                   {f.Q[k][t], -2.0 * x},
                                   {f.l[k][t], r * r + x * x}},
                                  Relation::Equal, 0.0, name("drop", bname(k), t));
        }
    }

    using LossTerms = std::function<void(int branch, int t, std::vector<Term>& p, std::vector<Term>& q)>;
    using BusTerms = std::function<void(int bus, int t, std::vector<Term>& p, std::vector<Term>& q)>;

    // Nodal balances; `loss` supplies the upstream loss terms (already
    // negated), `extra` adds injections moved to the left-hand side.
    void balances(const LossTerms& loss, const BusTerms& extra = {}) {
        auto& f = m_.flow;
        for (std::size_t i = 0; i < net_.buses.size(); ++i) {
            const int bus = static_cast<int>(i);
            for (int t = 0; t < T_; ++t) {
                std::vector<Term> tp, tq;
                const int up = topo_.parent_branch[bus];
                if (up >= 0) {
                    tp.push_back({f.P[up][t], 1.0});
                    tq.push_back({f.Q[up][t], 1.0});
                    loss(up, t, tp, tq);
                } else {
                    tp.push_back({f.Ps[t], 1.0});
                    tq.push_back({f.Qs[t], 1.0});
                }
                for (int k : topo_.child_branches[bus]) {
                    tp.push_back({f.P[k][t], -1.0});
                    tq.push_back({f.Q[k][t], -1.0});
                }
                if (extra) extra(bus, t, tp, tq);
                m_.program.add_linear(std::move(tp), Relation::Equal, pu_.kw_to_pu(loads_.p_kw[i][t]),
                                      name("balP", bus_name(bus), t));
                m_.program.add_linear(std::move(tq), Relation::Equal, pu_.kw_to_pu(loads_.q_kvar[i][t]),
                                      name("balQ", bus_name(bus), t));
            }
        }
    }

    LossTerms ohmic_losses() const {
        return [this](int k, int t, std::vector<Term>& p, std::vector<Term>& q) {
            p.push_back({m_.flow.l[k][t], -r_pu(k)});
            q.push_back({m_.flow.l[k][t], -x_pu(k)});
        };
    }

    void strict_current(int k) {
        const double lim = imax_pu(k) * imax_pu(k);
        for (int t = 0; t < T_; ++t) m_.program.set_bounds(m_.flow.l[k][t], 0.0, lim);
    }

    void losses_objective() {
        std::vector<Term> obj;
        for (std::size_t k = 0; k < net_.branches.size(); ++k) {
            const double r = r_pu(static_cast<int>(k));
            for (int t = 0; t < T_; ++t) obj.push_back({m_.flow.l[k][t], r});
        }
        m_.program.set_objective(std::move(obj));
    }

    // Storage units; returns the capacity cost terms.
    std::vector<Term> storage(const BessParams& bp, const std::vector<int>& buses) {
        bp.check();
        if (buses.empty()) throw PlanningError("storage model needs at least one candidate bus");
        if (T_ < 2) throw PlanningError("storage model needs a horizon of at least two steps");
        auto& p = m_.program;
        auto& b = m_.bess;
        b = BessVars{};
        const double emin = pu_.kwh_to_puh(bp.e_min_kwh);
        const double emax = pu_.kwh_to_puh(bp.e_max_kwh);
        const double m_ch = bp.c_rate_charge * emax;
        const double m_dis = bp.c_rate_discharge * emax;
        const double m_q = bp.k_inv * bp.c_rate_discharge * emax;
        const double cost = bp.c_cap * pu_.s_base_kva();
        std::vector<Term> obj;
        for (int bus : buses) {
            if (bus < 0 || bus >= static_cast<int>(net_.buses.size()) || bus == topo_.root) {
                throw PlanningError("storage candidate must be a non-substation bus");
            }
            if (std::find(b.buses.begin(), b.buses.end(), bus) != b.buses.end()) {
                throw PlanningError("duplicate storage candidate bus");
            }
            const std::string w = bus_name(bus);
            b.buses.push_back(bus);
            const VarId z = p.add_variable(name("z", w, -1), 0.0, 1.0, conic::VarType::Binary, 2);
            const VarId cap = p.add_variable(name("Ecap", w, -1), 0.0, emax);
            const VarId init = p.add_variable(name("Einit", w, -1), 0.0, kInf);
            const VarId sinv = p.add_variable(name("Sinv", w, -1), 0.0, kInf);
            b.z.push_back(z);
            b.e_cap.push_back(cap);
            b.e_init.push_back(init);
            b.s_inv.push_back(sinv);
            p.add_linear({{cap, 1.0}, {z, -emin}}, Relation::GreaterEqual, 0.0, name("capmin", w, -1));
            p.add_linear({{cap, 1.0}, {z, -emax}}, Relation::LessEqual, 0.0, name("capmax", w, -1));
            p.add_linear({{sinv, 1.0}, {cap, -bp.k_inv * bp.c_rate_discharge}}, Relation::Equal, 0.0,
                         name("inv", w, -1));
            std::vector<VarId> e, pch, pdis, qinj, qabs, ych, ydis, yinj, yabs;
            VarId prev = init;
            for (int t = 0; t < T_; ++t) {
                e.push_back(p.add_variable(name("E", w, t), 0.0, kInf));
                pch.push_back(p.add_variable(name("Pch", w, t), 0.0, m_ch));
                pdis.push_back(p.add_variable(name("Pdis", w, t), 0.0, m_dis));
                qinj.push_back(p.add_variable(name("Qinj", w, t), 0.0, m_q));
                qabs.push_back(p.add_variable(name("Qabs", w, t), 0.0, m_q));
                ych.push_back(p.add_variable(name("ych", w, t), 0.0, 1.0, conic::VarType::Binary, 0));
                ydis.push_back(p.add_variable(name("ydis", w, t), 0.0, 1.0, conic::VarType::Binary, 0));
                yinj.push_back(p.add_variable(name("yinj", w, t), 0.0, 1.0, conic::VarType::Binary, 0));
                yabs.push_back(p.add_variable(name("yabs", w, t), 0.0, 1.0, conic::VarType::Binary, 0));
                p.add_linear({{e[t], 1.0}, {cap, -bp.soc_min}}, Relation::GreaterEqual, 0.0, name("socmin", w, t));
                p.add_linear({{e[t], 1.0}, {cap, -bp.soc_max}}, Relation::LessEqual, 0.0, name("socmax", w, t));
                p.add_linear({{e[t], 1.0},
                              {prev, -1.0},
                              {pch[t], -bp.eta_charge * bp.dt_h},
                              {pdis[t], bp.dt_h / bp.eta_discharge}},
                             Relation::Equal, 0.0, name("energy", w, t));
                prev = e[t];
                p.add_linear({{pch[t], 1.0}, {cap, -bp.c_rate_charge}}, Relation::LessEqual, 0.0, name("chcap", w, t));
                p.add_linear({{pch[t], 1.0}, {ych[t], -m_ch}}, Relation::LessEqual, 0.0, name("chon", w, t));
                p.add_linear({{pdis[t], 1.0}, {cap, -bp.c_rate_discharge}}, Relation::LessEqual, 0.0,
                             name("discap", w, t));
                p.add_linear({{pdis[t], 1.0}, {ydis[t], -m_dis}}, Relation::LessEqual, 0.0, name("dison", w, t));
                p.add_linear({{qinj[t], 1.0}, {yinj[t], -m_q}}, Relation::LessEqual, 0.0, name("injon", w, t));
                p.add_linear({{qabs[t], 1.0}, {yabs[t], -m_q}}, Relation::LessEqual, 0.0, name("abson", w, t));
                p.add_linear({{ych[t], 1.0}, {ydis[t], 1.0}}, Relation::LessEqual, 1.0, name("chx", w, t));
                p.add_linear({{yinj[t], 1.0}, {yabs[t], 1.0}}, Relation::LessEqual, 1.0, name("qx", w, t));
                const VarId ps = p.add_variable(name("Psum", w, t), 0.0, kInf);
                const VarId qs = p.add_variable(name("Qsum", w, t), 0.0, kInf);
                p.add_linear({{ps, 1.0}, {pch[t], -1.0}, {pdis[t], -1.0}}, Relation::Equal, 0.0, name("psum", w, t));
                p.add_linear({{qs, 1.0}, {qabs[t], -1.0}, {qinj[t], -1.0}}, Relation::Equal, 0.0, name("qsum", w, t));
                p.add_standard_cone(sinv, {ps, qs}, name("invcone", w, t));
            }
            p.add_linear({{init, 1.0}, {e[T_ - 1], -1.0}}, Relation::Equal, 0.0, name("cyclic", w, -1));
            b.e.push_back(std::move(e));
            b.p_ch.push_back(std::move(pch));
            b.p_dis.push_back(std::move(pdis));
            b.q_inj.push_back(std::move(qinj));
            b.q_abs.push_back(std::move(qabs));
            b.y_ch.push_back(std::move(ych));
            b.y_dis.push_back(std::move(ydis));
            b.y_inj.push_back(std::move(yinj));
            b.y_abs.push_back(std::move(yabs));
            obj.push_back({cap, cost});
        }
        m_.bess_params = bp;
        return obj;
    }

    BusTerms storage_injections() const {
        return [this](int bus, int t, std::vector<Term>& p, std::vector<Term>& q) {
            const auto& b = m_.bess;
            for (std::size_t u = 0; u < b.buses.size(); ++u) {
                if (b.buses[u] != bus) continue;
                p.push_back({b.p_ch[u][t], -1.0});
                p.push_back({b.p_dis[u][t], 1.0});
                q.push_back({b.q_abs[u][t], -1.0});
                q.push_back({b.q_inj[u][t], 1.0});
            }
        };
    }

private:
    const NetworkCase& net_;
    const LoadSet& loads_;
    Model& m_;
    grid::Topology topo_;
    PerUnit pu_;
    int T_ = 0;
    std::string tag_;
};

Model build_storage(ModelKind kind, const NetworkCase& net, const LoadSet& loads, const BessParams& params,
                    const std::vector<int>& candidate_buses, double lambda, const std::vector<int>& upgraded) {
    Model m;
    m.kind = kind;
    m.upgraded = upgraded;
    Builder b(net, loads, m);
    b.flows(true);
    b.cones();
    const int nb = static_cast<int>(net.branches.size());
    for (int k = 0; k < nb; ++k) b.voltage_drop(k, b.r_pu(k), b.x_pu(k));
    std::vector<Term> obj = b.storage(params, candidate_buses);
    b.balances(b.ohmic_losses(), b.storage_injections());
    if (kind == ModelKind::RelaxedVmbp) {
        if (!(lambda > 0.0)) throw PlanningError("slack penalty must be positive");
        m.lambda = lambda;
        m.tau.assign(nb, {});
        for (int k = 0; k < nb; ++k) {
            const double lim = b.imax_pu(k) * b.imax_pu(k);
            for (int t = 0; t < b.T(); ++t) {
                const VarId tau = m.program.add_variable(b.name("tau", b.bname(k), t), 0.0, kInf);
                m.tau[k].push_back(tau);
                m.program.add_linear({{m.flow.l[k][t], 1.0}, {tau, -1.0}}, Relation::LessEqual, lim,
                                     b.name("soft", b.bname(k), t));
                obj.push_back({tau, lambda});
            }
        }
    } else {
        for (int k = 0; k < nb; ++k) b.strict_current(k);
    }
    m.program.set_objective(std::move(obj));
    return m;
}

}  // namespace

Model build_vdq(const NetworkCase& net, const LoadSet& loads) {
    Model m;
    m.kind = ModelKind::Vdq;
    Builder b(net, loads, m);
    b.flows(false);
    b.cones();
    for (int k = 0; k < static_cast<int>(net.branches.size()); ++k) b.voltage_drop(k, b.r_pu(k), b.x_pu(k));
    b.balances(b.ohmic_losses());
    b.losses_objective();
    return m;
}

Model build_vmbp(const NetworkCase& net, const LoadSet& loads, const BessParams& params,
                 const std::vector<int>& candidate_buses, const std::vector<int>& upgraded) {
    return build_storage(upgraded.empty() ? ModelKind::Vmbp : ModelKind::EnhancedVmbp, net, loads, params,
                         candidate_buses, 0.0, upgraded);
}

Model build_relaxed_vmbp(const NetworkCase& net, const LoadSet& loads, const BessParams& params,
                         const std::vector<int>& candidate_buses, double lambda) {
    return build_storage(ModelKind::RelaxedVmbp, net, loads, params, candidate_buses, lambda, {});
}

Model build_vcu(const NetworkCase& net, const LoadSet& loads, const std::vector<CandidateLine>& candidates,
                const VcuOptions& options) {
    Model m;
    m.kind = ModelKind::Vcu;
    Builder b(net, loads, m);
    const PerUnit& pu = b.pu();
    const int nb = static_cast<int>(net.branches.size());
    std::vector<int> cand_of(nb, -1);
    double worst_cost = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const int k = candidates[c].branch;
        if (k < 0 || k >= nb) throw PlanningError("upgrade candidate refers to an unknown branch");
        if (cand_of[k] >= 0) throw PlanningError("duplicate upgrade candidate");
        if (candidates[c].menu.empty()) {
            throw PlanningError(fmt::format("empty cable menu for branch {}", b.bname(k)));
        }
        for (const auto& cable : candidates[c].menu) {
            if (cable.is_breaker != net.branches[k].is_breaker) {
                throw PlanningError(fmt::format("menu for branch {} mixes breakers and conductors", b.bname(k)));
            }
            worst_cost = std::max(worst_cost, cable.cost(net.branches[k].length_m));
        }
        cand_of[k] = static_cast<int>(c);
    }
    const double rho = options.rho > 0.0 ? options.rho : 1e6 * std::max(worst_cost, 1.0);
    m.vcu.candidates = candidates;
    m.vcu.rho = rho;

    b.flows(true);
    b.cones();
    std::vector<Term> obj;
    auto& p = m.program;
    const double vmax2 = net.v_max * net.v_max;
    const double vmin2 = net.v_min * net.v_min;
    const int T = b.T();
    m.vcu.z.assign(candidates.size(), {});
    m.vcu.sigma.assign(candidates.size(), {});
    m.vcu.p_loss.assign(candidates.size(), {});
    m.vcu.q_loss.assign(candidates.size(), {});
    for (int k = 0; k < nb; ++k) {
        const int c = cand_of[k];
        if (c < 0) {
            b.voltage_drop(k, b.r_pu(k), b.x_pu(k));
            b.strict_current(k);
            continue;
        }
        const auto& menu = candidates[c].menu;
        const auto& br = net.branches[k];
        std::vector<double> rc, xc, i2;
        for (const auto& cable : menu) {
            if (cable.is_breaker) {
                rc.push_back(b.r_pu(k));
                xc.push_back(b.x_pu(k));
            } else {
                rc.push_back(pu.ohm_to_pu(cable.r_ohm_per_km * br.length_m / 1000.0));
                xc.push_back(pu.ohm_to_pu(cable.x_ohm_per_km * br.length_m / 1000.0));
            }
            const double ic = pu.amp_to_pu(cable.ampacity_a);
            i2.push_back(ic * ic);
        }
        const double i2max = *std::max_element(i2.begin(), i2.end());
        const double sigma_bar = 4.0 * i2max;
        const double l_bar = i2max + sigma_bar;
        const double flow_bar = net.v_max * std::sqrt(l_bar);
        double ploss_hi = 0.0, qloss_lo = 0.0, qloss_hi = 0.0;
        for (std::size_t e = 0; e < menu.size(); ++e) {
            ploss_hi = std::max(ploss_hi, rc[e] * l_bar);
            qloss_lo = std::min(qloss_lo, xc[e] * l_bar);
            qloss_hi = std::max(qloss_hi, xc[e] * l_bar);
        }
        const std::string bn = b.bname(k);
        std::vector<Term> pick;
        for (std::size_t e = 0; e < menu.size(); ++e) {
            const VarId z = p.add_variable(b.name("z", fmt::format("{}:{}", bn, menu[e].name), -1), 0.0, 1.0,
                                           conic::VarType::Binary, 1);
            m.vcu.z[c].push_back(z);
            pick.push_back({z, 1.0});
            obj.push_back({z, menu[e].cost(br.length_m)});
        }
        p.add_linear(pick, Relation::Equal, 1.0, b.name("one", bn, -1));
        const int i = b.topo().branch_from[k], j = b.topo().branch_to[k];
        for (int t = 0; t < T; ++t) {
            const VarId P = m.flow.P[k][t], Q = m.flow.Q[k][t], l = m.flow.l[k][t];
            p.set_bounds(P, -flow_bar, flow_bar);
            p.set_bounds(Q, -flow_bar, flow_bar);
            p.set_bounds(l, 0.0, l_bar);
            const VarId sigma = p.add_variable(b.name("sigma", bn, t), 0.0, sigma_bar);
            const VarId pl = p.add_variable(b.name("Ploss", bn, t), 0.0, ploss_hi);
            const VarId ql = p.add_variable(b.name("Qloss", bn, t), qloss_lo, qloss_hi);
            m.vcu.sigma[c].push_back(sigma);
            m.vcu.p_loss[c].push_back(pl);
            m.vcu.q_loss[c].push_back(ql);
            obj.push_back({sigma, rho});
            std::vector<Term> cap{{l, 1.0}, {sigma, -1.0}};
            for (std::size_t e = 0; e < menu.size(); ++e) cap.push_back({m.vcu.z[c][e], -i2[e]});
            p.add_linear(std::move(cap), Relation::LessEqual, 0.0, b.name("cap", bn, t));
            for (std::size_t e = 0; e < menu.size(); ++e) {
                const VarId z = m.vcu.z[c][e];
                const std::string w = fmt::format("{}:{}", bn, menu[e].name);
                const double mv = (vmax2 - vmin2) + 2.0 * (std::abs(rc[e]) + std::abs(xc[e])) * flow_bar +
                                  (rc[e] * rc[e] + xc[e] * xc[e]) * l_bar;
                std::vector<Term> drop{{m.flow.v[i][t], 1.0},
                                       {m.flow.v[j][t], -1.0},
                                       {P, -2.0 * rc[e]},
                                       {Q, -2.0 * xc[e]},
                                       {l, rc[e] * rc[e] + xc[e] * xc[e]}};
                auto hi = drop;
                hi.push_back({z, mv});
                p.add_linear(std::move(hi), Relation::LessEqual, mv, b.name("dropU", w, t));
                drop.push_back({z, -mv});
                p.add_linear(std::move(drop), Relation::GreaterEqual, -mv, b.name("dropL", w, t));
                const double mp = ploss_hi + std::abs(rc[e]) * l_bar;
                p.add_linear({{pl, 1.0}, {l, -rc[e]}, {z, mp}}, Relation::LessEqual, mp, b.name("plU", w, t));
                p.add_linear({{pl, 1.0}, {l, -rc[e]}, {z, -mp}}, Relation::GreaterEqual, -mp, b.name("plL", w, t));
                const double mq = std::max(std::abs(qloss_lo), std::abs(qloss_hi)) + std::abs(xc[e]) * l_bar;
                p.add_linear({{ql, 1.0}, {l, -xc[e]}, {z, mq}}, Relation::LessEqual, mq, b.name("qlU", w, t));
                p.add_linear({{ql, 1.0}, {l, -xc[e]}, {z, -mq}}, Relation::GreaterEqual, -mq, b.name("qlL", w, t));
            }
        }
    }
    auto ohmic = b.ohmic_losses();
    b.balances([&](int k, int t, std::vector<Term>& tp, std::vector<Term>& tq) {
        const int c = cand_of[k];
        if (c < 0) {
            ohmic(k, t, tp, tq);
            return;
        }
        tp.push_back({m.vcu.p_loss[c][t], -1.0});
        tq.push_back({m.vcu.q_loss[c][t], -1.0});
    });
    p.set_objective(std::move(obj));
    return m;
}

conic::RoundingHeuristic vmbp_rounding(const Model& model) {
    const BessVars b = model.bess;
    // installs below a thousandth of the minimum size are interior-point noise
    const double floor = std::max(1e-9, 1e-3 * model.bess_params.e_min_kwh / model.s_base_kva);
    return [b, floor](const std::vector<double>& x) {
        std::vector<double> out = x;
        for (std::size_t u = 0; u < b.buses.size(); ++u) {
            out[b.z[u].index] = x[b.e_cap[u].index] > floor ? 1.0 : 0.0;
            for (std::size_t t = 0; t < b.e[u].size(); ++t) {
                const bool charge = x[b.p_ch[u][t].index] >= x[b.p_dis[u][t].index];
                out[b.y_ch[u][t].index] = charge ? 1.0 : 0.0;
                out[b.y_dis[u][t].index] = charge ? 0.0 : 1.0;
                const bool absorb = x[b.q_abs[u][t].index] >= x[b.q_inj[u][t].index];
                out[b.y_abs[u][t].index] = absorb ? 1.0 : 0.0;
                out[b.y_inj[u][t].index] = absorb ? 0.0 : 1.0;
            }
        }
        return out;
    };
}

conic::RoundingHeuristic vcu_rounding(const Model& model) {
    const Grid2<VarId> z = model.vcu.z;
    return [z](const std::vector<double>& x) {
        std::vector<double> out = x;
        for (const auto& row : z) {
            std::size_t best = 0;
            for (std::size_t e = 1; e < row.size(); ++e) {
                if (x[row[e].index] > x[row[best].index]) best = e;
            }
            for (std::size_t e = 0; e < row.size(); ++e) out[row[e].index] = e == best ? 1.0 : 0.0;
        }
        return out;
    };
}

std::vector<int> ViolationReport::overloaded_branches() const {
    std::vector<int> out;
    for (const auto& l : lines) {
        if (l.violated && std::find(out.begin(), out.end(), l.branch) == out.end()) out.push_back(l.branch);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> ViolationReport::peak_current_a(std::size_t branches) const {
    std::vector<double> peak(branches, 0.0);
    for (const auto& l : lines) peak[l.branch] = std::max(peak[l.branch], l.current_a);
    return peak;
}

ViolationReport extract_violations(const NetworkCase& net, const Model& model, const conic::Solution& sol) {
    ViolationReport r;
    r.status = sol.status;
    if (sol.status == conic::SolveStatus::Infeasible) {
        r.collapse = true;
        return r;
    }
    if (!sol.has_values()) return r;
    if (sol.values.size() != model.program.num_variables() || model.flow.l.size() != net.branches.size() ||
        model.flow.v.size() != net.buses.size()) {
        throw PlanningError("solution does not belong to this model and network");
    }
    const PerUnit pu(net);
    const double ib = pu.i_base_a();
    const int T = model.horizon;
    double sum = 0.0;
    std::vector<bool> line_bad(net.branches.size(), false);
    std::vector<bool> bus_bad(net.buses.size(), false);
    r.stats.min = kInf;
    r.stats.max = -kInf;
    r.stats.min_voltage_pu = kInf;
    for (int t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < net.branches.size(); ++k) {
            const auto& br = net.branches[k];
            LineLoading ll;
            ll.branch = static_cast<int>(k);
            ll.from = br.from;
            ll.to = br.to;
            ll.step = t;
            ll.hour = model.hours[t];
            ll.current_a = std::sqrt(std::max(0.0, sol.value(model.flow.l[k][t]))) * ib;
            ll.loading_pct = loading_pct(ll.current_a, br.ampacity_a);
            ll.violation_pct = violation_pct(ll.loading_pct);
            ll.violated = ll.loading_pct > 100.0 + kLoadingTolPct;
            if (ll.violated) line_bad[k] = true;
            r.stats.min = std::min(r.stats.min, ll.loading_pct);
            r.stats.max = std::max(r.stats.max, ll.loading_pct);
            r.stats.max_violation_pct = std::max(r.stats.max_violation_pct, ll.violation_pct);
            sum += ll.loading_pct;
            r.lines.push_back(ll);
        }
        for (std::size_t i = 0; i < net.buses.size(); ++i) {
            BusVoltage bv;
            bv.bus = static_cast<int>(i);
            bv.id = net.buses[i].id;
            bv.step = t;
            bv.hour = model.hours[t];
            bv.v_pu = std::sqrt(std::max(0.0, sol.value(model.flow.v[i][t])));
            bv.violated = bv.v_pu < net.v_min - kVoltageTolPu;
            if (bv.violated) bus_bad[i] = true;
            r.stats.min_voltage_pu = std::min(r.stats.min_voltage_pu, bv.v_pu);
            r.voltages.push_back(bv);
        }
    }
    r.stats.count = static_cast<int>(r.lines.size());
    if (r.stats.count == 0) {
        r.stats.min = r.stats.max = 0.0;
    } else {
        r.stats.avg = sum / r.stats.count;
    }
    r.stats.violated_lines = static_cast<int>(std::count(line_bad.begin(), line_bad.end(), true));
    r.stats.voltage_violations = static_cast<int>(std::count(bus_bad.begin(), bus_bad.end(), true));
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const double rk = pu.ohm_to_pu(net.branches[k].r_ohm);
        for (int t = 0; t < T; ++t) r.losses_pu += rk * sol.value(model.flow.l[k][t]);
    }
    return r;
}

ViolationReport run_vdq(const NetworkCase& net, const LoadSet& loads, const conic::SolveParams& params) {
    const Model m = build_vdq(net, loads);
    const conic::Solution s = conic::solve_relaxation(m.program, params);
    return extract_violations(net, m, s);
}

UpgradePlan extract_upgrade_plan(const NetworkCase& net, const Model& model, const conic::Solution& sol) {
    if (model.kind != ModelKind::Vcu) throw PlanningError("upgrade plans come from cable upgrade models");
    if (!sol.has_values()) throw PlanningError("cable upgrade model has no solution to extract");
    UpgradePlan plan;
    for (std::size_t c = 0; c < model.vcu.candidates.size(); ++c) {
        const auto& cand = model.vcu.candidates[c];
        const auto& br = net.branches[cand.branch];
        int chosen = -1;
        int picked = 0;
        for (std::size_t e = 0; e < cand.menu.size(); ++e) {
            if (sol.value(model.vcu.z[c][e]) > 0.5) {
                chosen = static_cast<int>(e);
                ++picked;
            }
        }
        if (picked != 1) {
            plan.warnings.push_back(fmt::format("branch ({}, {}) has {} selected cables", grid::raw(br.from),
                                                grid::raw(br.to), picked));
            if (chosen < 0) continue;
        }
        UpgradeItem item;
        item.branch = cand.branch;
        item.from = br.from;
        item.to = br.to;
        item.old_type = br.cable_type;
        item.cable = cand.menu[chosen];
        item.relaxed_peak_a = cand.relaxed_peak_a;
        item.length_m = br.length_m;
        item.cost = item.cable.cost(br.length_m);
        const grid::NetworkCase after = grid::apply_upgrade(net, br.from, br.to, item.cable);
        item.impedance_ratio = grid::impedance_ratio(br, after.branches[cand.branch]);
        plan.total_cost += item.cost;
        plan.items.push_back(std::move(item));
        for (VarId s : model.vcu.sigma[c]) plan.slack_total += sol.value(s);
    }
    if (plan.slack_total > 1e-7) {
        plan.warnings.push_back(
            fmt::format("ampacity slack in use ({:.3g} squared p.u.): residual violations remain", plan.slack_total));
    }
    return plan;
}

NetworkCase apply_plan(const NetworkCase& net, const std::vector<UpgradeItem>& items) {
    NetworkCase out = net;
    for (const auto& it : items) out = grid::apply_upgrade(out, it.from, it.to, it.cable);
    return out;
}

BessPlan extract_bess_plan(const NetworkCase& net, const Model& model, const conic::Solution& sol) {
    if (model.bess.buses.empty()) throw PlanningError("model has no storage units");
    if (!sol.has_values()) throw PlanningError("storage model has no solution to extract");
    const auto& b = model.bess;
    const auto& bp = model.bess_params;
    const PerUnit pu(net);
    BessPlan plan;
    for (std::size_t u = 0; u < b.buses.size(); ++u) {
        const double cap = pu.puh_to_kwh(sol.value(b.e_cap[u]));
        if (sol.value(b.z[u]) < 0.5 && cap <= 1e-6) continue;
        BessUnit unit;
        unit.bus = b.buses[u];
        unit.id = net.buses[unit.bus].id;
        unit.capacity_kwh = cap;
        unit.inverter_kva = pu.pu_to_kw(sol.value(b.s_inv[u]));
        unit.cost = bp.c_cap * cap;
        unit.initial_kwh = pu.puh_to_kwh(sol.value(b.e_init[u]));
        double sim = unit.initial_kwh;
        for (std::size_t t = 0; t < b.e[u].size(); ++t) {
            unit.p_ch_kw.push_back(pu.pu_to_kw(sol.value(b.p_ch[u][t])));
            unit.p_dis_kw.push_back(pu.pu_to_kw(sol.value(b.p_dis[u][t])));
            unit.q_inj_kvar.push_back(pu.pu_to_kw(sol.value(b.q_inj[u][t])));
            unit.q_abs_kvar.push_back(pu.pu_to_kw(sol.value(b.q_abs[u][t])));
            const double e = pu.puh_to_kwh(sol.value(b.e[u][t]));
            unit.energy_kwh.push_back(e);
            unit.soc.push_back(cap > 0.0 ? e / cap : 0.0);
            sim += (unit.p_ch_kw.back() * bp.eta_charge - unit.p_dis_kw.back() / bp.eta_discharge) * bp.dt_h;
        }
        unit.cyclic_residual_kwh = std::abs(sim - unit.initial_kwh);
        if (unit.cyclic_residual_kwh > 1e-6 * std::max(cap, 1.0)) {
            plan.cyclic_ok = false;
            plan.warnings.push_back(fmt::format("bus {}: cyclic energy residual {:.3g} kWh", grid::raw(unit.id),
                                                unit.cyclic_residual_kwh));
        }
        plan.total_kwh += cap;
        plan.cost += unit.cost;
        plan.units.push_back(std::move(unit));
    }
    return plan;
}

scenario::LoadSet with_bess(const LoadSet& loads, const BessPlan& plan) {
    LoadSet out = loads;
    for (const auto& u : plan.units) {
        if (u.p_ch_kw.size() != static_cast<std::size_t>(loads.horizon())) {
            throw PlanningError("storage schedule does not match the load horizon");
        }
        for (int t = 0; t < loads.horizon(); ++t) {
            out.p_kw[u.bus][t] += u.p_ch_kw[t] - u.p_dis_kw[t];
            out.q_kvar[u.bus][t] += u.q_abs_kvar[t] - u.q_inj_kvar[t];
        }
    }
    return out;
}

}  // namespace ddcp::planning
