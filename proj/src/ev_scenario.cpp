#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "ddcp/scenario/ev.hpp"

namespace ddcp::scenario {

void EvConfig::check() const {
    if (!(penetration >= 0.0 && penetration <= 1.0)) {
        throw std::invalid_argument(fmt::format("penetration {} outside [0, 1]", penetration));
    }
    if (!(charger_kw > 0.0) || !std::isfinite(charger_kw)) throw std::invalid_argument("charger_kw must be positive");
    if (!(power_factor > 0.0 && power_factor <= 1.0)) throw std::invalid_argument("power_factor must be in (0, 1]");
}

int EvAssignment::total() const {
    int n = 0;
    for (int c : counts) n += c;
    return n;
}

int charger_count(int customers, double penetration) {
    return static_cast<int>(std::ceil(penetration * customers - 1e-9));
}

namespace {

// Unbiased draw in [0, bound) from 32-bit words.
std::uint32_t draw_below(std::mt19937& rng, std::uint32_t bound) {
    const std::uint64_t range = std::uint64_t{1} << 32;
    const std::uint64_t limit = range - range % bound;
    for (;;) {
        const std::uint64_t w = rng();
        if (w < limit) return static_cast<std::uint32_t>(w % bound);
    }
}

}  // namespace

EvAssignment allocate_chargers(const grid::NetworkCase& net, const EvConfig& cfg) {
    cfg.check();
    EvAssignment out;
    out.counts.assign(net.buses.size(), 0);
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        for (int c = 0; c < net.buses[i].customers; ++c) out.ordering.push_back(static_cast<int>(i));
    }
    std::mt19937 rng(cfg.seed);
    for (std::size_t i = out.ordering.size(); i > 1; --i) {
        const std::uint32_t j = draw_below(rng, static_cast<std::uint32_t>(i));
        std::swap(out.ordering[i - 1], out.ordering[j]);
    }
    const int n = charger_count(static_cast<int>(out.ordering.size()), cfg.penetration);
    for (int s = 0; s < n; ++s) ++out.counts[out.ordering[s]];
    return out;
}

int peak_hour(const grid::NetworkCase& net) {
    const int T = net.horizon();
    int best = 0;
    double best_total = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < T; ++t) {
        double total = 0.0;
        for (const auto& b : net.buses) total += b.p_kw[t];
        if (total > best_total) {
            best_total = total;
            best = t;
        }
    }
    return best;
}

LoadSet build_loads(const grid::NetworkCase& net, const EvAssignment& assignment, const EvConfig& cfg,
                    LoadMode mode) {
    cfg.check();
    if (assignment.counts.size() != net.buses.size()) {
        throw std::invalid_argument("charger assignment does not match the network");
    }
    LoadSet out;
    out.mode = mode;
    if (mode == LoadMode::Snapshot) {
        out.hours = {peak_hour(net)};
    } else {
        for (int t = 0; t < net.horizon(); ++t) out.hours.push_back(t);
    }
    const double tan_phi = std::tan(std::acos(cfg.power_factor));
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        const double ev_p = assignment.counts[i] * cfg.charger_kw;
        const double ev_q = ev_p * tan_phi;
        std::vector<double> p, q;
        for (int h : out.hours) {
            p.push_back(net.buses[i].p_kw[h] + ev_p);
            q.push_back(net.buses[i].q_kvar[h] + ev_q);
        }
        out.p_kw.push_back(std::move(p));
        out.q_kvar.push_back(std::move(q));
    }
    return out;
}

LoadSet scenario_loads(const grid::NetworkCase& net, const EvConfig& cfg, LoadMode mode) {
    return build_loads(net, allocate_chargers(net, cfg), cfg, mode);
}

const char* to_string(LoadMode mode) { return mode == LoadMode::Snapshot ? "snapshot" : "horizon"; }

ScenarioConfig parse_scenario(std::istream& in) {
    ScenarioConfig cfg;
    std::string line;
    int lineno = 0;
    auto number = [&](const std::string& v) {
        std::size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != v.size() || v.empty()) {
            throw std::invalid_argument(fmt::format("line {}: '{}' is not a number", lineno, v));
        }
        return d;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) continue;
        if (eq == std::string::npos) throw std::invalid_argument(fmt::format("line {}: expected key = value", lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "penetration") cfg.ev.penetration = number(value);
        else if (key == "charger_kw") cfg.ev.charger_kw = number(value);
        else if (key == "power_factor") cfg.ev.power_factor = number(value);
        else if (key == "seed") {
            const double s = number(value);
            if (s < 0 || s > 4294967295.0 || s != std::floor(s)) {
                throw std::invalid_argument(fmt::format("line {}: seed must be a 32-bit unsigned integer", lineno));
            }
            cfg.ev.seed = static_cast<std::uint32_t>(s);
        } else if (key == "mode") {
            if (value == "snapshot") cfg.mode = LoadMode::Snapshot;
            else if (value == "horizon") cfg.mode = LoadMode::Horizon;
            else throw std::invalid_argument(fmt::format("line {}: mode must be snapshot or horizon", lineno));
        } else {
            throw std::invalid_argument(fmt::format("line {}: unknown key '{}'", lineno, key));
        }
    }
    cfg.ev.check();
    return cfg;
}

ScenarioConfig parse_scenario_text(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

}  // namespace ddcp::scenario
