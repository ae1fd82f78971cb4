#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <boost/tokenizer.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ddcp/grid/io.hpp"

namespace ddcp::grid {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string trim(std::string s) {
    auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), sp));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), sp).base(), s.end());
    return s;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_csv(const std::string& line, const std::string& where) {
    using Sep = boost::escaped_list_separator<char>;
    std::vector<std::string> out;
    try {
        boost::tokenizer<Sep> tok(line, Sep('\\', ',', '"'));
        for (const auto& f : tok) out.push_back(trim(f));
    } catch (const boost::escaped_list_error& e) {
        throw ParseError(fmt::format("{}: {}", where, e.what()));
    }
    return out;
}

double to_double(const std::string& s, const std::string& where) {
    const std::string t = lower(s);
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || s.empty()) throw ParseError(fmt::format("{}: '{}' is not a number", where, s));
    return v;
}

int to_int(const std::string& s, const std::string& where) {
    int v = 0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || s.empty()) throw ParseError(fmt::format("{}: '{}' is not an integer", where, s));
    return v;
}

bool to_bool(const std::string& s, const std::string& where) {
    const std::string t = lower(s);
    if (t == "1" || t == "true" || t == "yes") return true;
    if (t == "0" || t == "false" || t == "no" || t.empty()) return false;
    throw ParseError(fmt::format("{}: '{}' is not a boolean", where, s));
}

BusKind to_kind(const std::string& s, const std::string& where) {
    const std::string t = lower(s);
    if (t == "substation" || t == "slack" || t == "source") return BusKind::Substation;
    if (t == "load" || t == "pq" || t.empty()) return BusKind::Load;
    throw ParseError(fmt::format("{}: unknown bus kind '{}'", where, s));
}

std::string fmt_num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::pair<int, std::vector<std::string>>> rows;  // (line, fields)

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        return -1;
    }
};

int require(const Table& t, const std::string& name, const std::string& source) {
    const int c = t.column(name);
    if (c < 0) throw ParseError(fmt::format("{}: missing column '{}'", source, name));
    return c;
}

// Columns named <prefix>_0.. in order, or a single <prefix> column.
std::vector<int> series_columns(const Table& t, const std::string& prefix, const std::string& source) {
    std::vector<int> cols;
    for (int h = 0;; ++h) {
        const int c = t.column(fmt::format("{}_{}", prefix, h));
        if (c < 0) break;
        cols.push_back(c);
    }
    if (cols.empty()) {
        const int c = t.column(prefix);
        if (c >= 0) cols.push_back(c);
    }
    if (cols.empty()) throw ParseError(fmt::format("{}: missing column '{}_0' or '{}'", source, prefix, prefix));
    return cols;
}

void apply_setting(NetworkCase& net, const std::string& key, const std::string& value, const std::string& where) {
    const std::string k = lower(key);
    if (k == "base_kv") net.base_kv = to_double(value, where);
    else if (k == "base_mva") net.base_mva = to_double(value, where);
    else if (k == "v_min") net.v_min = to_double(value, where);
    else if (k == "v_max") net.v_max = to_double(value, where);
    else if (k == "substation_v") {
        net.substation_v.clear();
        std::stringstream ss(value);
        std::string part;
        while (std::getline(ss, part, ';')) net.substation_v.push_back(to_double(trim(part), where));
    } else {
        throw ParseError(fmt::format("{}: unknown setting '{}'", where, key));
    }
}

void read_buses(NetworkCase& net, const Table& t, const std::string& source) {
    const int cid = require(t, "id", source);
    const int ckind = require(t, "kind", source);
    const int ccust = t.column("customers");
    const int cbess = t.column("bess_candidate");
    const auto pcols = series_columns(t, "p_kw", source);
    const auto qcols = series_columns(t, "q_kvar", source);
    if (pcols.size() != qcols.size()) {
        throw ParseError(fmt::format("{}: {} active and {} reactive load columns", source, pcols.size(), qcols.size()));
    }
    for (const auto& [line, f] : t.rows) {
        const std::string where = fmt::format("{}:{}", source, line);
        if (f.size() != t.header.size()) {
            throw ParseError(fmt::format("{}: expected {} fields, found {}", where, t.header.size(), f.size()));
        }
        BusSpec b;
        b.id = BusId{to_int(f[cid], where)};
        b.kind = to_kind(f[ckind], where);
        b.customers = ccust >= 0 ? to_int(f[ccust], where) : 0;
        b.bess_candidate = cbess >= 0 && to_bool(f[cbess], where);
        for (int c : pcols) b.p_kw.push_back(to_double(f[c], where));
        for (int c : qcols) b.q_kvar.push_back(to_double(f[c], where));
        net.buses.push_back(std::move(b));
    }
}

void read_branches(NetworkCase& net, const Table& t, const std::string& source) {
    const int cf = require(t, "from", source), ct = require(t, "to", source);
    const int cr = require(t, "r_ohm", source), cx = require(t, "x_ohm", source);
    const int ca = require(t, "ampacity_a", source), cl = require(t, "length_m", source);
    const int cb = t.column("is_breaker"), cc = t.column("cable_type");
    for (const auto& [line, f] : t.rows) {
        const std::string where = fmt::format("{}:{}", source, line);
        if (f.size() != t.header.size()) {
            throw ParseError(fmt::format("{}: expected {} fields, found {}", where, t.header.size(), f.size()));
        }
        BranchSpec br;
        br.from = BusId{to_int(f[cf], where)};
        br.to = BusId{to_int(f[ct], where)};
        br.r_ohm = to_double(f[cr], where);
        br.x_ohm = to_double(f[cx], where);
        br.ampacity_a = to_double(f[ca], where);
        br.length_m = to_double(f[cl], where);
        br.is_breaker = cb >= 0 && to_bool(f[cb], where);
        br.cable_type = cc >= 0 ? f[cc] : std::string{};
        net.branches.push_back(std::move(br));
    }
}

// Reads "key,value" rows or a table with a header, skipping blanks and comments.
std::map<std::string, Table> read_sections(std::istream& in, const std::string& source, bool sectioned) {
    std::map<std::string, Table> out;
    std::string section = sectioned ? "" : "table";
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (sectioned && t.front() == '[') {
            if (t.back() != ']') throw ParseError(fmt::format("{}:{}: malformed section header", source, lineno));
            section = lower(trim(t.substr(1, t.size() - 2)));
            if (out.count(section)) throw ParseError(fmt::format("{}:{}: repeated section [{}]", source, lineno, section));
            out[section];
            continue;
        }
        if (section.empty()) throw ParseError(fmt::format("{}:{}: data before the first section", source, lineno));
        auto fields = split_csv(t, fmt::format("{}:{}", source, lineno));
        Table& tab = out[section];
        if (section != "settings" && tab.header.empty()) {
            for (auto& f : fields) f = lower(f);
            tab.header = std::move(fields);
        } else {
            tab.rows.emplace_back(lineno, std::move(fields));
        }
    }
    return out;
}

void read_settings(NetworkCase& net, const Table& t, const std::string& source) {
    for (const auto& [line, f] : t.rows) {
        const std::string where = fmt::format("{}:{}", source, line);
        if (f.size() != 2) throw ParseError(fmt::format("{}: settings rows are key,value", where));
        apply_setting(net, f[0], f[1], where);
    }
}

std::ifstream open(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ParseError(fmt::format("cannot open '{}'", p.string()));
    return in;
}

}  // namespace

NetworkCase parse_network_csv(std::istream& in, const std::string& source) {
    auto sections = read_sections(in, source, true);
    for (const auto& [name, _] : sections) {
        if (name != "settings" && name != "buses" && name != "branches") {
            throw ParseError(fmt::format("{}: unknown section [{}]", source, name));
        }
    }
    if (!sections.count("buses") || !sections.count("branches")) {
        throw ParseError(fmt::format("{}: needs [buses] and [branches] sections", source));
    }
    NetworkCase net;
    if (sections.count("settings")) read_settings(net, sections["settings"], source);
    read_buses(net, sections["buses"], source);
    read_branches(net, sections["branches"], source);
    validate(net);
    return net;
}

NetworkCase parse_network_json(const std::string& text, const std::string& source) {
    NetworkCase net;
    try {
        const json j = json::parse(text);
        if (j.contains("settings")) {
            const auto& s = j.at("settings");
            net.base_kv = s.value("base_kv", net.base_kv);
            net.base_mva = s.value("base_mva", net.base_mva);
            net.v_min = s.value("v_min", net.v_min);
            net.v_max = s.value("v_max", net.v_max);
            if (s.contains("substation_v")) {
                const auto& v = s.at("substation_v");
                net.substation_v = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
            }
        }
        for (const auto& b : j.at("buses")) {
            BusSpec bus;
            bus.id = BusId{b.at("id").get<int>()};
            bus.kind = to_kind(b.value("kind", std::string{"load"}), source);
            bus.customers = b.value("customers", 0);
            bus.p_kw = b.at("p_kw").get<std::vector<double>>();
            bus.q_kvar = b.at("q_kvar").get<std::vector<double>>();
            bus.bess_candidate = b.value("bess_candidate", false);
            net.buses.push_back(std::move(bus));
        }
        for (const auto& b : j.at("branches")) {
            BranchSpec br;
            br.from = BusId{b.at("from").get<int>()};
            br.to = BusId{b.at("to").get<int>()};
            br.r_ohm = b.at("r_ohm").get<double>();
            br.x_ohm = b.at("x_ohm").get<double>();
            br.ampacity_a = b.at("ampacity_a").get<double>();
            br.length_m = b.at("length_m").get<double>();
            br.is_breaker = b.value("is_breaker", false);
            br.cable_type = b.value("cable_type", std::string{});
            net.branches.push_back(std::move(br));
        }
    } catch (const json::exception& e) {
        throw ParseError(fmt::format("{}: {}", source, e.what()));
    }
    validate(net);
    return net;
}

NetworkCase load_network(const fs::path& path, NetworkFormat format) {
    if (!fs::exists(path)) throw ParseError(fmt::format("'{}' does not exist", path.string()));
    if (fs::is_directory(path)) {
        NetworkCase net;
        const std::string src = path.string();
        if (fs::exists(path / "settings.csv")) {
            auto in = open(path / "settings.csv");
            auto t = read_sections(in, (path / "settings.csv").string(), false);
            Table& tab = t["table"];
            // The first row was taken as a header; settings files have none.
            if (!tab.header.empty()) tab.rows.insert(tab.rows.begin(), {0, tab.header});
            read_settings(net, tab, (path / "settings.csv").string());
        }
        {
            auto in = open(path / "buses.csv");
            auto t = read_sections(in, (path / "buses.csv").string(), false);
            read_buses(net, t["table"], (path / "buses.csv").string());
        }
        {
            auto in = open(path / "branches.csv");
            auto t = read_sections(in, (path / "branches.csv").string(), false);
            read_branches(net, t["table"], (path / "branches.csv").string());
        }
        validate(net);
        return net;
    }
    if (format == NetworkFormat::Auto) format = lower(path.extension().string()) == ".json" ? NetworkFormat::Json : NetworkFormat::Csv;
    auto in = open(path);
    if (format == NetworkFormat::Json) {
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_network_json(ss.str(), path.string());
    }
    return parse_network_csv(in, path.string());
}

void write_network_csv(std::ostream& out, const NetworkCase& net) {
    out << "[settings]\n";
    out << "base_kv," << fmt_num(net.base_kv) << "\n";
    out << "base_mva," << fmt_num(net.base_mva) << "\n";
    out << "v_min," << fmt_num(net.v_min) << "\n";
    out << "v_max," << fmt_num(net.v_max) << "\n";
    out << "substation_v,";
    for (std::size_t i = 0; i < net.substation_v.size(); ++i) out << (i ? ";" : "") << fmt_num(net.substation_v[i]);
    out << "\n\n[buses]\nid,kind,customers";
    const int T = net.horizon();
    for (int t = 0; t < T; ++t) out << ",p_kw_" << t;
    for (int t = 0; t < T; ++t) out << ",q_kvar_" << t;
    out << ",bess_candidate\n";
    for (const auto& b : net.buses) {
        out << raw(b.id) << "," << (b.kind == BusKind::Substation ? "substation" : "load") << "," << b.customers;
        for (double v : b.p_kw) out << "," << fmt_num(v);
        for (double v : b.q_kvar) out << "," << fmt_num(v);
        out << "," << (b.bess_candidate ? 1 : 0) << "\n";
    }
    out << "\n[branches]\nfrom,to,r_ohm,x_ohm,ampacity_a,length_m,is_breaker,cable_type\n";
    for (const auto& br : net.branches) {
        out << raw(br.from) << "," << raw(br.to) << "," << fmt_num(br.r_ohm) << "," << fmt_num(br.x_ohm) << ","
            << fmt_num(br.ampacity_a) << "," << fmt_num(br.length_m) << "," << (br.is_breaker ? 1 : 0) << ","
            << br.cable_type << "\n";
    }
}

std::string network_to_json(const NetworkCase& net) {
    json j;
    j["settings"] = {{"base_kv", net.base_kv},
                     {"base_mva", net.base_mva},
                     {"v_min", net.v_min},
                     {"v_max", net.v_max},
                     {"substation_v", net.substation_v}};
    j["buses"] = json::array();
    for (const auto& b : net.buses) {
        j["buses"].push_back({{"id", raw(b.id)},
                              {"kind", b.kind == BusKind::Substation ? "substation" : "load"},
                              {"customers", b.customers},
                              {"p_kw", b.p_kw},
                              {"q_kvar", b.q_kvar},
                              {"bess_candidate", b.bess_candidate}});
    }
    j["branches"] = json::array();
    for (const auto& br : net.branches) {
        j["branches"].push_back({{"from", raw(br.from)},
                                 {"to", raw(br.to)},
                                 {"r_ohm", br.r_ohm},
                                 {"x_ohm", br.x_ohm},
                                 {"ampacity_a", br.ampacity_a},
                                 {"length_m", br.length_m},
                                 {"is_breaker", br.is_breaker},
                                 {"cable_type", br.cable_type}});
    }
    return j.dump(2);
}

CableCatalog parse_catalog_csv(std::istream& in, const std::string& source) {
    auto sections = read_sections(in, source, false);
    const Table& t = sections["table"];
    const int cn = require(t, "name", source), ca = require(t, "ampacity_a", source);
    const int cr = require(t, "r_ohm_per_km", source), cx = require(t, "x_ohm_per_km", source);
    const int cc = require(t, "cost_per_m", source), cb = require(t, "is_breaker", source);
    const int cf = require(t, "fixed_cost", source);
    CableCatalog out;
    for (const auto& [line, f] : t.rows) {
        const std::string where = fmt::format("{}:{}", source, line);
        if (f.size() != t.header.size()) {
            throw ParseError(fmt::format("{}: expected {} fields, found {}", where, t.header.size(), f.size()));
        }
        out.push_back(CableType{f[cn], to_double(f[ca], where), to_double(f[cr], where), to_double(f[cx], where),
                                to_double(f[cc], where), to_bool(f[cb], where), to_double(f[cf], where)});
    }
    validate_catalog(out);
    return out;
}

CableCatalog load_catalog(const fs::path& path) {
    auto in = open(path);
    return parse_catalog_csv(in, path.string());
}

void write_catalog_csv(std::ostream& out, const CableCatalog& catalog) {
    out << "name,ampacity_a,r_ohm_per_km,x_ohm_per_km,cost_per_m,is_breaker,fixed_cost\n";
    for (const auto& c : catalog) {
        out << c.name << "," << fmt_num(c.ampacity_a) << "," << fmt_num(c.r_ohm_per_km) << ","
            << fmt_num(c.x_ohm_per_km) << "," << fmt_num(c.cost_per_m) << "," << (c.is_breaker ? 1 : 0) << ","
            << fmt_num(c.fixed_cost) << "\n";
    }
}

}  // namespace ddcp::grid
