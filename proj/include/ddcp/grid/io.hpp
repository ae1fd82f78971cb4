#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ddcp/grid/network.hpp"

namespace ddcp::grid {

enum class NetworkFormat { Auto, Csv, Json };

// Sectioned CSV, '#' starts a comment line:
//   [settings]            key,value rows: base_kv, base_mva, v_min, v_max,
//                         substation_v (one value or ';'-separated per hour)
//   [buses]               header: id,kind,customers,p_kw_0..p_kw_{T-1},
//                         q_kvar_0..q_kvar_{T-1},bess_candidate
//   [branches]            header: from,to,r_ohm,x_ohm,ampacity_a,length_m,
//                         is_breaker,cable_type
// A directory holding buses.csv, branches.csv and optionally settings.csv
// (key,value) is accepted as well. `kind` is "substation" or "load"; a single
// p_kw / q_kvar column means a one-hour horizon. Booleans: 0/1/true/false.
NetworkCase load_network(const std::filesystem::path& path, NetworkFormat format = NetworkFormat::Auto);
NetworkCase parse_network_csv(std::istream& in, const std::string& source = "<stream>");
NetworkCase parse_network_json(const std::string& text, const std::string& source = "<string>");

void write_network_csv(std::ostream& out, const NetworkCase& net);
std::string network_to_json(const NetworkCase& net);

// cables.csv header: name,ampacity_a,r_ohm_per_km,x_ohm_per_km,cost_per_m,is_breaker,fixed_cost
CableCatalog load_catalog(const std::filesystem::path& path);
CableCatalog parse_catalog_csv(std::istream& in, const std::string& source = "<stream>");
void write_catalog_csv(std::ostream& out, const CableCatalog& catalog);

}  // namespace ddcp::grid
