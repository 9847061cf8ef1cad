#include "rpfield/report.hpp"

#include <charconv>
#include <cmath>
#include <json.hpp>

#include "rpfield/random.hpp"

namespace rpf {

using nlohmann::ordered_json;

namespace {

// JSON has no infinities; they are written as strings so that no value is lost silently.
ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

ordered_json parameters_json(const Parameters& ps) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : ps) {
    if (const auto* d = std::get_if<double>(&v)) j[k] = number(*d);
    else if (const auto* i = std::get_if<std::int64_t>(&v)) j[k] = *i;
    else j[k] = std::get<std::string>(v);
  }
  return j;
}

ordered_json payload_json(const Report& r) {
  ordered_json results = ordered_json::array();
  for (const auto& item : r.results) {
    ordered_json j{{"name", item.name}, {"value", number(item.value)}, {"exact", item.exact}};
    if (!item.exact) j["error"] = number(item.error);
    if (item.samples > 0) {
      j["samples"] = item.samples;
      j["ess"] = number(item.ess);
    }
    if (!item.parameters.empty()) j["parameters"] = parameters_json(item.parameters);
    results.push_back(j);
  }
  ordered_json verdicts = ordered_json::array();
  for (const auto& v : r.verdicts)
    verdicts.push_back(ordered_json{{"check", v.check},
                                    {"parameters", parameters_json(v.parameters)},
                                    {"statistic", number(v.statistic)},
                                    {"relation", v.relation},
                                    {"threshold", number(v.threshold)},
                                    {"pass", v.pass}});
  ordered_json tables = ordered_json::array();
  for (const auto& t : r.tables) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : t.rows) {
      ordered_json jr = ordered_json::array();
      for (double x : row) jr.push_back(number(x));
      rows.push_back(jr);
    }
    tables.push_back(ordered_json{{"name", t.name}, {"columns", t.columns}, {"rows", rows}});
  }
  return ordered_json{{"results", results}, {"verdicts", verdicts}, {"tables", tables}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

bool Report::pass() const {
  for (const auto& v : verdicts)
    if (!v.pass) return false;
  return true;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string report_to_json(const Report& r) {
  ordered_json j;
  j["schema"] = kReportSchema;
  j["command"] = r.command;
  ordered_json config = ordered_json::parse(r.config.empty() ? "{}" : r.config);
  j["config"] = config;
  const auto payload = payload_json(r);
  j["results"] = payload["results"];
  j["verdicts"] = payload["verdicts"];
  j["tables"] = payload["tables"];
  j["pass"] = r.pass();
  j["files"] = r.files;
  ordered_json chains = ordered_json::array();
  for (const auto& c : r.chains)
    chains.push_back(ordered_json{{"name", c.name}, {"seed", c.seed}, {"derivation", c.derivation}});
  j["provenance"] = ordered_json{{"root_seed", r.root_seed},
                                 {"seed_derivation", std::string(seed_derivation_scheme())},
                                 {"chains", chains},
                                 {"started", r.started},
                                 {"wall_clock_seconds", r.wall_clock_seconds},
                                 {"threads", r.threads}};
  return j.dump(2) + "\n";
}

std::string report_payload(const Report& r) { return payload_json(r).dump(); }

std::string table_to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += csv_field(t.columns[i]);
  }
  out += "\r\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += "\r\n";
  }
  return out;
}

}  // namespace rpf
