#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oasf/anova.hpp"
#include "oasf/design.hpp"
#include "oasf/experiment.hpp"
#include "oasf/orthogonal_array.hpp"
#include "oasf/stratify.hpp"

namespace oasf {

using json = nlohmann::json;

inline json oa_summary_json(const OrthogonalArray& oa) {
  return json{{"runs", oa.runs},       {"factors", oa.factors}, {"levels", oa.levels},
              {"strength", oa.strength}, {"index", oa.index},     {"defect_free", oa.defect_free}};
}

inline json to_json(const CertificationWitness& w) {
  json j;
  switch (w.kind) {
    case WitnessKind::unbalanced_tuple:
      j["kind"] = "unbalanced_tuple";
      j["columns"] = w.columns;
      j["levels"] = w.levels;
      j["observed"] = w.observed;
      j["expected"] = w.expected;
      break;
    case WitnessKind::divisibility:
      j["kind"] = "divisibility";
      j["runs"] = w.observed;
      break;
    case WitnessKind::row_pair:
      j["kind"] = "row_pair";
      j["row_a"] = w.row_a;
      j["row_b"] = w.row_b;
      j["agreeing_columns"] = w.observed;
      j["max_allowed"] = w.expected;
      break;
  }
  return j;
}

inline json to_json(const CertificationResult& r) {
  json j;
  j["is_oa"] = r.is_oa;
  j["achieved_strength"] = r.achieved_strength;
  j["index_at_strength"] = r.index_at_strength;
  if (r.coincidence_defect_free)
    j["coincidence_defect_free"] = *r.coincidence_defect_free;
  else
    j["coincidence_defect_free"] = nullptr;
  j["witness"] = r.witness ? to_json(*r.witness) : json(nullptr);
  return j;
}

// {u, z, expected, min, max, violations:[{cell, count}]}; u is 1-based in
// the external schema.
inline json to_json(const CellCountReport& report) {
  json j;
  std::vector<int> u;
  u.reserve(report.columns.size());
  for (int c : report.columns) u.push_back(c + 1);
  j["u"] = u;
  j["z"] = report.grain;
  j["total"] = report.total;
  j["expected"] = report.expected;
  j["min"] = report.min_count;
  j["max"] = report.max_count;
  j["uniform"] = report.uniform;
  json violations = json::array();
  for (const auto& v : report.violations) violations.push_back(json{{"cell", v.cell}, {"count", v.count}});
  j["violations"] = violations;
  if (report.missing_cells) j["missing_cells"] = report.missing_cells;
  return j;
}

inline json design_metadata_json(const Design& d) {
  json j;
  j["kind"] = to_string(d.kind);
  j["runs"] = d.runs;
  j["dims"] = d.dims;
  j["seed"] = d.seed;
  j["stream_id"] = d.stream_id;
  j["n_levels"] = d.n_levels;
  j["oa"] = d.source ? oa_summary_json(*d.source) : json(nullptr);
  return j;
}

// {K, h, m, mu, sigma2, effects:[{u, table_shape}]}; tables themselves go
// to companion CSVs via write_effect_tables.
inline json to_json(const AnovaModel& model) {
  json j;
  j["integrand"] = model.integrand.name;
  j["K"] = model.dims;
  j["h"] = model.strength;
  j["m"] = model.resolution;
  j["mu"] = model.mean;
  j["sigma2"] = model.sigma2;
  j["total_variance"] = model.total_variance;
  json effects = json::array();
  for (const auto& table : model.effects) {
    std::vector<int> u;
    for (int c : table.columns) u.push_back(c + 1);
    std::vector<int> shape(table.columns.size(), model.resolution);
    effects.push_back(json{{"u", u}, {"table_shape", shape}});
  }
  j["effects"] = effects;
  return j;
}

inline json to_json(const MomentCheck& c) {
  return json{{"order", c.order},         {"value", c.value}, {"target", c.target},
              {"threshold", c.threshold}, {"checked", c.checked}, {"pass", c.pass}};
}

inline json to_json(const VarianceTable& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    json r{{"sampler", row.sampler}, {"n_times_var", row.n_times_var}};
    r["predicted"] = row.predicted ? json(*row.predicted) : json(nullptr);
    rows.push_back(r);
  }
  return json{{"replicates", table.replicates}, {"seed", table.seed}, {"runs", table.runs}, {"rows", rows}};
}

inline json to_json(const ExperimentReport& report, const std::vector<MomentCheck>& checks,
                    const std::optional<VarianceTable>& variance = std::nullopt) {
  json j;
  j["design"] = json{{"kind", to_string(report.kind)},
                     {"oa", report.source ? oa_summary_json(*report.source) : json(nullptr)},
                     {"runs", report.runs_per_design}};
  j["R"] = report.replicates;
  j["seed"] = report.seed;
  j["mu_ref"] = report.mu_ref;
  j["mean"] = report.sample_mean;
  j["var"] = report.sample_variance;
  j["degenerate"] = report.degenerate;
  j["standardized_moments"] = report.standardized_moments;
  j["histogram"] =
      json{{"lo", report.histogram.lo}, {"hi", report.histogram.hi}, {"bins", report.histogram.bins}};
  json diag;
  for (const auto& c : checks) {
    if (c.order == 3) diag["skew_pass"] = !c.checked || c.pass;
    if (c.order == 4) diag["kurt_pass"] = !c.checked || c.pass;
  }
  json moments = json::array();
  for (const auto& c : checks) moments.push_back(to_json(c));
  diag["moments"] = moments;
  diag["variance_table"] = variance ? to_json(*variance) : json(nullptr);
  j["diagnostics"] = diag;
  return j;
}

// Fully serializable run configuration; a config round-trips through its
// file form losslessly.
struct RunConfig {
  std::string command;
  std::string oa_source;    // "builtin:table1" | "builtin:rao_hamming:P:K" | file path
  std::string design_kind;  // "roa" | "u-design" | "lhs"
  std::string integrand;
  int dims = 0;
  std::uint64_t seed = 0;
  std::uint64_t replicates = 20000;
  int runs = 0;
  int strength = 0;
  int resolution = 0;
  int grain = 0;
  std::vector<int> columns;  // 1-based audit columns
  std::string design_path;
  std::string out_path;
  std::string hist_path;
  std::string meta_path;
  std::string tables_dir;
  int threads = 1;
  double mu_ref = std::numeric_limits<double>::quiet_NaN();
  MomentThresholds thresholds;
  bool variance_table = false;

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    auto nan_eq = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    return a.command == b.command && a.oa_source == b.oa_source && a.design_kind == b.design_kind &&
           a.integrand == b.integrand && a.dims == b.dims && a.seed == b.seed &&
           a.replicates == b.replicates && a.runs == b.runs && a.strength == b.strength &&
           a.resolution == b.resolution && a.grain == b.grain && a.columns == b.columns &&
           a.design_path == b.design_path && a.out_path == b.out_path && a.hist_path == b.hist_path &&
           a.meta_path == b.meta_path && a.tables_dir == b.tables_dir && a.threads == b.threads &&
           nan_eq(a.mu_ref, b.mu_ref) && a.thresholds.skew == b.thresholds.skew &&
           a.thresholds.excess_kurtosis == b.thresholds.excess_kurtosis &&
           a.thresholds.fifth == b.thresholds.fifth && a.thresholds.sixth == b.thresholds.sixth &&
           a.thresholds.reference_replicates == b.thresholds.reference_replicates &&
           a.variance_table == b.variance_table;
  }
};

inline json to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["oa_source"] = c.oa_source;
  j["design_kind"] = c.design_kind;
  j["integrand"] = c.integrand;
  j["dims"] = c.dims;
  j["seed"] = c.seed;
  j["replicates"] = c.replicates;
  j["runs"] = c.runs;
  j["strength"] = c.strength;
  j["resolution"] = c.resolution;
  j["grain"] = c.grain;
  j["columns"] = c.columns;
  j["design_path"] = c.design_path;
  j["out_path"] = c.out_path;
  j["hist_path"] = c.hist_path;
  j["meta_path"] = c.meta_path;
  j["tables_dir"] = c.tables_dir;
  j["threads"] = c.threads;
  if (std::isnan(c.mu_ref))
    j["mu_ref"] = nullptr;
  else
    j["mu_ref"] = c.mu_ref;
  j["thresholds"] = json{{"skew", c.thresholds.skew},
                         {"excess_kurtosis", c.thresholds.excess_kurtosis},
                         {"fifth", c.thresholds.fifth},
                         {"sixth", c.thresholds.sixth},
                         {"reference_replicates", c.thresholds.reference_replicates}};
  j["variance_table"] = c.variance_table;
  return j;
}

inline RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  c.command = j.value("command", "");
  c.oa_source = j.value("oa_source", "");
  c.design_kind = j.value("design_kind", "");
  c.integrand = j.value("integrand", "");
  c.dims = j.value("dims", 0);
  c.seed = j.value("seed", std::uint64_t{0});
  c.replicates = j.value("replicates", std::uint64_t{20000});
  c.runs = j.value("runs", 0);
  c.strength = j.value("strength", 0);
  c.resolution = j.value("resolution", 0);
  c.grain = j.value("grain", 0);
  c.columns = j.value("columns", std::vector<int>{});
  c.design_path = j.value("design_path", "");
  c.out_path = j.value("out_path", "");
  c.hist_path = j.value("hist_path", "");
  c.meta_path = j.value("meta_path", "");
  c.tables_dir = j.value("tables_dir", "");
  c.threads = j.value("threads", 1);
  if (j.contains("mu_ref") && !j["mu_ref"].is_null()) c.mu_ref = j["mu_ref"].get<double>();
  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    c.thresholds.skew = t.value("skew", c.thresholds.skew);
    c.thresholds.excess_kurtosis = t.value("excess_kurtosis", c.thresholds.excess_kurtosis);
    c.thresholds.fifth = t.value("fifth", c.thresholds.fifth);
    c.thresholds.sixth = t.value("sixth", c.thresholds.sixth);
    c.thresholds.reference_replicates =
        t.value("reference_replicates", c.thresholds.reference_replicates);
  }
  c.variance_table = j.value("variance_table", false);
  return c;
}

// Companion CSVs for the tabulated effects: one file per subset u, named
// effect_<u...>.csv with the flattened table (last column fastest).
inline void write_effect_tables(const AnovaModel& model, const std::string& directory) {
  std::filesystem::create_directories(directory);
  for (const auto& table : model.effects) {
    std::string name = directory + "/effect";
    for (int c : table.columns) name += "_" + std::to_string(c + 1);
    name += ".csv";
    std::ofstream out(name);
    if (!out) throw std::runtime_error("write_effect_tables: cannot open " + name);
    out << "flat_index,value\n";
    char buf[40];
    for (std::size_t i = 0; i < table.values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", table.values[i]);
      out << i << ',' << buf << '\n';
    }
  }
}

}  // namespace oasf
