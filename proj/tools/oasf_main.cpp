// Command-line surface for constructing, validating and analyzing
// orthogonal-array-based space-filling designs.
//
// Exit codes: 0 success, 2 semantic failure (certification or diagnostic
// failed), 3 input error (bad flags, unparsable files).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "oasf/design.hpp"
#include "oasf/experiment.hpp"
#include "oasf/integrands.hpp"
#include "oasf/json_io.hpp"
#include "oasf/orthogonal_array.hpp"
#include "oasf/stratify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSemanticFailure = 2;
constexpr int kExitInputError = 3;

struct BuiltinSpec {
  bool is_builtin = false;
  std::string name;
  int p = 0, k = 0;
};

BuiltinSpec parse_builtin(const std::string& source) {
  BuiltinSpec spec;
  std::string body = source;
  if (body.rfind("builtin:", 0) == 0) body = body.substr(8);
  if (body == "table1") {
    spec.is_builtin = true;
    spec.name = "table1";
    return spec;
  }
  if (body.rfind("rao_hamming:", 0) == 0) {
    std::istringstream ss(body.substr(12));
    char colon = 0;
    if (ss >> spec.p >> colon >> spec.k && colon == ':') {
      spec.is_builtin = true;
      spec.name = "rao_hamming";
      return spec;
    }
    throw std::invalid_argument("bad builtin spec '" + source + "', expected rao_hamming:P:K");
  }
  return spec;  // not a builtin; treat as file path
}

// Loads and certifies an orthogonal array from a builtin name or file.
oasf::Certification load_oa(const std::string& source) {
  const BuiltinSpec spec = parse_builtin(source);
  if (spec.is_builtin) {
    oasf::Certification cert;
    const oasf::OrthogonalArray oa =
        spec.name == "table1" ? oasf::generate_table1() : oasf::generate_rao_hamming(spec.p, spec.k);
    cert.result.is_oa = true;
    cert.result.achieved_strength = oa.strength;
    cert.result.index_at_strength = oa.index;
    cert.result.coincidence_defect_free = oa.defect_free;
    cert.array = oa;
    return cert;
  }
  std::ifstream in(source);
  if (!in) throw std::invalid_argument("cannot open orthogonal array file: " + source);
  const oasf::OaCandidate cand = oasf::parse_oa_text(in);
  return oasf::certify_orthogonal_array(cand.entries, cand.runs, cand.factors, cand.levels,
                                        cand.strength);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << text;
}

std::uint64_t resolve_seed(bool flag_given, std::uint64_t flag_value, bool config_has,
                           std::uint64_t config_value) {
  if (flag_given) return flag_value;
  if (config_has) return config_value;
  if (const char* env = std::getenv("OA_SPACEFILL_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

int cmd_validate(const oasf::RunConfig& config) {
  const BuiltinSpec spec = parse_builtin(config.oa_source);
  oasf::Certification cert;
  if (spec.is_builtin) {
    cert = load_oa(config.oa_source);
  } else {
    std::ifstream in(config.oa_source);
    if (!in) throw std::invalid_argument("cannot open orthogonal array file: " + config.oa_source);
    const oasf::OaCandidate cand = oasf::parse_oa_text(in);
    cert = oasf::certify_orthogonal_array(cand.entries, cand.runs, cand.factors, cand.levels,
                                          cand.strength);
  }
  emit(oasf::to_json(cert.result).dump(2) + "\n", config.out_path);
  const bool pass = cert.result.is_oa && cert.result.coincidence_defect_free.value_or(false);
  return pass ? kExitOk : kExitSemanticFailure;
}

int cmd_generate(const oasf::RunConfig& config) {
  const oasf::RandomStream stream(config.seed);
  oasf::Design design;
  const auto kind = oasf::design_kind_from_string(config.design_kind);
  if (kind == oasf::DesignKind::latin_hypercube && config.oa_source.empty()) {
    if (config.runs <= 0 || config.dims <= 0)
      throw std::invalid_argument("generate --kind lhs needs --runs and --dims (or an OA source)");
    design = oasf::build_latin_hypercube(config.runs, config.dims, stream);
  } else {
    if (config.oa_source.empty()) throw std::invalid_argument("generate: missing OA source");
    const auto cert = load_oa(config.oa_source);
    if (!cert.array || !cert.array->defect_free) {
      std::cerr << "error: source array failed certification\n";
      return kExitSemanticFailure;
    }
    switch (kind) {
      case oasf::DesignKind::latin_hypercube:
        design = oasf::build_latin_hypercube(cert.array->runs, cert.array->factors, stream);
        break;
      case oasf::DesignKind::randomized_oa:
        design = oasf::build_randomized_oa(*cert.array, stream);
        break;
      case oasf::DesignKind::u_design:
        design = oasf::build_u_design(*cert.array, stream);
        break;
    }
  }
  std::ostringstream csv;
  oasf::write_design_csv(design, csv);
  emit(csv.str(), config.out_path);
  if (!config.meta_path.empty())
    emit(oasf::design_metadata_json(design).dump(2) + "\n", config.meta_path);
  return kExitOk;
}

int cmd_audit(const oasf::RunConfig& config) {
  oasf::Design design;
  if (config.design_path.empty() || config.design_path == "-") {
    design = oasf::read_design_csv(std::cin);
  } else {
    std::ifstream in(config.design_path);
    if (!in) throw std::invalid_argument("cannot open design file: " + config.design_path);
    design = oasf::read_design_csv(in);
  }
  if (config.columns.empty()) throw std::invalid_argument("audit: need --u columns");
  if (config.grain < 1) throw std::invalid_argument("audit: need --z grain >= 1");
  std::vector<int> columns;
  for (int c : config.columns) columns.push_back(c - 1);  // external columns are 1-based
  const auto report = oasf::audit_cells(design, columns, config.grain);
  emit(oasf::to_json(report).dump(2) + "\n", config.out_path);
  const bool violated = !report.violations.empty() || report.missing_cells > 0;
  return violated ? kExitSemanticFailure : kExitOk;
}

int cmd_anova(const oasf::RunConfig& config) {
  const oasf::Integrand f = oasf::make_integrand(config.integrand, config.dims);
  oasf::AnovaOptions opt;
  opt.threads = config.threads;
  const oasf::AnovaModel model = oasf::decompose(f, config.strength, config.resolution, opt);
  emit(oasf::to_json(model).dump(2) + "\n", config.out_path);
  if (!config.tables_dir.empty()) oasf::write_effect_tables(model, config.tables_dir);
  return kExitOk;
}

int cmd_clt(const oasf::RunConfig& config) {
  const auto cert = load_oa(config.oa_source);
  if (!cert.array || !cert.array->defect_free) {
    std::cerr << "error: source array failed certification\n";
    return kExitSemanticFailure;
  }
  const oasf::Integrand f = oasf::make_integrand(config.integrand, config.dims);
  double mu_ref = config.mu_ref;
  if (std::isnan(mu_ref)) {
    if (!f.reference_mean)
      throw std::invalid_argument("clt: integrand '" + f.name + "' has no reference mean; pass --mu-ref");
    mu_ref = *f.reference_mean;
  }
  oasf::ExperimentOptions opt;
  opt.threads = config.threads;
  opt.keep_samples = false;
  const auto kind = oasf::design_kind_from_string(config.design_kind);
  const auto report =
      oasf::run_clt_experiment(f, *cert.array, kind, config.replicates, config.seed, mu_ref, opt);
  const auto checks = oasf::moment_diagnostics(report, config.thresholds);

  std::optional<oasf::VarianceTable> variance;
  if (config.variance_table) {
    if (config.resolution < 2)
      throw std::invalid_argument("clt --variance-table needs --m for the ANOVA predictions");
    variance = oasf::variance_comparison(f, *cert.array, config.replicates, config.seed,
                                         config.resolution, opt);
  }

  emit(oasf::to_json(report, checks, variance).dump(2) + "\n", config.out_path);
  if (!config.hist_path.empty()) {
    std::ostringstream csv;
    oasf::write_histogram_csv(report.histogram, csv);
    emit(csv.str(), config.hist_path);
  }
  return oasf::all_pass(checks) ? kExitOk : kExitSemanticFailure;
}

}  // namespace

int main(int argc, char** argv) {
  // --config supplies defaults; explicit flags override it.
  oasf::RunConfig config;
  bool config_has_seed = false;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) {
        std::cerr << "error: cannot open config file " << argv[i + 1] << "\n";
        return kExitInputError;
      }
      try {
        oasf::json j = oasf::json::parse(in);
        config = oasf::run_config_from_json(j);
        config_has_seed = j.contains("seed");
      } catch (const std::exception& e) {
        std::cerr << "error: bad config file: " << e.what() << "\n";
        return kExitInputError;
      }
    }
  }

  CLI::App app{"Orthogonal-array-based space-filling designs: construction, validation, ANOVA and CLT experiments"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help");  // keep -h free: anova/clt use --h for the strength
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration (flags override)");

  std::string builtin, oa_file;
  std::uint64_t seed_flag = 0;
  bool seed_given = false;

  auto add_common_flags = [&](CLI::App* cmd) {
    cmd->set_help_flag("--help", "print help");
    cmd->add_option("--config", config_path, "JSON run configuration (flags override)");
  };
  auto add_oa_flags = [&](CLI::App* cmd) {
    cmd->add_option("--builtin", builtin, "builtin OA: table1 | rao_hamming:P:K");
    cmd->add_option("--oa", oa_file, "orthogonal array text file");
  };
  auto add_seed_flag = [&](CLI::App* cmd) {
    auto* o = cmd->add_option("--seed", seed_flag, "64-bit seed (falls back to OA_SPACEFILL_SEED, then 0)");
    cmd->callback([&, o] { seed_given = o->count() > 0; });
  };

  auto* validate = app.add_subcommand("validate", "certify an orthogonal array");
  add_common_flags(validate);
  add_oa_flags(validate);
  validate->add_option("--out", config.out_path, "write the certification JSON here (default stdout)");

  auto* generate = app.add_subcommand("generate", "construct a randomized design as CSV");
  add_common_flags(generate);
  add_oa_flags(generate);
  add_seed_flag(generate);
  generate->add_option("--kind", config.design_kind, "lhs | roa | u-design")->capture_default_str();
  generate->add_option("--runs", config.runs, "rows for --kind lhs without an OA source");
  generate->add_option("--dims", config.dims, "columns for --kind lhs without an OA source");
  generate->add_option("--out", config.out_path, "output CSV (default stdout)");
  generate->add_option("--meta", config.meta_path, "write a metadata sidecar JSON here");

  auto* audit = app.add_subcommand("audit", "count points per cell of a grid projection");
  add_common_flags(audit);
  audit->add_option("--design", config.design_path, "design CSV (default stdin)");
  audit->add_option("--u", config.columns, "1-based column subset, e.g. --u 1,2")->delimiter(',');
  audit->add_option("--z", config.grain, "subdivision grain");
  audit->add_option("--out", config.out_path, "write the report JSON here (default stdout)");

  auto* anova = app.add_subcommand("anova", "functional ANOVA decomposition on the midpoint grid");
  add_common_flags(anova);
  anova->add_option("--integrand", config.integrand, "constant | additive | product2 | cox | branin [-as-printed]");
  anova->add_option("--k", config.dims, "dimension (required for constant/additive)");
  anova->add_option("--h", config.strength, "strength: effects of order <= h are removed");
  anova->add_option("--m", config.resolution, "grid resolution per axis");
  anova->add_option("--out", config.out_path, "write the model JSON here (default stdout)");
  anova->add_option("--tables-dir", config.tables_dir, "write effect tables as CSVs into this directory");
  anova->add_option("--threads", config.threads, "worker cap; results are bit-stable across counts");

  auto* clt = app.add_subcommand("clt", "replicated CLT experiment with moment diagnostics");
  add_common_flags(clt);
  add_oa_flags(clt);
  add_seed_flag(clt);
  clt->add_option("--kind", config.design_kind, "lhs | roa | u-design")->capture_default_str();
  clt->add_option("--integrand", config.integrand, "integrand name");
  clt->add_option("--k", config.dims, "dimension (for constant/additive)");
  clt->add_option("--r", config.replicates, "replicate count")->capture_default_str();
  clt->add_option("--mu-ref", config.mu_ref, "reference mean (default: integrand's own)");
  clt->add_option("--out", config.out_path, "write the report JSON here (default stdout)");
  clt->add_option("--hist", config.hist_path, "write the histogram CSV here");
  clt->add_option("--threads", config.threads, "worker cap; results are bit-stable across counts");
  clt->add_flag("--variance-table", config.variance_table, "include the IID/LHS/ROA/UD variance table");
  clt->add_option("--m", config.resolution, "ANOVA grid resolution for --variance-table predictions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitInputError;
  }

  if (!builtin.empty()) config.oa_source = "builtin:" + builtin;
  else if (!oa_file.empty()) config.oa_source = oa_file;
  config.seed = resolve_seed(seed_given, seed_flag, config_has_seed, config.seed);

  try {
    if (validate->parsed()) { config.command = "validate"; return cmd_validate(config); }
    if (generate->parsed()) { config.command = "generate"; return cmd_generate(config); }
    if (audit->parsed()) { config.command = "audit"; return cmd_audit(config); }
    if (anova->parsed()) { config.command = "anova"; return cmd_anova(config); }
    if (clt->parsed()) { config.command = "clt"; return cmd_clt(config); }
  } catch (const oasf::OaParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
