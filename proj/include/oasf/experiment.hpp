#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oasf/anova.hpp"
#include "oasf/design.hpp"
#include "oasf/integrands.hpp"
#include "oasf/orthogonal_array.hpp"
#include "oasf/parallel.hpp"
#include "oasf/random_stream.hpp"
#include "oasf/summation.hpp"

namespace oasf {

// mu-hat = N^{-1} sum f(X_i).  Extra design columns beyond the integrand's
// dimension are ignored.  Compensated summation in row order keeps the
// value bit-stable.
inline double estimate_mean(const Integrand& f, const Design& design) {
  if (design.dims < f.dims)
    throw std::invalid_argument("estimate_mean: design has fewer columns than the integrand needs");
  CompensatedSum acc;
  for (int i = 0; i < design.runs; ++i) {
    const double v = f(design.row(i).subspan(0, f.dims));
    if (!std::isfinite(v)) {
      std::string where;
      for (int k = 0; k < f.dims; ++k) where += (where.empty() ? "(" : ", ") + std::to_string(design.at(i, k));
      throw std::runtime_error("estimate_mean: integrand returned a non-finite value at design point " +
                               std::to_string(i) + " " + where + ")");
    }
    acc.add(v);
  }
  return acc.value() / design.runs;
}

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint64_t> bins;  // counts sum to R; outliers clamp to edge bins
};

struct MomentCheck {
  int order = 0;
  double value = 0.0;
  double target = 0.0;
  double threshold = 0.0;
  bool checked = false;
  bool pass = false;
};

// Replicated-experiment summary: standardized moments of
// T = sqrt(N) (mu-hat - mu_ref) / sd, compared against the normal moments
// (0, 1, 0, 3, 0, 15).  Standardization centers at the sample mean, so
// m1 = 0 and m2 = 1 hold identically whenever sd > 0.
struct ExperimentReport {
  DesignKind kind = DesignKind::randomized_oa;
  std::optional<OrthogonalArray> source;
  int runs_per_design = 0;  // N
  std::uint64_t replicates = 0;
  std::uint64_t seed = 0;
  double mu_ref = 0.0;
  double sample_mean = 0.0;      // of mu-hat
  double sample_variance = 0.0;  // of mu-hat (population convention)
  bool degenerate = false;       // all replicates identical; no standardization
  std::array<double, 6> standardized_moments{};  // orders 1..6
  Histogram histogram;
  std::vector<double> mu_samples;  // replicate order
};

struct ExperimentOptions {
  int threads = 1;
  int histogram_bins = 101;
  std::uint64_t evaluation_cap = 1'000'000'000;  // R * N budget
  bool keep_samples = true;
};


// Assembles the report statistics from raw mu-hat samples.  Shared by
// run_clt_experiment and by diagnostics fed with synthetic samples.
inline ExperimentReport summarize_samples(std::vector<double> mu_samples, int runs_per_design,
                                          double mu_ref, const ExperimentOptions& opt = {}) {
  if (mu_samples.size() < 2) throw std::invalid_argument("summarize_samples: need at least two replicates");
  ExperimentReport report;
  report.runs_per_design = runs_per_design;
  report.replicates = mu_samples.size();
  report.mu_ref = mu_ref;

  const double count = static_cast<double>(mu_samples.size());
  CompensatedSum mean_acc;
  for (double v : mu_samples) mean_acc.add(v);
  report.sample_mean = mean_acc.value() / count;

  CompensatedSum var_acc;
  for (double v : mu_samples) {
    const double d = v - report.sample_mean;
    var_acc.add(d * d);
  }
  report.sample_variance = var_acc.value() / count;

  const double sd = std::sqrt(report.sample_variance);
  if (sd == 0.0 || !std::isfinite(sd)) {
    report.degenerate = true;
    report.standardized_moments = {0, 0, 0, 0, 0, 0};
    report.histogram.lo = report.sample_mean;
    report.histogram.hi = report.sample_mean;
    report.histogram.bins.assign(static_cast<std::size_t>(opt.histogram_bins), 0);
    report.histogram.bins[opt.histogram_bins / 2] = mu_samples.size();
  } else {
    std::array<CompensatedSum, 6> moment_acc{};
    for (double v : mu_samples) {
      const double t = (v - report.sample_mean) / sd;
      double power = 1.0;
      for (int p = 0; p < 6; ++p) {
        power *= t;
        moment_acc[p].add(power);
      }
    }
    for (int p = 0; p < 6; ++p) report.standardized_moments[p] = moment_acc[p].value() / count;

    report.histogram.lo = report.sample_mean - 5.0 * sd;
    report.histogram.hi = report.sample_mean + 5.0 * sd;
    report.histogram.bins.assign(static_cast<std::size_t>(opt.histogram_bins), 0);
    const double width = (report.histogram.hi - report.histogram.lo) / opt.histogram_bins;
    for (double v : mu_samples) {
      auto bin = static_cast<long>(std::floor((v - report.histogram.lo) / width));
      if (bin < 0) bin = 0;
      if (bin >= opt.histogram_bins) bin = opt.histogram_bins - 1;
      ++report.histogram.bins[static_cast<std::size_t>(bin)];
    }
  }
  if (opt.keep_samples) report.mu_samples = std::move(mu_samples);
  return report;
}

// Builds R independent designs (stream ids 0..R-1 under the given seed),
// estimates the mean per replicate, and summarizes.  Deterministic given
// (seed, R) regardless of the thread count: replicate r's design depends
// only on RandomStream(seed, r), and aggregation runs in replicate order.
inline ExperimentReport run_clt_experiment(const Integrand& f, const OrthogonalArray& oa,
                                           DesignKind kind, std::uint64_t replicates,
                                           std::uint64_t seed, double mu_ref,
                                           const ExperimentOptions& opt = {}) {
  if (replicates < 2) throw std::invalid_argument("run_clt_experiment: need at least two replicates");
  if (!std::isfinite(mu_ref)) throw std::invalid_argument("run_clt_experiment: mu_ref must be finite");
  detail::require_certified(oa, "run_clt_experiment");
  const auto budget = static_cast<std::uint64_t>(oa.runs) * replicates;
  if (budget > opt.evaluation_cap)
    throw ResourceError("run_clt_experiment: R*N = " + std::to_string(budget) +
                        " exceeds the evaluation cap");

  std::vector<double> mus(replicates);
  detail::run_parallel_chunks(replicates, opt.threads, [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t r = lo; r < hi; ++r) {
      RandomStream stream(seed, r);
      Design design;
      switch (kind) {
        case DesignKind::latin_hypercube:
          design = build_latin_hypercube(oa.runs, oa.factors, stream);
          break;
        case DesignKind::randomized_oa:
          design = build_randomized_oa(oa, stream);
          break;
        case DesignKind::u_design:
          design = build_u_design(oa, stream);
          break;
      }
      mus[r] = estimate_mean(f, design);
    }
  });

  ExperimentReport report = summarize_samples(std::move(mus), oa.runs, mu_ref, opt);
  report.kind = kind;
  report.source = oa;
  report.seed = seed;
  return report;
}

// Monte-Carlo-aware pass thresholds, stated at the reference replicate
// count and scaled by sqrt(reference/R): estimator noise shrinks like
// 1/sqrt(R).  Orders 5 and 6 are calibrated at ~6 empirical sd of the
// studentized moments under normal data.
struct MomentThresholds {
  double skew = 0.1;
  double excess_kurtosis = 0.15;
  double fifth = 1.0;
  double sixth = 3.5;
  std::uint64_t reference_replicates = 20000;
};

// Compares standardized moments against the normal values
// m3=0, m4=3, m5=0, m6=15.  Orders 3-4 need R >= 1000; orders 5-6 are
// checked only when R >= 20000.  Failures are results, not errors.
inline std::vector<MomentCheck> moment_diagnostics(const ExperimentReport& report,
                                                   const MomentThresholds& thresholds = {}) {
  if (report.replicates < 1000)
    throw std::invalid_argument("moment_diagnostics: need at least 1000 replicates");
  const double scale =
      std::sqrt(static_cast<double>(thresholds.reference_replicates) / static_cast<double>(report.replicates));
  std::vector<MomentCheck> checks;
  auto add = [&](int order, double target, double base_threshold, bool enabled) {
    MomentCheck c;
    c.order = order;
    c.target = target;
    c.threshold = base_threshold * scale;
    c.checked = enabled && !report.degenerate;
    c.value = report.standardized_moments[order - 1];
    c.pass = !c.checked || std::abs(c.value - target) < c.threshold;
    checks.push_back(c);
  };
  const bool high_orders = report.replicates >= 20000;
  add(3, 0.0, thresholds.skew, true);
  add(4, 3.0, thresholds.excess_kurtosis, true);
  add(5, 0.0, thresholds.fifth, high_orders);
  add(6, 15.0, thresholds.sixth, high_orders);
  return checks;
}

inline bool all_pass(const std::vector<MomentCheck>& checks) {
  for (const auto& c : checks) {
    if (c.checked && !c.pass) return false;
  }
  return true;
}

struct VarianceRow {
  std::string sampler;
  double n_times_var = 0.0;           // empirical N * var(mu-hat)
  std::optional<double> predicted;    // ANOVA prediction where the theory gives one
};

struct VarianceTable {
  std::uint64_t replicates = 0;
  std::uint64_t seed = 0;
  int runs = 0;
  std::vector<VarianceRow> rows;  // iid, latin_hypercube, randomized_oa, u_design
};

// Empirical N*var(mu-hat) for IID sampling and the three design kinds,
// with the ANOVA predictions: total variance for IID, sigma2 = int r^2
// for the OA-backed designs (their variance formula carries an o(1/N)
// term, so the prediction is asymptotic, not exact at desk N).
inline VarianceTable variance_comparison(const Integrand& f, const OrthogonalArray& oa,
                                         std::uint64_t replicates, std::uint64_t seed,
                                         int anova_resolution, const ExperimentOptions& opt = {}) {
  if (replicates < 1000) throw std::invalid_argument("variance_comparison: need at least 1000 replicates");
  detail::require_certified(oa, "variance_comparison");

  AnovaOptions anova_opt;
  anova_opt.threads = opt.threads;
  // When the array's strength covers every interaction order of f, the
  // residual is identically zero and sigma2 = 0 in closed form; the grid
  // decomposition then only supplies the total variance.
  const bool strength_exhausts_f = oa.strength >= f.dims;
  double total_variance = 0.0;
  double predicted_sigma2 = 0.0;
  if (f.dims == 1) {
    CompensatedSum sum, square;
    for (int j = 0; j < anova_resolution; ++j) {
      const double x = (j + 0.5) / anova_resolution;
      const double v = f(std::span<const double>(&x, 1));
      sum.add(v);
      square.add(v * v);
    }
    const double mean = sum.value() / anova_resolution;
    total_variance = square.value() / anova_resolution - mean * mean;
  } else {
    const AnovaModel model =
        decompose(f, std::min(oa.strength, f.dims - 1), anova_resolution, anova_opt);
    total_variance = model.total_variance;
    if (!strength_exhausts_f) predicted_sigma2 = model.sigma2;
  }

  VarianceTable table;
  table.replicates = replicates;
  table.seed = seed;
  table.runs = oa.runs;

  auto empirical = [&](const char* label, auto&& build) {
    std::vector<double> mus(replicates);
    detail::run_parallel_chunks(replicates, opt.threads, [&](std::uint64_t lo, std::uint64_t hi) {
      for (std::uint64_t r = lo; r < hi; ++r) {
        RandomStream stream(seed, r);
        mus[r] = build(stream);
      }
    });
    CompensatedSum mean_acc;
    for (double v : mus) mean_acc.add(v);
    const double mean = mean_acc.value() / static_cast<double>(replicates);
    CompensatedSum var_acc;
    for (double v : mus) var_acc.add((v - mean) * (v - mean));
    VarianceRow row;
    row.sampler = label;
    row.n_times_var = oa.runs * var_acc.value() / static_cast<double>(replicates);
    return row;
  };

  {
    auto row = empirical("iid", [&](RandomStream& stream) {
      auto sub = stream.substream("iid");
      std::vector<double> x(f.dims);
      CompensatedSum acc;
      for (int i = 0; i < oa.runs; ++i) {
        for (int k = 0; k < f.dims; ++k) x[k] = sub.next_double();
        acc.add(f(x));
      }
      return acc.value() / oa.runs;
    });
    row.predicted = total_variance;
    table.rows.push_back(std::move(row));
  }
  {
    auto row = empirical("latin_hypercube", [&](RandomStream& stream) {
      return estimate_mean(f, build_latin_hypercube(oa.runs, oa.factors, stream.substream("lhs")));
    });
    table.rows.push_back(std::move(row));
  }
  {
    auto row = empirical("randomized_oa", [&](RandomStream& stream) {
      return estimate_mean(f, build_randomized_oa(oa, stream.substream("roa")));
    });
    row.predicted = predicted_sigma2;
    table.rows.push_back(std::move(row));
  }
  {
    auto row = empirical("u_design", [&](RandomStream& stream) {
      return estimate_mean(f, build_u_design(oa, stream.substream("ud")));
    });
    row.predicted = predicted_sigma2;
    table.rows.push_back(std::move(row));
  }
  return table;
}

// Histogram CSV: `bin_center,count`, one line per bin.
inline void write_histogram_csv(const Histogram& histogram, std::ostream& out) {
  out << "bin_center,count\n";
  const auto bins = histogram.bins.size();
  const double width = bins ? (histogram.hi - histogram.lo) / static_cast<double>(bins) : 0.0;
  char buf[40];
  for (std::size_t b = 0; b < bins; ++b) {
    std::snprintf(buf, sizeof buf, "%.17g", histogram.lo + (static_cast<double>(b) + 0.5) * width);
    out << buf << ',' << histogram.bins[b] << '\n';
  }
}

}  // namespace oasf
