#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oasf/integrands.hpp"
#include "oasf/parallel.hpp"
#include "oasf/random_stream.hpp"
#include "oasf/subsets.hpp"
#include "oasf/summation.hpp"

namespace oasf {

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AnovaOptions {
  std::uint64_t node_cap = 100'000'000;  // max m^K grid evaluations per pass
  int threads = 1;  // grid sweeps parallelize over slabs of the first axis
};

// Tabulated effect f_u on its |u|-dimensional cell-centered subgrid.
struct EffectTable {
  std::vector<int> columns;    // subset u, ascending 0-based
  std::vector<double> values;  // m^|u|, last column fastest
};

// Functional ANOVA decomposition of an integrand on the midpoint tensor
// grid with nodes (j + 1/2)/m: mean, all effects of order <= h, and the
// residual variance sigma2 = integral of r^2 where
//   r(x) = f(x) - mu - sum_{0 < |u| <= h} f_u(x).
struct AnovaModel {
  Integrand integrand;
  int dims = 0;
  int strength = 0;
  int resolution = 0;
  double mean = 0.0;
  double sigma2 = 0.0;
  double total_variance = 0.0;  // integral of (f - mu)^2
  double rms = 0.0;             // grid RMS of f, the scale for tolerance checks
  std::vector<EffectTable> effects;  // ascending |u|, lexicographic within a size

  // Effect value at a grid node given per-axis digit indices.
  double effect_at_node(const EffectTable& table, std::span<const int> digits) const {
    std::size_t flat = 0;
    for (int c : table.columns) flat = flat * resolution + digits[c];
    return table.values[flat];
  }

  // Effect value at an arbitrary point: multilinear interpolation between
  // cell centers, linear extrapolation beyond the outermost centers.
  double effect_interpolated(const EffectTable& table, std::span<const double> x) const {
    const int d = static_cast<int>(table.columns.size());
    if (d > 8) throw std::invalid_argument("effect_interpolated: subsets beyond 8 columns unsupported");
    const int m = resolution;
    int base[8];
    double frac[8];
    for (int a = 0; a < d; ++a) {
      const double t = x[table.columns[a]] * m - 0.5;
      const double fl = std::floor(t);
      base[a] = static_cast<int>(fl);
      frac[a] = t - fl;
    }
    auto fetch = [&](const int* idx) {
      // ghost cells T[-1] = 2T[0] - T[1], T[m] = 2T[m-1] - T[m-2]
      std::size_t flat = 0;
      bool ghost = false;
      int clamped[8];
      for (int a = 0; a < d; ++a) {
        clamped[a] = idx[a] < 0 ? 0 : (idx[a] > m - 1 ? m - 1 : idx[a]);
        if (clamped[a] != idx[a]) ghost = true;
      }
      if (!ghost) {
        for (int a = 0; a < d; ++a) flat = flat * m + idx[a];
        return table.values[flat];
      }
      // at most one step outside per axis; extrapolate axis by axis
      double value;
      {
        std::size_t f0 = 0;
        for (int a = 0; a < d; ++a) f0 = f0 * m + clamped[a];
        value = table.values[f0];
      }
      for (int a = 0; a < d; ++a) {
        if (clamped[a] == idx[a]) continue;
        int neighbor[8];
        for (int b = 0; b < d; ++b) neighbor[b] = clamped[b];
        neighbor[a] = idx[a] < 0 ? 1 : m - 2;
        std::size_t fn = 0;
        for (int b = 0; b < d; ++b) fn = fn * m + neighbor[b];
        value = 2.0 * value - table.values[fn];
      }
      return value;
    };
    double acc = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
      double w = 1.0;
      int idx[8];
      for (int a = 0; a < d; ++a) {
        const int bit = (corner >> a) & 1;
        idx[a] = base[a] + bit;
        w *= bit ? frac[a] : 1.0 - frac[a];
      }
      if (w != 0.0) acc += w * fetch(idx);
    }
    return acc;
  }

  double residual_at(std::span<const double> x) const {
    double r = integrand(x) - mean;
    for (const auto& table : effects) r -= effect_interpolated(table, x);
    return r;
  }
};

namespace detail {

inline std::uint64_t grid_size_or_throw(int dims, int resolution, const AnovaOptions& opt) {
  std::uint64_t nodes = 1;
  for (int k = 0; k < dims; ++k) {
    if (nodes > opt.node_cap / static_cast<std::uint64_t>(resolution))
      throw ResourceError("anova: grid of " + std::to_string(resolution) + "^" + std::to_string(dims) +
                          " nodes exceeds the evaluation cap");
    nodes *= static_cast<std::uint64_t>(resolution);
  }
  return nodes;
}

template <typename Fn>
void for_each_grid_node(int dims, int resolution, Fn&& fn) {
  std::vector<int> digits(dims, 0);
  std::vector<double> point(dims);
  for (int k = 0; k < dims; ++k) point[k] = 0.5 / resolution;
  for (;;) {
    fn(const_cast<const std::vector<int>&>(digits), const_cast<const std::vector<double>&>(point));
    int axis = dims - 1;
    while (axis >= 0) {
      if (++digits[axis] < resolution) {
        point[axis] = (digits[axis] + 0.5) / resolution;
        break;
      }
      digits[axis] = 0;
      point[axis] = 0.5 / resolution;
      --axis;
    }
    if (axis < 0) return;
  }
}

// Visits the slab of nodes whose first-axis digit equals `slab`.
template <typename Fn>
void for_each_slab_node(int dims, int resolution, int slab, Fn&& fn) {
  std::vector<int> digits(dims, 0);
  std::vector<double> point(dims);
  digits[0] = slab;
  point[0] = (slab + 0.5) / resolution;
  for (int k = 1; k < dims; ++k) point[k] = 0.5 / resolution;
  for (;;) {
    fn(const_cast<const std::vector<int>&>(digits), const_cast<const std::vector<double>&>(point));
    int axis = dims - 1;
    while (axis >= 1) {
      if (++digits[axis] < resolution) {
        point[axis] = (digits[axis] + 0.5) / resolution;
        break;
      }
      digits[axis] = 0;
      point[axis] = 0.5 / resolution;
      --axis;
    }
    if (axis < 1) return;
  }
}

}  // namespace detail

// Effects are computed in ascending |u| order as exact partial averages
// of the grid table:  F_u = average of f over the complement axes, then
// f_u = F_u - mu - sum of contained lower-order effects.  Averaging any
// f_u along one of its own axes therefore gives exactly zero (up to
// rounding), which is the discrete form of the zero-integral identity.
//
// Both grid sweeps parallelize over first-axis slabs.  Every slab owns
// its accumulators and the merge always runs in ascending slab order, so
// the result is bit-identical for any thread count.
inline AnovaModel decompose(const Integrand& f, int strength, int resolution,
                            const AnovaOptions& opt = {}) {
  const int dims = f.dims;
  if (dims < 1) throw std::invalid_argument("decompose: integrand dimension must be positive");
  if (resolution < 2) throw std::invalid_argument("decompose: resolution must be >= 2");
  if (strength < 1) throw std::invalid_argument("decompose: strength must be >= 1");
  if (strength >= dims)
    throw std::invalid_argument("decompose: strength must be < dimension (h = K forces r = 0)");
  const std::uint64_t nodes = detail::grid_size_or_throw(dims, resolution, opt);

  AnovaModel model;
  model.integrand = f;
  model.dims = dims;
  model.strength = strength;
  model.resolution = resolution;

  const auto subsets = subsets_up_to(dims, strength);
  std::vector<std::uint64_t> table_size(subsets.size());
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    std::uint64_t size = 1;
    for (std::size_t d = 0; d < subsets[s].size(); ++d) size *= resolution;
    table_size[s] = size;
  }

  struct SlabSums {
    CompensatedSum mean, square;
    std::vector<std::vector<double>> sums;
  };
  std::vector<SlabSums> slabs(resolution);
  detail::run_parallel_chunks(resolution, opt.threads, [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t slab = lo; slab < hi; ++slab) {
      SlabSums& acc = slabs[slab];
      acc.sums.resize(subsets.size());
      for (std::size_t s = 0; s < subsets.size(); ++s) acc.sums[s].assign(table_size[s], 0.0);
      detail::for_each_slab_node(dims, resolution, static_cast<int>(slab),
                                 [&](const std::vector<int>& digits, const std::vector<double>& point) {
        const double v = f(point);
        if (!std::isfinite(v)) {
          std::string where;
          for (double c : point) where += (where.empty() ? "(" : ", ") + std::to_string(c);
          throw std::invalid_argument(
              "decompose: integrand returned a non-finite value at grid point " + where + ")");
        }
        acc.mean.add(v);
        acc.square.add(v * v);
        for (std::size_t s = 0; s < subsets.size(); ++s) {
          std::size_t flat = 0;
          for (int c : subsets[s]) flat = flat * resolution + digits[c];
          acc.sums[s][flat] += v;
        }
      });
    }
  });

  CompensatedSum mean_acc, square_acc;
  std::vector<std::vector<double>> sums(subsets.size());
  for (std::size_t s = 0; s < subsets.size(); ++s) sums[s].assign(table_size[s], 0.0);
  for (auto& slab : slabs) {
    mean_acc.add(slab.mean.value());
    square_acc.add(slab.square.value());
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      for (std::size_t i = 0; i < sums[s].size(); ++i) sums[s][i] += slab.sums[s][i];
    }
    slab.sums.clear();
    slab.sums.shrink_to_fit();
  }

  model.mean = mean_acc.value() / static_cast<double>(nodes);
  const double mean_square = square_acc.value() / static_cast<double>(nodes);
  model.total_variance = mean_square - model.mean * model.mean;
  model.rms = std::sqrt(mean_square);

  model.effects.resize(subsets.size());
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    EffectTable& table = model.effects[s];
    table.columns = subsets[s];
    table.values = std::move(sums[s]);
    const double denom = static_cast<double>(nodes) / static_cast<double>(table_size[s]);
    for (double& v : table.values) v = v / denom - model.mean;
    // subtract contained lower-order effects
    for (std::size_t t = 0; t < s; ++t) {
      const EffectTable& inner = model.effects[t];
      if (!std::includes(table.columns.begin(), table.columns.end(), inner.columns.begin(),
                         inner.columns.end()))
        continue;
      // positions of inner's columns within table's columns
      std::vector<int> where(inner.columns.size());
      for (std::size_t a = 0; a < inner.columns.size(); ++a) {
        where[a] = static_cast<int>(std::find(table.columns.begin(), table.columns.end(),
                                              inner.columns[a]) -
                                    table.columns.begin());
      }
      std::vector<int> digits(table.columns.size(), 0);
      for (std::size_t flat = 0; flat < table.values.size(); ++flat) {
        std::size_t inner_flat = 0;
        for (int a : where) inner_flat = inner_flat * resolution + digits[a];
        table.values[flat] -= inner.values[inner_flat];
        for (int d = static_cast<int>(digits.size()) - 1; d >= 0; --d) {
          if (++digits[d] < resolution) break;
          digits[d] = 0;
        }
      }
    }
  }

  std::vector<CompensatedSum> sigma_slabs(resolution);
  detail::run_parallel_chunks(resolution, opt.threads, [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t slab = lo; slab < hi; ++slab) {
      detail::for_each_slab_node(dims, resolution, static_cast<int>(slab),
                                 [&](const std::vector<int>& digits, const std::vector<double>& point) {
        double r = f(point) - model.mean;
        for (const auto& table : model.effects) r -= model.effect_at_node(table, digits);
        sigma_slabs[slab].add(r * r);
      });
    }
  });
  CompensatedSum sigma_acc;
  for (const auto& slab : sigma_slabs) sigma_acc.add(slab.value());
  model.sigma2 = sigma_acc.value() / static_cast<double>(nodes);
  return model;
}

struct McVarianceEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

// Unbiased Monte Carlo estimate of the integral of r(x)^2 over the unit
// cube using i.i.d. uniform points from the stream's "residual-mc"
// substream.
inline McVarianceEstimate residual_variance_mc(const AnovaModel& model, std::uint64_t samples,
                                               const RandomStream& stream) {
  if (samples < 1) throw std::invalid_argument("residual_variance_mc: samples must be >= 1");
  auto sub = stream.substream("residual-mc");
  CompensatedSum acc2, acc4;
  std::vector<double> x(model.dims);
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (int k = 0; k < model.dims; ++k) x[k] = sub.next_double();
    const double r = model.residual_at(x);
    const double r2 = r * r;
    acc2.add(r2);
    acc4.add(r2 * r2);
  }
  McVarianceEstimate out;
  out.samples = samples;
  out.estimate = acc2.value() / static_cast<double>(samples);
  const double second = acc4.value() / static_cast<double>(samples) - out.estimate * out.estimate;
  out.standard_error = second > 0.0 ? std::sqrt(second / static_cast<double>(samples)) : 0.0;
  return out;
}

// Symmetric PSD matrix of residual cross-moments over the shared grid;
// Sigma[i][j] = integral of r_i r_j, diagonal equals each model's sigma2.
inline std::vector<std::vector<double>> covariance_matrix(std::span<const AnovaModel> models) {
  if (models.empty()) throw std::invalid_argument("covariance_matrix: need at least one model");
  const int dims = models[0].dims;
  const int strength = models[0].strength;
  const int resolution = models[0].resolution;
  for (const auto& m : models) {
    if (m.dims != dims || m.strength != strength || m.resolution != resolution)
      throw std::invalid_argument("covariance_matrix: models must share dimension, strength and grid");
  }
  const std::size_t count = models.size();
  std::vector<std::vector<CompensatedSum>> acc(count, std::vector<CompensatedSum>(count));
  std::vector<double> residuals(count);
  std::uint64_t nodes = 0;
  detail::for_each_grid_node(dims, resolution, [&](const std::vector<int>& digits,
                                                   const std::vector<double>& point) {
    ++nodes;
    for (std::size_t i = 0; i < count; ++i) {
      double r = models[i].integrand(point) - models[i].mean;
      for (const auto& table : models[i].effects) r -= models[i].effect_at_node(table, digits);
      residuals[i] = r;
    }
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = i; j < count; ++j) acc[i][j].add(residuals[i] * residuals[j]);
    }
  });
  std::vector<std::vector<double>> sigma(count, std::vector<double>(count));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i; j < count; ++j) {
      sigma[i][j] = sigma[j][i] = acc[i][j].value() / static_cast<double>(nodes);
    }
  }
  return sigma;
}

}  // namespace oasf
