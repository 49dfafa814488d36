#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oasf/orthogonal_array.hpp"
#include "oasf/random_stream.hpp"

namespace oasf {

enum class DesignKind { latin_hypercube, randomized_oa, u_design };

inline const char* to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::latin_hypercube: return "latin_hypercube";
    case DesignKind::randomized_oa: return "randomized_oa";
    case DesignKind::u_design: return "u_design";
  }
  return "unknown";
}

inline DesignKind design_kind_from_string(const std::string& name) {
  if (name == "latin_hypercube" || name == "lhs") return DesignKind::latin_hypercube;
  if (name == "randomized_oa" || name == "roa") return DesignKind::randomized_oa;
  if (name == "u_design" || name == "u-design" || name == "ud") return DesignKind::u_design;
  throw std::invalid_argument("unknown design kind: " + name);
}

// N x K matrix of points in [0,1)^K with provenance.  Immutable after
// construction; distinct replicates use distinct stream ids and may be
// built fully in parallel.
struct Design {
  std::vector<double> points;  // row-major, runs x dims
  int runs = 0;
  int dims = 0;
  DesignKind kind = DesignKind::latin_hypercube;
  std::optional<OrthogonalArray> source;  // the OA behind randomized_oa / u_design
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  int n_levels = 0;  // stratification grain (N for a Latin hypercube)

  double at(int row, int col) const { return points[static_cast<std::size_t>(row) * dims + col]; }
  std::span<const double> row(int i) const {
    return {points.data() + static_cast<std::size_t>(i) * dims, static_cast<std::size_t>(dims)};
  }
};

namespace detail {

// Substream layout shared by all constructions.  Each ingredient family
// draws from its own named substream so the families are independent and
// any one of them can be replayed in isolation:
//   rows        -> the row shuffle gamma
//   levels:k    -> the level permutation pi_k of column k
//   jitter:i:k  -> the within-cell jitter eta_i^k of point i, column k
//   shift:k:x   -> the sub-stratum shuffle alpha for (column k, level x)
inline std::vector<std::uint32_t> row_shuffle(int runs, const RandomStream& stream) {
  auto sub = stream.substream("rows");
  return uniform_permutation(static_cast<std::uint32_t>(runs), sub);
}

inline std::vector<std::uint32_t> level_permutation(int levels, int column, const RandomStream& stream) {
  auto sub = stream.substream("levels", static_cast<std::uint64_t>(column));
  return uniform_permutation(static_cast<std::uint32_t>(levels), sub);
}

inline double jitter(int point, int column, const RandomStream& stream) {
  auto sub = stream.substream("jitter", static_cast<std::uint64_t>(point), static_cast<std::uint64_t>(column));
  return sub.next_double();
}

inline std::vector<std::uint32_t> invert(const std::vector<std::uint32_t>& perm) {
  std::vector<std::uint32_t> inv(perm.size());
  for (std::uint32_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

inline void require_certified(const OrthogonalArray& oa, const char* who) {
  if (oa.runs <= 0 || oa.entries.empty())
    throw std::invalid_argument(std::string(who) + ": empty orthogonal array");
  if (!oa.defect_free)
    throw std::invalid_argument(std::string(who) + ": orthogonal array must be certified free of coincidence defect");
}

inline void check_u_design_balance(const Design& design) {
  std::vector<char> seen;
  for (int k = 0; k < design.dims; ++k) {
    seen.assign(design.runs, 0);
    for (int i = 0; i < design.runs; ++i) {
      const auto cell = static_cast<int>(design.at(i, k) * design.runs);
      if (cell < 0 || cell >= design.runs || seen[cell])
        throw std::logic_error("u design construction violated one-point-per-interval balance");
      seen[cell] = 1;
    }
  }
}

}  // namespace detail

// Ordinary Latin hypercube: X_i^k = (pi_k(i) + eta_i^k) / N.
inline Design build_latin_hypercube(int runs, int dims, const RandomStream& stream) {
  if (runs < 1 || dims < 1)
    throw std::invalid_argument("build_latin_hypercube: runs and dims must be positive");
  Design d;
  d.runs = runs;
  d.dims = dims;
  d.kind = DesignKind::latin_hypercube;
  d.seed = stream.seed();
  d.stream_id = stream.stream_id();
  d.n_levels = runs;
  d.points.resize(static_cast<std::size_t>(runs) * dims);
  for (int k = 0; k < dims; ++k) {
    const auto pi = detail::level_permutation(runs, k, stream);
    for (int i = 0; i < runs; ++i) {
      d.points[static_cast<std::size_t>(i) * dims + k] = (pi[i] + detail::jitter(i, k, stream)) / runs;
    }
  }
  return d;
}

// Randomized orthogonal array:
//   X_i^k = ( pi_k(H[gamma^{-1}(i)][k]) + eta_i^k ) / n.
inline Design build_randomized_oa(const OrthogonalArray& oa, const RandomStream& stream) {
  detail::require_certified(oa, "build_randomized_oa");
  Design d;
  d.runs = oa.runs;
  d.dims = oa.factors;
  d.kind = DesignKind::randomized_oa;
  d.source = oa;
  d.seed = stream.seed();
  d.stream_id = stream.stream_id();
  d.n_levels = oa.levels;
  d.points.resize(static_cast<std::size_t>(oa.runs) * oa.factors);

  const auto gamma_inv = detail::invert(detail::row_shuffle(oa.runs, stream));
  for (int k = 0; k < oa.factors; ++k) {
    const auto pi = detail::level_permutation(oa.levels, k, stream);
    for (int i = 0; i < oa.runs; ++i) {
      const int level = oa.at(static_cast<int>(gamma_inv[i]), k);
      d.points[static_cast<std::size_t>(i) * oa.factors + k] =
          (pi[level] + detail::jitter(i, k, stream)) / oa.levels;
    }
  }
  return d;
}

// U design: one additional sub-stratum shuffle per (column, level),
//   X_i^k = pi_k(H[g][k]) / n + alpha[g][k] / N + eta_i^k / N,  g = gamma^{-1}(i),
// where the alphas over the N/n rows sharing a level form a uniform
// permutation of {0,...,N/n-1}.  Groups are formed in ascending row order.
inline Design build_u_design(const OrthogonalArray& oa, const RandomStream& stream) {
  detail::require_certified(oa, "build_u_design");
  const int runs = oa.runs;
  const int per_level = runs / oa.levels;  // integral by the OA definition

  std::vector<std::uint32_t> alpha(static_cast<std::size_t>(runs) * oa.factors);
  std::vector<int> group;
  for (int k = 0; k < oa.factors; ++k) {
    for (int level = 0; level < oa.levels; ++level) {
      group.clear();
      for (int i = 0; i < runs; ++i) {
        if (oa.at(i, k) == level) group.push_back(i);
      }
      auto sub = stream.substream("shift", static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(level));
      const auto perm = uniform_permutation(static_cast<std::uint32_t>(per_level), sub);
      for (std::size_t pos = 0; pos < group.size(); ++pos) {
        alpha[static_cast<std::size_t>(group[pos]) * oa.factors + k] = perm[pos];
      }
    }
  }

  Design d;
  d.runs = runs;
  d.dims = oa.factors;
  d.kind = DesignKind::u_design;
  d.source = oa;
  d.seed = stream.seed();
  d.stream_id = stream.stream_id();
  d.n_levels = oa.levels;
  d.points.resize(static_cast<std::size_t>(runs) * oa.factors);

  const auto gamma_inv = detail::invert(detail::row_shuffle(runs, stream));
  for (int k = 0; k < oa.factors; ++k) {
    const auto pi = detail::level_permutation(oa.levels, k, stream);
    for (int i = 0; i < runs; ++i) {
      const auto g = gamma_inv[i];
      const int level = oa.at(static_cast<int>(g), k);
      d.points[static_cast<std::size_t>(i) * oa.factors + k] =
          static_cast<double>(pi[level]) / oa.levels +
          (alpha[static_cast<std::size_t>(g) * oa.factors + k] + detail::jitter(i, k, stream)) / runs;
    }
  }
  detail::check_u_design_balance(d);
  return d;
}

// CSV export: header x1,...,xK, one row per point, 17 significant digits
// (lossless double round-trip).
inline void write_design_csv(const Design& design, std::ostream& out) {
  for (int k = 0; k < design.dims; ++k) {
    if (k) out << ',';
    out << 'x' << (k + 1);
  }
  out << '\n';
  char buf[40];
  for (int i = 0; i < design.runs; ++i) {
    for (int k = 0; k < design.dims; ++k) {
      if (k) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", design.at(i, k));
      out << buf;
    }
    out << '\n';
  }
}

struct DesignCsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reads a matrix written by write_design_csv (provenance is not part of
// the CSV; audits only need the points).
inline Design read_design_csv(std::istream& in) {
  Design d;
  std::string line;
  if (!std::getline(in, line)) throw DesignCsvError("design csv: empty input");
  d.dims = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t pos = 0;
    for (int k = 0; k < d.dims; ++k) {
      std::size_t next = line.find(',', pos);
      const std::string tok = line.substr(pos, next == std::string::npos ? next : next - pos);
      try {
        d.points.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw DesignCsvError("design csv: bad value at line " + std::to_string(line_no));
      }
      if (next == std::string::npos) {
        if (k != d.dims - 1) throw DesignCsvError("design csv: short row at line " + std::to_string(line_no));
        break;
      }
      pos = next + 1;
    }
    ++d.runs;
  }
  if (d.runs == 0) throw DesignCsvError("design csv: no data rows");
  d.n_levels = d.runs;
  return d;
}

}  // namespace oasf
