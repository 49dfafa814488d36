#pragma once

#include <algorithm>
#include <limits>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oasf/subsets.hpp"

namespace oasf {

// Integer matrix with certified metadata.  Instances are produced by the
// generators below or by certify_orthogonal_array(); all fields are
// immutable after construction and safe to share across threads.
struct OrthogonalArray {
  int runs = 0;     // N
  int factors = 0;  // K
  int levels = 0;   // n
  int strength = 0; // h
  long index = 0;   // lambda = N / n^h
  bool defect_free = false;
  std::vector<int> entries;  // row-major, runs x factors

  int at(int row, int col) const { return entries[static_cast<std::size_t>(row) * factors + col]; }
};

enum class WitnessKind { unbalanced_tuple, divisibility, row_pair };

struct CertificationWitness {
  WitnessKind kind = WitnessKind::unbalanced_tuple;
  std::vector<int> columns;  // offending column subset (0-based)
  std::vector<int> levels;   // offending level tuple
  long observed = 0;
  long expected = 0;
  int row_a = -1;  // offending row pair, for row_pair
  int row_b = -1;
};

struct CertificationResult {
  bool is_oa = false;
  int achieved_strength = 0;  // largest t <= K with the balance property, 0 if none
  long index_at_strength = 0; // lambda, meaningful when is_oa
  std::optional<bool> coincidence_defect_free;  // unset until the pairwise scan runs
  std::optional<CertificationWitness> witness;
};

struct VerifyOptions {
  // Dense tuple accumulator used while levels^t stays within this cap;
  // beyond it the check falls back to a sorted-tuple count.
  std::size_t dense_cell_cap = 1'000'000;
};

namespace detail {

inline void check_entries(const std::vector<int>& entries, int runs, int factors, int levels) {
  if (runs <= 0 || factors <= 0) throw std::invalid_argument("orthogonal array: matrix must be nonempty");
  if (levels < 2) throw std::invalid_argument("orthogonal array: levels must be >= 2");
  if (entries.size() != static_cast<std::size_t>(runs) * factors)
    throw std::invalid_argument("orthogonal array: entry count does not match runs x factors");
  for (int i = 0; i < runs; ++i) {
    for (int k = 0; k < factors; ++k) {
      const int e = entries[static_cast<std::size_t>(i) * factors + k];
      if (e < 0 || e >= levels) {
        throw std::invalid_argument("orthogonal array: entry out of range at row " + std::to_string(i) +
                                    ", col " + std::to_string(k));
      }
    }
  }
}

// levels^t, or nullopt when it exceeds `limit`.
inline std::optional<std::uint64_t> checked_pow(int levels, int t, std::uint64_t limit) {
  std::uint64_t v = 1;
  for (int i = 0; i < t; ++i) {
    if (v > limit / levels) return std::nullopt;
    v *= static_cast<std::uint64_t>(levels);
  }
  return v;
}

// Balance check for one strength t.  Returns nullopt on success, or the
// first (lexicographic column subset, lexicographic tuple) violation.
inline std::optional<CertificationWitness> find_imbalance(const std::vector<int>& entries, int runs,
                                                          int factors, int levels, int t, long lambda,
                                                          const VerifyOptions& opt) {
  std::optional<CertificationWitness> found;
  const auto cells = checked_pow(levels, t, std::numeric_limits<std::uint64_t>::max() / 2);
  const bool dense = cells && *cells <= opt.dense_cell_cap;
  std::vector<long> counts;

  for_each_combination(factors, t, [&](const std::vector<int>& cols) {
    if (found) return;
    if (dense) {
      counts.assign(static_cast<std::size_t>(*cells), 0);
      for (int i = 0; i < runs; ++i) {
        std::size_t code = 0;
        for (int c : cols) code = code * levels + entries[static_cast<std::size_t>(i) * factors + c];
        ++counts[code];
      }
      for (std::size_t code = 0; code < counts.size(); ++code) {
        if (counts[code] != lambda) {
          CertificationWitness w;
          w.kind = WitnessKind::unbalanced_tuple;
          w.columns = cols;
          w.levels.resize(t);
          std::size_t rem = code;
          for (int d = t - 1; d >= 0; --d) { w.levels[d] = static_cast<int>(rem % levels); rem /= levels; }
          w.observed = counts[code];
          w.expected = lambda;
          found = w;
          return;
        }
      }
    } else {
      std::vector<std::vector<int>> rows(runs);
      for (int i = 0; i < runs; ++i) {
        rows[i].resize(t);
        for (int d = 0; d < t; ++d) rows[i][d] = entries[static_cast<std::size_t>(i) * factors + cols[d]];
      }
      std::sort(rows.begin(), rows.end());
      std::vector<int> expect(t, 0);  // next tuple that must appear, lexicographic
      auto advance = [&](std::vector<int>& tup) {
        for (int d = t - 1; d >= 0; --d) {
          if (++tup[d] < levels) return true;
          tup[d] = 0;
        }
        return false;
      };
      std::size_t i = 0;
      bool expect_valid = true;
      while (i < rows.size()) {
        std::size_t j = i;
        while (j < rows.size() && rows[j] == rows[i]) ++j;
        const long run_count = static_cast<long>(j - i);
        if (!expect_valid || rows[i] > expect) {
          CertificationWitness w;
          w.kind = WitnessKind::unbalanced_tuple;
          w.columns = cols;
          w.levels = expect;
          w.observed = 0;
          w.expected = lambda;
          found = w;
          return;
        }
        if (run_count != lambda) {
          CertificationWitness w;
          w.kind = WitnessKind::unbalanced_tuple;
          w.columns = cols;
          w.levels = rows[i];
          w.observed = run_count;
          w.expected = lambda;
          found = w;
          return;
        }
        expect_valid = advance(expect);
        i = j;
      }
      if (expect_valid) {  // some tuple never appeared
        CertificationWitness w;
        w.kind = WitnessKind::unbalanced_tuple;
        w.columns = cols;
        w.levels = expect;
        w.observed = 0;
        w.expected = lambda;
        found = w;
      }
    }
  });
  return found;
}

}  // namespace detail

// Checks the defining balance property.  achieved_strength ascends from
// t=1 until balance first fails (balance at strength t implies balance at
// every p < t, so no separate lower-order checks are needed); is_oa holds
// iff the claimed strength is reached.  Witnesses are deterministic:
// first failure in lexicographic column-subset order, then lexicographic
// tuple order.
inline CertificationResult verify_strength(const std::vector<int>& entries, int runs, int factors,
                                           int levels, int strength, const VerifyOptions& opt = {}) {
  detail::check_entries(entries, runs, factors, levels);
  if (strength < 1 || strength > factors)
    throw std::invalid_argument("verify_strength: strength must satisfy 1 <= h <= K");

  CertificationResult result;
  std::optional<CertificationWitness> first_failure;

  for (int t = 1; t <= factors; ++t) {
    const auto cells = detail::checked_pow(levels, t, static_cast<std::uint64_t>(runs));
    if (!cells || runs % static_cast<long>(*cells) != 0) {
      if (t <= strength) {
        CertificationWitness w;
        w.kind = WitnessKind::divisibility;
        w.expected = 0;
        w.observed = runs;
        first_failure = w;
      }
      break;
    }
    const long lambda_t = runs / static_cast<long>(*cells);
    auto witness = detail::find_imbalance(entries, runs, factors, levels, t, lambda_t, opt);
    if (witness) {
      if (t <= strength) first_failure = witness;
      break;
    }
    result.achieved_strength = t;
  }

  result.is_oa = result.achieved_strength >= strength;
  if (result.is_oa) {
    result.index_at_strength = runs / static_cast<long>(*detail::checked_pow(levels, strength, static_cast<std::uint64_t>(runs)));
  } else {
    result.witness = first_failure;
  }
  return result;
}

// Pairwise O(N^2 K) scan: defect-free iff no two distinct rows agree in
// more than `strength` columns.
inline CertificationResult verify_coincidence_free(const OrthogonalArray& oa) {
  CertificationResult result;
  result.is_oa = true;
  result.achieved_strength = oa.strength;
  result.index_at_strength = oa.index;
  result.coincidence_defect_free = true;
  for (int i = 0; i < oa.runs && *result.coincidence_defect_free; ++i) {
    for (int j = i + 1; j < oa.runs; ++j) {
      int agree = 0;
      for (int k = 0; k < oa.factors; ++k) {
        if (oa.at(i, k) == oa.at(j, k)) ++agree;
      }
      if (agree > oa.strength) {
        result.coincidence_defect_free = false;
        CertificationWitness w;
        w.kind = WitnessKind::row_pair;
        w.row_a = i;
        w.row_b = j;
        w.observed = agree;
        w.expected = oa.strength;
        result.witness = w;
        break;
      }
    }
  }
  return result;
}

struct Certification {
  CertificationResult result;
  std::optional<OrthogonalArray> array;  // populated when is_oa (defect flag recorded either way)
};

// Runs both checks and, on success, seals the matrix into a certified
// OrthogonalArray.
inline Certification certify_orthogonal_array(std::vector<int> entries, int runs, int factors,
                                              int levels, int strength, const VerifyOptions& opt = {}) {
  Certification out;
  out.result = verify_strength(entries, runs, factors, levels, strength, opt);
  if (!out.result.is_oa) return out;

  OrthogonalArray oa;
  oa.runs = runs;
  oa.factors = factors;
  oa.levels = levels;
  oa.strength = strength;
  oa.index = out.result.index_at_strength;
  oa.entries = std::move(entries);

  const CertificationResult defect = verify_coincidence_free(oa);
  out.result.coincidence_defect_free = defect.coincidence_defect_free;
  if (!*defect.coincidence_defect_free) out.result.witness = defect.witness;
  oa.defect_free = *defect.coincidence_defect_free;
  out.array = std::move(oa);
  return out;
}

// The 18-run, 6-factor, 3-level, strength-2 array of index two used for
// the desk experiments; certified on construction.
inline OrthogonalArray generate_table1() {
  static constexpr int kRows[18][6] = {
      {0, 0, 0, 0, 0, 0}, {1, 1, 1, 1, 1, 1}, {2, 2, 2, 2, 2, 2},
      {0, 0, 1, 2, 1, 2}, {1, 1, 2, 0, 2, 0}, {2, 2, 0, 1, 0, 1},
      {0, 1, 0, 2, 2, 1}, {1, 2, 1, 0, 0, 2}, {2, 0, 2, 1, 1, 0},
      {0, 2, 2, 0, 1, 1}, {1, 0, 0, 1, 2, 2}, {2, 1, 1, 2, 0, 0},
      {0, 1, 2, 1, 0, 2}, {1, 2, 0, 2, 1, 0}, {2, 0, 1, 0, 2, 1},
      {0, 2, 1, 1, 2, 0}, {1, 0, 2, 2, 0, 1}, {2, 1, 0, 0, 1, 2}};
  std::vector<int> entries;
  entries.reserve(std::size_t{18} * 6);
  for (const auto& row : kRows)
    for (int e : row) entries.push_back(e);
  auto cert = certify_orthogonal_array(std::move(entries), 18, 6, 3, 2);
  if (!cert.array || !cert.array->defect_free)
    throw std::logic_error("generate_table1: embedded array failed certification");
  return std::move(*cert.array);
}

inline bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; static_cast<long>(d) * d <= p; ++d) {
    if (p % d == 0) return false;
  }
  return true;
}

// OA(p^2, k, p, 2) of index one over GF(p): rows indexed by (x,y), columns
// x, y, and x + c*y (mod p) for c = 1,...,k-2.  Any two columns are
// linearly independent, so every pair projection hits each of the p^2
// level pairs exactly once.
inline OrthogonalArray generate_rao_hamming(int p, int k) {
  if (!is_prime(p)) throw std::invalid_argument("generate_rao_hamming: p must be prime");
  if (k < 2 || k > p + 1)
    throw std::invalid_argument("generate_rao_hamming: column count must satisfy 2 <= k <= p+1");
  std::vector<int> entries;
  entries.reserve(static_cast<std::size_t>(p) * p * k);
  for (int x = 0; x < p; ++x) {
    for (int y = 0; y < p; ++y) {
      entries.push_back(x);
      entries.push_back(y);
      for (int c = 1; c <= k - 2; ++c) entries.push_back((x + c * y) % p);
    }
  }
  auto cert = certify_orthogonal_array(std::move(entries), p * p, k, p, 2);
  if (!cert.array || !cert.array->defect_free)
    throw std::logic_error("generate_rao_hamming: constructed array failed certification");
  return std::move(*cert.array);
}

// --- text format ------------------------------------------------------
//
// First data line: "N K n h"; then N lines of K space-separated level
// indices.  '#' starts a comment that runs to end of line.  Parse and
// serialize round-trip byte-identically modulo comments and trailing
// whitespace.

struct OaParseError : std::runtime_error {
  OaParseError(const std::string& message, int line_number)
      : std::runtime_error(message + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
  int line;
};

struct OaCandidate {
  std::vector<int> entries;
  int runs = 0, factors = 0, levels = 0, strength = 0;
};

inline OaCandidate parse_oa_text(std::istream& in) {
  OaCandidate cand;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  int rows_read = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    if (!have_header) {
      int n_runs, n_factors, n_levels, n_strength;
      if (!(ls >> n_runs)) continue;  // blank/comment line
      if (!(ls >> n_factors >> n_levels >> n_strength))
        throw OaParseError("expected header 'N K n h'", line_no);
      std::string extra;
      if (ls >> extra) throw OaParseError("trailing tokens after header", line_no);
      if (n_runs <= 0 || n_factors <= 0) throw OaParseError("N and K must be positive", line_no);
      cand.runs = n_runs;
      cand.factors = n_factors;
      cand.levels = n_levels;
      cand.strength = n_strength;
      cand.entries.reserve(static_cast<std::size_t>(n_runs) * n_factors);
      have_header = true;
      continue;
    }
    int value;
    int row_values = 0;
    while (ls >> value) {
      if (rows_read >= cand.runs) throw OaParseError("more rows than the declared N", line_no);
      cand.entries.push_back(value);
      ++row_values;
    }
    if (row_values == 0) continue;
    if (row_values != cand.factors)
      throw OaParseError("expected " + std::to_string(cand.factors) + " entries in row", line_no);
    ++rows_read;
  }
  if (!have_header) throw OaParseError("missing header 'N K n h'", line_no);
  if (rows_read != cand.runs)
    throw OaParseError("expected " + std::to_string(cand.runs) + " rows, got " + std::to_string(rows_read),
                       line_no);
  return cand;
}

inline void write_oa_text(const OrthogonalArray& oa, std::ostream& out) {
  out << oa.runs << ' ' << oa.factors << ' ' << oa.levels << ' ' << oa.strength << '\n';
  for (int i = 0; i < oa.runs; ++i) {
    for (int k = 0; k < oa.factors; ++k) {
      if (k) out << ' ';
      out << oa.at(i, k);
    }
    out << '\n';
  }
}

inline std::string to_text(const OrthogonalArray& oa) {
  std::ostringstream out;
  write_oa_text(oa, out);
  return out.str();
}

}  // namespace oasf
