#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "oasf/design.hpp"
#include "oasf/stratify.hpp"

namespace oasf {
namespace {

std::vector<int> floor_multiset(const Design& d, int column, int grain) {
  std::vector<int> cells;
  for (int i = 0; i < d.runs; ++i) cells.push_back(subdivision_index(d.at(i, column), grain));
  std::sort(cells.begin(), cells.end());
  return cells;
}

std::vector<int> iota_vector(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

TEST(LatinHypercube, SinglePointLiesInUnitCube) {
  const auto d = build_latin_hypercube(1, 3, RandomStream(5));
  ASSERT_EQ(d.runs, 1);
  for (int k = 0; k < 3; ++k) {
    EXPECT_GE(d.at(0, k), 0.0);
    EXPECT_LT(d.at(0, k), 1.0);
  }
}

TEST(LatinHypercube, EveryColumnIsLatin) {
  const auto d = build_latin_hypercube(18, 6, RandomStream(11));
  for (int k = 0; k < 6; ++k) EXPECT_EQ(floor_multiset(d, k, 18), iota_vector(18));
}

TEST(LatinHypercube, RejectsBadShapes) {
  EXPECT_THROW(build_latin_hypercube(0, 2, RandomStream(1)), std::invalid_argument);
  EXPECT_THROW(build_latin_hypercube(2, 0, RandomStream(1)), std::invalid_argument);
}

// Pooled coordinate mean over many replicates.  Each replicate's column
// mean is ((N-1)/2 + mean eta)/N, so the pooled mean concentrates around
// 1/2 far inside the stated 3 (12 R N)^(-1/2) budget.
TEST(LatinHypercube, ReplicatedCoordinateMeansAreUnbiased) {
  const int replicates = 100000;
  const int runs = 100;
  double sum[2] = {0.0, 0.0};
  for (int r = 0; r < replicates; ++r) {
    const auto d = build_latin_hypercube(runs, 2, RandomStream(2025, static_cast<std::uint64_t>(r)));
    for (int i = 0; i < runs; ++i) {
      sum[0] += d.at(i, 0);
      sum[1] += d.at(i, 1);
    }
  }
  const double bound = 3.0 / std::sqrt(12.0 * replicates * runs);
  EXPECT_NEAR(sum[0] / (static_cast<double>(replicates) * runs), 0.5, bound);
  EXPECT_NEAR(sum[1] / (static_cast<double>(replicates) * runs), 0.5, bound);
}

TEST(RandomizedOa, Table1PairsHoldExactlyTwoPointsPerCell) {
  const auto oa = generate_table1();
  const auto d = build_randomized_oa(oa, RandomStream(3));
  for_each_combination(6, 2, [&](const std::vector<int>& cols) {
    const auto report = audit_cells(d, cols, 3);
    EXPECT_TRUE(report.uniform);
    EXPECT_EQ(report.min_count, 2);
    EXPECT_EQ(report.max_count, 2);
  });
}

TEST(RandomizedOa, IndexOneArrayHoldsOnePointPerCell) {
  const auto oa = generate_rao_hamming(5, 6);
  const auto d = build_randomized_oa(oa, RandomStream(4));
  for_each_combination(6, 2, [&](const std::vector<int>& cols) {
    const auto report = audit_cells(d, cols, 5);
    EXPECT_TRUE(report.uniform);
    EXPECT_EQ(report.max_count, 1);
  });
}

TEST(RandomizedOa, DeterministicReplay) {
  const auto oa = generate_table1();
  const auto a = build_randomized_oa(oa, RandomStream(42, 9));
  const auto b = build_randomized_oa(oa, RandomStream(42, 9));
  EXPECT_EQ(a.points, b.points);
  const auto c = build_randomized_oa(oa, RandomStream(42, 10));
  EXPECT_NE(a.points, c.points);
}

TEST(RandomizedOa, RejectsUncertifiedArray) {
  auto oa = generate_table1();
  oa.defect_free = false;
  EXPECT_THROW(build_randomized_oa(oa, RandomStream(1)), std::invalid_argument);
  EXPECT_THROW(build_u_design(oa, RandomStream(1)), std::invalid_argument);
}

TEST(UDesign, Table1IsLatinAtGrainEighteenAndStratifiedInPairs) {
  const auto oa = generate_table1();
  const auto d = build_u_design(oa, RandomStream(6));
  for (int k = 0; k < 6; ++k) EXPECT_EQ(floor_multiset(d, k, 18), iota_vector(18));
  for_each_combination(6, 2, [&](const std::vector<int>& cols) {
    const auto report = audit_cells(d, cols, 3);
    EXPECT_TRUE(report.uniform);
    EXPECT_EQ(report.max_count, 2);
  });
}

TEST(UDesign, TwentyFiveRunColumnsAreLatin) {
  const auto oa = generate_rao_hamming(5, 6);
  const auto d = build_u_design(oa, RandomStream(7));
  for (int k = 0; k < 6; ++k) EXPECT_EQ(floor_multiset(d, k, 25), iota_vector(25));
}

// With N = n the per-level groups are singletons, alpha is identically
// zero and the U design reduces to the randomized OA with the same
// ingredient substreams.
TEST(UDesign, DegeneratesToRandomizedOaWhenLevelsEqualRuns) {
  std::vector<int> entries = {0, 1, 2, 3};
  auto cert = certify_orthogonal_array(entries, 4, 1, 4, 1);
  ASSERT_TRUE(cert.array.has_value());
  ASSERT_TRUE(cert.array->defect_free);
  const auto ud = build_u_design(*cert.array, RandomStream(8));
  const auto roa = build_randomized_oa(*cert.array, RandomStream(8));
  ASSERT_EQ(ud.points.size(), roa.points.size());
  for (std::size_t i = 0; i < ud.points.size(); ++i) {
    EXPECT_DOUBLE_EQ(ud.points[i], roa.points[i]);
  }
}

TEST(Designs, FullStratificationAuditPasses) {
  const auto table1 = generate_table1();
  const auto oa25 = generate_rao_hamming(5, 6);
  for (std::uint64_t id = 0; id < 8; ++id) {
    EXPECT_TRUE(assert_oa_stratification(build_randomized_oa(table1, RandomStream(1, id))).pass);
    EXPECT_TRUE(assert_oa_stratification(build_u_design(table1, RandomStream(2, id))).pass);
    EXPECT_TRUE(assert_oa_stratification(build_randomized_oa(oa25, RandomStream(3, id))).pass);
    EXPECT_TRUE(assert_oa_stratification(build_u_design(oa25, RandomStream(4, id))).pass);
  }
}

// Occupancy is a function of the cells alone: replacing each jitter by a
// fresh draw inside the same cell changes no count.
TEST(Designs, AuditCountsInvariantUnderReJitter) {
  const auto oa = generate_table1();
  const auto d = build_randomized_oa(oa, RandomStream(12));
  Design rejittered = d;
  RandomStream noise(991);
  for (int i = 0; i < d.runs; ++i) {
    for (int k = 0; k < d.dims; ++k) {
      const int cell = subdivision_index(d.at(i, k), d.n_levels);
      rejittered.points[static_cast<std::size_t>(i) * d.dims + k] =
          (cell + noise.next_double()) / d.n_levels;
    }
  }
  for_each_combination(6, 2, [&](const std::vector<int>& cols) {
    const auto a = audit_cells(d, cols, 3);
    const auto b = audit_cells(rejittered, cols, 3);
    EXPECT_EQ(a.counts, b.counts);
  });
}

// Pooled empirical CDF against the uniform at the deciles, all kinds.
TEST(Designs, MarginalUniformityDiagnostic) {
  const auto oa = generate_table1();
  const int replicates = 10000;
  const int runs = oa.runs;
  const double bound = 4.0 / std::sqrt(4.0 * replicates * runs);

  for (int kind = 0; kind < 3; ++kind) {
    std::vector<std::vector<double>> pooled(oa.factors);
    for (int r = 0; r < replicates; ++r) {
      RandomStream stream(77 + kind, static_cast<std::uint64_t>(r));
      const Design d = kind == 0   ? build_randomized_oa(oa, stream)
                       : kind == 1 ? build_u_design(oa, stream)
                                   : build_latin_hypercube(runs, oa.factors, stream);
      for (int k = 0; k < oa.factors; ++k) {
        for (int i = 0; i < runs; ++i) pooled[k].push_back(d.at(i, k));
      }
    }
    for (int k = 0; k < oa.factors; ++k) {
      std::sort(pooled[k].begin(), pooled[k].end());
      for (int g = 1; g <= 9; ++g) {
        const double q = g / 10.0;
        const auto below = std::lower_bound(pooled[k].begin(), pooled[k].end(), q) - pooled[k].begin();
        const double ecdf = static_cast<double>(below) / pooled[k].size();
        EXPECT_NEAR(ecdf, q, bound) << "kind " << kind << " column " << k << " decile " << g;
      }
    }
  }
}

TEST(DesignCsv, RoundTripPreservesEveryBit) {
  const auto d = build_u_design(generate_table1(), RandomStream(31));
  std::ostringstream out;
  write_design_csv(d, out);
  std::istringstream in(out.str());
  const auto back = read_design_csv(in);
  ASSERT_EQ(back.runs, d.runs);
  ASSERT_EQ(back.dims, d.dims);
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    EXPECT_EQ(back.points[i], d.points[i]) << "coordinate " << i;
  }
}

TEST(DesignCsv, RejectsGarbage) {
  std::istringstream empty("");
  EXPECT_THROW(read_design_csv(empty), DesignCsvError);
  std::istringstream bad("x1,x2\n0.5,oops\n");
  EXPECT_THROW(read_design_csv(bad), DesignCsvError);
}

}  // namespace
}  // namespace oasf
