#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oasf/anova.hpp"
#include "oasf/integrands.hpp"

namespace oasf {
namespace {

TEST(Decompose, ConstantFunctionIsPureMean) {
  const auto model = decompose(make_constant(3, 4.25), 2, 16);
  EXPECT_DOUBLE_EQ(model.mean, 4.25);
  EXPECT_EQ(model.sigma2, 0.0);
  for (const auto& table : model.effects) {
    for (double v : table.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(Decompose, AdditiveFunctionIsExhaustedByMainEffects) {
  const auto model = decompose(make_additive(2), 1, 64);
  EXPECT_NEAR(model.mean, 1.0, 1e-14);
  EXPECT_LT(model.sigma2, 1e-10);
}

// f = x1 x2 with h=1: mu = 1/4, f_{1}(x) = (x-1/2)/2, and the residual is
// (x1-1/2)(x2-1/2) whose square integrates to 1/144.  On the midpoint
// grid the partial averages are exact, so sigma2(m) = (1/144)(1-1/m^2)^2.
TEST(Decompose, Product2MatchesClosedForm) {
  const int m = 256;
  const auto model = decompose(make_product2(), 1, m);
  EXPECT_NEAR(model.mean, 0.25, 1e-14);
  EXPECT_NEAR(model.sigma2 * 144.0, 1.0, 2.0 / m);
  EXPECT_NEAR(model.sigma2, 1.0 / 144.0 * std::pow(1.0 - 1.0 / (double(m) * m), 2), 1e-15);

  ASSERT_EQ(model.effects.size(), 2u);
  for (const auto& table : model.effects) {
    ASSERT_EQ(table.values.size(), static_cast<std::size_t>(m));
    for (int j = 0; j < m; j += 37) {
      const double x = (j + 0.5) / m;
      EXPECT_NEAR(table.values[j], (x - 0.5) / 2.0, 1e-12);
    }
  }
}

// Brute-force quadrature oracle, independent of decompose(): direct
// midpoint sum of (x-1/2)^2 (y-1/2)^2 at m=4096.
TEST(Decompose, Product2BruteForceCrossCheck) {
  const int m = 4096;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double dx = (i + 0.5) / m - 0.5;
    double inner = 0.0;
    for (int j = 0; j < m; ++j) {
      const double dy = (j + 0.5) / m - 0.5;
      inner += dx * dx * dy * dy;
    }
    acc += inner;
  }
  const double brute = acc / (static_cast<double>(m) * m);
  EXPECT_NEAR(brute * 144.0, 1.0, 2.0 / m);
  const auto model = decompose(make_product2(), 1, 256);
  EXPECT_NEAR(model.sigma2, brute, 1e-2 / 144.0);
}

TEST(Decompose, ZeroIntegralIdentityHoldsOnEveryAxis) {
  for (const auto& model :
       {decompose(make_product2(), 1, 64), decompose(make_cox(), 2, 12)}) {
    const double tol = 1e-10 * std::max(model.rms, 1.0);
    const int m = model.resolution;
    for (const auto& table : model.effects) {
      const int d = static_cast<int>(table.columns.size());
      // average along each axis of the table at every fixed setting of
      // the other axes
      for (int axis = 0; axis < d; ++axis) {
        std::size_t outer = 1;
        for (int a = 0; a < d; ++a)
          if (a != axis) outer *= static_cast<std::size_t>(m);
        for (std::size_t fixed = 0; fixed < outer; ++fixed) {
          // decode `fixed` into indices of the non-axis dimensions
          std::vector<int> idx(d, 0);
          std::size_t rem = fixed;
          for (int a = d - 1; a >= 0; --a) {
            if (a == axis) continue;
            idx[a] = static_cast<int>(rem % m);
            rem /= m;
          }
          double sum = 0.0;
          for (int j = 0; j < m; ++j) {
            idx[axis] = j;
            std::size_t flat = 0;
            for (int a = 0; a < d; ++a) flat = flat * m + idx[a];
            sum += table.values[flat];
          }
          ASSERT_LT(std::abs(sum / m), tol);
        }
      }
    }
  }
}

TEST(Decompose, EffectsAreMutuallyOrthogonal) {
  const auto model = decompose(make_cox(), 2, 12);
  const int m = model.resolution;
  const double tol = 1e-10 * model.rms * model.rms;
  for (std::size_t a = 0; a < model.effects.size(); ++a) {
    for (std::size_t b = a + 1; b < model.effects.size(); ++b) {
      // inner product over the joint union grid
      std::vector<int> joint = model.effects[a].columns;
      for (int c : model.effects[b].columns) {
        if (std::find(joint.begin(), joint.end(), c) == joint.end()) joint.push_back(c);
      }
      std::sort(joint.begin(), joint.end());
      std::size_t cells = 1;
      for (std::size_t d = 0; d < joint.size(); ++d) cells *= static_cast<std::size_t>(m);
      std::vector<int> digits(model.dims, 0);
      double acc = 0.0;
      for (std::size_t flat = 0; flat < cells; ++flat) {
        std::size_t rem = flat;
        for (int j = static_cast<int>(joint.size()) - 1; j >= 0; --j) {
          digits[joint[j]] = static_cast<int>(rem % m);
          rem /= m;
        }
        acc += model.effect_at_node(model.effects[a], digits) *
               model.effect_at_node(model.effects[b], digits);
      }
      EXPECT_LT(std::abs(acc / static_cast<double>(cells)), tol)
          << "effects " << a << " and " << b;
    }
  }
}

TEST(Decompose, ResidualReconstructsTheFunctionAtNodes) {
  const auto model = decompose(make_cox(), 2, 8);
  const int m = model.resolution;
  std::vector<int> digits(4);
  std::vector<double> x(4);
  RandomStream pick(5);
  for (int trial = 0; trial < 200; ++trial) {
    for (int k = 0; k < 4; ++k) {
      digits[k] = static_cast<int>(pick.next_below(static_cast<std::uint64_t>(m)));
      x[k] = (digits[k] + 0.5) / m;
    }
    double reconstructed = model.mean;
    for (const auto& table : model.effects) reconstructed += model.effect_at_node(table, digits);
    const double r = model.residual_at(x);
    EXPECT_NEAR(reconstructed + r, model.integrand(x), 1e-11 * std::max(1.0, model.rms));
  }
}

// Var decomposition consistency: integral f^2 - mu^2 = sum_u int f_u^2 + sigma2.
TEST(Decompose, VarianceDecompositionIsConsistent) {
  const auto model = decompose(make_cox(), 2, 16);
  double effect_part = 0.0;
  for (const auto& table : model.effects) {
    double acc = 0.0;
    for (double v : table.values) acc += v * v;
    effect_part += acc / static_cast<double>(table.values.size());
  }
  EXPECT_NEAR(model.total_variance, effect_part + model.sigma2, 1e-10 * model.rms * model.rms);
}

// sigma2(m) - sigma2(2m) = (1/144)(3/2)/m^2 + O(m^-4) for f = x1 x2.
TEST(Decompose, RefinementConvergenceAtKnownRate) {
  for (int m : {32, 64, 128}) {
    const double s_m = decompose(make_product2(), 1, m).sigma2;
    const double s_2m = decompose(make_product2(), 1, 2 * m).sigma2;
    const double diff = std::abs(s_m - s_2m);
    const double predicted = (1.0 / 144.0) * 1.5 / (static_cast<double>(m) * m);
    EXPECT_LT(diff, 1.02 * predicted);
    EXPECT_GT(diff, 0.98 * predicted);
    EXPECT_LT(diff, 1.0 / m);  // the coarse C/m envelope
  }
}

TEST(Decompose, BitStableAcrossThreadCounts) {
  AnovaOptions one, four, eight;
  one.threads = 1;
  four.threads = 4;
  eight.threads = 8;
  const auto a = decompose(make_cox(), 2, 16, one);
  const auto b = decompose(make_cox(), 2, 16, four);
  const auto c = decompose(make_cox(), 2, 16, eight);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.sigma2, b.sigma2);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.sigma2, c.sigma2);
  for (std::size_t s = 0; s < a.effects.size(); ++s) {
    EXPECT_EQ(a.effects[s].values, b.effects[s].values);
    EXPECT_EQ(a.effects[s].values, c.effects[s].values);
  }
}

TEST(Decompose, RejectsDegenerateStrengthAndResolution) {
  EXPECT_THROW(decompose(make_product2(), 2, 16), std::invalid_argument);  // h = K
  EXPECT_THROW(decompose(make_product2(), 0, 16), std::invalid_argument);
  EXPECT_THROW(decompose(make_product2(), 1, 1), std::invalid_argument);
}

TEST(Decompose, NodeCapIsEnforced) {
  AnovaOptions opt;
  opt.node_cap = 1000;
  EXPECT_THROW(decompose(make_product2(), 1, 64, opt), ResourceError);
}

TEST(Decompose, NonFiniteValueNamesTheGridPoint) {
  Integrand f;
  f.name = "bad";
  f.dims = 2;
  f.eval = [](std::span<const double> x) {
    return x[0] > 0.5 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  try {
    decompose(f, 1, 8);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("grid point"), std::string::npos);
  }
}

TEST(ResidualVarianceMc, ConstantIsExactlyZero) {
  const auto model = decompose(make_constant(2, 3.0), 1, 8);
  const auto est = residual_variance_mc(model, 1000, RandomStream(1));
  EXPECT_EQ(est.estimate, 0.0);
}

// For f = x1 x2 the effects are linear, the interpolated tables are exact
// and the MC estimate is unbiased for 1/144; the grid value differs only
// by its own O(m^-2) discretization.
TEST(ResidualVarianceMc, Product2AgreesWithClosedForm) {
  const auto model = decompose(make_product2(), 1, 256);
  const auto est = residual_variance_mc(model, 1000000, RandomStream(77));
  EXPECT_NEAR(est.estimate, 1.0 / 144.0, 3.0 * est.standard_error);
  EXPECT_GT(est.standard_error, 0.0);
}

// Two-route agreement for the Cox integrand at h=2.  The grid estimate
// carries O(m^-2) discretization error that dominates the MC standard
// error, so the tolerance combines the MC se with the grid refinement
// error |sigma2(m) - sigma2(m/2)|.
TEST(ResidualVarianceMc, CoxAgreesWithGridSigma2) {
  const auto coarse = decompose(make_cox(), 2, 32);
  const auto model = decompose(make_cox(), 2, 64);
  const auto est = residual_variance_mc(model, 1000000, RandomStream(4242));
  const double grid_uncertainty = std::abs(model.sigma2 - coarse.sigma2);
  EXPECT_NEAR(est.estimate, model.sigma2, 3.0 * (est.standard_error + grid_uncertainty));
}

TEST(CovarianceMatrix, SingleModelReducesToSigma2) {
  const auto model = decompose(make_product2(), 1, 64);
  const auto sigma = covariance_matrix(std::span(&model, 1));
  ASSERT_EQ(sigma.size(), 1u);
  EXPECT_NEAR(sigma[0][0], model.sigma2, 1e-15);
}

TEST(CovarianceMatrix, ScaledFunctionGivesRankOneMatrix) {
  Integrand doubled = make_product2();
  doubled.name = "product2x2";
  auto base_eval = doubled.eval;
  doubled.eval = [base_eval](std::span<const double> x) { return 2.0 * base_eval(x); };

  std::vector<AnovaModel> models;
  models.push_back(decompose(make_product2(), 1, 64));
  models.push_back(decompose(doubled, 1, 64));
  const auto sigma = covariance_matrix(models);
  const double s2 = models[0].sigma2;
  EXPECT_NEAR(sigma[0][0], s2, 1e-12 * s2);
  EXPECT_NEAR(sigma[0][1], 2 * s2, 1e-12 * s2);
  EXPECT_NEAR(sigma[1][0], 2 * s2, 1e-12 * s2);
  EXPECT_NEAR(sigma[1][1], 4 * s2, 1e-12 * s2);
  EXPECT_NEAR(sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0], 0.0, 1e-12 * s2 * s2);
}

// Residuals (x1-.5)(x2-.5) and (x1-.5)(x3-.5) live in orthogonal
// interaction subspaces: the cross moment factors into a zero mean.
TEST(CovarianceMatrix, DisjointInteractionsAreUncorrelated) {
  Integrand f13;
  f13.name = "product13";
  f13.dims = 3;
  f13.eval = [](std::span<const double> x) { return x[0] * x[2]; };
  Integrand f12;
  f12.name = "product12";
  f12.dims = 3;
  f12.eval = [](std::span<const double> x) { return x[0] * x[1]; };

  std::vector<AnovaModel> models;
  models.push_back(decompose(f12, 1, 32));
  models.push_back(decompose(f13, 1, 32));
  const auto sigma = covariance_matrix(models);
  EXPECT_NEAR(sigma[0][0], 1.0 / 144.0, 1e-4);
  EXPECT_NEAR(sigma[1][1], 1.0 / 144.0, 1e-4);
  EXPECT_LT(std::abs(sigma[0][1]), 1e-10);
}

TEST(CovarianceMatrix, RejectsMismatchedGrids) {
  std::vector<AnovaModel> models;
  models.push_back(decompose(make_product2(), 1, 32));
  models.push_back(decompose(make_product2(), 1, 64));
  EXPECT_THROW(covariance_matrix(models), std::invalid_argument);
}

}  // namespace
}  // namespace oasf
