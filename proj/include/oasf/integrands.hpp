#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oasf {

// Named real-valued function on [0,1)^K.  Integrands defined on other
// boxes carry the affine source box and are evaluated through it, so mean
// and variance are always reported in the unit-cube convention.
struct Integrand {
  std::string name;
  int dims = 0;
  std::function<double(std::span<const double>)> eval;
  std::vector<std::pair<double, double>> source_box;  // empty when native to [0,1)^K
  std::optional<double> reference_mean;
  std::string reference_note;

  double operator()(std::span<const double> x) const { return eval(x); }
};

// f = (x1/2) { sqrt(1 + (x2 + x3^2) x4 / x1^2) - 1 } + x1 + 3 x4.
//
// Evaluated through the algebraically equal, cancellation-free
// rearrangement (sqrt(x1^2 + c) - x1)/2 = c / (2 (sqrt(x1^2 + c) + x1)).
inline double cox_function(double x1, double x2, double x3, double x4) {
  if (x1 <= 0.0) throw std::domain_error("cox_function: requires x1 > 0");
  const double c = (x2 + x3 * x3) * x4;
  return c / (2.0 * (std::sqrt(x1 * x1 + c) + x1)) + x1 + 3.0 * x4;
}

// Variant with the leading term read as a quotient,
// f = x1 / [ 2 { sqrt(1 + (x2 + x3^2) x4 / x1^2) - 1 } ] + x1 + 3 x4.
// Heavy-tailed near x4 = 0; kept for reference, not used by default.
inline double cox_function_as_printed(double x1, double x2, double x3, double x4) {
  if (x1 <= 0.0) throw std::domain_error("cox_function_as_printed: requires x1 > 0");
  const double t = (x2 + x3 * x3) * x4 / (x1 * x1);
  const double denom = 2.0 * (std::sqrt(1.0 + t) - 1.0);
  if (denom == 0.0) throw std::domain_error("cox_function_as_printed: division by zero at (x2+x3^2)x4 = 0");
  return x1 / denom + x1 + 3.0 * x4;
}

// Branin on [-5,10] x [0,15], standard form (first parenthesized term
// squared); its box mean is approximately 54.31.
inline double branin_function(double x1, double x2) {
  constexpr double kPi = 3.14159265358979323846;
  const double b = 5.1 / (4.0 * kPi * kPi);
  const double c = 5.0 / kPi;
  const double term = x2 - b * x1 * x1 + c * x1 - 6.0;
  return term * term + 10.0 * (1.0 - 1.0 / (8.0 * kPi)) * std::cos(x1) + 10.0;
}

// Variant with the first term left unsquared, exactly as printed.
inline double branin_function_as_printed(double x1, double x2) {
  constexpr double kPi = 3.14159265358979323846;
  const double b = 5.1 / (4.0 * kPi * kPi);
  const double c = 5.0 / kPi;
  return (x2 - b * x1 * x1 + c * x1 - 6.0) + 10.0 * (1.0 - 1.0 / (8.0 * kPi)) * std::cos(x1) + 10.0;
}

namespace detail {
inline void check_dims(std::span<const double> x, int dims, const char* name) {
  if (static_cast<int>(x.size()) < dims)
    throw std::invalid_argument(std::string(name) + ": point has fewer than " + std::to_string(dims) +
                                " coordinates");
}
}  // namespace detail

inline Integrand make_constant(int dims, double value = 1.0) {
  Integrand f;
  f.name = "constant";
  f.dims = dims;
  f.reference_mean = value;
  f.reference_note = "constant by definition";
  f.eval = [value](std::span<const double>) { return value; };
  return f;
}

// f(x) = x1 + ... + xK; exhausted by main effects, so any design of
// strength >= 1 balances it out.
inline Integrand make_additive(int dims) {
  Integrand f;
  f.name = "additive";
  f.dims = dims;
  f.reference_mean = dims / 2.0;
  f.reference_note = "sum of coordinate means";
  f.eval = [dims](std::span<const double> x) {
    detail::check_dims(x, dims, "additive");
    double s = 0.0;
    for (int k = 0; k < dims; ++k) s += x[k];
    return s;
  };
  return f;
}

// f(x) = x1 * x2; mean 1/4, pure bilinear interaction with
// integral r^2 = 1/144 once main effects are removed.
inline Integrand make_product2() {
  Integrand f;
  f.name = "product2";
  f.dims = 2;
  f.reference_mean = 0.25;
  f.reference_note = "closed form";
  f.eval = [](std::span<const double> x) {
    detail::check_dims(x, 2, "product2");
    return x[0] * x[1];
  };
  return f;
}

inline Integrand make_cox(bool as_printed = false) {
  Integrand f;
  f.name = as_printed ? "cox-as-printed" : "cox";
  f.dims = 4;
  if (!as_printed) {
    f.reference_mean = 2.1604;
    f.reference_note = "10^7-point Latin hypercube oracle";
    f.eval = [](std::span<const double> x) {
      detail::check_dims(x, 4, "cox");
      return cox_function(x[0], x[1], x[2], x[3]);
    };
  } else {
    f.eval = [](std::span<const double> x) {
      detail::check_dims(x, 4, "cox-as-printed");
      return cox_function_as_printed(x[0], x[1], x[2], x[3]);
    };
  }
  return f;
}

inline Integrand make_branin(bool as_printed = false) {
  Integrand f;
  f.name = as_printed ? "branin-as-printed" : "branin";
  f.dims = 2;
  f.source_box = {{-5.0, 10.0}, {0.0, 15.0}};
  if (!as_printed) {
    f.reference_mean = 54.3072;
    f.reference_note = "exact box mean (polynomial + cosine moments)";
  }
  f.eval = [as_printed](std::span<const double> x) {
    detail::check_dims(x, 2, "branin");
    const double x1 = -5.0 + 15.0 * x[0];
    const double x2 = 15.0 * x[1];
    return as_printed ? branin_function_as_printed(x1, x2) : branin_function(x1, x2);
  };
  return f;
}

// Registry used by the CLI.  `dims` is required for the integrands whose
// dimension is free (constant, additive) and must match for the rest.
inline Integrand make_integrand(const std::string& name, int dims = 0) {
  auto fixed = [&](Integrand f) {
    if (dims != 0 && dims != f.dims)
      throw std::invalid_argument("integrand '" + name + "' has fixed dimension " + std::to_string(f.dims));
    return f;
  };
  if (name == "constant") return make_constant(dims > 0 ? dims : 1);
  if (name == "additive") {
    if (dims <= 0) throw std::invalid_argument("integrand 'additive' needs an explicit dimension");
    return make_additive(dims);
  }
  if (name == "product2") return fixed(make_product2());
  if (name == "cox") return fixed(make_cox(false));
  if (name == "cox-as-printed") return fixed(make_cox(true));
  if (name == "branin") return fixed(make_branin(false));
  if (name == "branin-as-printed") return fixed(make_branin(true));
  throw std::invalid_argument("unknown integrand: " + name);
}

}  // namespace oasf
