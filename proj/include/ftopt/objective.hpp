#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace ftopt {

// h(x) = a/2 (x - c)^2
struct QuadraticCost {
  double center = 0.0;
  double curvature = 1.0;

  QuadraticCost() = default;
  QuadraticCost(double c, double a) : center(c), curvature(a) {
    if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(c))
      throw std::invalid_argument("quadratic cost needs finite center and positive curvature");
  }

  double value(double x) const { return 0.5 * curvature * (x - center) * (x - center); }
  double gradient(double x) const { return curvature * (x - center); }
};

inline double gradient(const QuadraticCost& h, double x) { return h.gradient(x); }

using CostFamily = std::vector<QuadraticCost>;

class ConstraintInterval {
 public:
  ConstraintInterval() = default;
  ConstraintInterval(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
      throw std::invalid_argument("constraint interval needs finite lo <= hi");
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double project(double x) const { return std::clamp(x, lo_, hi_); }
  bool contains(double x, double tol = 0.0) const { return x >= lo_ - tol && x <= hi_ + tol; }
  // Dist(x, X)
  double distance(double x) const { return std::abs(x - project(x)); }

  friend bool operator==(const ConstraintInterval&, const ConstraintInterval&) = default;

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

inline double project(const ConstraintInterval& X, double x) { return X.project(x); }

// λ[t] = λ0 / (t+1)^p, p in (0.5, 1]
class StepSchedule {
 public:
  StepSchedule() = default;
  StepSchedule(double lambda0, double p) : lambda0_(lambda0), p_(p) {
    if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) throw std::invalid_argument("lambda0 must be positive");
    if (!(p > 0.5 && p <= 1.0)) throw std::invalid_argument("exponent p must lie in (0.5, 1]");
  }

  double lambda0() const { return lambda0_; }
  double exponent() const { return p_; }

  double operator()(std::size_t t) const {
    const double base = static_cast<double>(t) + 1.0;
    return p_ == 1.0 ? lambda0_ / base : lambda0_ / std::pow(base, p_);
  }

  friend bool operator==(const StepSchedule&, const StepSchedule&) = default;

 private:
  double lambda0_ = 1.0;
  double p_ = 1.0;
};

// Quadratic gradients are monotone, so the maximum magnitude over X sits at an endpoint.
inline double lipschitz_bound(std::span<const QuadraticCost> family, const ConstraintInterval& X) {
  double L = 0.0;
  for (const auto& h : family) L = std::max({L, std::abs(h.gradient(X.lo())), std::abs(h.gradient(X.hi()))});
  return L;
}

// argmin of sum_i w_i h_i; closed form for quadratics.
inline double weighted_argmin(std::span<const QuadraticCost> family, std::span<const double> weights) {
  if (family.size() != weights.size()) throw std::invalid_argument("weight count mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    num += weights[i] * family[i].curvature * family[i].center;
    den += weights[i] * family[i].curvature;
  }
  if (!(den > 0.0)) throw std::invalid_argument("weights must have positive mass");
  return num / den;
}

}  // namespace ftopt
