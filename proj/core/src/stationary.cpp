#include "lbp/stationary.hpp"

#include <cmath>
#include <string>

#include "lbp/error.hpp"

namespace lbp {

namespace {

void check_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ModelError("theta must be finite and > 0, got " + std::to_string(theta));
}

// log P(Poisson(theta) = j)
double log_poisson(double theta, int j) { return j * std::log(theta) - theta - std::lgamma(j + 1.0); }

}  // namespace

double stationary_pmf(double theta, int n) {
  check_theta(theta);
  if (n < 1) return 0.0;
  return std::exp(n * std::log(theta) - std::lgamma(n + 1.0)) * std::exp(-theta) / -std::expm1(-theta);
}

double stationary_mean(double theta) {
  check_theta(theta);
  return theta / -std::expm1(-theta);
}

double size_biased_pmf(double theta, int n) {
  check_theta(theta);
  if (n < 1) return 0.0;
  return std::exp(log_poisson(theta, n - 1));
}

double size_biased_tail(double theta, int n) {
  check_theta(theta);
  if (n < 1) return 1.0;
  // Terms j > n: Poisson(j - 1). Past the mode successive ratios are at most
  // theta / n, so the tail is dominated by a geometric series.
  const double ratio = theta / (n + 1.0);
  if (ratio >= 1.0) {
    double mass = 0.0;
    for (int j = 1; j <= n; ++j) mass += size_biased_pmf(theta, j);
    return std::max(0.0, 1.0 - mass);
  }
  return size_biased_pmf(theta, n + 1) / (1.0 - ratio);
}

int size_biased_cutoff(double theta, double tol) {
  check_theta(theta);
  int n = 1;
  while (size_biased_tail(theta, n) >= tol) {
    ++n;
    if (n > 1'000'000) throw NumericalError("size-biased cutoff did not converge");
  }
  return n;
}

double chi_neutral(double theta) {
  check_theta(theta);
  if (theta < 1e-4) {
    // 1/2 - theta/6 + theta^2/24 - theta^3/120
    return 0.5 - theta / 6.0 + theta * theta / 24.0 - theta * theta * theta / 120.0;
  }
  return (std::expm1(-theta) + theta) / (theta * theta);
}

}  // namespace lbp
