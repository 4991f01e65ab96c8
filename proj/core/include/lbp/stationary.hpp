#pragma once

namespace lbp {

// Stationary law of the single-type logistic branching process with
// theta = b/c: Poisson(theta) conditioned on being nonzero.
double stationary_pmf(double theta, int n);

// Its mean, theta / (1 - e^-theta).
double stationary_mean(double theta);

// Size-biased stationary law n P(xi = n) / E(xi) = e^-theta theta^(n-1) / (n-1)!,
// the resident size seen by a mutant born at a birth event.
double size_biased_pmf(double theta, int n);

// Upper bound on sum_{j > n} size_biased_pmf(theta, j).
double size_biased_tail(double theta, int n);

// Smallest n with size_biased_tail(theta, n) < tol.
int size_biased_cutoff(double theta, double tol);

// Neutral invasion fitness (e^-theta - 1 + theta) / theta^2.
double chi_neutral(double theta);

}  // namespace lbp
