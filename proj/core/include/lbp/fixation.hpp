#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "lbp/model.hpp"
#include "lbp/selection.hpp"

namespace lbp {

enum class FixationMethod { kSparseLU, kGaussSeidel };

struct FixationOptions {
  double tol_trunc = 1e-8;
  double tol_resid = 1e-12;
  int n_max_initial = 64;
  int n_max_cap = 4096;
  // Total size n + m that must lie inside the validated part of the lattice
  // (n + m <= n_max / 2). Raises the starting n_max when needed.
  int min_coverage = 0;
  FixationMethod method = FixationMethod::kSparseLU;
  int max_sweeps = 200'000;  // Gauss-Seidel only
};

// Fixation probabilities u_{n,m} = P(resident count hits 0 first | X_0 = n, Y_0 = m)
// for the two-type logistic chain, on the lattice 1 <= n + m <= n_max.
// Immutable once built.
class FixationTable {
 public:
  FixationTable(TwoTypeRates rates, int n_max, std::vector<double> u, double residual);

  const TwoTypeRates& rates() const noexcept { return rates_; }
  int n_max() const noexcept { return n_max_; }
  // Largest total size n + m whose values are covered by the truncation check.
  int coverage() const noexcept { return n_max_ / 2; }
  double residual() const noexcept { return residual_; }
  double trunc_error() const noexcept { return trunc_error_; }

  // Throws std::out_of_range outside the lattice or at (0, 0).
  double u(int n, int m) const;

  // CSV with columns n,m,u preceded by '#' metadata lines.
  void write_csv(std::ostream& out) const;

 private:
  friend FixationTable solve_fixation(const TwoTypeRates&, const FixationOptions&);

  TwoTypeRates rates_;
  int n_max_;
  std::vector<double> u_;  // triangle index (n+m)(n+m+1)/2 + m
  double residual_;
  double trunc_error_ = 0.0;
};

// Solves the harmonic equations of the absorbing two-type chain on a fixed
// lattice. Births out of the outer shell n + m = n_max are suppressed. The
// sparsity pattern depends only on n_max, so one solver serves many rate sets.
class LatticeSolver {
 public:
  LatticeSolver(int n_max, FixationMethod method = FixationMethod::kSparseLU);
  ~LatticeSolver();
  LatticeSolver(LatticeSolver&&) noexcept;
  LatticeSolver& operator=(LatticeSolver&&) noexcept;

  int n_max() const noexcept { return n_max_; }

  // Throws NumericalError when the residual cannot be brought to tol_resid.
  FixationTable solve(const TwoTypeRates& rates, double tol_resid = 1e-12, int max_sweeps = 200'000);

 private:
  struct Impl;
  int n_max_;
  FixationMethod method_;
  std::unique_ptr<Impl> impl_;
};

// Doubles n_max from the starting value until the sup-change of u between the
// n_max/2 and n_max solves over n + m <= n_max/4 is at most tol_trunc; that
// change is reported as trunc_error.
FixationTable solve_fixation(const TwoTypeRates& rates, const FixationOptions& options = {});

// Invasion fitness sum_{n>=1} e^-theta theta^(n-1)/(n-1)! u_{n,1}, the sum cut
// once the remaining Poisson mass is below 1e-12. Throws NumericalError when
// the table does not cover the sizes the sum needs.
double chi(const FixationTable& table, double theta);

// chi(x, y) for a model, solving the fixation problem for (x, y).
double chi(const ModelSpec& m, const TraitPoint& x, const TraitPoint& y, FixationOptions options = {});

// Largest total size the chi sum at theta needs.
int chi_coverage(double theta);

}  // namespace lbp
