#include "lbp/fixation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "lbp/error.hpp"
#include "lbp/stationary.hpp"

namespace lbp {

namespace {

constexpr double kChiTailTol = 1e-12;

std::size_t tri_index(int n, int m) {
  const auto s = static_cast<std::size_t>(n + m);
  return s * (s + 1) / 2 + static_cast<std::size_t>(m);
}

// Interior unknowns (n, m >= 1, 2 <= n + m <= n_max), ordered by total size
// then by n.
Eigen::Index interior_index(int n, int m) {
  const auto s = static_cast<Eigen::Index>(n + m);
  return (s - 2) * (s - 1) / 2 + (n - 1);
}

Eigen::Index interior_count(int n_max) { return static_cast<Eigen::Index>(n_max - 1) * n_max / 2; }

// One row of the embedded jump chain at an interior state.
struct Transitions {
  double x_birth, y_birth, x_death, y_death;  // probabilities
};

Transitions transitions(const TwoTypeRates& r, int n, int m, int n_max) {
  const bool births = n + m < n_max;
  const double xb = births ? n * r.b_x : 0.0;
  const double yb = births ? m * r.b_y : 0.0;
  const double xd = n * (r.c_xx * (n - 1) + r.c_xy * m);
  const double yd = m * (r.c_yx * n + r.c_yy * (m - 1));
  const double total = xb + yb + xd + yd;
  return {xb / total, yb / total, xd / total, yd / total};
}

template <typename F>
void for_each_interior(int n_max, F&& f) {
  for (int s = 2; s <= n_max; ++s)
    for (int n = 1; n < s; ++n) f(n, s - n);
}

// u at a neighbour, boundary values folded in: u(0, m) = 1, u(n, 0) = 0.
double neighbour(const std::vector<double>& full, int n, int m) {
  if (n == 0) return 1.0;
  if (m == 0) return 0.0;
  return full[tri_index(n, m)];
}

double residual_inf(const TwoTypeRates& r, int n_max, const std::vector<double>& full) {
  double worst = 0.0;
  for_each_interior(n_max, [&](int n, int m) {
    const Transitions t = transitions(r, n, m, n_max);
    double rhs = t.x_death * neighbour(full, n - 1, m) + t.y_death * neighbour(full, n, m - 1);
    if (n + m < n_max) rhs += t.x_birth * full[tri_index(n + 1, m)] + t.y_birth * full[tri_index(n, m + 1)];
    worst = std::max(worst, std::abs(full[tri_index(n, m)] - rhs));
  });
  return worst;
}

std::vector<double> boundary_filled(int n_max) {
  std::vector<double> full(tri_index(0, n_max) + 1, 0.0);
  for (int m = 1; m <= n_max; ++m) full[tri_index(0, m)] = 1.0;
  full[0] = std::nan("");
  return full;
}

}  // namespace

FixationTable::FixationTable(TwoTypeRates rates, int n_max, std::vector<double> u, double residual)
    : rates_(rates), n_max_(n_max), u_(std::move(u)), residual_(residual) {}

double FixationTable::u(int n, int m) const {
  if (n < 0 || m < 0 || n + m > n_max_ || n + m == 0) {
    throw std::out_of_range("u(" + std::to_string(n) + ", " + std::to_string(m) + ") outside lattice with n_max=" +
                            std::to_string(n_max_));
  }
  return u_[tri_index(n, m)];
}

void FixationTable::write_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "# rates: b_x=" << rates_.b_x << " b_y=" << rates_.b_y << " c_xx=" << rates_.c_xx << " c_xy=" << rates_.c_xy
      << " c_yx=" << rates_.c_yx << " c_yy=" << rates_.c_yy << "\n"
      << "# n_max: " << n_max_ << "\n"
      << "# residual: " << residual_ << "\n"
      << "# trunc_error: " << trunc_error_ << "\n"
      << "n,m,u\n";
  for (int s = 1; s <= n_max_; ++s)
    for (int n = s; n >= 0; --n) out << n << ',' << s - n << ',' << u_[tri_index(n, s - n)] << '\n';
  out.precision(old);
}

struct LatticeSolver::Impl {
  Eigen::SparseMatrix<double> a;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
};

LatticeSolver::LatticeSolver(int n_max, FixationMethod method)
    : n_max_(n_max), method_(method), impl_(std::make_unique<Impl>()) {
  if (n_max < 2) throw std::invalid_argument("lattice needs n_max >= 2");
}

LatticeSolver::~LatticeSolver() = default;
LatticeSolver::LatticeSolver(LatticeSolver&&) noexcept = default;
LatticeSolver& LatticeSolver::operator=(LatticeSolver&&) noexcept = default;

FixationTable LatticeSolver::solve(const TwoTypeRates& rates, double tol_resid, int max_sweeps) {
  rates.validate();
  std::vector<double> full = boundary_filled(n_max_);

  if (method_ == FixationMethod::kGaussSeidel) {
    // Start from the neutral solution m / (n + m); sweep up then down in total size.
    for_each_interior(n_max_, [&](int n, int m) { full[tri_index(n, m)] = static_cast<double>(m) / (n + m); });
    auto relax = [&](int n, int m) {
      const Transitions t = transitions(rates, n, m, n_max_);
      double v = t.x_death * neighbour(full, n - 1, m) + t.y_death * neighbour(full, n, m - 1);
      if (n + m < n_max_) v += t.x_birth * full[tri_index(n + 1, m)] + t.y_birth * full[tri_index(n, m + 1)];
      full[tri_index(n, m)] = v;
    };
    double res = residual_inf(rates, n_max_, full);
    int sweeps = 0;
    while (res > tol_resid) {
      if (sweeps >= max_sweeps) {
        throw NumericalError("Gauss-Seidel reached the sweep cap (" + std::to_string(max_sweeps) +
                             ") with residual " + std::to_string(res));
      }
      for (int s = 2; s <= n_max_; ++s)
        for (int n = 1; n < s; ++n) relax(n, s - n);
      for (int s = n_max_; s >= 2; --s)
        for (int n = s - 1; n >= 1; --n) relax(n, s - n);
      sweeps += 2;
      if (sweeps % 8 == 0 || sweeps < 8) res = residual_inf(rates, n_max_, full);
    }
    return FixationTable(rates, n_max_, std::move(full), res);
  }

  const Eigen::Index count = interior_count(n_max_);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(count) * 5);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(count);
  for_each_interior(n_max_, [&](int n, int m) {
    const Eigen::Index row = interior_index(n, m);
    const Transitions t = transitions(rates, n, m, n_max_);
    triplets.emplace_back(row, row, 1.0);
    if (n == 1)
      rhs[row] += t.x_death;
    else
      triplets.emplace_back(row, interior_index(n - 1, m), -t.x_death);
    if (m > 1) triplets.emplace_back(row, interior_index(n, m - 1), -t.y_death);
    if (n + m < n_max_) {
      triplets.emplace_back(row, interior_index(n + 1, m), -t.x_birth);
      triplets.emplace_back(row, interior_index(n, m + 1), -t.y_birth);
    }
  });
  auto& a = impl_->a;
  a.resize(count, count);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  if (!impl_->analyzed) {
    impl_->lu.analyzePattern(a);
    impl_->analyzed = true;
  }
  impl_->lu.factorize(a);
  if (impl_->lu.info() != Eigen::Success) throw NumericalError("sparse LU factorization failed: " + impl_->lu.lastErrorMessage());

  Eigen::VectorXd x = impl_->lu.solve(rhs);
  auto scatter = [&]() {
    for_each_interior(n_max_, [&](int n, int m) { full[tri_index(n, m)] = x[interior_index(n, m)]; });
  };
  scatter();
  double res = residual_inf(rates, n_max_, full);
  // Iterative refinement.
  for (int pass = 0; pass < 4 && res > tol_resid; ++pass) {
    const Eigen::VectorXd r = rhs - a * x;
    x += impl_->lu.solve(r);
    scatter();
    res = residual_inf(rates, n_max_, full);
  }
  if (!(res <= tol_resid)) {
    throw NumericalError("fixation solve residual " + std::to_string(res) + " above tolerance " +
                         std::to_string(tol_resid) + " for rates " + rates.to_string());
  }
  for (auto& v : full) v = std::clamp(v, 0.0, 1.0);
  full[0] = std::nan("");
  return FixationTable(rates, n_max_, std::move(full), res);
}

FixationTable solve_fixation(const TwoTypeRates& rates, const FixationOptions& options) {
  if (!(options.tol_trunc > 0.0 && options.tol_trunc < 1.0) || !(options.tol_resid > 0.0 && options.tol_resid < 1.0)) {
    throw std::invalid_argument("fixation tolerances must lie in (0, 1)");
  }
  rates.validate();
  int n_max = std::max(options.n_max_initial, 8);
  while (n_max / 2 < options.min_coverage) n_max *= 2;
  if (n_max > options.n_max_cap) {
    throw NumericalError("required lattice n_max=" + std::to_string(n_max) + " exceeds the cap " +
                         std::to_string(options.n_max_cap));
  }

  auto solve_at = [&](int size) { return LatticeSolver(size, options.method).solve(rates, options.tol_resid, options.max_sweeps); };

  FixationTable coarse = solve_at(n_max / 2);
  for (;;) {
    FixationTable fine = solve_at(n_max);
    double change = 0.0;
    for (int s = 1; s <= n_max / 4; ++s)
      for (int n = 0; n <= s; ++n) change = std::max(change, std::abs(fine.u(n, s - n) - coarse.u(n, s - n)));
    fine.trunc_error_ = change;
    if (change <= options.tol_trunc) return fine;
    if (n_max * 2 > options.n_max_cap) {
      throw NumericalError("n_max cap " + std::to_string(options.n_max_cap) + " reached with truncation change " +
                           std::to_string(change) + " for rates " + rates.to_string());
    }
    n_max *= 2;
    coarse = std::move(fine);
  }
}

int chi_coverage(double theta) { return size_biased_cutoff(theta, kChiTailTol) + 1; }

double chi(const FixationTable& table, double theta) {
  const int last = size_biased_cutoff(theta, kChiTailTol);
  if (last + 1 > table.coverage()) {
    throw NumericalError("fixation table (n_max=" + std::to_string(table.n_max()) +
                         ") too small for chi at theta=" + std::to_string(theta) + ": needs n+m up to " +
                         std::to_string(last + 1) + "; re-solve with a larger n_max");
  }
  double sum = 0.0;
  for (int n = 1; n <= last; ++n) sum += size_biased_pmf(theta, n) * table.u(n, 1);
  return std::clamp(sum, 0.0, 1.0);
}

double chi(const ModelSpec& m, const TraitPoint& x, const TraitPoint& y, FixationOptions options) {
  const TwoTypeRates r = eval_rates(m, x, y);
  const double theta = r.b_x / r.c_xx;
  options.min_coverage = std::max(options.min_coverage, chi_coverage(theta));
  return chi(solve_fixation(r, options), theta);
}

}  // namespace lbp
