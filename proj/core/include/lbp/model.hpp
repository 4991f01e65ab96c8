#pragma once

#include <compare>
#include <filesystem>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lbp/expression.hpp"
#include "lbp/random.hpp"
#include "lbp/selection.hpp"

namespace lbp {

// A point of the trait space R^k. Entries are always finite.
class TraitPoint {
 public:
  TraitPoint() = default;
  explicit TraitPoint(std::vector<double> coords);
  TraitPoint(std::initializer_list<double> coords);
  explicit TraitPoint(const Eigen::VectorXd& v);

  std::size_t dimension() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }
  Eigen::VectorXd to_vector() const;

  TraitPoint operator+(const Eigen::VectorXd& step) const;

  auto operator<=>(const TraitPoint&) const = default;
  bool operator==(const TraitPoint&) const = default;

 private:
  std::vector<double> coords_;
};

enum class KernelKind { kIsotropicGaussian, kDiagonalGaussian, kFullGaussian };

const char* kernel_kind_name(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

// Centred Gaussian law M(x, dh) of the mutation step h = y - x, given through
// a square root sigma(x) of its covariance. Entries of sigma are expressions
// of x: one for the isotropic kind (sigma * I), k for the diagonal kind, k*k
// (row major) for the full kind.
class MutationKernel {
 public:
  MutationKernel() = default;
  MutationKernel(KernelKind kind, int dimension, std::vector<Expression> entries);

  static MutationKernel isotropic(int dimension, double sigma);

  KernelKind kind() const noexcept { return kind_; }
  Eigen::MatrixXd sigma(const TraitPoint& x) const;
  Eigen::VectorXd sample(const TraitPoint& x, Rng& rng) const;
  const std::vector<Expression>& entries() const noexcept { return entries_; }

 private:
  KernelKind kind_ = KernelKind::kIsotropicGaussian;
  int dimension_ = 1;
  std::vector<Expression> entries_;
};

// The ecological functions of a scenario: birth b(x), competition c(x, y),
// mutation probability mu(x) and the mutation kernel.
class ModelSpec {
 public:
  ModelSpec(int dimension, Expression birth, Expression competition, Expression mutation_prob, double c_min,
            MutationKernel kernel);

  int dimension() const noexcept { return dimension_; }
  double c_min() const noexcept { return c_min_; }
  const MutationKernel& kernel() const noexcept { return kernel_; }
  const Expression& birth_expr() const noexcept { return birth_; }
  const Expression& competition_expr() const noexcept { return competition_; }
  const Expression& mutation_expr() const noexcept { return mutation_prob_; }

  // Checked evaluations; throw ModelError on a non-finite result or a
  // violated range (b > 0, c >= c_min, mu in [0, 1]).
  double b(const TraitPoint& x) const;
  double c(const TraitPoint& x, const TraitPoint& y) const;
  double mu(const TraitPoint& x) const;
  // b(x) / c(x, x).
  double theta(const TraitPoint& x) const;

  // Same model with c(x, y) and c_min divided by k.
  ModelSpec with_competition_scaled(double k) const;
  // Same model with the mutation kernel replaced.
  ModelSpec with_kernel(MutationKernel kernel) const;

  // Canonical configuration text; parse_model(to_config()) reproduces the model.
  std::string to_config() const;

 private:
  void check_point(const TraitPoint& x) const;

  int dimension_;
  Expression birth_;
  Expression competition_;
  Expression mutation_prob_;
  double c_min_;
  MutationKernel kernel_;
};

// Parses the configuration format:
//
//   [model]
//   k = 1
//   b = 1 + exp(-x1^2)
//   c = 0.5
//   mu = 1            (default 1)
//   c_min = 1e-9      (default 1e-9)
//   [mutation]
//   kind = isotropic-gaussian | diagonal-gaussian | full-gaussian
//   sigma = 0.1                     isotropic
//   sigma = [0.1, 0.2]              diagonal
//   sigma = [0.1, 0; 0.05, 0.2]     full, rows separated by ';'
//
// Statements are separated by newlines or ';' (outside brackets); '#' starts a
// comment. Keys before any section header belong to [model]; a header may be
// followed by a statement on the same line. Unknown keys and
// sections are rejected.
ModelSpec parse_model(std::string_view config_text);
ModelSpec load_model(const std::filesystem::path& path);

// (b(x), b(y), c(x,x), c(x,y), c(y,x), c(y,y)).
TwoTypeRates eval_rates(const ModelSpec& m, const TraitPoint& x, const TraitPoint& y);

// Central finite-difference gradients with per-coordinate step
// 1e-5 * max(1, |x_i|). grad_c1 differentiates the first slot of c at (x, x),
// grad_c2 the second.
Eigen::VectorXd grad_b(const ModelSpec& m, const TraitPoint& x);
Eigen::VectorXd grad_c1(const ModelSpec& m, const TraitPoint& x);
Eigen::VectorXd grad_c2(const ModelSpec& m, const TraitPoint& x);

}  // namespace lbp
