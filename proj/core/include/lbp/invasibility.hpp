#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lbp/fixation.hpp"
#include "lbp/model.hpp"
#include "lbp/selection.hpp"

namespace lbp {

struct DifferentiationOptions {
  // Central-difference step in units of c.
  double rel_step = 1e-4;
  // Extrapolate with steps h and h/2 when the split spread exceeds this.
  double richardson_threshold = 1e-4;
  FixationOptions fixation{};
};

// First-order response of u_{n,m} to the selection coefficients at neutrality.
struct SelectionGradient {
  int n = 0;
  int m = 0;
  double v_lambda = 0.0;
  double v_delta = 0.0;
  double v_alpha = 0.0;
  double v_epsilon = 0.0;
};

// g^iota_N: v^iota_{n,m} / (p(1-p)) for iota != epsilon and
// v^eps_{n,m} / (p(1-p)(1-2p)), averaged over the splits n + m = N.
struct InvasibilityCoefficients {
  int total_size = 0;
  double g_lambda = 0.0;
  double g_delta = 0.0;
  double g_alpha = 0.0;
  std::optional<double> g_epsilon;  // absent for N = 2
  // Largest relative disagreement between splits (lambda, delta, alpha).
  double spread = 0.0;
  double spread_epsilon = 0.0;
};

// a_lambda, a_delta, a_alpha at a resident (b, c): the derivatives of chi(x, y)
// along the selection directions.
struct ACoefficients {
  double lambda = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  int series_terms = 0;
};

// Central differences of exact fixation solves around a neutral resident
// (b, c). All lattice states come out of each solve, so one object answers
// every (n, m) up to max_total_size.
class SelectionSensitivity {
 public:
  SelectionSensitivity(double b, double c, int max_total_size, std::span<const Direction> directions,
                       const DifferentiationOptions& options = {});

  // Fixed step, no extrapolation.
  static SelectionSensitivity with_step(double b, double c, int max_total_size, std::span<const Direction> directions,
                                        double step, const FixationOptions& fixation = {});

  double b() const noexcept { return b_; }
  double c() const noexcept { return c_; }
  int max_total_size() const noexcept { return max_total_size_; }
  bool extrapolated() const noexcept { return extrapolated_; }
  int n_max() const noexcept { return n_max_; }

  double u_neutral(int n, int m) const;
  double v(Direction d, int n, int m) const;
  SelectionGradient gradient(int n, int m) const;
  InvasibilityCoefficients coefficients(int total_size) const;

 private:
  SelectionSensitivity() = default;
  void differentiate(std::span<const Direction> directions, double step, LatticeSolver& solver);
  double max_spread(std::span<const Direction> directions) const;

  double b_ = 1.0;
  double c_ = 1.0;
  int max_total_size_ = 0;
  int n_max_ = 0;
  bool extrapolated_ = false;
  std::vector<double> u0_;
  // Per direction: derivative of u on the triangle index (n+m)(n+m+1)/2 + m.
  std::array<std::vector<double>, 4> dv_;
};

// v^iota_{n,m} by central differences with step h_s (h_s < c/2).
SelectionGradient gradient_v(double b, double c, int n, int m, double h_s, const FixationOptions& fixation = {});

// Throws NumericalError when the spread across splits exceeds 1e-2.
InvasibilityCoefficients invasibility_g(double b, double c, int total_size, const DifferentiationOptions& options = {});

ACoefficients a_coefficients(double b, double c, const DifferentiationOptions& options = {});
double a_coeff(double b, double c, Direction d, const DifferentiationOptions& options = {});

// Largest n the a-series needs at theta: n <= theta + 12 sqrt(theta) + 30.
int a_series_cap(double theta);

// a_lambda grad b - a_delta grad_1 c + a_alpha grad_2 c at (x, x).
Eigen::VectorXd fitness_gradient(const ModelSpec& m, const TraitPoint& x, const ACoefficients& a);
Eigen::VectorXd fitness_gradient(const ModelSpec& m, const TraitPoint& x, const DifferentiationOptions& options = {});

// Dimensionless a-hat curves: a_hat(theta) = c * a(b = theta c, c).
struct InvasibilityCurve {
  std::vector<double> theta;
  std::vector<double> a_hat_lambda;
  std::vector<double> a_hat_delta;
  std::vector<double> a_hat_alpha;
  double tol_trunc = 0.0;
  double tol_resid = 0.0;
  double rel_step = 0.0;

  // theta,a_hat_lambda,a_hat_delta,a_hat_alpha,theta_a_hat_lambda,theta_a_hat_alpha
  void write_csv(std::ostream& out) const;
  void write_fig1_csv(std::ostream& out) const;
  void write_fig2_csv(std::ostream& out) const;
  static InvasibilityCurve read_csv(std::istream& in);
};

// Throws NumericalError naming the failing theta. `jobs` worker threads.
InvasibilityCurve curve_sweep(std::span<const double> theta_grid, double base_c, int jobs = 1,
                              const DifferentiationOptions& options = {});

std::vector<double> log_spaced(double lo, double hi, int points);

// Monotone (Fritsch-Carlson) cubic interpolation of a_hat over log theta.
// Out-of-range theta is an error, never an extrapolation.
class AHatTable {
 public:
  explicit AHatTable(InvasibilityCurve curve);

  // Log-spaced grid on [theta_min, theta_max]; defaults are 200 points on [0.05, 40].
  static AHatTable build(double theta_min = 0.05, double theta_max = 40.0, int points = 200, int jobs = 1,
                         const DifferentiationOptions& options = {});

  double theta_min() const { return curve_.theta.front(); }
  double theta_max() const { return curve_.theta.back(); }
  const InvasibilityCurve& curve() const noexcept { return curve_; }

  // a-hat values (not divided by c).
  ACoefficients a_hat(double theta) const;
  // a = a_hat(b/c) / c.
  ACoefficients a(double b, double c) const;

 private:
  struct Spline {
    std::vector<double> y, slope;
  };
  double eval(const Spline& s, double theta) const;

  InvasibilityCurve curve_;
  std::vector<double> log_theta_;
  Spline lambda_, delta_, alpha_;
};

}  // namespace lbp
