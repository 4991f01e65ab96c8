#include "lbp/invasibility.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "lbp/error.hpp"
#include "lbp/parallel.hpp"
#include "lbp/stationary.hpp"

namespace lbp {

namespace {

constexpr std::array kAllDirections{Direction::kLambda, Direction::kDelta, Direction::kAlpha, Direction::kEpsilon};
constexpr std::array kFitnessDirections{Direction::kLambda, Direction::kDelta, Direction::kAlpha};
constexpr double kSeriesRelTol = 1e-10;
constexpr double kSpreadLimit = 1e-2;

std::size_t tri_index(int n, int m) {
  const auto s = static_cast<std::size_t>(n + m);
  return s * (s + 1) / 2 + static_cast<std::size_t>(m);
}

std::size_t slot(Direction d) { return static_cast<std::size_t>(d); }

struct Stats {
  double mean = 0.0;
  double spread = 0.0;
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  double lo = xs.front(), hi = xs.front(), sum = 0.0;
  for (double x : xs) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
  }
  s.mean = sum / static_cast<double>(xs.size());
  s.spread = xs.size() > 1 ? (hi - lo) / std::max(std::abs(s.mean), std::numeric_limits<double>::min()) : 0.0;
  return s;
}

}  // namespace

SelectionSensitivity::SelectionSensitivity(double b, double c, int max_total_size,
                                           std::span<const Direction> directions,
                                           const DifferentiationOptions& options)
    : b_(b), c_(c), max_total_size_(max_total_size) {
  if (max_total_size < 2) throw std::invalid_argument("sensitivity needs max_total_size >= 2");
  FixationOptions fix = options.fixation;
  fix.min_coverage = std::max(fix.min_coverage, max_total_size);
  const FixationTable neutral = solve_fixation(TwoTypeRates::neutral(b, c), fix);
  n_max_ = neutral.n_max();
  u0_.resize(tri_index(0, max_total_size) + 1);
  for (int s = 1; s <= max_total_size; ++s)
    for (int n = 0; n <= s; ++n) u0_[tri_index(n, s - n)] = neutral.u(n, s - n);

  LatticeSolver solver(n_max_, fix.method);
  const double step = options.rel_step * c;
  differentiate(directions, step, solver);
  if (options.richardson_threshold > 0.0 && max_spread(directions) > options.richardson_threshold) {
    auto coarse = dv_;
    differentiate(directions, step / 2.0, solver);
    for (Direction d : directions) {
      auto& fine = dv_[slot(d)];
      const auto& rough = coarse[slot(d)];
      for (std::size_t i = 0; i < fine.size(); ++i) fine[i] = (4.0 * fine[i] - rough[i]) / 3.0;
    }
    extrapolated_ = true;
  }
}

SelectionSensitivity SelectionSensitivity::with_step(double b, double c, int max_total_size,
                                                     std::span<const Direction> directions, double step,
                                                     const FixationOptions& fixation) {
  if (!(step > 0.0) || step >= c / 2.0) {
    throw ModelError("differentiation step " + std::to_string(step) + " must lie in (0, c/2) with c=" + std::to_string(c));
  }
  DifferentiationOptions opts;
  opts.fixation = fixation;
  opts.rel_step = step / c;
  opts.richardson_threshold = 0.0;
  return SelectionSensitivity(b, c, max_total_size, directions, opts);
}

void SelectionSensitivity::differentiate(std::span<const Direction> directions, double step, LatticeSolver& solver) {
  const double tol = 1e-12;
  for (Direction d : directions) {
    const FixationTable up = solver.solve(reconstruct_rates(perturbed(b_, c_, d, step)), tol);
    const FixationTable down = solver.solve(reconstruct_rates(perturbed(b_, c_, d, -step)), tol);
    auto& out = dv_[slot(d)];
    out.assign(u0_.size(), 0.0);
    for (int s = 2; s <= max_total_size_; ++s)
      for (int n = 1; n < s; ++n) out[tri_index(n, s - n)] = (up.u(n, s - n) - down.u(n, s - n)) / (2.0 * step);
  }
}

double SelectionSensitivity::max_spread(std::span<const Direction> directions) const {
  double worst = 0.0;
  bool non_eps = false;
  for (Direction d : directions) non_eps |= d != Direction::kEpsilon;
  if (!non_eps) return 0.0;
  for (int total = 3; total <= max_total_size_; ++total) worst = std::max(worst, coefficients(total).spread);
  return worst;
}

double SelectionSensitivity::u_neutral(int n, int m) const {
  if (n < 0 || m < 0 || n + m < 1 || n + m > max_total_size_) throw std::out_of_range("state outside sensitivity range");
  return u0_[tri_index(n, m)];
}

double SelectionSensitivity::v(Direction d, int n, int m) const {
  if (n < 0 || m < 0 || n + m < 1 || n + m > max_total_size_) throw std::out_of_range("state outside sensitivity range");
  const auto& dv = dv_[slot(d)];
  if (dv.empty()) throw std::logic_error(std::string("direction ") + direction_name(d) + " was not differentiated");
  return dv[tri_index(n, m)];
}

SelectionGradient SelectionSensitivity::gradient(int n, int m) const {
  SelectionGradient g{n, m};
  auto get = [&](Direction d) { return dv_[slot(d)].empty() ? 0.0 : v(d, n, m); };
  g.v_lambda = get(Direction::kLambda);
  g.v_delta = get(Direction::kDelta);
  g.v_alpha = get(Direction::kAlpha);
  g.v_epsilon = get(Direction::kEpsilon);
  return g;
}

InvasibilityCoefficients SelectionSensitivity::coefficients(int total_size) const {
  if (total_size < 2 || total_size > max_total_size_) throw std::out_of_range("total size outside sensitivity range");
  InvasibilityCoefficients out;
  out.total_size = total_size;
  std::array<std::vector<double>, 4> per_split;
  for (int n = 1; n < total_size; ++n) {
    const int m = total_size - n;
    const double p = static_cast<double>(m) / total_size;
    const double w = p * (1.0 - p);
    for (Direction d : kFitnessDirections) {
      if (!dv_[slot(d)].empty()) per_split[slot(d)].push_back(v(d, n, m) / w);
    }
    if (!dv_[slot(Direction::kEpsilon)].empty() && n != m) {
      per_split[slot(Direction::kEpsilon)].push_back(v(Direction::kEpsilon, n, m) / (w * (1.0 - 2.0 * p)));
    }
  }
  const Stats l = stats(per_split[0]), d = stats(per_split[1]), a = stats(per_split[2]), e = stats(per_split[3]);
  out.g_lambda = l.mean;
  out.g_delta = d.mean;
  out.g_alpha = a.mean;
  out.spread = std::max({l.spread, d.spread, a.spread});
  if (!per_split[3].empty()) {
    out.g_epsilon = e.mean;
    out.spread_epsilon = e.spread;
  }
  return out;
}

SelectionGradient gradient_v(double b, double c, int n, int m, double h_s, const FixationOptions& fixation) {
  if (n < 0 || m < 0 || n + m < 1) throw std::invalid_argument("gradient_v needs n, m >= 0 and n + m >= 1");
  const SelectionSensitivity sens =
      SelectionSensitivity::with_step(b, c, std::max(n + m, 2), kAllDirections, h_s, fixation);
  return sens.gradient(n, m);
}

InvasibilityCoefficients invasibility_g(double b, double c, int total_size, const DifferentiationOptions& options) {
  if (total_size < 2) throw std::invalid_argument("invasibility_g needs N >= 2");
  const SelectionSensitivity sens(b, c, total_size, kAllDirections, options);
  InvasibilityCoefficients g = sens.coefficients(total_size);
  if (g.spread > kSpreadLimit || g.spread_epsilon > kSpreadLimit) {
    std::ostringstream os;
    os << "invasibility coefficients at N=" << total_size << " (b=" << b << ", c=" << c
       << ") disagree across splits: spread " << g.spread << ", epsilon spread " << g.spread_epsilon;
    throw NumericalError(os.str());
  }
  return g;
}

int a_series_cap(double theta) { return static_cast<int>(std::floor(theta + 12.0 * std::sqrt(theta) + 30.0)); }

ACoefficients a_coefficients(double b, double c, const DifferentiationOptions& options) {
  const double theta = b / c;
  const int cap = a_series_cap(theta);
  // Start from the absolute Poisson cutoff; widen when the relative tail test fails.
  int last = std::min(cap, size_biased_cutoff(theta, 1e-12));
  for (;;) {
    const SelectionSensitivity sens(b, c, last + 1, kFitnessDirections, options);
    std::array<double, 3> sum{};
    double g_max = 0.0;
    for (int n = 1; n <= last; ++n) {
      const InvasibilityCoefficients g = sens.coefficients(n + 1);
      if (g.spread > kSpreadLimit) {
        std::ostringstream os;
        os << "invasibility coefficients at N=" << n + 1 << " (theta=" << theta << ") disagree across splits by "
           << g.spread;
        throw NumericalError(os.str());
      }
      const double w = size_biased_pmf(theta, n) * n / ((n + 1.0) * (n + 1.0));
      sum[0] += w * g.g_lambda;
      sum[1] += w * g.g_delta;
      sum[2] += w * g.g_alpha;
      g_max = std::max({g_max, std::abs(g.g_lambda), std::abs(g.g_delta), std::abs(g.g_alpha)});
    }
    const double smallest = std::min({std::abs(sum[0]), std::abs(sum[1]), std::abs(sum[2])});
    const double tail = size_biased_tail(theta, last) * 0.25 * g_max;
    if (tail < kSeriesRelTol * smallest) return {sum[0], sum[1], sum[2], last};
    if (last >= cap) {
      std::ostringstream os;
      os << "a-series at theta=" << theta << " reached its cap n=" << cap << " with tail bound " << tail;
      throw NumericalError(os.str());
    }
    last = std::min(cap, last + std::max(8, last / 4));
  }
}

double a_coeff(double b, double c, Direction d, const DifferentiationOptions& options) {
  const ACoefficients a = a_coefficients(b, c, options);
  switch (d) {
    case Direction::kLambda:
      return a.lambda;
    case Direction::kDelta:
      return a.delta;
    case Direction::kAlpha:
      return a.alpha;
    case Direction::kEpsilon:
      break;
  }
  throw std::invalid_argument("a_coeff is defined for lambda, delta and alpha only");
}

Eigen::VectorXd fitness_gradient(const ModelSpec& m, const TraitPoint& x, const ACoefficients& a) {
  return a.lambda * grad_b(m, x) - a.delta * grad_c1(m, x) + a.alpha * grad_c2(m, x);
}

Eigen::VectorXd fitness_gradient(const ModelSpec& m, const TraitPoint& x, const DifferentiationOptions& options) {
  const Eigen::VectorXd gb = grad_b(m, x), g1 = grad_c1(m, x), g2 = grad_c2(m, x);
  if (gb.isZero(0.0) && g1.isZero(0.0) && g2.isZero(0.0)) return Eigen::VectorXd::Zero(gb.size());
  const ACoefficients a = a_coefficients(m.b(x), m.c(x, x), options);
  return a.lambda * gb - a.delta * g1 + a.alpha * g2;
}

std::vector<double> log_spaced(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw std::invalid_argument("log_spaced needs 0 < lo < hi and points >= 2");
  std::vector<double> out(static_cast<std::size_t>(points));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (points - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

InvasibilityCurve curve_sweep(std::span<const double> theta_grid, double base_c, int jobs,
                              const DifferentiationOptions& options) {
  if (theta_grid.empty()) throw std::invalid_argument("empty theta grid");
  if (!(base_c > 0.0)) throw std::invalid_argument("base c must be positive");
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    if (!(theta_grid[i] > 0.0) || (i > 0 && !(theta_grid[i] > theta_grid[i - 1]))) {
      throw std::invalid_argument("theta grid must be positive and strictly increasing");
    }
  }
  InvasibilityCurve curve;
  curve.theta.assign(theta_grid.begin(), theta_grid.end());
  curve.a_hat_lambda.resize(theta_grid.size());
  curve.a_hat_delta.resize(theta_grid.size());
  curve.a_hat_alpha.resize(theta_grid.size());
  curve.tol_trunc = options.fixation.tol_trunc;
  curve.tol_resid = options.fixation.tol_resid;
  curve.rel_step = options.rel_step;
  parallel_for(theta_grid.size(), jobs, [&](std::size_t i) {
    const double theta = theta_grid[i];
    try {
      const ACoefficients a = a_coefficients(theta * base_c, base_c, options);
      curve.a_hat_lambda[i] = base_c * a.lambda;
      curve.a_hat_delta[i] = base_c * a.delta;
      curve.a_hat_alpha[i] = base_c * a.alpha;
    } catch (const std::exception& e) {
      throw NumericalError("curve sweep failed at theta=" + std::to_string(theta) + ": " + e.what());
    }
  });
  return curve;
}

namespace {

void write_meta(std::ostream& out, const InvasibilityCurve& c) {
  out << "# tol_trunc=" << c.tol_trunc << " tol_resid=" << c.tol_resid << " rel_step=" << c.rel_step << "\n";
}

}  // namespace

void InvasibilityCurve::write_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  write_meta(out, *this);
  out << "theta,a_hat_lambda,a_hat_delta,a_hat_alpha,theta_a_hat_lambda,theta_a_hat_alpha\n";
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out << theta[i] << ',' << a_hat_lambda[i] << ',' << a_hat_delta[i] << ',' << a_hat_alpha[i] << ','
        << theta[i] * a_hat_lambda[i] << ',' << theta[i] * a_hat_alpha[i] << '\n';
  }
  out.precision(old);
}

void InvasibilityCurve::write_fig1_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  write_meta(out, *this);
  out << "theta,a_hat_lambda,a_hat_delta,a_hat_alpha\n";
  for (std::size_t i = 0; i < theta.size(); ++i)
    out << theta[i] << ',' << a_hat_lambda[i] << ',' << a_hat_delta[i] << ',' << a_hat_alpha[i] << '\n';
  out.precision(old);
}

void InvasibilityCurve::write_fig2_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  write_meta(out, *this);
  out << "theta,theta_a_hat_lambda,theta_a_hat_alpha\n";
  for (std::size_t i = 0; i < theta.size(); ++i)
    out << theta[i] << ',' << theta[i] * a_hat_lambda[i] << ',' << theta[i] * a_hat_alpha[i] << '\n';
  out.precision(old);
}

InvasibilityCurve InvasibilityCurve::read_csv(std::istream& in) {
  InvasibilityCurve c;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string tok;
      while (meta >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const double v = std::stod(tok.substr(eq + 1));
        if (key == "tol_trunc") c.tol_trunc = v;
        if (key == "tol_resid") c.tol_resid = v;
        if (key == "rel_step") c.rel_step = v;
      }
      continue;
    }
    if (!header) {
      if (line.rfind("theta,a_hat_lambda,a_hat_delta,a_hat_alpha", 0) != 0) {
        throw ParseError("curve CSV must start with the theta,a_hat_lambda,a_hat_delta,a_hat_alpha header");
      }
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() < 4) throw ParseError("short row in curve CSV: '" + line + "'");
    c.theta.push_back(vals[0]);
    c.a_hat_lambda.push_back(vals[1]);
    c.a_hat_delta.push_back(vals[2]);
    c.a_hat_alpha.push_back(vals[3]);
  }
  if (c.theta.size() < 2) throw ParseError("curve CSV needs at least two rows");
  return c;
}

AHatTable::AHatTable(InvasibilityCurve curve) : curve_(std::move(curve)) {
  const std::size_t n = curve_.theta.size();
  if (n < 2) throw std::invalid_argument("a-hat table needs at least two points");
  log_theta_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(curve_.theta[i] > 0.0) || (i > 0 && !(curve_.theta[i] > curve_.theta[i - 1]))) {
      throw std::invalid_argument("a-hat table theta must be positive and increasing");
    }
    log_theta_[i] = std::log(curve_.theta[i]);
  }
  auto make = [&](const std::vector<double>& y) {
    Spline s;
    s.y = y;
    s.slope.assign(n, 0.0);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = log_theta_[i + 1] - log_theta_[i];
      delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    // Fritsch-Carlson: weighted harmonic mean of neighbouring secants, zero at extrema.
    s.slope[0] = delta[0];
    s.slope[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) continue;
      const double w1 = 2.0 * h[i] + h[i - 1], w2 = h[i] + 2.0 * h[i - 1];
      s.slope[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
    return s;
  };
  lambda_ = make(curve_.a_hat_lambda);
  delta_ = make(curve_.a_hat_delta);
  alpha_ = make(curve_.a_hat_alpha);
}

AHatTable AHatTable::build(double theta_min, double theta_max, int points, int jobs,
                           const DifferentiationOptions& options) {
  const auto grid = log_spaced(theta_min, theta_max, points);
  return AHatTable(curve_sweep(grid, 1.0, jobs, options));
}

double AHatTable::eval(const Spline& s, double theta) const {
  const double t = std::log(theta);
  auto it = std::upper_bound(log_theta_.begin(), log_theta_.end(), t);
  std::size_t i = it == log_theta_.begin() ? 0 : static_cast<std::size_t>(it - log_theta_.begin()) - 1;
  i = std::min(i, log_theta_.size() - 2);
  const double h = log_theta_[i + 1] - log_theta_[i];
  const double u = (t - log_theta_[i]) / h;
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
  return h00 * s.y[i] + h10 * h * s.slope[i] + h01 * s.y[i + 1] + h11 * h * s.slope[i + 1];
}

ACoefficients AHatTable::a_hat(double theta) const {
  // Relative slack absorbs rounding in b/c at the grid ends.
  if (!(theta >= theta_min() * (1 - 1e-12) && theta <= theta_max() * (1 + 1e-12))) {
    std::ostringstream os;
    os << "theta=" << theta << " outside the a-hat table range [" << theta_min() << ", " << theta_max()
       << "]; extend the table or use direct solves";
    throw NumericalError(os.str());
  }
  theta = std::clamp(theta, theta_min(), theta_max());
  return {eval(lambda_, theta), eval(delta_, theta), eval(alpha_, theta), 0};
}

ACoefficients AHatTable::a(double b, double c) const {
  ACoefficients h = a_hat(b / c);
  return {h.lambda / c, h.delta / c, h.alpha / c, 0};
}

}  // namespace lbp
