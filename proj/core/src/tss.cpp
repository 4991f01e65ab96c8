#include "lbp/tss.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "lbp/error.hpp"
#include "lbp/stationary.hpp"

namespace lbp {

double beta(const ModelSpec& m, const TraitPoint& x) {
  const double mu = m.mu(x);
  if (mu == 0.0) return 0.0;
  return mu * m.b(x) * stationary_mean(m.theta(x));
}

long sample_stationary_size(double theta, Rng& rng) {
  double u = uniform01(rng);
  long n = 1;
  for (;;) {
    const double p = stationary_pmf(theta, static_cast<int>(n));
    if (u < p || (p == 0.0 && n > theta)) return n;
    u -= p;
    ++n;
  }
}

TssStepper::TssStepper(const ModelSpec& m, double eps, FixationOptions fixation)
    : model_(m), eps_(eps), fixation_(fixation) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
}

Eigen::VectorXd TssStepper::propose_step(const TraitPoint& x, Rng& rng) const {
  return eps_ * model_.kernel().sample(x, rng);
}

double TssStepper::acceptance(const TraitPoint& x, const TraitPoint& y) {
  std::vector<std::int64_t> key;
  key.reserve(2 * x.dimension());
  for (double v : x.coords()) key.push_back(std::llround(v * 1e9));
  for (double v : y.coords()) key.push_back(std::llround(v * 1e9));
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;

  double p = 0.0;
  try {
    p = chi(model_, x, y, fixation_);
  } catch (const std::exception& e) {
    std::ostringstream os;
    os.precision(17);
    os << "fixation solve failed for candidate y=(";
    for (std::size_t i = 0; i < y.dimension(); ++i) os << (i ? ", " : "") << y[i];
    os << "): " << e.what();
    throw NumericalError(os.str());
  }
  if (!(p > 0.0)) throw NumericalError("acceptance probability is not positive (chi=" + std::to_string(p) + ")");
  cache_.emplace(std::move(key), p);
  return p;
}

bool TssStepper::trial(const TraitPoint& x, const TraitPoint& y, Rng& rng) { return bernoulli(rng, acceptance(x, y)); }

TssPath run_tss(const ModelSpec& m, const TraitPoint& x0, const TssOptions& options) {
  if (!(options.t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  TssStepper stepper(m, options.eps, options.fixation);
  Rng rng = make_rng(options.seed, 0);
  Rng size_rng = make_rng(options.seed, 1);

  TssPath path;
  auto visit = [&](double t, const TraitPoint& x) {
    path.times.push_back(t);
    path.states.push_back(x);
    if (options.emit_sizes) path.sizes.push_back(sample_stationary_size(m.theta(x), size_rng));
  };

  TraitPoint x = x0;
  double t = 0.0;
  visit(t, x);
  for (;;) {
    const double rate = beta(m, x);
    if (rate <= 0.0) break;
    t += exponential(rng, rate);
    if (t > options.t_end) break;
    ++path.candidates;
    const TraitPoint y = x + stepper.propose_step(x, rng);
    if (y == x) continue;
    if (stepper.trial(x, y, rng)) {
      x = y;
      visit(t, x);
    }
  }
  return path;
}

void write_tss_csv(std::ostream& out, const TssPath& path) {
  const auto old = out.precision(17);
  const std::size_t k = path.states.empty() ? 0 : path.states.front().dimension();
  out << "jump_time";
  for (std::size_t i = 1; i <= k; ++i) out << ",x" << i;
  if (!path.sizes.empty()) out << ",size";
  out << '\n';
  for (std::size_t j = 0; j < path.states.size(); ++j) {
    out << path.times[j];
    for (double v : path.states[j].coords()) out << ',' << v;
    if (!path.sizes.empty()) out << ',' << path.sizes[j];
    out << '\n';
  }
  out.precision(old);
}

}  // namespace lbp
