#include "lbp/diffusion.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "lbp/error.hpp"
#include "lbp/parallel.hpp"
#include "lbp/random.hpp"
#include "lbp/stationary.hpp"
#include "lbp/tss.hpp"

namespace lbp {

CoefficientSource CoefficientSource::direct(DifferentiationOptions options) {
  CoefficientSource s;
  s.options_ = options;
  return s;
}

CoefficientSource CoefficientSource::table(std::shared_ptr<const AHatTable> table) {
  if (!table) throw std::invalid_argument("null a-hat table");
  CoefficientSource s;
  s.table_ = std::move(table);
  return s;
}

ACoefficients CoefficientSource::a(double b, double c) const {
  return table_ ? table_->a(b, c) : a_coefficients(b, c, options_);
}

DriftDiffusion drift_diffusion_coeffs(const ModelSpec& m, const TraitPoint& z, const CoefficientSource& source) {
  const Eigen::MatrixXd sigma = m.kernel().sigma(z);
  const double rate = beta(m, z);
  DriftDiffusion out;
  out.noise_scale = std::sqrt(rate * chi_neutral(m.theta(z))) * sigma;

  const Eigen::VectorXd gb = grad_b(m, z), g1 = grad_c1(m, z), g2 = grad_c2(m, z);
  if (rate == 0.0 || (gb.isZero(0.0) && g1.isZero(0.0) && g2.isZero(0.0))) {
    out.drift = Eigen::VectorXd::Zero(m.dimension());
    return out;
  }
  const ACoefficients a = source.a(m.b(z), m.c(z, z));
  const Eigen::VectorXd grad_chi = a.lambda * gb - a.delta * g1 + a.alpha * g2;
  out.drift = rate * (sigma * sigma.transpose()) * grad_chi;
  return out;
}

std::size_t DiffusionConfig::steps() const {
  if (!(dt > 0.0) || !(t_end >= dt)) throw std::invalid_argument("diffusion needs 0 < dt <= t_end");
  return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

DiffusionPath run_diffusion(const ModelSpec& m, const TraitPoint& z0, double dt,
                            std::span<const Eigen::VectorXd> normals, const CoefficientSource& source) {
  DiffusionPath path;
  path.times.reserve(normals.size() + 1);
  path.states.reserve(normals.size() + 1);
  path.times.push_back(0.0);
  path.states.push_back(z0);
  const double sqrt_dt = std::sqrt(dt);
  Eigen::VectorXd z = z0.to_vector();
  for (std::size_t i = 0; i < normals.size(); ++i) {
    DriftDiffusion dd;
    try {
      dd = drift_diffusion_coeffs(m, path.states.back(), source);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "diffusion coefficients failed at t=" << i * dt << ": " << e.what();
      throw NumericalError(os.str());
    }
    z += dd.drift * dt + dd.noise_scale * normals[i] * sqrt_dt;
    path.times.push_back(static_cast<double>(i + 1) * dt);
    path.states.emplace_back(z);
  }
  return path;
}

DiffusionPath run_diffusion(const ModelSpec& m, const TraitPoint& z0, const DiffusionConfig& cfg) {
  const std::size_t steps = cfg.steps();
  Rng rng = make_rng(cfg.seed);
  std::vector<Eigen::VectorXd> normals(steps, Eigen::VectorXd(m.dimension()));
  for (auto& g : normals)
    for (Eigen::Index j = 0; j < g.size(); ++j) g[j] = standard_normal(rng);
  return run_diffusion(m, z0, cfg.dt, normals, cfg.source);
}

EnsembleSummary run_ensemble(const ModelSpec& m, const TraitPoint& z0, const DiffusionConfig& cfg, int paths,
                             int jobs) {
  if (paths < 1) throw std::invalid_argument("ensemble needs at least one path");
  std::vector<DiffusionPath> runs(static_cast<std::size_t>(paths));
  parallel_for(runs.size(), jobs, [&](std::size_t i) {
    DiffusionConfig c = cfg;
    c.seed = stream_seed(cfg.seed, i);
    runs[i] = run_diffusion(m, z0, c);
  });
  EnsembleSummary s;
  s.times = runs.front().times;
  const auto k = static_cast<Eigen::Index>(m.dimension());
  for (std::size_t t = 0; t < s.times.size(); ++t) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(k), m2 = Eigen::VectorXd::Zero(k);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      // Welford update.
      const Eigen::VectorXd x = runs[i].states[t].to_vector();
      const Eigen::VectorXd d = x - mean;
      mean += d / static_cast<double>(i + 1);
      m2 += d.cwiseProduct(x - mean);
    }
    s.mean.push_back(mean);
    s.variance.push_back(paths > 1 ? Eigen::VectorXd(m2 / (paths - 1.0)) : Eigen::VectorXd::Zero(k));
  }
  for (const auto& r : runs) s.endpoints.push_back(r.states.back());
  return s;
}

void write_diffusion_csv(std::ostream& out, const DiffusionPath& path) {
  const auto old = out.precision(17);
  const std::size_t k = path.states.empty() ? 0 : path.states.front().dimension();
  out << "time";
  for (std::size_t i = 1; i <= k; ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t j = 0; j < path.states.size(); ++j) {
    out << path.times[j];
    for (double v : path.states[j].coords()) out << ',' << v;
    out << '\n';
  }
  out.precision(old);
}

void write_ensemble_csv(std::ostream& out, const EnsembleSummary& s) {
  const auto old = out.precision(17);
  const Eigen::Index k = s.mean.empty() ? 0 : s.mean.front().size();
  out << "time";
  for (Eigen::Index i = 1; i <= k; ++i) out << ",mean_x" << i;
  for (Eigen::Index i = 1; i <= k; ++i) out << ",var_x" << i;
  out << '\n';
  for (std::size_t t = 0; t < s.times.size(); ++t) {
    out << s.times[t];
    for (Eigen::Index i = 0; i < k; ++i) out << ',' << s.mean[t][i];
    for (Eigen::Index i = 0; i < k; ++i) out << ',' << s.variance[t][i];
    out << '\n';
  }
  out.precision(old);
}

Eigen::VectorXd large_k_drift(const ModelSpec& m, const TraitPoint& x) {
  const double b = m.b(x);
  return (grad_b(m, x) - m.theta(x) * grad_c1(m, x)) / (2.0 * b);
}

double classical_fitness(const ModelSpec& m, const TraitPoint& x, const TraitPoint& y) {
  return m.b(y) - m.c(y, x) * m.theta(x);
}

Eigen::VectorXd cead_rhs(const ModelSpec& m, const TraitPoint& x) {
  const Eigen::MatrixXd sigma = m.kernel().sigma(x);
  const double theta = m.theta(x);
  const Eigen::VectorXd df = grad_b(m, x) - theta * grad_c1(m, x);
  return 0.5 * m.mu(x) * theta * (sigma * sigma.transpose()) * df;
}

}  // namespace lbp
