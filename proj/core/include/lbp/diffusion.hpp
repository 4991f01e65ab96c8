#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lbp/invasibility.hpp"
#include "lbp/model.hpp"

namespace lbp {

// Where the a-coefficients of the fitness gradient come from: fresh fixation
// solves at every evaluation, or an interpolated a-hat table.
class CoefficientSource {
 public:
  static CoefficientSource direct(DifferentiationOptions options = {});
  static CoefficientSource table(std::shared_ptr<const AHatTable> table);

  bool is_table() const noexcept { return table_ != nullptr; }
  ACoefficients a(double b, double c) const;

 private:
  DifferentiationOptions options_{};
  std::shared_ptr<const AHatTable> table_;
};

struct DriftDiffusion {
  Eigen::VectorXd drift;
  Eigen::MatrixXd noise_scale;
};

// drift = beta(z) sigma sigma' grad_2 chi(z, z),
// noise = sqrt(beta(z) chi_neutral(theta(z))) sigma(z).
DriftDiffusion drift_diffusion_coeffs(const ModelSpec& m, const TraitPoint& z, const CoefficientSource& source);

struct DiffusionConfig {
  double dt = 1e-2;
  double t_end = 1.0;
  std::uint64_t seed = 1;
  CoefficientSource source = CoefficientSource::direct();

  std::size_t steps() const;
};

struct DiffusionPath {
  std::vector<double> times;  // i * dt
  std::vector<TraitPoint> states;
};

// Euler-Maruyama: Z += drift dt + noise sqrt(dt) G.
DiffusionPath run_diffusion(const ModelSpec& m, const TraitPoint& z0, const DiffusionConfig& cfg);

// Same scheme driven by caller-supplied standard normal vectors, one per step.
DiffusionPath run_diffusion(const ModelSpec& m, const TraitPoint& z0, double dt,
                            std::span<const Eigen::VectorXd> normals, const CoefficientSource& source);

struct EnsembleSummary {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::VectorXd> variance;  // unbiased
  std::vector<TraitPoint> endpoints;
};

// `paths` independent runs; path i is seeded with stream_seed(cfg.seed, i).
EnsembleSummary run_ensemble(const ModelSpec& m, const TraitPoint& z0, const DiffusionConfig& cfg, int paths,
                             int jobs = 1);

// time,x1..xk
void write_diffusion_csv(std::ostream& out, const DiffusionPath& path);
// time,mean_x1..,var_x1..
void write_ensemble_csv(std::ostream& out, const EnsembleSummary& summary);

// Limit of grad_2 chi_K(x, x) when c is divided by K -> infinity:
// (grad b(x) - theta(x) grad_1 c(x, x)) / (2 b(x)) for the unscaled model.
Eigen::VectorXd large_k_drift(const ModelSpec& m, const TraitPoint& x);

// Deterministic invasion fitness f(x, y) = b(y) - c(y, x) theta(x).
double classical_fitness(const ModelSpec& m, const TraitPoint& x, const TraitPoint& y);

// Right-hand side of the canonical equation,
// 1/2 sigma sigma' mu(x) nbar(x) d_2 f(x, x), with nbar(x) = theta(x) and
// d_2 f(x, x) = grad b(x) - theta(x) grad_1 c(x, x).
Eigen::VectorXd cead_rhs(const ModelSpec& m, const TraitPoint& x);

}  // namespace lbp
