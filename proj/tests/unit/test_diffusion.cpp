#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include <lbp/diffusion.hpp>
#include <lbp/error.hpp>
#include <lbp/invasibility.hpp>
#include <lbp/random.hpp>
#include <lbp/stationary.hpp>
#include <lbp/tss.hpp>

using namespace lbp;

constexpr double kZ99 = 2.5758293035489004;

TEST_CASE("coefficients of a constant model: pure drift noise") {
  const ModelSpec m = parse_model("k=2; b=1; c=1; [mutation] sigma=0.2");
  const DriftDiffusion dd = drift_diffusion_coeffs(m, TraitPoint{0.0, 0.0}, CoefficientSource::direct());
  CHECK(dd.drift.isZero(0.0));
  const double scale = std::sqrt(beta(m, TraitPoint{0.0, 0.0}) * chi_neutral(1.0)) * 0.2;
  CHECK(dd.noise_scale.isApprox(scale * Eigen::Matrix2d::Identity(), 1e-14));
  CHECK(dd.noise_scale.fullPivLu().rank() == 2);
}

TEST_CASE("drift assembled from the invasibility coefficients") {
  const ModelSpec m = parse_model("k=1; b=1+0.1*x1; c=1; [mutation] sigma=0.3");
  const TraitPoint x{0.0};
  const DriftDiffusion dd = drift_diffusion_coeffs(m, x, CoefficientSource::direct());
  const double expect = beta(m, x) * 0.09 * 0.1 * a_coefficients(1, 1).lambda;
  CHECK(dd.drift[0] == doctest::Approx(expect).epsilon(1e-7));
  CHECK(dd.drift[0] > 0);
}

TEST_CASE("drift is beta sigma sigma' times the fitness gradient") {
  const ModelSpec m = parse_model(
      "k=2; b=1.5 + 0.2*x1 - 0.1*x2; c=exp(-0.5*(x1-y1)^2 - 0.3*(x2-y2+0.1)^2); mu=0.3;"
      "[mutation] kind=full-gaussian; sigma=[0.2, 0; 0.1, 0.3]");
  const TraitPoint z{0.1, -0.2};
  const DriftDiffusion dd = drift_diffusion_coeffs(m, z, CoefficientSource::direct());
  const Eigen::MatrixXd s = m.kernel().sigma(z);
  const Eigen::VectorXd expect = beta(m, z) * s * s.transpose() * fitness_gradient(m, z);
  CHECK((dd.drift - expect).norm() <= 1e-12 * expect.norm());
}

TEST_CASE("interpolated and direct coefficient sources agree") {
  auto table = std::make_shared<const AHatTable>(AHatTable::build(0.3, 8.0, 60));
  const CoefficientSource interp = CoefficientSource::table(table), direct = CoefficientSource::direct();
  const ModelSpec m = parse_model("k=1; b=2*exp(-x1^2/4) + 0.5; c=exp(-0.5*(x1-y1)^2)*(1 + 0.2*y1^2); [mutation] sigma=0.1");
  for (double z : {-1.5, -0.6, 0.05, 0.7, 1.8}) {
    CAPTURE(z);
    const Eigen::VectorXd a = drift_diffusion_coeffs(m, TraitPoint{z}, interp).drift;
    const Eigen::VectorXd b = drift_diffusion_coeffs(m, TraitPoint{z}, direct).drift;
    CHECK(std::abs(a[0] - b[0]) <= 1e-3 * std::abs(b[0]));
  }
  // theta = 20 lies outside the table.
  const ModelSpec far = parse_model("k=1; b=20+x1; c=1");
  CHECK_THROWS_AS(drift_diffusion_coeffs(far, TraitPoint{0.0}, interp), NumericalError);
  DiffusionConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 0.5;
  cfg.source = interp;
  try {
    run_diffusion(far, TraitPoint{0.0}, cfg);
    FAIL("expected a coefficient failure");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("t=0") != std::string::npos);
  }
}

TEST_CASE("martingale under zero gradient") {
  const ModelSpec m = parse_model("k=1; b=1; c=1; [mutation] sigma=0.2");
  DiffusionConfig cfg;
  cfg.dt = 0.01;
  cfg.t_end = 1.0;
  cfg.seed = 4;
  const EnsembleSummary e = run_ensemble(m, TraitPoint{0.5}, cfg, 1000, 2);
  CHECK(std::abs(e.mean.back()[0] - 0.5) <= kZ99 * std::sqrt(e.variance.back()[0] / 1000));
  // Variance grows like beta chi sigma^2 t.
  const double rate = beta(m, TraitPoint{0.0}) * chi_neutral(1.0) * 0.04;
  CHECK(e.variance.back()[0] == doctest::Approx(rate).epsilon(0.15));
}

TEST_CASE("ensembles do not depend on the thread count") {
  const ModelSpec m = parse_model("k=2; b=1; c=1; [mutation] sigma=0.2");
  DiffusionConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 1.0;
  cfg.seed = 99;
  const EnsembleSummary a = run_ensemble(m, TraitPoint{0.0, 0.0}, cfg, 50, 1);
  const EnsembleSummary b = run_ensemble(m, TraitPoint{0.0, 0.0}, cfg, 50, 4);
  CHECK(a.endpoints == b.endpoints);
  CHECK(a.times == b.times);
}

TEST_CASE("strong order one half under dt halving") {
  const ModelSpec m = parse_model("k=1; b=1; c=1; [mutation] sigma=0.1+1/(1+exp(-4*x1))");
  const CoefficientSource src = CoefficientSource::direct();
  Rng rng = make_rng(2024);
  double d1 = 0.0, d2 = 0.0;
  for (int p = 0; p < 1000; ++p) {
    std::vector<Eigen::VectorXd> g4(64, Eigen::VectorXd(1)), g2(32), g1(16);
    for (auto& g : g4) g[0] = standard_normal(rng);
    for (std::size_t i = 0; i < 32; ++i) g2[i] = (g4[2 * i] + g4[2 * i + 1]) / std::sqrt(2.0);
    for (std::size_t i = 0; i < 16; ++i) g1[i] = (g2[2 * i] + g2[2 * i + 1]) / std::sqrt(2.0);
    const double z1 = run_diffusion(m, TraitPoint{0.0}, 1.0 / 16, g1, src).states.back()[0];
    const double z2 = run_diffusion(m, TraitPoint{0.0}, 1.0 / 32, g2, src).states.back()[0];
    const double z4 = run_diffusion(m, TraitPoint{0.0}, 1.0 / 64, g4, src).states.back()[0];
    d1 += std::abs(z1 - z2);
    d2 += std::abs(z2 - z4);
  }
  const double ratio = d1 / d2;
  CHECK(ratio >= 1.2);
  CHECK(ratio <= 1.7);
}

TEST_CASE("paths: zero noise, grid and determinism") {
  const ModelSpec frozen = parse_model("k=1; b=1; c=1; [mutation] sigma=0");
  DiffusionConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 1.0;
  const DiffusionPath still = run_diffusion(frozen, TraitPoint{0.7}, cfg);
  REQUIRE(still.states.size() == 11);
  for (std::size_t i = 0; i < still.states.size(); ++i) {
    CHECK(still.states[i] == TraitPoint{0.7});
    CHECK(still.times[i] == 0.1 * static_cast<double>(i));
  }

  const ModelSpec m = parse_model("k=1; b=1+0.2*x1; c=1; [mutation] sigma=0.3");
  cfg.seed = 3;
  cfg.source = CoefficientSource::direct();
  const DiffusionPath a = run_diffusion(m, TraitPoint{0.0}, cfg);
  const DiffusionPath b = run_diffusion(m, TraitPoint{0.0}, cfg);
  CHECK(a.states == b.states);

  std::ostringstream os;
  write_diffusion_csv(os, still);
  CHECK(os.str().rfind("time,x1\n0,0.69999999999999996\n", 0) == 0);
  EnsembleSummary s;
  s.times = {0.0};
  s.mean = {Eigen::Vector2d(1, 2)};
  s.variance = {Eigen::Vector2d(0, 0.5)};
  std::ostringstream es;
  write_ensemble_csv(es, s);
  CHECK(es.str() == "time,mean_x1,mean_x2,var_x1,var_x2\n0,1,2,0,0.5\n");

  cfg.dt = 2.0;
  CHECK_THROWS_AS(run_diffusion(m, TraitPoint{0.0}, cfg), std::invalid_argument);
}

TEST_CASE("classical limit") {
  const ModelSpec constant = parse_model("k=1; b=2; c=1");
  CHECK(large_k_drift(constant, TraitPoint{0.3}).isZero(0.0));
  CHECK(cead_rhs(constant, TraitPoint{0.3}).isZero(0.0));

  const ModelSpec m = parse_model("k=2; b=1.2 + 0.3*x1 - 0.1*x2^2; c=exp(-0.5*(x1-y1+0.2)^2)*(1+0.1*x2) + 0.05*y1; mu=0.4;"
                                  "[mutation] sigma=0.2");
  for (const TraitPoint& x : {TraitPoint{0.0, 0.0}, TraitPoint{0.5, -1.0}, TraitPoint{-2.0, 0.7}}) {
    CHECK(std::abs(classical_fitness(m, x, x)) <= 1e-14);
    // d2 f(x, x) by differences of y -> f(x, y).
    Eigen::Vector2d df;
    for (int i = 0; i < 2; ++i) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e[i] = 1e-5;
      df[i] = (classical_fitness(m, x, x + e) - classical_fitness(m, x, x + Eigen::VectorXd(-e))) / 2e-5;
    }
    const Eigen::VectorXd limit = large_k_drift(m, x);
    CHECK((df - 2 * m.b(x) * limit).norm() <= 1e-7 * df.norm());
    const Eigen::VectorXd rhs = cead_rhs(m, x);
    CHECK((rhs - 0.5 * 0.04 * 0.4 * m.theta(x) * df).norm() <= 1e-7 * rhs.norm());
  }
}

TEST_CASE("large-K convergence") {
  const ModelSpec base = parse_model("k=1; b=1+0.1*x1; c=1+0.05*x1-0.02*y1");
  const TraitPoint x{0.0};
  const double limit = large_k_drift(base, x)[0];
  CHECK(limit == doctest::Approx(0.025).epsilon(1e-8));
  double prev_err = 1e9, prev_chi = 1.0;
  for (double k : {1.0, 10.0, 100.0}) {
    const ModelSpec mk = base.with_competition_scaled(k);
    const double err = std::abs(fitness_gradient(mk, x)[0] - limit) / limit;
    CHECK(err < prev_err);
    prev_err = err;
    const double c0 = chi_neutral(mk.theta(x));
    CHECK(c0 < prev_chi);
    prev_chi = c0;
  }
  CHECK(prev_err <= 0.05);
  CHECK(prev_chi < 0.01);
}
