#include <doctest.h>

#include <cmath>
#include <sstream>

#include <lbp/error.hpp>
#include <lbp/fixation.hpp>
#include <lbp/ibm.hpp>
#include <lbp/model.hpp>
#include <lbp/stationary.hpp>
#include <lbp/tss.hpp>

using namespace lbp;

constexpr double kZ99 = 2.5758293035489004;

TEST_CASE("mutant production rate") {
  const TraitPoint x{0.0};
  CHECK(beta(parse_model("k=1; b=1; c=1; mu=0"), x) == 0.0);
  CHECK(beta(parse_model("k=1; b=1; c=1; mu=1"), x) == doctest::Approx(1.0 / (1.0 - std::exp(-1.0))).epsilon(1e-14));
  CHECK(beta(parse_model("k=1; b=1; c=1; mu=1"), x) == doctest::Approx(1.581977).epsilon(1e-6));
  const ModelSpec m = parse_model("k=1; b=3+x1; c=0.7; mu=0.2");
  const TraitPoint p{0.5};
  double mean = 0.0;
  for (int n = 1; n < 400; ++n) mean += n * stationary_pmf(m.theta(p), n);
  CHECK(beta(m, p) == doctest::Approx(0.2 * 3.5 * mean).epsilon(1e-12));
}

TEST_CASE("stationary size draws") {
  Rng rng = make_rng(3);
  const int n = 100'000;
  double sum = 0.0;
  long smallest = 1000;
  for (int i = 0; i < n; ++i) {
    const long s = sample_stationary_size(2.5, rng);
    sum += s;
    smallest = std::min(smallest, s);
  }
  CHECK(smallest >= 1);
  // sd of the conditioned law is below sqrt(theta + 1); 5 standard errors.
  CHECK(std::abs(sum / n - stationary_mean(2.5)) < 5 * std::sqrt(3.5 / n));
}

TEST_CASE("no mutation, no jumps") {
  TssOptions opt;
  opt.t_end = 100;
  const TssPath path = run_tss(parse_model("k=1; b=1; c=1; mu=0"), TraitPoint{0.0}, opt);
  CHECK(path.states.size() == 1);
  CHECK(path.candidates == 0);
}

TEST_CASE("zero-step candidate is accepted at the neutral rate") {
  const ModelSpec m = parse_model("k=1; b=2+x1; c=exp(-(x1-y1)^2)");
  TssStepper stepper(m);
  const TraitPoint x{0.3};
  CHECK(std::abs(stepper.acceptance(x, x) - chi_neutral(m.theta(x))) <= 1e-8);
  CHECK(stepper.cache_size() == 1);
  stepper.acceptance(x, x);
  CHECK(stepper.cache_size() == 1);
}

TEST_CASE("thinning matches the solver acceptance") {
  const ModelSpec m = parse_model("k=1; b=1+0.5*x1; c=1");
  const TraitPoint x{0.0}, y{-0.3};
  const double p = chi(m, x, y);
  CHECK(p < chi_neutral(1.0));
  TssStepper stepper(m);
  Rng rng = make_rng(21);
  long hits = 0;
  for (int i = 0; i < 10'000; ++i) hits += stepper.trial(x, y, rng);
  CHECK(wilson_interval(hits, 10'000).contains(p));
}

TEST_CASE("candidate counts are Poisson") {
  // A zero kernel gives only zero-step candidates: counted, never solved.
  const ModelSpec m = parse_model("k=1; b=2; c=1; [mutation] sigma=0");
  const double rate = beta(m, TraitPoint{0.0});
  TssOptions opt;
  opt.t_end = 10.0;
  const double lambda = rate * opt.t_end;
  const int reps = 2000;
  double sum = 0.0, dispersion = 0.0;
  for (int r = 0; r < reps; ++r) {
    opt.seed = 1000 + r;
    const TssPath path = run_tss(m, TraitPoint{0.0}, opt);
    CHECK(path.states.size() == 1);
    sum += path.candidates;
    dispersion += (path.candidates - lambda) * (path.candidates - lambda) / lambda;
  }
  CHECK(std::abs(sum / reps - lambda) <= kZ99 * std::sqrt(lambda / reps));
  // sum (k - lambda)^2 / lambda is approximately chi-square with `reps` degrees of freedom.
  CHECK(std::abs(dispersion - reps) <= kZ99 * std::sqrt(2.0 * reps));
}

TEST_CASE("paths: determinism, sizes and jump bound") {
  const ModelSpec m = parse_model("k=2; b=1 + 0.2*x1; c=exp(-0.5*((x1-y1)^2 + (x2-y2)^2)); mu=0.5; [mutation] sigma=0.2");
  TssOptions opt;
  opt.t_end = 40;
  opt.seed = 5;
  const TssPath a = run_tss(m, TraitPoint{0.0, 0.0}, opt);
  opt.emit_sizes = true;
  const TssPath b = run_tss(m, TraitPoint{0.0, 0.0}, opt);
  CHECK(a.states == b.states);
  CHECK(a.times == b.times);
  CHECK(a.sizes.empty());
  REQUIRE(b.sizes.size() == b.states.size());
  for (long s : b.sizes) CHECK(s >= 1);
  CHECK(static_cast<long>(a.states.size()) - 1 <= a.candidates);
  CHECK(a.states.size() > 3);
  for (std::size_t i = 1; i < a.states.size(); ++i) {
    CHECK(a.states[i] != a.states[i - 1]);
    CHECK(a.times[i] > a.times[i - 1]);
  }

  std::ostringstream os;
  write_tss_csv(os, b);
  CHECK(os.str().rfind("jump_time,x1,x2,size\n0,0,0,", 0) == 0);
  std::ostringstream plain;
  write_tss_csv(plain, a);
  CHECK(plain.str().rfind("jump_time,x1,x2\n", 0) == 0);
}

TEST_CASE("step scaling") {
  const ModelSpec m = parse_model("k=1; b=1; c=exp(-(x1-y1)^2); [mutation] sigma=1");
  TssStepper wide(m, 1.0), narrow(m, 0.01);
  Rng r1 = make_rng(8), r2 = make_rng(8);
  const TraitPoint x{0.0};
  CHECK(narrow.propose_step(x, r2)[0] == doctest::Approx(0.01 * wide.propose_step(x, r1)[0]));
  CHECK_THROWS_AS(TssStepper(m, 0.0), std::invalid_argument);
  TssOptions opt;
  opt.t_end = -1;
  CHECK_THROWS_AS(run_tss(m, x, opt), std::invalid_argument);
}

TEST_CASE("symmetric model has no directional bias") {
  const ModelSpec m = parse_model("k=1; b=1; c=exp(-(x1-y1)^2); [mutation] sigma=0.5");
  TssOptions opt;
  opt.t_end = 600;
  opt.seed = 12;
  const TssPath path = run_tss(m, TraitPoint{0.0}, opt);
  const double n = static_cast<double>(path.states.size() - 1);
  REQUIRE(n > 100);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 1; i < path.states.size(); ++i) {
    const double h = path.states[i][0] - path.states[i - 1][0];
    sum += h;
    sum2 += h * h;
  }
  const double mean = sum / n, sd = std::sqrt((sum2 - n * mean * mean) / (n - 1));
  CHECK(std::abs(mean) <= kZ99 * sd / std::sqrt(n));
}
