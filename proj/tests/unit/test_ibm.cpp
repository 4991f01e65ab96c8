#include <doctest.h>

#include <cmath>
#include <sstream>

#include <lbp/error.hpp>
#include <lbp/ibm.hpp>
#include <lbp/model.hpp>
#include <lbp/stationary.hpp>

using namespace lbp;

namespace {

double tv_to_stationary(const std::map<long, double>& hist, double theta) {
  double tv = 0.0, covered = 0.0;
  for (int n = 1; n <= 200; ++n) {
    const auto it = hist.find(n);
    tv += std::abs((it == hist.end() ? 0.0 : it->second) - stationary_pmf(theta, n));
    covered += stationary_pmf(theta, n);
  }
  return 0.5 * (tv + 1.0 - covered);
}

}  // namespace

TEST_CASE("single-type occupancy follows the stationary law") {
  for (const auto& [text, theta] : {std::pair{"k=1; b=1; c=1; mu=0", 1.0}, std::pair{"k=1; b=3; c=0.5; mu=0", 6.0}}) {
    const ModelSpec m = parse_model(text);
    SimConfig cfg;
    cfg.gamma = 0.0;
    cfg.t_end = 5000;
    cfg.record = RecordMode::kFullPath;
    cfg.seed = 9;
    const auto path = run_ibm(m, cfg, PopulationState::monomorphic(TraitPoint{0.0}, 1));
    CHECK(tv_to_stationary(empirical_size_histogram(path, 500), theta) <= 0.02);
  }
}

TEST_CASE("a population never drops below one individual") {
  const ModelSpec m = parse_model("k=1; b=0.2; c=5; mu=0");
  SimConfig cfg;
  cfg.gamma = 0.0;
  cfg.t_end = 500;
  cfg.record = RecordMode::kFullPath;
  const auto path = run_ibm(m, cfg, PopulationState::monomorphic(TraitPoint{0.0}, 20));
  CHECK(path.size() > 100);
  for (const auto& s : path) CHECK(s.total_size() >= 1);

  // A singleton has no death rate: with negligible births nothing happens.
  const ModelSpec still = parse_model("k=1; b=1e-12; c=100; mu=0");
  const auto quiet = run_ibm(still, cfg, PopulationState::monomorphic(TraitPoint{0.0}, 1));
  CHECK(quiet.size() == 2);
  CHECK(quiet.back().total_size() == 1);
}

TEST_CASE("without mutation two types end in a monotype state") {
  const ModelSpec m = parse_model("k=1; b=2; c=exp(-(x1-y1)^2)*0.5 + 0.5");
  SimConfig cfg;
  cfg.gamma = 0.0;
  cfg.t_end = 2000;
  cfg.record = RecordMode::kFinal;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    PopulationState init;
    init.groups[TraitPoint{0.0}] = 3;
    init.groups[TraitPoint{0.4}] = 3;
    const auto path = run_ibm(m, cfg, init);
    REQUIRE(path.size() == 1);
    CHECK(path.back().num_types() == 1);
    CHECK(path.back().time == 2000);
  }
}

TEST_CASE("determinism and rate bookkeeping") {
  const ModelSpec m = parse_model("k=2; b=2 + 0.3*x1; c=exp(-0.5*((x1-y1)^2 + (x2-y2)^2)); mu=0.5; [mutation] sigma=0.3");
  SimConfig cfg;
  cfg.t_end = 200;
  cfg.seed = 77;
  cfg.gamma = 0.2;
  cfg.record = RecordMode::kFullPath;
  cfg.check_rates = true;
  const auto init = PopulationState::monomorphic(TraitPoint{0.0, 0.0}, 5);
  const auto a = run_ibm(m, cfg, init);
  const auto b = run_ibm(m, cfg, init);
  REQUIRE(a.size() == b.size());
  bool same = true, polymorphic = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a[i].time == b[i].time && a[i].groups == b[i].groups;
    polymorphic = polymorphic || a[i].num_types() > 1;
  }
  CHECK(same);
  CHECK(polymorphic);
  cfg.seed = 78;
  const auto c = run_ibm(m, cfg, init);
  CHECK((c.size() != a.size() || c.back().groups != a.back().groups));
}

TEST_CASE("sampled recording") {
  const ModelSpec m = parse_model("k=1; b=1; c=1");
  SimConfig cfg;
  cfg.t_end = 10;
  cfg.sample_dt = 0.1;
  const auto path = run_ibm(m, cfg, PopulationState::monomorphic(TraitPoint{0.0}, 2));
  REQUIRE(path.size() == 101);
  for (std::size_t i = 0; i < path.size(); ++i) CHECK(path[i].time == doctest::Approx(0.1 * i).epsilon(1e-12));
  std::ostringstream os;
  write_path_csv(os, path);
  CHECK(os.str().rfind("time,total_size,num_types\n0,2,1\n", 0) == 0);
  std::ostringstream dump;
  write_full_dump_csv(dump, path, 1);
  CHECK(dump.str().rfind("time,x1,count\n0,0,2\n", 0) == 0);
}

TEST_CASE("simulation guards") {
  const ModelSpec m = parse_model("k=1; b=1; c=1");
  SimConfig cfg;
  cfg.t_end = 0;
  CHECK_THROWS_AS(run_ibm(m, cfg, PopulationState::monomorphic(TraitPoint{0.0}, 1)), std::invalid_argument);
  cfg.t_end = 1;
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(run_ibm(m, cfg, PopulationState::monomorphic(TraitPoint{0.0}, 1)), std::invalid_argument);
  CHECK_THROWS_AS(PopulationState::monomorphic(TraitPoint{0.0}, 0), ModelError);

  const ModelSpec boom = parse_model("k=1; b=50; c=1e-6; c_min=1e-7; mu=0");
  SimConfig big;
  big.t_end = 100;
  big.max_population = 1000;
  CHECK_THROWS_AS(run_ibm(boom, big, PopulationState::monomorphic(TraitPoint{0.0}, 1)), NumericalError);
}

TEST_CASE("size histogram") {
  std::vector<PopulationState> flat;
  for (int i = 0; i <= 10; ++i) {
    auto s = PopulationState::monomorphic(TraitPoint{0.0}, 4);
    s.time = i;
    flat.push_back(s);
  }
  const auto h = empirical_size_histogram(flat, 2);
  REQUIRE(h.size() == 1);
  CHECK(h.at(4) == 1.0);
  CHECK_THROWS_AS(empirical_size_histogram(flat, 10), std::invalid_argument);
  CHECK_THROWS_AS(empirical_size_histogram(flat, 12), std::invalid_argument);
}

TEST_CASE("two-type Monte Carlo fixation") {
  const TwoTypeRates neutral = TwoTypeRates::neutral(1, 1);
  const FixationEstimate fixed = two_type_mc_fixation(neutral, 0, 3, 10, 1);
  CHECK(fixed.estimate == 1.0);
  CHECK(fixed.ci_low == 1.0);
  CHECK(fixed.ci_high == 1.0);
  CHECK(two_type_mc_fixation(neutral, 3, 0, 10, 1).estimate == 0.0);

  const FixationEstimate half = two_type_mc_fixation(neutral, 1, 1, 100'000, 2);
  CHECK(half.contains(0.5));
  CHECK(half.ci_high - half.ci_low < 0.01);
  CHECK(two_type_mc_fixation(neutral, 3, 1, 50'000, 3).contains(0.25));
  CHECK(two_type_mc_fixation(TwoTypeRates::neutral(4, 1), 2, 3, 50'000, 4).contains(0.6));

  const FixationEstimate again = two_type_mc_fixation(neutral, 1, 1, 1000, 2);
  CHECK(again.fixed == two_type_mc_fixation(neutral, 1, 1, 1000, 2).fixed);
  CHECK_THROWS_AS(two_type_mc_fixation(neutral, 1, 1, 0, 1), std::invalid_argument);
}

TEST_CASE("Wilson interval") {
  const FixationEstimate w = wilson_interval(50, 100);
  CHECK(w.estimate == 0.5);
  CHECK(w.ci_low == doctest::Approx(0.3752796250).epsilon(1e-9));
  CHECK(w.ci_high == doctest::Approx(0.6247203750).epsilon(1e-9));
  CHECK(wilson_interval(0, 10).ci_low == 0.0);
  CHECK(wilson_interval(10, 10).ci_high == 1.0);
}
