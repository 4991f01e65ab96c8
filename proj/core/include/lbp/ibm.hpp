#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "lbp/model.hpp"
#include "lbp/selection.hpp"

namespace lbp {

// Counting measure of the population: trait -> multiplicity (all counts > 0).
struct PopulationState {
  double time = 0.0;
  std::map<TraitPoint, long> groups;

  long total_size() const;
  std::size_t num_types() const { return groups.size(); }
  // Throws ModelError unless the state is non-empty with positive counts.
  void validate() const;

  static PopulationState monomorphic(const TraitPoint& x, long count);
};

enum class RecordMode { kFullPath, kSampled, kFinal };

struct SimConfig {
  double gamma = 1.0;  // mutation-frequency scale in (0, 1]
  double t_end = 1.0;
  std::uint64_t seed = 1;
  RecordMode record = RecordMode::kSampled;
  double sample_dt = 1.0;  // kSampled only
  // Recompute all rates from scratch after each event and compare with the
  // incrementally maintained totals (relative 1e-9).
  bool check_rates = false;
  long max_population = 1'000'000;
};

// Exact (Gillespie direct method) simulation of the multitype logistic
// branching process with mutation. The returned path starts with `init` at
// time 0 and ends with the state at t_end.
std::vector<PopulationState> run_ibm(const ModelSpec& m, const SimConfig& cfg, const PopulationState& init);

// Time-weighted occupancy of the total population size over [burn_in, end of path].
std::map<long, double> empirical_size_histogram(const std::vector<PopulationState>& path, double burn_in);

// time,total_size,num_types
void write_path_csv(std::ostream& out, const std::vector<PopulationState>& path);
// time,x1..xk,count  (one row per trait group)
void write_full_dump_csv(std::ostream& out, const std::vector<PopulationState>& path, int dimension);

struct FixationEstimate {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  long fixed = 0;
  long reps = 0;

  bool contains(double p) const { return p >= ci_low && p <= ci_high; }
};

// Runs `reps` independent two-type chains (no mutation) from (n, m) to
// absorption; replicate i draws from stream_seed(seed, i). The interval is the
// 99% Wilson score interval.
FixationEstimate two_type_mc_fixation(const TwoTypeRates& r, long n, long m, long reps, std::uint64_t seed);

// 99% Wilson score interval for k successes out of n.
FixationEstimate wilson_interval(long successes, long trials);

}  // namespace lbp
