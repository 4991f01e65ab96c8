#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "lbp/fixation.hpp"
#include "lbp/model.hpp"
#include "lbp/random.hpp"

namespace lbp {

// Mean mutant production rate of a stationary x-population:
// mu(x) b(x) theta(x) / (1 - e^-theta(x)).
double beta(const ModelSpec& m, const TraitPoint& x);

// Draw from Poisson(theta) conditioned on being nonzero.
long sample_stationary_size(double theta, Rng& rng);

struct TssOptions {
  double t_end = 1.0;
  std::uint64_t seed = 1;
  // Mutation steps are scaled by eps; any matching time rescaling is the caller's.
  double eps = 1.0;
  // Attach a stationary size draw to every visited state. Sizes use their own
  // random stream, so the jump sequence does not depend on this flag.
  bool emit_sizes = false;
  FixationOptions fixation{};
};

struct TssPath {
  // times[0] = 0 holds the initial trait; later entries are jump times.
  std::vector<double> times;
  std::vector<TraitPoint> states;
  std::vector<long> sizes;  // empty unless emit_sizes
  long candidates = 0;
};

// Thinning step of the substitution sequence: candidates arrive at rate
// beta(x) with steps eps * h, h ~ M(x, .), and are accepted with probability
// chi(x, x + eps h). chi values are cached per run on trait pairs quantized
// to 1e-9.
class TssStepper {
 public:
  TssStepper(const ModelSpec& m, double eps = 1.0, FixationOptions fixation = {});

  Eigen::VectorXd propose_step(const TraitPoint& x, Rng& rng) const;
  // chi(x, y); throws NumericalError if it is not strictly positive.
  double acceptance(const TraitPoint& x, const TraitPoint& y);
  bool trial(const TraitPoint& x, const TraitPoint& y, Rng& rng);

  std::size_t cache_size() const noexcept { return cache_.size(); }

 private:
  const ModelSpec& model_;
  double eps_;
  FixationOptions fixation_;
  std::map<std::vector<std::int64_t>, double> cache_;
};

TssPath run_tss(const ModelSpec& m, const TraitPoint& x0, const TssOptions& options);

// jump_time,x1..xk[,size]
void write_tss_csv(std::ostream& out, const TssPath& path);

}  // namespace lbp
