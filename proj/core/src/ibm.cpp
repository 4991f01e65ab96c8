#include "lbp/ibm.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "lbp/error.hpp"
#include "lbp/random.hpp"

namespace lbp {

long PopulationState::total_size() const {
  long n = 0;
  for (const auto& [trait, count] : groups) n += count;
  return n;
}

void PopulationState::validate() const {
  if (groups.empty()) throw ModelError("population state has no individuals");
  for (const auto& [trait, count] : groups) {
    if (count <= 0) throw ModelError("population state has a non-positive count");
  }
}

PopulationState PopulationState::monomorphic(const TraitPoint& x, long count) {
  PopulationState s;
  s.groups[x] = count;
  s.validate();
  return s;
}

namespace {

// Event-loop state: trait groups with cached rates and the competition matrix
// between present traits.
class Population {
 public:
  Population(const ModelSpec& model, const PopulationState& init) : model_(model) {
    for (const auto& [trait, count] : init.groups) {
      const std::size_t i = add_group(trait);
      groups_[i].count = 0;
      change_count(i, count);
    }
    resync();
  }

  double total_rate() const { return total_rate_; }
  long total_size() const { return total_size_; }

  // Picks and applies one event given target in [0, total_rate).
  void fire(double target, double gamma, Rng& rng) {
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      Group& g = groups_[i];
      const double birth = g.count * g.b;
      if (target < birth) {
        if (gamma * g.mu > 0.0 && bernoulli(rng, gamma * g.mu)) {
          const TraitPoint child = g.trait + model_.kernel().sample(g.trait, rng);
          change_count(find_or_add(child), +1);
        } else {
          change_count(i, +1);
        }
        return;
      }
      target -= birth;
      const double death = g.count * g.competition;
      if (target < death) {
        change_count(i, -1);
        if (groups_[i].count == 0) remove_group(i);
        return;
      }
      target -= death;
    }
    // Rounding left the target past the last event: take the last nonzero one.
    for (std::size_t i = groups_.size(); i-- > 0;) {
      if (groups_[i].count * groups_[i].competition > 0.0) {
        change_count(i, -1);
        if (groups_[i].count == 0) remove_group(i);
        return;
      }
    }
    change_count(groups_.size() - 1, +1);
  }

  // Recomputes every rate from the competition matrix and counts; returns the
  // largest relative disagreement with the incrementally maintained values.
  double check() const {
    double scratch_total = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      double comp = -comp_[i][i];
      for (std::size_t j = 0; j < groups_.size(); ++j) comp += comp_[i][j] * groups_[j].count;
      const double scale = std::max(std::abs(comp), comp_[i][i]);
      worst = std::max(worst, std::abs(comp - groups_[i].competition) / scale);
      scratch_total += groups_[i].count * (groups_[i].b + comp);
    }
    return std::max(worst, std::abs(scratch_total - total_rate_) / scratch_total);
  }

  void resync() {
    total_rate_ = 0.0;
    for (const Group& g : groups_) total_rate_ += g.count * (g.b + g.competition);
  }

  PopulationState snapshot(double time) const {
    PopulationState s;
    s.time = time;
    for (const Group& g : groups_) s.groups[g.trait] += g.count;
    return s;
  }

 private:
  struct Group {
    TraitPoint trait;
    long count = 0;
    double b = 0.0;
    double mu = 0.0;
    // Per-capita death rate: sum_j c(x_i, x_j) n_j - c(x_i, x_i).
    double competition = 0.0;
  };

  std::size_t find_or_add(const TraitPoint& x) {
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      if (groups_[i].trait == x) return i;
    }
    return add_group(x);
  }

  std::size_t add_group(const TraitPoint& x) {
    Group g;
    g.trait = x;
    g.b = model_.b(x);
    g.mu = model_.mu(x);
    const std::size_t k = groups_.size();
    for (std::size_t i = 0; i < k; ++i) {
      comp_[i].push_back(model_.c(groups_[i].trait, x));
    }
    std::vector<double> row(k + 1);
    for (std::size_t j = 0; j < k; ++j) row[j] = model_.c(x, groups_[j].trait);
    row[k] = model_.c(x, x);
    g.competition = -row[k];
    for (std::size_t j = 0; j < k; ++j) g.competition += row[j] * groups_[j].count;
    comp_.push_back(std::move(row));
    groups_.push_back(std::move(g));
    return k;
  }

  void remove_group(std::size_t i) {
    const std::size_t last = groups_.size() - 1;
    if (i != last) {
      std::swap(groups_[i], groups_[last]);
      std::swap(comp_[i], comp_[last]);
      for (auto& row : comp_) std::swap(row[i], row[last]);
    }
    groups_.pop_back();
    comp_.pop_back();
    for (auto& row : comp_) row.pop_back();
  }

  void change_count(std::size_t z, long delta) {
    double rate_delta = groups_[z].b * delta;
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      const double d = comp_[i][z] * delta;
      groups_[i].competition += d;
      rate_delta += groups_[i].count * d;
    }
    // The changed group's own count moved too.
    rate_delta += delta * groups_[z].competition;
    groups_[z].count += delta;
    total_size_ += delta;
    total_rate_ += rate_delta;
  }

  const ModelSpec& model_;
  std::vector<Group> groups_;
  std::vector<std::vector<double>> comp_;
  long total_size_ = 0;
  double total_rate_ = 0.0;
};

}  // namespace

std::vector<PopulationState> run_ibm(const ModelSpec& m, const SimConfig& cfg, const PopulationState& init) {
  if (!(cfg.t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  // gamma = 0 switches mutation off.
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (cfg.record == RecordMode::kSampled && !(cfg.sample_dt > 0.0)) throw std::invalid_argument("sample_dt must be positive");
  init.validate();

  Population pop(m, init);
  Rng rng = make_rng(cfg.seed);
  std::vector<PopulationState> path;
  path.push_back(pop.snapshot(0.0));

  double t = 0.0;
  std::uint64_t sample_index = 1;
  std::uint64_t events = 0;
  for (;;) {
    const double rate = pop.total_rate();
    const double t_next = t + exponential(rng, rate);
    if (cfg.record == RecordMode::kSampled) {
      for (double ts = sample_index * cfg.sample_dt; ts <= std::min(t_next, cfg.t_end);
           ts = ++sample_index * cfg.sample_dt) {
        path.push_back(pop.snapshot(ts));
      }
    }
    if (t_next > cfg.t_end) break;
    t = t_next;
    pop.fire(uniform01(rng) * rate, cfg.gamma, rng);
    ++events;
    if (cfg.check_rates) {
      const double err = pop.check();
      if (err > 1e-9) {
        std::ostringstream os;
        os << "rate bookkeeping drifted by " << err << " (relative) after event " << events << " at t=" << t;
        throw NumericalError(os.str());
      }
    }
    if ((events & 1023u) == 0) pop.resync();
    if (pop.total_size() > cfg.max_population) {
      std::ostringstream os;
      os << "population exceeded " << cfg.max_population << " individuals at t=" << t;
      throw NumericalError(os.str());
    }
    if (cfg.record == RecordMode::kFullPath) path.push_back(pop.snapshot(t));
  }
  if (path.back().time < cfg.t_end) path.push_back(pop.snapshot(cfg.t_end));
  if (cfg.record == RecordMode::kFinal) return {path.back()};
  return path;
}

std::map<long, double> empirical_size_histogram(const std::vector<PopulationState>& path, double burn_in) {
  if (path.empty() || !(path.back().time > burn_in)) {
    throw std::invalid_argument("empty window: path must extend beyond the burn-in");
  }
  std::map<long, double> hist;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double a = std::max(path[i].time, burn_in);
    const double b = path[i + 1].time;
    if (b <= a) continue;
    hist[path[i].total_size()] += b - a;
    total += b - a;
  }
  if (total <= 0.0) throw std::invalid_argument("empty window: no time after burn-in");
  for (auto& [size, w] : hist) w /= total;
  return hist;
}

void write_path_csv(std::ostream& out, const std::vector<PopulationState>& path) {
  const auto old = out.precision(17);
  out << "time,total_size,num_types\n";
  for (const auto& s : path) out << s.time << ',' << s.total_size() << ',' << s.num_types() << '\n';
  out.precision(old);
}

void write_full_dump_csv(std::ostream& out, const std::vector<PopulationState>& path, int dimension) {
  const auto old = out.precision(17);
  out << "time";
  for (int i = 1; i <= dimension; ++i) out << ",x" << i;
  out << ",count\n";
  for (const auto& s : path) {
    for (const auto& [trait, count] : s.groups) {
      out << s.time;
      for (double v : trait.coords()) out << ',' << v;
      out << ',' << count << '\n';
    }
  }
  out.precision(old);
}

FixationEstimate wilson_interval(long successes, long trials) {
  if (trials <= 0) throw std::invalid_argument("wilson interval needs trials > 0");
  constexpr double z = 2.5758293035489004;  // 99% two-sided
  const double n = static_cast<double>(trials);
  const double p = successes / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
  // The bounds are exact at the edges; the formula only reaches them up to rounding.
  const double low = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double high = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return {p, low, high, successes, trials};
}

FixationEstimate two_type_mc_fixation(const TwoTypeRates& r, long n, long m, long reps, std::uint64_t seed) {
  r.validate();
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (n < 0 || m < 0 || n + m == 0) throw std::invalid_argument("initial counts must be non-negative and not both 0");
  if (n == 0) return {1.0, 1.0, 1.0, reps, reps};
  if (m == 0) return {0.0, 0.0, 0.0, 0, reps};

  long fixed = 0;
  for (long rep = 0; rep < reps; ++rep) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(rep));
    long x = n, y = m;
    while (x > 0 && y > 0) {
      const double xb = x * r.b_x;
      const double yb = y * r.b_y;
      const double xd = x * (r.c_xx * (x - 1) + r.c_xy * y);
      const double yd = y * (r.c_yx * x + r.c_yy * (y - 1));
      double u = uniform01(rng) * (xb + yb + xd + yd);
      if (u < xb) {
        ++x;
      } else if ((u -= xb) < yb) {
        ++y;
      } else if ((u -= yb) < xd) {
        --x;
      } else {
        --y;
      }
    }
    if (x == 0) ++fixed;
  }
  return wilson_interval(fixed, reps);
}

}  // namespace lbp
