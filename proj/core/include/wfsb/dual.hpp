#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wfsb/model.hpp"

namespace wfsb {

/// State of the block-counting dual: a pair of nonnegative line counts,
/// or the absorbing death state. n+m never increases along a trajectory.
struct DualState {
  int n = 0;
  int m = 0;
  bool dead = false;

  static DualState death() { return {0, 0, true}; }
  bool is_death() const { return dead; }
  bool absorbing() const { return dead || (n == 0 && m == 0); }
  int total() const { return dead ? 0 : n + m; }
  friend bool operator==(const DualState& a, const DualState& b) {
    if (a.dead || b.dead) return a.dead == b.dead;
    return a.n == b.n && a.m == b.m;
  }
};

struct DualTransition {
  DualState to;
  double rate = 0.0;
};

/// Nonzero outgoing rates from s. Exactly the five patterns:
/// (n-1,m), (n,m-1), death, (n-1,m+1), (n+1,m-1); zero rates omitted.
std::vector<DualTransition> dual_rates(const ModelParams& p, DualState s);

/// Exact generator of the dual chain restricted to {(i,j): i+j <= level}
/// plus the death state. The restriction is closed: no transition leaves it.
class DualGenerator {
 public:
  static constexpr int kDefaultLevelCap = 200;

  DualGenerator(const ModelParams& p, int level, int level_cap = kDefaultLevelCap);

  int level() const { return level_; }
  /// (level+1)(level+2)/2 pair states plus the death state.
  std::size_t state_count() const { return tri_count_ + 1; }
  std::size_t death_index() const { return tri_count_; }
  std::size_t index_of(DualState s) const;
  DualState state_at(std::size_t idx) const;

  double exit_rate(std::size_t idx) const { return exit_rate_[idx]; }
  /// Uniformization constant: maximum exit rate over all states.
  double uniformization_rate() const { return uniformization_rate_; }
  const std::vector<std::pair<std::size_t, double>>& row(std::size_t idx) const {
    return rows_[idx];
  }

 private:
  int level_;
  std::size_t tri_count_;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows_;
  std::vector<double> exit_rate_;
  double uniformization_rate_ = 0.0;
};

/// Event-driven trajectory: the state entered at each event time, starting
/// with (0, start). Ends at absorption or at the first jump past t_max.
struct DualTrajectory {
  struct Event {
    double time;
    DualState state;
  };
  std::vector<Event> events;
  double t_max = 0.0;
  std::uint64_t stream = 0;
  bool absorbed() const { return !events.empty() && events.back().state.absorbing(); }
};

DualTrajectory simulate_dual(const ModelParams& p, DualState start, double t_max,
                             std::uint64_t stream);

struct AbsorptionResult {
  double probability = 0.0;
  /// Set when all mutation rates vanish: (0,0) is then unreachable from any
  /// other state and the returned constant is exact by convention.
  bool no_mutation_degenerate = false;
  double residual = 0.0;
};

/// P{dual absorbed in (0,0)} from `start`, by the first-step linear system
/// over the level n+m truncation.
AbsorptionResult absorption_probability(const ModelParams& p, DualState start);

/// Absorption probabilities for every pair state with i+j <= level, indexed
/// as in DualGenerator. The death state entry is 0.
std::vector<double> absorption_probabilities(const ModelParams& p, int level,
                                             double* residual_out = nullptr);

/// E_start[x^N(t) y^M(t); not dead] by uniformization, Poisson tail 1e-12.
/// Convention 0^0 = 1.
double transient_dual_expectation(const ModelParams& p, DualState start, double x, double y,
                                  double t);

/// Same quantity for every start state with i+j <= level at once (one
/// backward uniformization pass); indexed as in DualGenerator.
std::vector<double> transient_dual_expectation_all(const ModelParams& p, int level, double x,
                                                   double y, double t);

/// Distribution of the dual state at time t started from `start`, over the
/// level n+m truncation (forward uniformization pass).
std::vector<double> transient_distribution(const ModelParams& p, DualState start, double t,
                                           int level);

}  // namespace wfsb
