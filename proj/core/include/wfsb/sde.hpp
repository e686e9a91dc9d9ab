#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wfsb/model.hpp"

namespace wfsb {

/// First grid index at which the raw (pre-clamp) Euler update reached a
/// boundary side: raw <= 0 for `low`, raw >= 1 for `high`. Detection on the
/// raw value over-estimates true hitting for finite dt but never hides a
/// crossing behind the clamp.
struct HitFlags {
  std::optional<std::size_t> low;
  std::optional<std::size_t> high;
};

/// Identity of the noise that produced a path. Coordinate substreams are
/// derived from (master, replicate, coordinate), so any replicate of a
/// Monte Carlo run can be regenerated in isolation.
struct StreamId {
  std::uint64_t master = 0;
  std::uint64_t replicate = 0;
  friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// Uniform-grid realization of the diffusion. `states` is row-major:
/// states[step * coords + c]. coords is 2 for the two-coordinate models,
/// k+1 for the k-bank model.
struct Path {
  double dt = 0.0;
  std::size_t coords = 2;
  StreamId stream;
  std::vector<double> times;
  std::vector<double> states;
  std::vector<HitFlags> hits;            // per coordinate
  std::vector<std::uint64_t> draws;      // normals consumed per coordinate

  std::size_t step_count() const { return times.empty() ? 0 : times.size() - 1; }
  double at(std::size_t step, std::size_t coord) const {
    return states[step * coords + coord];
  }
};

/// Euler-Maruyama path of the two-coordinate diffusion. Post-step clamping
/// keeps the state in the unit square; the raw update drives the hit flags.
/// Deterministic given (params, init, t_max, dt, stream).
Path simulate_path(const ModelParams& p, DiffusionState init, double t_max, double dt,
                   std::uint64_t stream, std::uint64_t replicate = 0);

/// Same scheme for the k-bank system; only coordinate 0 carries noise.
Path simulate_path_k(const ModelParams& p, std::span<const double> init, double t_max,
                     double dt, std::uint64_t stream, std::uint64_t replicate = 0);

/// Two-coordinate path driven by externally supplied standard normals
/// (one per step and coordinate; pass an empty span for a silent
/// coordinate). Used for noise-coupling studies across step sizes.
Path simulate_path_with_noise(const ModelParams& p, DiffusionState init, double t_max,
                              double dt, std::span<const double> normals_x,
                              std::span<const double> normals_y, StreamId label = {});

struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  double dt = 0.0;
};

/// Monte Carlo estimate of E[X(t)^n Y(t)^m] over independent paths.
MomentEstimate estimate_moment(const ModelParams& p, DiffusionState init, int n, int m,
                               double t, double dt, std::size_t n_paths,
                               std::uint64_t master_seed, int threads = 1);

/// Batch version: one simulation pass, estimates for every exponent pair at
/// every record time. Result layout: [time_index][pair_index].
std::vector<std::vector<MomentEstimate>> estimate_moments_at(
    const ModelParams& p, DiffusionState init, std::span<const std::pair<int, int>> pairs,
    std::span<const double> times, double dt, std::size_t n_paths, std::uint64_t master_seed,
    int threads = 1);

struct HitFrequency {
  double frequency = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  double dt = 0.0;
};

/// Fraction of paths whose pre-clamp flag for `which` fires before t_max.
/// init must be strictly interior.
HitFrequency hitting_experiment(const ModelParams& p, DiffusionState init, Boundary which,
                                double t_max, double dt, std::size_t n_paths,
                                std::uint64_t master_seed, int threads = 1);

/// Endpoint states X(t), Y(t) of n_paths independent paths (for
/// distribution diagnostics).
std::vector<DiffusionState> endpoint_states(const ModelParams& p, DiffusionState init,
                                            double t, double dt, std::size_t n_paths,
                                            std::uint64_t master_seed, int threads = 1);

/// Deterministic pairwise summation; result independent of thread count
/// because inputs are stored per-replicate before reduction.
double pairwise_sum(std::span<const double> values);

/// Mean and standard error of the mean via pairwise summation.
std::pair<double, double> mean_and_std_error(std::span<const double> values);

/// Number of Euler steps for (t_max, dt); throws unless t_max is an
/// integral multiple of dt (within rounding slack).
std::size_t grid_steps(double t_max, double dt);

}  // namespace wfsb
