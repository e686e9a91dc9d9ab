#include "wfsb/sde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "wfsb/rng.hpp"

namespace wfsb {

std::size_t grid_steps(double t_max, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (t_max < 0.0) throw std::invalid_argument("t_max must be nonnegative");
  if (t_max == 0.0) return 0;
  if (dt > t_max * (1.0 + 1e-9)) throw std::invalid_argument("dt must not exceed t_max");
  const double ratio = t_max / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps < 1 || std::abs(static_cast<double>(steps) * dt - t_max) >
                       1e-9 * std::max(1.0, t_max))
    throw std::invalid_argument("t_max must be an integral multiple of dt");
  return steps;
}

namespace {

inline double clamp_and_flag(double raw, std::size_t step, HitFlags& flags) {
  if (raw <= 0.0) {
    if (!flags.low) flags.low = step;
    return 0.0;
  }
  if (raw >= 1.0) {
    if (!flags.high) flags.high = step;
    return 1.0;
  }
  return raw;
}

void check_unit_square(DiffusionState s) {
  if (s.x < 0.0 || s.x > 1.0 || s.y < 0.0 || s.y > 1.0)
    throw std::invalid_argument("initial state must lie in the unit square");
}

/// Core two-coordinate Euler-Maruyama loop. `Gauss` supplies one standard
/// normal per consuming coordinate per step; `rec(step, x, y)` observes the
/// post-clamp state at every grid index including 0.
template <class GaussX, class GaussY, class Recorder>
void run_two_island(const ModelParams& p, DiffusionState init, std::size_t steps, double dt,
                    GaussX&& gauss_x, GaussY&& gauss_y, std::array<HitFlags, 2>& hits,
                    Recorder&& rec) {
  const bool noise_x = p.alpha > 0.0;
  const bool noise_y = p.alphap > 0.0;
  const double sqrt_dt = std::sqrt(dt);
  double x = init.x;
  double y = init.y;
  rec(std::size_t{0}, x, y);
  for (std::size_t k = 1; k <= steps; ++k) {
    const auto [dx, dy] = drift(p, {x, y});
    const auto [ax, ay] = diffusion_amplitude(p, {x, y});
    double raw_x = x + dt * dx;
    if (noise_x) raw_x += ax * sqrt_dt * gauss_x();
    double raw_y = y + dt * dy;
    if (noise_y) raw_y += ay * sqrt_dt * gauss_y();
    x = clamp_and_flag(raw_x, k, hits[0]);
    y = clamp_and_flag(raw_y, k, hits[1]);
    rec(k, x, y);
  }
}

void fill_times(Path& path, std::size_t steps, double dt) {
  path.times.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) path.times[k] = static_cast<double>(k) * dt;
}

}  // namespace

Path simulate_path(const ModelParams& p, DiffusionState init, double t_max, double dt,
                   std::uint64_t stream, std::uint64_t replicate) {
  check_unit_square(init);
  const std::size_t steps = grid_steps(t_max, dt);
  Path path;
  path.dt = dt;
  path.coords = 2;
  path.stream = {stream, replicate};
  fill_times(path, steps, dt);
  path.states.resize(2 * (steps + 1));
  path.hits.resize(2);
  NormalSampler gx(substream_key(stream, replicate, 0));
  NormalSampler gy(substream_key(stream, replicate, 1));
  std::array<HitFlags, 2> hits;
  run_two_island(p, init, steps, dt, [&] { return gx(); }, [&] { return gy(); }, hits,
                 [&](std::size_t k, double x, double y) {
                   path.states[2 * k] = x;
                   path.states[2 * k + 1] = y;
                 });
  path.hits[0] = hits[0];
  path.hits[1] = hits[1];
  path.draws = {gx.draws(), gy.draws()};
  return path;
}

Path simulate_path_with_noise(const ModelParams& p, DiffusionState init, double t_max,
                              double dt, std::span<const double> normals_x,
                              std::span<const double> normals_y, StreamId label) {
  check_unit_square(init);
  const std::size_t steps = grid_steps(t_max, dt);
  if (p.alpha > 0.0 && normals_x.size() < steps)
    throw std::invalid_argument("not enough x normals for the grid");
  if (p.alphap > 0.0 && normals_y.size() < steps)
    throw std::invalid_argument("not enough y normals for the grid");
  Path path;
  path.dt = dt;
  path.coords = 2;
  path.stream = label;
  fill_times(path, steps, dt);
  path.states.resize(2 * (steps + 1));
  path.hits.resize(2);
  std::size_t ix = 0, iy = 0;
  std::array<HitFlags, 2> hits;
  run_two_island(p, init, steps, dt, [&] { return normals_x[ix++]; },
                 [&] { return normals_y[iy++]; }, hits,
                 [&](std::size_t k, double x, double y) {
                   path.states[2 * k] = x;
                   path.states[2 * k + 1] = y;
                 });
  path.hits[0] = hits[0];
  path.hits[1] = hits[1];
  path.draws = {ix, iy};
  return path;
}

Path simulate_path_k(const ModelParams& p, std::span<const double> init, double t_max,
                     double dt, std::uint64_t stream, std::uint64_t replicate) {
  const std::size_t k = p.bank_count();
  if (k == 0) throw std::invalid_argument("simulate_path_k requires seed banks");
  if (init.size() != k + 1)
    throw std::invalid_argument("initial state dimension must be bank count + 1");
  for (double v : init)
    if (v < 0.0 || v > 1.0 || !std::isfinite(v))
      throw std::invalid_argument("initial state must lie in the unit hypercube");
  const std::size_t steps = grid_steps(t_max, dt);
  const std::size_t dim = k + 1;

  Path path;
  path.dt = dt;
  path.coords = dim;
  path.stream = {stream, replicate};
  fill_times(path, steps, dt);
  path.states.resize(dim * (steps + 1));
  path.hits.resize(dim);
  path.draws.assign(dim, 0);

  NormalSampler gx(substream_key(stream, replicate, 0));
  const bool noise_x = p.alpha > 0.0;
  const double sqrt_dt = std::sqrt(dt);
  std::vector<double> state(init.begin(), init.end());
  std::vector<double> d(dim);
  std::copy(state.begin(), state.end(), path.states.begin());
  for (std::size_t step = 1; step <= steps; ++step) {
    const double x = state[0];
    double migration = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      migration += p.seedbanks[i].c * (state[i + 1] - x);
    d[0] = -p.u1 * x + p.u2 * (1.0 - x) + migration;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& b = p.seedbanks[i];
      const double y = state[i + 1];
      d[i + 1] = -b.u1 * y + b.u2 * (1.0 - y) + (b.c * b.K) * (x - y);
    }
    double raw0 = x + dt * d[0];
    if (noise_x) {
      const double amp = p.alpha * std::sqrt(std::max(x * (1.0 - x), 0.0));
      raw0 += amp * sqrt_dt * gx();
    }
    state[0] = clamp_and_flag(raw0, step, path.hits[0]);
    for (std::size_t i = 1; i < dim; ++i)
      state[i] = clamp_and_flag(state[i] + dt * d[i], step, path.hits[i]);
    std::copy(state.begin(), state.end(), path.states.begin() + dim * step);
  }
  path.draws[0] = gx.draws();
  return path;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 32) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

std::pair<double, double> mean_and_std_error(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("empty sample");
  const double mean = pairwise_sum(values) / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i] - mean;
    sq[i] = d * d;
  }
  const double ss = pairwise_sum(sq);
  const double var_of_mean = ss / (static_cast<double>(n - 1) * static_cast<double>(n));
  return {mean, std::sqrt(std::max(var_of_mean, 0.0))};
}

namespace {

/// Runs fn(i) for i in [0, n) over `threads` workers on contiguous blocks.
/// Work units write only to their own output slots, so the result does not
/// depend on the partition.
template <class Fn>
void parallel_paths(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct EndpointOutcome {
  DiffusionState state;
  std::array<HitFlags, 2> hits;
};

/// One two-coordinate path without storage; fills `recorded` with states at
/// the given (sorted, unique) grid indices.
EndpointOutcome run_endpoint(const ModelParams& p, DiffusionState init, std::size_t steps,
                             double dt, std::uint64_t master, std::uint64_t replicate,
                             std::span<const std::size_t> record_idx,
                             std::span<DiffusionState> recorded) {
  NormalSampler gx(substream_key(master, replicate, 0));
  NormalSampler gy(substream_key(master, replicate, 1));
  EndpointOutcome out;
  std::size_t next = 0;
  run_two_island(p, init, steps, dt, [&] { return gx(); }, [&] { return gy(); }, out.hits,
                 [&](std::size_t k, double x, double y) {
                   while (next < record_idx.size() && record_idx[next] == k) {
                     recorded[next] = {x, y};
                     ++next;
                   }
                   if (k == steps) out.state = {x, y};
                 });
  return out;
}

double ipow(double base, int exp) {
  double acc = 1.0;
  for (int i = 0; i < exp; ++i) acc *= base;
  return acc;
}

}  // namespace

std::vector<std::vector<MomentEstimate>> estimate_moments_at(
    const ModelParams& p, DiffusionState init, std::span<const std::pair<int, int>> pairs,
    std::span<const double> times, double dt, std::size_t n_paths, std::uint64_t master_seed,
    int threads) {
  check_unit_square(init);
  if (n_paths < 2) throw std::invalid_argument("n_paths must be at least 2");
  if (pairs.empty() || times.empty()) throw std::invalid_argument("nothing to estimate");
  for (const auto& [n, m] : pairs)
    if (n < 0 || m < 0) throw std::invalid_argument("exponents must be nonnegative");

  double t_end = 0.0;
  for (double t : times) {
    if (t < 0.0) throw std::invalid_argument("times must be nonnegative");
    t_end = std::max(t_end, t);
  }
  const std::size_t steps = t_end == 0.0 ? 0 : grid_steps(t_end, dt);
  std::vector<std::size_t> record_idx(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    record_idx[i] = std::min<std::size_t>(
        steps, static_cast<std::size_t>(std::llround(times[i] / dt)));
  }
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return record_idx[a] < record_idx[b]; });
  std::vector<std::size_t> sorted_idx(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted_idx[i] = record_idx[order[i]];

  const std::size_t T = times.size();
  const std::size_t P = pairs.size();
  std::vector<std::vector<double>> samples(T * P, std::vector<double>(n_paths));
  parallel_paths(n_paths, threads, [&](std::size_t i) {
    std::vector<DiffusionState> rec(T);
    run_endpoint(p, init, steps, dt, master_seed, i, sorted_idx, rec);
    for (std::size_t s = 0; s < T; ++s) {
      const std::size_t ti = order[s];
      for (std::size_t pi = 0; pi < P; ++pi)
        samples[ti * P + pi][i] = ipow(rec[s].x, pairs[pi].first) *
                                  ipow(rec[s].y, pairs[pi].second);
    }
  });

  std::vector<std::vector<MomentEstimate>> out(T, std::vector<MomentEstimate>(P));
  for (std::size_t ti = 0; ti < T; ++ti)
    for (std::size_t pi = 0; pi < P; ++pi) {
      const auto [mean, se] = mean_and_std_error(samples[ti * P + pi]);
      out[ti][pi] = {mean, se, n_paths, dt};
    }
  return out;
}

MomentEstimate estimate_moment(const ModelParams& p, DiffusionState init, int n, int m,
                               double t, double dt, std::size_t n_paths,
                               std::uint64_t master_seed, int threads) {
  const std::pair<int, int> pair{n, m};
  const double time = t;
  return estimate_moments_at(p, init, {&pair, 1}, {&time, 1}, dt, n_paths, master_seed,
                             threads)[0][0];
}

HitFrequency hitting_experiment(const ModelParams& p, DiffusionState init, Boundary which,
                                double t_max, double dt, std::size_t n_paths,
                                std::uint64_t master_seed, int threads) {
  if (!(init.x > 0.0 && init.x < 1.0 && init.y > 0.0 && init.y < 1.0))
    throw std::invalid_argument("initial state must be strictly interior");
  if (n_paths < 1) throw std::invalid_argument("n_paths must be positive");
  const std::size_t steps = grid_steps(t_max, dt);
  std::vector<unsigned char> hit(n_paths, 0);
  parallel_paths(n_paths, threads, [&](std::size_t i) {
    const auto outcome = run_endpoint(p, init, steps, dt, master_seed, i, {}, {});
    const HitFlags& fx = outcome.hits[0];
    const HitFlags& fy = outcome.hits[1];
    bool fired = false;
    switch (which) {
      case Boundary::X0: fired = fx.low.has_value(); break;
      case Boundary::X1: fired = fx.high.has_value(); break;
      case Boundary::Y0: fired = fy.low.has_value(); break;
      case Boundary::Y1: fired = fy.high.has_value(); break;
    }
    hit[i] = fired ? 1 : 0;
  });
  std::size_t count = 0;
  for (unsigned char h : hit) count += h;
  const double f = static_cast<double>(count) / static_cast<double>(n_paths);
  const double se = std::sqrt(std::max(f * (1.0 - f), 0.0) / static_cast<double>(n_paths));
  return {f, se, n_paths, dt};
}

std::vector<DiffusionState> endpoint_states(const ModelParams& p, DiffusionState init,
                                            double t, double dt, std::size_t n_paths,
                                            std::uint64_t master_seed, int threads) {
  check_unit_square(init);
  const std::size_t steps = t == 0.0 ? 0 : grid_steps(t, dt);
  std::vector<DiffusionState> out(n_paths);
  parallel_paths(n_paths, threads, [&](std::size_t i) {
    out[i] = run_endpoint(p, init, steps, dt, master_seed, i, {}, {}).state;
  });
  return out;
}

}  // namespace wfsb
