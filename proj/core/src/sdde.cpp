#include "wfsb/sdde.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "wfsb/rng.hpp"

namespace wfsb {

double bank_decay_rate(const SeedBankSpec& bank) { return bank.u1 + bank.u2 + bank.K * bank.c; }

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

struct SddeSetup {
  std::size_t steps = 0;
  std::size_t dim = 0;
  double sqrt_dt = 0.0;
};

SddeSetup prepare(const ModelParams& p, std::span<const double> init, double t_max, double dt,
                  Path& path, std::uint64_t stream, std::uint64_t replicate) {
  const std::size_t k = p.bank_count();
  if (k == 0) throw std::invalid_argument("delay integrators require seed banks");
  if (init.size() != k + 1)
    throw std::invalid_argument("initial state dimension must be bank count + 1");
  for (double v : init)
    if (v < 0.0 || v > 1.0 || !std::isfinite(v))
      throw std::invalid_argument("initial state must lie in the unit hypercube");
  SddeSetup s;
  s.steps = grid_steps(t_max, dt);
  s.dim = k + 1;
  s.sqrt_dt = std::sqrt(dt);
  path.dt = dt;
  path.coords = s.dim;
  path.stream = {stream, replicate};
  path.times.resize(s.steps + 1);
  for (std::size_t i = 0; i <= s.steps; ++i) path.times[i] = static_cast<double>(i) * dt;
  path.states.resize(s.dim * (s.steps + 1));
  path.hits.resize(s.dim);
  path.draws.assign(s.dim, 0);
  return s;
}

inline double active_drift(const ModelParams& p, double x, std::span<const double> bank_y) {
  double migration = 0.0;
  for (std::size_t i = 0; i < bank_y.size(); ++i)
    migration += p.seedbanks[i].c * (bank_y[i] - x);
  return -p.u1 * x + p.u2 * (1.0 - x) + migration;
}

}  // namespace

Path simulate_sdde_lift(const ModelParams& p, std::span<const double> init, double t_max,
                        double dt, std::uint64_t stream, std::uint64_t replicate) {
  Path path;
  const SddeSetup s = prepare(p, init, t_max, dt, path, stream, replicate);
  const std::size_t k = p.bank_count();

  std::vector<DelayKernelState> lift(k);
  std::vector<double> step_decay(k), gain(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& b = p.seedbanks[i];
    lift[i].decay_rate = bank_decay_rate(b);
    step_decay[i] = std::exp(-lift[i].decay_rate * dt);
    gain[i] = (1.0 - step_decay[i]) / lift[i].decay_rate;
    y[i] = init[i + 1];
  }
  NormalSampler gx(substream_key(stream, replicate, 0));
  const bool noise_x = p.alpha > 0.0;

  double x = init[0];
  path.states[0] = x;
  for (std::size_t i = 0; i < k; ++i) path.states[1 + i] = y[i];

  for (std::size_t step = 1; step <= s.steps; ++step) {
    double raw_x = x + dt * active_drift(p, x, y);
    if (noise_x) {
      const double amp = p.alpha * std::sqrt(std::max(x * (1.0 - x), 0.0));
      raw_x += amp * s.sqrt_dt * gx();
    }
    const double t = static_cast<double>(step) * dt;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& b = p.seedbanks[i];
      // Exact one-step kernel update with X held at its left endpoint;
      // keeps I below (u2 + Kc)/lambda so the reconstructed Y never
      // leaves [0,1].
      const double integrand = b.u2 + (b.K * b.c) * x;
      lift[i].integral = lift[i].integral * step_decay[i] + integrand * gain[i];
      y[i] = init[i + 1] * std::exp(-lift[i].decay_rate * t) + lift[i].integral;
    }
    x = clamp_and_flag(raw_x, step, path.hits[0]);
    path.states[s.dim * step] = x;
    for (std::size_t i = 0; i < k; ++i)
      path.states[s.dim * step + 1 + i] = clamp_and_flag(y[i], step, path.hits[1 + i]);
  }
  path.draws[0] = gx.draws();
  return path;
}

Path simulate_sdde_quadrature(const ModelParams& p, std::span<const double> init, double t_max,
                              double dt, std::uint64_t stream, std::uint64_t replicate,
                              std::size_t history_cap) {
  Path path;
  const SddeSetup s = prepare(p, init, t_max, dt, path, stream, replicate);
  if (s.steps + 1 > history_cap)
    throw std::length_error("X history of " + std::to_string(s.steps + 1) +
                            " samples exceeds cap " + std::to_string(history_cap));
  const std::size_t k = p.bank_count();
  std::vector<double> decay(k), step_decay(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    decay[i] = bank_decay_rate(p.seedbanks[i]);
    step_decay[i] = std::exp(-decay[i] * dt);
    y[i] = init[i + 1];
  }
  NormalSampler gx(substream_key(stream, replicate, 0));
  const bool noise_x = p.alpha > 0.0;

  std::vector<double> history;
  history.reserve(s.steps + 1);
  double x = init[0];
  history.push_back(x);
  path.states[0] = x;
  for (std::size_t i = 0; i < k; ++i) path.states[1 + i] = y[i];

  for (std::size_t step = 1; step <= s.steps; ++step) {
    double raw_x = x + dt * active_drift(p, x, y);
    if (noise_x) {
      const double amp = p.alpha * std::sqrt(std::max(x * (1.0 - x), 0.0));
      raw_x += amp * s.sqrt_dt * gx();
    }
    x = clamp_and_flag(raw_x, step, path.hits[0]);
    history.push_back(x);

    const double t = static_cast<double>(step) * dt;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& b = p.seedbanks[i];
      // Trapezoid over the full stored history; kernel weights accumulate
      // right-to-left as powers of exp(-lambda dt).
      double weight = 1.0;
      double acc = 0.5 * (b.u2 + (b.K * b.c) * history[step]);
      for (std::size_t j = step; j-- > 0;) {
        weight *= step_decay[i];
        const double g = b.u2 + (b.K * b.c) * history[j];
        acc += (j == 0 ? 0.5 : 1.0) * weight * g;
      }
      const double integral = dt * acc;
      y[i] = init[i + 1] * std::exp(-decay[i] * t) + integral;
    }
    path.states[s.dim * step] = x;
    for (std::size_t i = 0; i < k; ++i)
      path.states[s.dim * step + 1 + i] = clamp_and_flag(y[i], step, path.hits[1 + i]);
  }
  path.draws[0] = gx.draws();
  return path;
}

DeviationReport pathwise_deviation(const Path& a, const Path& b) {
  if (a.dt != b.dt || a.coords != b.coords || a.times.size() != b.times.size())
    throw std::invalid_argument("paths live on different grids");
  DeviationReport rep;
  rep.dt = a.dt;
  rep.t_max = a.times.empty() ? 0.0 : a.times.back();
  rep.coupled = a.stream == b.stream;
  double sup = 0.0;
  for (std::size_t i = 0; i < a.states.size(); ++i)
    sup = std::max(sup, std::abs(a.states[i] - b.states[i]));
  rep.sup_deviation = sup;
  return rep;
}

}  // namespace wfsb
