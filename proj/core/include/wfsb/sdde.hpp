#pragma once

#include <cstdint>
#include <span>

#include "wfsb/sde.hpp"

namespace wfsb {

/// Auxiliary state of the Markovian lift for one bank: the running value of
/// the delay integral I(t) = int_0^t exp(-lambda (t-s)) (u2 + K c X(s)) ds
/// and its decay rate lambda = u1 + u2 + K c.
struct DelayKernelState {
  double integral = 0.0;
  double decay_rate = 0.0;
};

/// Decay rate lambda_i of bank i.
double bank_decay_rate(const SeedBankSpec& bank);

/// Delay-equation integrator via the Markovian lift: the X equation is
/// stepped like the forward engine while each bank's delay integral is
/// advanced with the exact one-step exponential update (X held constant
/// over the step). Y_i is reconstructed as y_i exp(-lambda_i t) + I_i(t)
/// and therefore stays in [0,1] without clamping.
///
/// Consumes the coordinate-0 noise substream in the same order as
/// simulate_path_k, so paths with equal (stream, replicate) are coupled.
Path simulate_sdde_lift(const ModelParams& p, std::span<const double> init, double t_max,
                        double dt, std::uint64_t stream, std::uint64_t replicate = 0);

/// Same equations with the delay integral evaluated each step by
/// trapezoidal quadrature over the stored X history (memory ~ t_max/dt).
/// A fidelity witness for the literal delay form of the lift integrator.
Path simulate_sdde_quadrature(const ModelParams& p, std::span<const double> init,
                              double t_max, double dt, std::uint64_t stream,
                              std::uint64_t replicate = 0,
                              std::size_t history_cap = 4'000'000);

struct DeviationReport {
  double sup_deviation = 0.0;
  /// True when both paths declare the same noise identity; a comparison
  /// across different streams is O(1) apart and flagged non-coupled.
  bool coupled = false;
  double dt = 0.0;
  double t_max = 0.0;
};

/// Sup-norm distance over the common grid and all coordinates.
/// Throws on grid mismatch.
DeviationReport pathwise_deviation(const Path& a, const Path& b);

}  // namespace wfsb
