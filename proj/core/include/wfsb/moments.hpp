#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wfsb/model.hpp"

namespace wfsb {

/// Mixed moments M[n,m] for all n+m <= level, triangular storage.
/// Entries lie in [0,1] and shrink when either exponent grows.
struct MomentTable {
  int level = 0;
  std::vector<double> values;

  explicit MomentTable(int level_ = 0)
      : level(level_),
        values(static_cast<std::size_t>(level_ + 1) * (level_ + 2) / 2, 0.0) {}

  static std::size_t tri_index(int n, int m) {
    const int l = n + m;
    return static_cast<std::size_t>(l) * (l + 1) / 2 + n;
  }
  double at(int n, int m) const { return values[tri_index(n, m)]; }
  void set(int n, int m, double v) { values[tri_index(n, m)] = v; }
};

/// Stationary mixed moments, solved level by level: each level n+m = l is a
/// tridiagonal linear system in the l+1 unknowns M[n, l-n] given level l-1.
/// Requires at least one positive mutation rate.
MomentTable stationary_moments(const ModelParams& p, int level);

/// Independent oracle: every entry computed as the dual chain's probability
/// of absorption in (0,0) via the full-space first-step linear solve.
MomentTable stationary_moments_oracle(const ModelParams& p, int level);

/// E[X(t)^n Y(t)^m] started from (x,y), for all n+m <= level, via one
/// uniformization pass of the dual chain.
MomentTable finite_time_moments(const ModelParams& p, double x, double y, int level, double t);

/// E_mu[f Ag] - E_mu[g Af] for f = x, g = y, expanded in stationary moments
/// up to level 2. Zero for an exchange-symmetric two-island instance,
/// nonzero for the dormancy model with mutation.
double reversibility_defect(const ModelParams& p);

/// E_mu[f Ag] + E_mu[g Af] = E_mu[A(xy)], which vanishes at stationarity;
/// returned so callers can assert it as an identity check.
double stationarity_identity_residual(const ModelParams& p);

/// E_mu[A x^n y^m] under the stationary moment table (0 at stationarity for
/// any exponents within the table's level).
double stationary_generator_residual(const ModelParams& p, const MomentTable& table, int n,
                                     int m);

struct AtomDiagnostics {
  double t = 0.0;
  double dt = 0.0;
  std::size_t n_paths = 0;
  std::vector<double> epsilons;
  std::vector<double> x_fraction, x_std_error;
  std::vector<double> y_fraction, y_std_error;
};

/// Monte Carlo boundary-mass diagnostic at a stationarity proxy time:
/// fraction of paths with min(X(t), 1-X(t)) < epsilon (likewise Y) for a
/// decreasing sequence of epsilons.
AtomDiagnostics boundary_atom_estimate(const ModelParams& p, double t, double dt,
                                       std::size_t n_paths, std::span<const double> epsilons,
                                       std::uint64_t master_seed, int threads = 1);

/// Heuristic stationarity proxy: 50 / (smallest positive rate among the
/// mutation and migration parameters).
double default_stationary_proxy_time(const ModelParams& p);

}  // namespace wfsb
