#include "wfsb/moments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wfsb/dual.hpp"
#include "wfsb/sde.hpp"

namespace wfsb {

namespace {

void require_mutation(const ModelParams& p) {
  if (p.total_mutation() <= 0.0)
    throw std::invalid_argument(
        "stationary moments require at least one positive mutation rate");
}

}  // namespace

MomentTable stationary_moments(const ModelParams& p, int level) {
  require_mutation(p);
  if (level < 0) throw std::invalid_argument("level must be nonnegative");
  MomentTable table(level);
  table.set(0, 0, 1.0);
  for (int l = 1; l <= level; ++l) {
    // Unknowns v[n] = M[n, l-n]. Row n:
    //   D[n,m] v[n] - c n v[n-1] - cp m v[n+1] = a_n M[n-1,m] + a'_m M[n,m-1].
    const int dim = l + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    for (int n = 0; n <= l; ++n) {
      const int m = l - n;
      const double a_n = p.alpha * p.alpha * binom2(n) + n * p.u2;
      const double a_m = p.alphap * p.alphap * binom2(m) + m * p.u2p;
      const double diag = p.alpha * p.alpha * binom2(n) + p.alphap * p.alphap * binom2(m) +
                          (p.u1 + p.u2) * n + (p.u1p + p.u2p) * m + p.c * n + p.cp * m;
      A(n, n) = diag;
      if (n >= 1) A(n, n - 1) = -p.c * n;
      if (n + 1 <= l) A(n, n + 1) = -p.cp * m;
      double rhs = 0.0;
      if (n >= 1) rhs += a_n * table.at(n - 1, m);
      if (m >= 1) rhs += a_m * table.at(n, m - 1);
      b(n) = rhs;
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const Eigen::VectorXd v = lu.solve(b);
    const double residual = (A * v - b).lpNorm<Eigen::Infinity>() /
                            std::max(1.0, b.lpNorm<Eigen::Infinity>());
    if (!v.allFinite() || residual > 1e-10)
      throw std::runtime_error("singular level system in the moment recursion");
    for (int n = 0; n <= l; ++n) table.set(n, l - n, std::clamp(v(n), 0.0, 1.0));
  }
  return table;
}

MomentTable stationary_moments_oracle(const ModelParams& p, int level) {
  require_mutation(p);
  MomentTable table(level);
  table.set(0, 0, 1.0);
  if (level == 0) return table;
  const auto h = absorption_probabilities(p, level);
  DualGenerator gen(p, level);
  for (int l = 0; l <= level; ++l)
    for (int n = 0; n <= l; ++n)
      table.set(n, l - n, h[gen.index_of({n, l - n, false})]);
  return table;
}

MomentTable finite_time_moments(const ModelParams& p, double x, double y, int level,
                                double t) {
  if (level < 0) throw std::invalid_argument("level must be nonnegative");
  MomentTable table(level);
  table.set(0, 0, 1.0);
  if (level == 0) return table;
  const auto values = transient_dual_expectation_all(p, level, x, y, t);
  DualGenerator gen(p, level);
  for (int l = 0; l <= level; ++l)
    for (int n = 0; n <= l; ++n)
      table.set(n, l - n, values[gen.index_of({n, l - n, false})]);
  return table;
}

namespace {

/// E_mu[x^i y^j * A(x^n y^m)] assembled from the generator expansion.
double stationary_expectation_of_product(const ModelParams& p, const MomentTable& table,
                                         int i, int j, int n, int m) {
  const MonomialCombo combo = generator_on_monomial(p, n, m);
  double acc = 0.0;
  for (const auto& term : combo.terms) acc += term.coeff * table.at(term.i + i, term.j + j);
  return acc;
}

}  // namespace

double reversibility_defect(const ModelParams& p) {
  const MomentTable table = stationary_moments(p, 2);
  const double f_ag = stationary_expectation_of_product(p, table, 1, 0, 0, 1);  // E[x A y]
  const double g_af = stationary_expectation_of_product(p, table, 0, 1, 1, 0);  // E[y A x]
  return f_ag - g_af;
}

double stationarity_identity_residual(const ModelParams& p) {
  const MomentTable table = stationary_moments(p, 2);
  const double f_ag = stationary_expectation_of_product(p, table, 1, 0, 0, 1);
  const double g_af = stationary_expectation_of_product(p, table, 0, 1, 1, 0);
  return f_ag + g_af;
}

double stationary_generator_residual(const ModelParams& p, const MomentTable& table, int n,
                                     int m) {
  return stationary_expectation_of_product(p, table, 0, 0, n, m);
}

AtomDiagnostics boundary_atom_estimate(const ModelParams& p, double t, double dt,
                                       std::size_t n_paths, std::span<const double> epsilons,
                                       std::uint64_t master_seed, int threads) {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be positive");
  AtomDiagnostics diag;
  diag.t = t;
  diag.dt = dt;
  diag.n_paths = n_paths;
  diag.epsilons.assign(epsilons.begin(), epsilons.end());

  // Stationarity proxy: start at the center and run long.
  const auto states = endpoint_states(p, {0.5, 0.5}, t, dt, n_paths, master_seed, threads);
  for (double eps : epsilons) {
    std::size_t cx = 0, cy = 0;
    for (const auto& s : states) {
      if (std::min(s.x, 1.0 - s.x) < eps) ++cx;
      if (std::min(s.y, 1.0 - s.y) < eps) ++cy;
    }
    const double n = static_cast<double>(n_paths);
    const double fx = static_cast<double>(cx) / n;
    const double fy = static_cast<double>(cy) / n;
    diag.x_fraction.push_back(fx);
    diag.x_std_error.push_back(std::sqrt(std::max(fx * (1.0 - fx), 0.0) / n));
    diag.y_fraction.push_back(fy);
    diag.y_std_error.push_back(std::sqrt(std::max(fy * (1.0 - fy), 0.0) / n));
  }
  return diag;
}

double default_stationary_proxy_time(const ModelParams& p) {
  double min_rate = std::numeric_limits<double>::infinity();
  for (double r : {p.u1, p.u2, p.u1p, p.u2p, p.c, p.cp})
    if (r > 0.0) min_rate = std::min(min_rate, r);
  for (const auto& b : p.seedbanks) {
    for (double r : {b.u1, b.u2, b.c, b.c * b.K})
      if (r > 0.0) min_rate = std::min(min_rate, r);
  }
  return 50.0 / min_rate;
}

}  // namespace wfsb
