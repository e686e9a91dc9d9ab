#include "wfsb/dual.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

#include "wfsb/rng.hpp"

namespace wfsb {

std::vector<DualTransition> dual_rates(const ModelParams& p, DualState s) {
  std::vector<DualTransition> out;
  if (s.is_death() || (s.n == 0 && s.m == 0)) return out;
  const int n = s.n, m = s.m;
  const double down_n = p.alpha * p.alpha * binom2(n) + n * p.u2;
  const double down_m = p.alphap * p.alphap * binom2(m) + m * p.u2p;
  const double death = n * p.u1 + m * p.u1p;
  if (down_n > 0.0) out.push_back({{n - 1, m, false}, down_n});
  if (down_m > 0.0) out.push_back({{n, m - 1, false}, down_m});
  if (death > 0.0) out.push_back({DualState::death(), death});
  if (n > 0) out.push_back({{n - 1, m + 1, false}, p.c * n});
  if (m > 0) out.push_back({{n + 1, m - 1, false}, p.cp * m});
  return out;
}

DualGenerator::DualGenerator(const ModelParams& p, int level, int level_cap) : level_(level) {
  if (level < 1) throw std::invalid_argument("truncation level must be >= 1");
  if (level > level_cap)
    throw std::length_error("truncation level " + std::to_string(level) +
                            " exceeds cap " + std::to_string(level_cap));
  tri_count_ = static_cast<std::size_t>(level + 1) * (level + 2) / 2;
  rows_.resize(state_count());
  exit_rate_.assign(state_count(), 0.0);
  for (std::size_t idx = 0; idx < tri_count_; ++idx) {
    const DualState s = state_at(idx);
    double total = 0.0;
    for (const DualTransition& tr : dual_rates(p, s)) {
      rows_[idx].emplace_back(index_of(tr.to), tr.rate);
      total += tr.rate;
    }
    exit_rate_[idx] = total;
    uniformization_rate_ = std::max(uniformization_rate_, total);
  }
}

std::size_t DualGenerator::index_of(DualState s) const {
  if (s.is_death()) return death_index();
  const int l = s.n + s.m;
  if (s.n < 0 || s.m < 0 || l > level_) throw std::out_of_range("dual state outside truncation");
  return static_cast<std::size_t>(l) * (l + 1) / 2 + s.n;
}

DualState DualGenerator::state_at(std::size_t idx) const {
  if (idx == death_index()) return DualState::death();
  if (idx > death_index()) throw std::out_of_range("state index out of range");
  int l = static_cast<int>((std::sqrt(8.0 * static_cast<double>(idx) + 1.0) - 1.0) / 2.0);
  while (static_cast<std::size_t>(l + 1) * (l + 2) / 2 <= idx) ++l;
  while (static_cast<std::size_t>(l) * (l + 1) / 2 > idx) --l;
  const int n = static_cast<int>(idx - static_cast<std::size_t>(l) * (l + 1) / 2);
  return {n, l - n, false};
}

DualTrajectory simulate_dual(const ModelParams& p, DualState start, double t_max,
                             std::uint64_t stream) {
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  DualTrajectory traj;
  traj.t_max = t_max;
  traj.stream = stream;
  Xoshiro256 rng(stream);
  double t = 0.0;
  DualState s = start;
  traj.events.push_back({0.0, s});
  while (!s.absorbing()) {
    const auto rates = dual_rates(p, s);
    double total = 0.0;
    for (const auto& r : rates) total += r.rate;
    if (total <= 0.0) break;
    t += rng.exponential(total);
    if (t > t_max) break;
    double u = rng.uniform01() * total;
    DualState next = rates.back().to;
    for (const auto& r : rates) {
      if (u < r.rate) {
        next = r.to;
        break;
      }
      u -= r.rate;
    }
    s = next;
    traj.events.push_back({t, s});
  }
  return traj;
}

std::vector<double> absorption_probabilities(const ModelParams& p, int level,
                                             double* residual_out) {
  DualGenerator gen(p, level);
  const std::size_t pairs = gen.state_count() - 1;
  std::vector<double> h(gen.state_count(), 0.0);
  h[gen.index_of({0, 0, false})] = 1.0;
  if (residual_out) *residual_out = 0.0;
  if (p.total_mutation() == 0.0) return h;  // (0,0) unreachable from anywhere else

  // First-step analysis over the transient states (everything but (0,0)
  // and the death state): exit(s) h(s) - sum rate(s->s') h(s') = rate(s->(0,0)).
  const std::size_t zero_idx = gen.index_of({0, 0, false});
  const auto transient_of = [&](std::size_t idx) { return idx - 1; };  // zero_idx == 0
  const Eigen::Index dim = static_cast<Eigen::Index>(pairs - 1);
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  for (std::size_t idx = 1; idx < pairs; ++idx) {
    const Eigen::Index row = static_cast<Eigen::Index>(transient_of(idx));
    triplets.emplace_back(row, row, gen.exit_rate(idx));
    for (const auto& [target, rate] : gen.row(idx)) {
      if (target == zero_idx)
        b[row] += rate;
      else if (target != gen.death_index())
        triplets.emplace_back(row, static_cast<Eigen::Index>(transient_of(target)), -rate);
    }
  }
  Eigen::SparseMatrix<double> A(dim, dim);
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
  solver.compute(A);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("absorption system factorization failed");
  const Eigen::VectorXd x = solver.solve(b);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("absorption system solve failed");
  const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
  const double residual = (A * x - b).lpNorm<Eigen::Infinity>() / scale;
  if (residual_out) *residual_out = residual;
  if (residual > 1e-12) throw std::runtime_error("absorption solve residual too large");
  for (std::size_t idx = 1; idx < pairs; ++idx)
    h[idx] = std::clamp(x[static_cast<Eigen::Index>(transient_of(idx))], 0.0, 1.0);
  return h;
}

AbsorptionResult absorption_probability(const ModelParams& p, DualState start) {
  AbsorptionResult res;
  if (start.is_death()) return res;
  if (start.n == 0 && start.m == 0) {
    res.probability = 1.0;
    return res;
  }
  if (p.total_mutation() == 0.0) {
    res.no_mutation_degenerate = true;
    res.probability = 0.0;
    return res;
  }
  const auto h = absorption_probabilities(p, start.total(), &res.residual);
  DualGenerator gen(p, start.total());
  res.probability = h[gen.index_of(start)];
  return res;
}

namespace {

double ipow_zero_one(double base, int exp) {
  double acc = 1.0;  // 0^0 = 1 by convention
  for (int i = 0; i < exp; ++i) acc *= base;
  return acc;
}

/// Normalized Poisson(lambda_t) weights until the cumulative mass reaches
/// 1 - tail_tol. Log-space evaluation keeps large lambda_t stable; weights
/// that underflow to zero carry mass far below the tail tolerance.
std::vector<double> poisson_weights(double lambda_t, double tail_tol = 1e-12) {
  if (!(lambda_t > 0.0)) return {1.0};
  const double log_lt = std::log(lambda_t);
  std::vector<double> w;
  const std::size_t hard_cap =
      static_cast<std::size_t>(lambda_t + 12.0 * std::sqrt(lambda_t + 1.0) + 80.0);
  w.reserve(std::min<std::size_t>(hard_cap + 1, 1 << 20));
  double cum = 0.0;
  for (std::size_t k = 0; k <= hard_cap; ++k) {
    const double lw = -lambda_t + static_cast<double>(k) * log_lt -
                      std::lgamma(static_cast<double>(k) + 1.0);
    const double wk = std::exp(lw);
    w.push_back(wk);
    cum += wk;
    if (cum >= 1.0 - tail_tol && static_cast<double>(k) >= lambda_t) break;
  }
  return w;
}

void apply_uniformized_backward(const DualGenerator& gen, double lambda,
                                const std::vector<double>& in, std::vector<double>& out) {
  const std::size_t n = gen.state_count();
  for (std::size_t s = 0; s < n; ++s) {
    double acc = in[s] * (1.0 - gen.exit_rate(s) / lambda);
    for (const auto& [target, rate] : gen.row(s)) acc += (rate / lambda) * in[target];
    out[s] = acc;
  }
}

void apply_uniformized_forward(const DualGenerator& gen, double lambda,
                               const std::vector<double>& in, std::vector<double>& out) {
  const std::size_t n = gen.state_count();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const double mass = in[s];
    if (mass == 0.0) continue;
    out[s] += mass * (1.0 - gen.exit_rate(s) / lambda);
    for (const auto& [target, rate] : gen.row(s)) out[target] += mass * (rate / lambda);
  }
}

}  // namespace

std::vector<double> transient_dual_expectation_all(const ModelParams& p, int level, double x,
                                                   double y, double t) {
  if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
    throw std::invalid_argument("(x,y) must lie in the unit square");
  if (t < 0.0) throw std::invalid_argument("t must be nonnegative");
  DualGenerator gen(p, level);
  std::vector<double> v(gen.state_count(), 0.0);
  for (std::size_t idx = 0; idx + 1 < gen.state_count(); ++idx) {
    const DualState s = gen.state_at(idx);
    v[idx] = ipow_zero_one(x, s.n) * ipow_zero_one(y, s.m);
  }
  const double lambda = gen.uniformization_rate();
  if (t == 0.0 || lambda == 0.0) return v;

  const auto weights = poisson_weights(lambda * t);
  std::vector<double> acc(gen.state_count(), 0.0);
  std::vector<double> cur = v;
  std::vector<double> next(gen.state_count(), 0.0);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (k > 0) {
      apply_uniformized_backward(gen, lambda, cur, next);
      cur.swap(next);
    }
    const double wk = weights[k];
    if (wk == 0.0) continue;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += wk * cur[i];
  }
  return acc;
}

double transient_dual_expectation(const ModelParams& p, DualState start, double x, double y,
                                  double t) {
  if (start.is_death()) return 0.0;
  const int level = std::max(1, start.total());
  const auto all = transient_dual_expectation_all(p, level, x, y, t);
  DualGenerator gen(p, level);
  return all[gen.index_of(start)];
}

std::vector<double> transient_distribution(const ModelParams& p, DualState start, double t,
                                           int level) {
  if (t < 0.0) throw std::invalid_argument("t must be nonnegative");
  DualGenerator gen(p, level);
  std::vector<double> pi(gen.state_count(), 0.0);
  pi[gen.index_of(start)] = 1.0;
  const double lambda = gen.uniformization_rate();
  if (t == 0.0 || lambda == 0.0) return pi;

  const auto weights = poisson_weights(lambda * t);
  std::vector<double> acc(gen.state_count(), 0.0);
  std::vector<double> cur = pi;
  std::vector<double> next(gen.state_count(), 0.0);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (k > 0) {
      apply_uniformized_forward(gen, lambda, cur, next);
      cur.swap(next);
    }
    const double wk = weights[k];
    if (wk == 0.0) continue;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += wk * cur[i];
  }
  return acc;
}

}  // namespace wfsb
