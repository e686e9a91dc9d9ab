#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wfsb {

/// One dormant reservoir of the multi-bank model: migration rate c > 0,
/// relative size K > 0, and the bank's own mutation rates.
struct SeedBankSpec {
  double c = 1.0;
  double K = 1.0;
  double u1 = 0.0;
  double u2 = 0.0;
};

/// Parameters of one diffusion instance on the unit square.
///
/// u1/u2 are the a->A / A->a mutation rates in the active population,
/// u1p/u2p the ones in the second coordinate, c/cp the migration rates
/// (strictly positive), alpha/alphap the reproduction-noise amplitudes.
/// The classical dormancy model is the special case alpha=1, alphap=0,
/// cp = c*K; `seed_bank` realizes that mapping exactly.
///
/// `seedbanks` extends the model to k dormant reservoirs; the vector ops
/// (drift_k, simulate_path_k, the delay-equation integrators) read it,
/// the two-coordinate ops read the flat fields.
struct ModelParams {
  double u1 = 0.0;
  double u2 = 0.0;
  double u1p = 0.0;
  double u2p = 0.0;
  double c = 1.0;
  double cp = 1.0;
  double alpha = 1.0;
  double alphap = 0.0;
  std::vector<SeedBankSpec> seedbanks;

  static ModelParams seed_bank(double u1, double u2, double u1p, double u2p, double c,
                               double K);
  static ModelParams two_island(double u1, double u2, double u1p, double u2p, double c,
                                double cp, double alpha, double alphap);
  /// k-bank model; the flat second-coordinate fields mirror bank 0 so the
  /// two-coordinate ops see the k=1 reduction.
  static ModelParams with_seed_banks(double u1, double u2, std::vector<SeedBankSpec> banks,
                                     double alpha = 1.0);

  std::size_t bank_count() const { return seedbanks.size(); }
  double total_mutation() const { return u1 + u2 + u1p + u2p; }
};

/// Checks all parameter invariants and returns the input unchanged.
/// Throws std::invalid_argument on violation.
ModelParams validate_params(ModelParams raw);

/// Point in the unit square: active frequency x, dormant/second-island y.
struct DiffusionState {
  double x = 0.0;
  double y = 0.0;
};

enum class Boundary { X0, X1, Y0, Y1 };
const char* to_string(Boundary b);
Boundary boundary_from_string(const std::string& name);

/// Drift vector of the two-coordinate diffusion at s.
inline std::pair<double, double> drift(const ModelParams& p, DiffusionState s) {
  const double dx = -p.u1 * s.x + p.u2 * (1.0 - s.x) + p.c * (s.y - s.x);
  const double dy = -p.u1p * s.y + p.u2p * (1.0 - s.y) + p.cp * (s.x - s.y);
  return {dx, dy};
}

/// Noise amplitudes (alpha*sqrt(x(1-x)), alphap*sqrt(y(1-y))); the square
/// root arguments are clamped at 0 to guard rounding just outside [0,1].
inline std::pair<double, double> diffusion_amplitude(const ModelParams& p, DiffusionState s) {
  const double fx = std::max(s.x * (1.0 - s.x), 0.0);
  const double fy = std::max(s.y * (1.0 - s.y), 0.0);
  return {p.alpha * std::sqrt(fx), p.alphap * std::sqrt(fy)};
}

/// Drift of the k-bank system; state = (x, y_1..y_k).
std::vector<double> drift_k(const ModelParams& p, std::span<const double> state);

/// Polynomial in (x,y) as a sparse list of monomial terms. Canonical form:
/// exponent pairs unique, zero coefficients dropped, terms ordered by
/// (total degree, then x-exponent).
struct MonomialCombo {
  struct Term {
    int i = 0;
    int j = 0;
    double coeff = 0.0;
  };
  std::vector<Term> terms;

  /// Sorts, merges duplicate exponents, drops exact-zero coefficients.
  void canonicalize();
  void add_term(int i, int j, double coeff);
  MonomialCombo& operator+=(const MonomialCombo& other);
  MonomialCombo scaled(double factor) const;
  double evaluate(double x, double y) const;
  double coefficient(int i, int j) const;
  int max_total_degree() const;
};

/// Action of the diffusion generator on x^n y^m, expanded into monomials.
/// Total degree never increases. Convention: binom(0,2)=binom(1,2)=0.
MonomialCombo generator_on_monomial(const ModelParams& p, int n, int m);

/// n over 2 with the vanishing convention for n < 2.
inline double binom2(int n) { return n < 2 ? 0.0 : 0.5 * static_cast<double>(n) * (n - 1); }

/// Flat key=value text document for ModelParams; repeated [seedbank]
/// blocks describe the k-bank extension. Unknown keys are an error.
ModelParams parse_params_doc(const std::string& text);
std::string format_params_doc(const ModelParams& p);

}  // namespace wfsb
