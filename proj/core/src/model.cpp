#include "wfsb/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wfsb {

ModelParams ModelParams::seed_bank(double u1, double u2, double u1p, double u2p, double c,
                                   double K) {
  ModelParams p;
  p.u1 = u1;
  p.u2 = u2;
  p.u1p = u1p;
  p.u2p = u2p;
  p.c = c;
  p.cp = c * K;
  p.alpha = 1.0;
  p.alphap = 0.0;
  p.seedbanks = {SeedBankSpec{c, K, u1p, u2p}};
  return validate_params(p);
}

ModelParams ModelParams::two_island(double u1, double u2, double u1p, double u2p, double c,
                                    double cp, double alpha, double alphap) {
  ModelParams p;
  p.u1 = u1;
  p.u2 = u2;
  p.u1p = u1p;
  p.u2p = u2p;
  p.c = c;
  p.cp = cp;
  p.alpha = alpha;
  p.alphap = alphap;
  return validate_params(p);
}

ModelParams ModelParams::with_seed_banks(double u1, double u2, std::vector<SeedBankSpec> banks,
                                         double alpha) {
  if (banks.empty()) throw std::invalid_argument("at least one seed bank required");
  ModelParams p;
  p.u1 = u1;
  p.u2 = u2;
  p.alpha = alpha;
  p.alphap = 0.0;
  p.u1p = banks.front().u1;
  p.u2p = banks.front().u2;
  p.c = banks.front().c;
  p.cp = banks.front().c * banks.front().K;
  p.seedbanks = std::move(banks);
  return validate_params(p);
}

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

void require_nonnegative(double v, const char* what) {
  require_finite(v, what);
  if (v < 0.0) throw std::invalid_argument(std::string(what) + " must be nonnegative");
}

}  // namespace

ModelParams validate_params(ModelParams raw) {
  require_nonnegative(raw.u1, "mutation rate u1");
  require_nonnegative(raw.u2, "mutation rate u2");
  require_nonnegative(raw.u1p, "mutation rate u1p");
  require_nonnegative(raw.u2p, "mutation rate u2p");
  require_nonnegative(raw.alpha, "noise amplitude alpha");
  require_nonnegative(raw.alphap, "noise amplitude alphap");
  require_finite(raw.c, "migration rate c");
  require_finite(raw.cp, "migration rate cp");
  if (raw.c <= 0.0 || raw.cp <= 0.0)
    throw std::invalid_argument("migration rate must be positive");
  for (const auto& b : raw.seedbanks) {
    require_finite(b.c, "seed bank migration rate");
    require_finite(b.K, "seed bank size");
    if (b.c <= 0.0) throw std::invalid_argument("migration rate must be positive");
    if (b.K <= 0.0) throw std::invalid_argument("seed bank size must be positive");
    require_nonnegative(b.u1, "seed bank mutation rate u1");
    require_nonnegative(b.u2, "seed bank mutation rate u2");
  }
  return raw;
}

const char* to_string(Boundary b) {
  switch (b) {
    case Boundary::X0: return "X=0";
    case Boundary::X1: return "X=1";
    case Boundary::Y0: return "Y=0";
    case Boundary::Y1: return "Y=1";
  }
  return "?";
}

Boundary boundary_from_string(const std::string& name) {
  if (name == "X0" || name == "X=0") return Boundary::X0;
  if (name == "X1" || name == "X=1") return Boundary::X1;
  if (name == "Y0" || name == "Y=0") return Boundary::Y0;
  if (name == "Y1" || name == "Y=1") return Boundary::Y1;
  throw std::invalid_argument("unknown boundary '" + name + "' (expected X0/X1/Y0/Y1)");
}

std::vector<double> drift_k(const ModelParams& p, std::span<const double> state) {
  const std::size_t k = p.bank_count();
  if (k == 0) throw std::invalid_argument("drift_k requires at least one seed bank");
  if (state.size() != k + 1)
    throw std::invalid_argument("state dimension must be bank count + 1");
  std::vector<double> out(k + 1);
  const double x = state[0];
  double migration = 0.0;
  for (std::size_t i = 0; i < k; ++i) migration += p.seedbanks[i].c * (state[i + 1] - x);
  out[0] = -p.u1 * x + p.u2 * (1.0 - x) + migration;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& b = p.seedbanks[i];
    const double y = state[i + 1];
    out[i + 1] = -b.u1 * y + b.u2 * (1.0 - y) + (b.c * b.K) * (x - y);
  }
  return out;
}

void MonomialCombo::canonicalize() {
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) {
    const int da = a.i + a.j, db = b.i + b.j;
    if (da != db) return da < db;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  std::vector<Term> merged;
  for (const Term& t : terms) {
    if (!merged.empty() && merged.back().i == t.i && merged.back().j == t.j)
      merged.back().coeff += t.coeff;
    else
      merged.push_back(t);
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const Term& t) { return t.coeff == 0.0; }),
               merged.end());
  terms = std::move(merged);
}

void MonomialCombo::add_term(int i, int j, double coeff) {
  if (coeff == 0.0) return;
  terms.push_back({i, j, coeff});
  canonicalize();
}

MonomialCombo& MonomialCombo::operator+=(const MonomialCombo& other) {
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
  canonicalize();
  return *this;
}

MonomialCombo MonomialCombo::scaled(double factor) const {
  MonomialCombo out;
  for (const Term& t : terms) out.terms.push_back({t.i, t.j, t.coeff * factor});
  out.canonicalize();
  return out;
}

double MonomialCombo::evaluate(double x, double y) const {
  double acc = 0.0;
  for (const Term& t : terms) acc += t.coeff * std::pow(x, t.i) * std::pow(y, t.j);
  return acc;
}

double MonomialCombo::coefficient(int i, int j) const {
  for (const Term& t : terms)
    if (t.i == i && t.j == j) return t.coeff;
  return 0.0;
}

int MonomialCombo::max_total_degree() const {
  int d = 0;
  for (const Term& t : terms) d = std::max(d, t.i + t.j);
  return d;
}

MonomialCombo generator_on_monomial(const ModelParams& p, int n, int m) {
  if (n < 0 || m < 0) throw std::invalid_argument("exponents must be nonnegative");
  MonomialCombo out;
  const double an = p.alpha * p.alpha * binom2(n) + n * p.u2;
  const double am = p.alphap * p.alphap * binom2(m) + m * p.u2p;
  const double death = n * p.u1 + m * p.u1p;
  if (an != 0.0) {
    out.terms.push_back({n - 1, m, an});
    out.terms.push_back({n, m, -an});
  }
  if (am != 0.0) {
    out.terms.push_back({n, m - 1, am});
    out.terms.push_back({n, m, -am});
  }
  if (n > 0) {
    out.terms.push_back({n - 1, m + 1, p.c * n});
    out.terms.push_back({n, m, -p.c * n});
  }
  if (m > 0) {
    out.terms.push_back({n + 1, m - 1, p.cp * m});
    out.terms.push_back({n, m, -p.cp * m});
  }
  if (death != 0.0) out.terms.push_back({n, m, -death});
  out.canonicalize();
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& value, const std::string& key) {
  const std::string v = trim(value);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw std::invalid_argument("invalid numeric value '" + value + "' for key '" + key + "'");
  return out;
}

}  // namespace

ModelParams parse_params_doc(const std::string& text) {
  ModelParams p;
  std::istringstream in(text);
  std::string line;
  bool in_bank = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s == "[seedbank]") {
      p.seedbanks.emplace_back();
      in_bank = true;
      continue;
    }
    if (s.front() == '[')
      throw std::invalid_argument("unknown block '" + s + "' at line " + std::to_string(lineno));
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(s.substr(0, eq));
    const double value = parse_double(s.substr(eq + 1), key);
    if (in_bank) {
      SeedBankSpec& b = p.seedbanks.back();
      if (key == "c_i") b.c = value;
      else if (key == "K_i") b.K = value;
      else if (key == "u1_i") b.u1 = value;
      else if (key == "u2_i") b.u2 = value;
      else
        throw std::invalid_argument("unknown seedbank key '" + key + "'");
    } else {
      if (key == "u1") p.u1 = value;
      else if (key == "u2") p.u2 = value;
      else if (key == "u1p") p.u1p = value;
      else if (key == "u2p") p.u2p = value;
      else if (key == "c") p.c = value;
      else if (key == "cp") p.cp = value;
      else if (key == "alpha") p.alpha = value;
      else if (key == "alphap") p.alphap = value;
      else
        throw std::invalid_argument("unknown key '" + key + "'");
    }
  }
  return validate_params(p);
}

std::string format_params_doc(const ModelParams& p) {
  std::ostringstream out;
  out.precision(17);
  out << "u1 = " << p.u1 << "\n"
      << "u2 = " << p.u2 << "\n"
      << "u1p = " << p.u1p << "\n"
      << "u2p = " << p.u2p << "\n"
      << "c = " << p.c << "\n"
      << "cp = " << p.cp << "\n"
      << "alpha = " << p.alpha << "\n"
      << "alphap = " << p.alphap << "\n";
  for (const auto& b : p.seedbanks) {
    out << "\n[seedbank]\n"
        << "c_i = " << b.c << "\n"
        << "K_i = " << b.K << "\n"
        << "u1_i = " << b.u1 << "\n"
        << "u2_i = " << b.u2 << "\n";
  }
  return out.str();
}

}  // namespace wfsb
