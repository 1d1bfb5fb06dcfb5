#include "tpp/eos.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tpp/errors.hpp"
#include "tpp/quadrature.hpp"

namespace tpp {

std::string to_string(EosKind kind) {
  switch (kind) {
    case EosKind::Polytrope: return "polytrope";
    case EosKind::PolytropeLinearHybrid: return "hybrid";
    case EosKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

// Cumulative Q and baryon integrals on nodes in u = rho^beta, where
// beta is the low-density exponent minus one. In u both integrands are
// bounded at the origin, so plain Gauss rules apply cell by cell.
struct EquationOfState::Cache {
  double beta = 0;
  std::vector<double> u, q, b, fq;
  double b_at_one = 0;
  double q_cap = 0;
};

namespace {

constexpr int kCacheNodes = 512;

double rho_of_u(double u, double beta) { return u > 0 ? std::pow(u, 1.0 / beta) : 0.0; }

void check_density(double rho, double cap, const char* what) {
  if (!(rho >= 0) || rho > cap * (1 + 1e-14))
    throw DomainError(std::string(what) + ": density " + std::to_string(rho) + " outside [0, " + std::to_string(cap) +
                      "]");
}

}  // namespace

EquationOfState EquationOfState::polytrope(double k, double gamma, double rho_cap) {
  if (!(k > 0) || !(gamma > 1) || !(rho_cap > 0)) throw DomainError("polytrope: need k > 0, gamma > 1, rho_cap > 0");
  EquationOfState e;
  e.kind_ = EosKind::Polytrope;
  e.k_ = k;
  e.gamma_ = gamma;
  e.rho_cap_ = rho_cap;
  e.build_cache();
  return e;
}

EquationOfState EquationOfState::hybrid(double k, double gamma, double rho_t, double rho_cap) {
  if (!(k > 0) || !(gamma > 1) || !(rho_t > 0) || !(rho_cap > rho_t))
    throw DomainError("hybrid: need k > 0, gamma > 1, 0 < rho_t < rho_cap");
  double cs2 = k * gamma * std::pow(rho_t, gamma - 1);
  if (cs2 > 1 && cs2 < 1 + 1e-12) cs2 = 1;
  if (cs2 > 1) throw DomainError("hybrid: linear branch sound speed squared " + std::to_string(cs2) + " exceeds 1");
  EquationOfState e;
  e.kind_ = EosKind::PolytropeLinearHybrid;
  e.k_ = k;
  e.gamma_ = gamma;
  e.rho_t_ = rho_t;
  e.cs2_ = cs2;
  e.rho_cap_ = rho_cap;
  e.build_cache();
  return e;
}

EquationOfState EquationOfState::hybrid_causal(double k, double gamma, double rho_cap) {
  if (!(k > 0) || !(gamma > 1)) throw DomainError("hybrid_causal: need k > 0, gamma > 1");
  return hybrid(k, gamma, std::pow(1.0 / (k * gamma), 1.0 / (gamma - 1)), rho_cap);
}

EquationOfState EquationOfState::tabulated(std::vector<EosSample> table) {
  if (table.size() < 2) throw DomainError("tabulated: need at least two samples");
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!(table[i].rho > 0) || !(table[i].p > 0)) throw DomainError("tabulated: samples must be positive");
    if (i > 0 && !(table[i].rho > table[i - 1].rho && table[i].p > table[i - 1].p))
      throw DomainError("tabulated: samples must be strictly increasing in both columns");
  }
  EquationOfState e;
  e.kind_ = EosKind::Tabulated;
  std::vector<double> x, y;
  for (const auto& s : table) {
    x.push_back(std::log(s.rho));
    y.push_back(std::log(s.p));
  }
  e.gamma_ = (y[1] - y[0]) / (x[1] - x[0]);
  e.k_ = table[0].p / std::pow(table[0].rho, e.gamma_);
  e.rho_cap_ = table.back().rho;
  e.log_table_ = interp::MonotoneCubic<double>(std::move(x), std::move(y));
  e.table_ = std::move(table);
  if (e.gamma_ > 1) e.build_cache();
  return e;
}

EquationOfState EquationOfState::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open EOS table '" + path.string() + "'");
  std::vector<EosSample> table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    EosSample s;
    if (!(ss >> s.rho >> s.p))
      throw ConfigError("EOS table '" + path.string() + "' line " + std::to_string(lineno) + ": expected 'rho pressure'");
    table.push_back(s);
  }
  return tabulated(std::move(table));
}

double EquationOfState::p_raw(double rho) const {
  if (rho <= 0) return 0;
  switch (kind_) {
    case EosKind::Polytrope: return k_ * std::pow(rho, gamma_);
    case EosKind::PolytropeLinearHybrid:
      return rho <= rho_t_ ? k_ * std::pow(rho, gamma_) : cs2_ * (rho - rho_t_) + k_ * std::pow(rho_t_, gamma_);
    case EosKind::Tabulated: {
      const auto& t = table_;
      if (rho < t.front().rho) return t.front().p * std::pow(rho / t.front().rho, gamma_);
      if (rho > t.back().rho) {
        const auto& a = t[t.size() - 2];
        const auto& b = t.back();
        const double s = std::log(b.p / a.p) / std::log(b.rho / a.rho);
        return b.p * std::pow(rho / b.rho, s);
      }
      return std::exp(log_table_(std::log(rho)).value);
    }
  }
  return 0;
}

double EquationOfState::dp_raw(double rho) const {
  if (rho <= 0) return 0;
  switch (kind_) {
    case EosKind::Polytrope: return k_ * gamma_ * std::pow(rho, gamma_ - 1);
    case EosKind::PolytropeLinearHybrid: return rho < rho_t_ ? k_ * gamma_ * std::pow(rho, gamma_ - 1) : cs2_;
    case EosKind::Tabulated: {
      const auto& t = table_;
      if (rho < t.front().rho) return gamma_ * p_raw(rho) / rho;
      if (rho > t.back().rho) {
        const auto& a = t[t.size() - 2];
        const auto& b = t.back();
        return std::log(b.p / a.p) / std::log(b.rho / a.rho) * p_raw(rho) / rho;
      }
      const auto vs = log_table_(std::log(rho));
      return std::exp(vs.value) / rho * vs.slope;
    }
  }
  return 0;
}

void EquationOfState::build_cache() {
  auto c = std::make_shared<Cache>();
  const double beta = gamma_ - 1;
  c->beta = beta;
  const double rho_scale = std::pow(k_, -1.0 / beta);
  const double rho_lo = 1e-16 * rho_scale;
  const double rho_hi = std::max(rho_cap_, 1.0) * (1 + 1e-12);

  std::vector<double> rho_nodes;
  for (int i = 0; i < kCacheNodes; ++i)
    rho_nodes.push_back(rho_lo * std::pow(rho_hi / rho_lo, double(i) / (kCacheNodes - 1)));
  if (kind_ == EosKind::PolytropeLinearHybrid) rho_nodes.push_back(rho_t_);
  for (const auto& s : table_) rho_nodes.push_back(s.rho);
  rho_nodes.push_back(rho_cap_);
  rho_nodes.push_back(1.0);
  std::sort(rho_nodes.begin(), rho_nodes.end());
  std::vector<double> kept;
  for (double r : rho_nodes) {
    if (r < rho_lo || r > rho_hi) continue;
    if (!kept.empty() && r <= kept.back() * (1 + 1e-10)) continue;
    kept.push_back(r);
  }

  auto fq = [this, beta](double u) {
    const double rho = rho_of_u(u, beta);
    return dp_raw(rho) * rho / ((rho + p_raw(rho)) * beta * u);
  };
  auto fb = [this, beta](double u) {
    const double rho = rho_of_u(u, beta);
    return p_raw(rho) / ((rho + p_raw(rho)) * beta * u);
  };

  c->u.push_back(0);
  c->q.push_back(0);
  c->b.push_back(0);
  c->fq.push_back(k_ * gamma_ / beta);  // limit of fq at u = 0
  for (double r : kept) {
    const double u0 = c->u.back();
    const double u1 = std::pow(r, beta);
    const auto iq = quad::adaptive_gk15<double>(fq, u0, u1, 1e-300, 1e-13);
    const auto ib = quad::adaptive_gk15<double>(fb, u0, u1, 1e-300, 1e-13);
    if (!iq.converged || !ib.converged)
      throw NumericalError("enthalpy cache: quadrature did not converge on cell ending at rho=" + std::to_string(r) +
                           ", achieved " + std::to_string(std::max(iq.abs_error, ib.abs_error)));
    c->u.push_back(u1);
    c->q.push_back(c->q.back() + iq.value);
    c->b.push_back(c->b.back() + ib.value);
    c->fq.push_back(fq(u1));
  }
  cache_ = c;

  // Values derived from the finished table.
  auto partial = [&](const std::vector<double>& cum, auto& f, double rho) {
    const double u = std::pow(rho, beta);
    const std::size_t i = interp::segment_index<double>(c->u, u);
    return cum[i] + quad::gauss_legendre<16>().integrate(f, c->u[i], u);
  };
  c->b_at_one = partial(c->b, fb, 1.0);
  c->q_cap = partial(c->q, fq, rho_cap_);
}

void EquationOfState::require_cache() const {
  if (!cache_)
    throw DomainError("enthalpy map unavailable: low-density exponent " + std::to_string(gamma_) + " is not above 1");
}

double EquationOfState::pressure(double rho) const {
  check_density(rho, rho_cap_, "pressure");
  return p_raw(rho);
}

double EquationOfState::sound_speed_sq(double rho) const {
  check_density(rho, rho_cap_, "sound_speed_sq");
  if (rho == 0) throw DomainError("sound_speed_sq: requires rho > 0");
  return dp_raw(rho);
}

double EquationOfState::max_enthalpy() const {
  require_cache();
  return cache_->q_cap;
}

double EquationOfState::enthalpy(double rho) const {
  check_density(rho, rho_cap_, "enthalpy");
  require_cache();
  if (rho == 0) return 0;
  const Cache& c = *cache_;
  const double u = std::pow(rho, c.beta);
  const std::size_t i = interp::segment_index<double>(c.u, u);
  auto f = [this, &c](double uu) {
    const double r = rho_of_u(uu, c.beta);
    return dp_raw(r) * r / ((r + p_raw(r)) * c.beta * uu);
  };
  return c.q[i] + quad::gauss_legendre<16>().integrate(f, c.u[i], u);
}

double EquationOfState::density_of_enthalpy(double y) const {
  if (!(y > 0)) {
    if (std::isnan(y)) throw DomainError("density_of_enthalpy: y is NaN");
    return 0;
  }
  require_cache();
  const Cache& c = *cache_;
  if (y > c.q_cap * (1 + 1e-14))
    throw DomainError("density_of_enthalpy: y=" + std::to_string(y) + " exceeds Q(rho_cap)=" + std::to_string(c.q_cap));
  const std::size_t i = interp::segment_index<double>(c.q, y);
  auto f = [this, &c](double uu) {
    const double r = rho_of_u(uu, c.beta);
    return dp_raw(r) * r / ((r + p_raw(r)) * c.beta * uu);
  };
  const double u0 = c.u[i], u1 = c.u[i + 1];
  // Cubic Hermite guess for u(Q), then safeguarded Newton on Q(u) = y.
  double u = interp::hermite(c.q[i], c.q[i + 1], u0, u1, 1 / c.fq[i], 1 / c.fq[i + 1], y).value;
  double lo = u0, hi = u1;
  if (!(u > lo && u < hi)) u = 0.5 * (lo + hi);
  const auto& gl = quad::gauss_legendre<16>();
  for (int it = 0; it < 80; ++it) {
    const double F = c.q[i] + gl.integrate(f, u0, u) - y;
    if (std::abs(F) <= 2e-16 * y) break;
    if (F > 0)
      hi = u;
    else
      lo = u;
    const double dF = f(u);
    double next = u - F / dF;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double du = std::abs(next - u);
    u = next;
    if (du <= 1e-15 * u || hi - lo <= 4e-16 * hi) break;
  }
  return rho_of_u(u, c.beta);
}

double EquationOfState::dg_dy(double y) const {
  if (!(y > 0)) return 0;
  const double rho = density_of_enthalpy(y);
  return (rho + p_raw(rho)) / dp_raw(rho);
}

double EquationOfState::baryon_density(double rho) const {
  check_density(rho, rho_cap_, "baryon_density");
  require_cache();
  if (rho == 0) return 0;
  const Cache& c = *cache_;
  const double u = std::pow(rho, c.beta);
  const std::size_t i = interp::segment_index<double>(c.u, u);
  auto f = [this, &c](double uu) {
    const double r = rho_of_u(uu, c.beta);
    return p_raw(r) / ((r + p_raw(r)) * c.beta * uu);
  };
  const double b = c.b[i] + quad::gauss_legendre<16>().integrate(f, c.u[i], u);
  return rho * std::exp(c.b_at_one - b);
}

namespace {

// Least-squares slope and intercept of y against x.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace

EosValidationReport EquationOfState::validate(const SampleSpec& spec) const {
  EosValidationReport rep;
  const double lo = spec.rho_min;
  const double hi = std::min(spec.rho_max, rho_cap_);
  const int n = std::max(spec.points, 8);
  std::vector<double> rho(n), p(n), dp(n);
  for (int i = 0; i < n; ++i) {
    rho[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
    p[i] = p_raw(rho[i]);
    dp[i] = dp_raw(rho[i]);
  }

  rep.p1_ok = p_raw(0) == 0;
  for (int i = 0; i < n && rep.p1_ok; ++i) {
    if (!(dp[i] > 0)) {
      rep.p1_ok = false;
      rep.p1_msg = "P' not positive at rho=" + std::to_string(rho[i]);
    } else if (i > 0 && !(p[i] > p[i - 1])) {
      rep.p1_ok = false;
      rep.p1_msg = "P not increasing at rho=" + std::to_string(rho[i]);
    }
  }
  if (rep.p1_ok) rep.p1_msg = "P(0)=0, P increasing with P'>0 on the sample grid";

  std::vector<double> lx, ly;
  for (int i = 0; i < n && rho[i] <= 10 * lo * (1 + 1e-12); ++i) {
    lx.push_back(std::log(rho[i]));
    ly.push_back(std::log(p[i]));
  }
  if (lx.size() < 2) {
    lx = {std::log(rho[0]), std::log(rho[1])};
    ly = {std::log(p[0]), std::log(p[1])};
  }
  rep.fitted_gamma = linear_fit(lx, ly).first;
  const bool fitted_in = rep.fitted_gamma > 4.0 / 3 && rep.fitted_gamma < 2;
  const bool declared_in = gamma_ > 4.0 / 3 && gamma_ < 2;
  const bool agrees = std::abs(rep.fitted_gamma - gamma_) <= spec.gamma_tol;
  rep.p2_ok = fitted_in && declared_in && agrees;
  rep.p2_msg = "fitted low-density exponent " + std::to_string(rep.fitted_gamma) +
               (rep.p2_ok ? " in (4/3, 2)" : (agrees ? " outside (4/3, 2)" : " disagrees with declared gamma"));

  std::vector<double> tx, ty;
  std::size_t top0 = 0;
  for (int i = 0; i < n; ++i)
    if (rho[i] >= hi / 10 * (1 - 1e-12)) {
      if (tx.empty()) top0 = std::size_t(i);
      tx.push_back(rho[i]);
      ty.push_back(p[i]);
    }
  const double c = linear_fit(tx, ty).first;
  rep.fitted_slope_top = c;
  auto dev = [&](std::size_t i) { return std::abs(p[i] - c * rho[i]) / std::sqrt(p[i]); };
  const bool slope_ok = c > 0 && c <= 1 + 1e-9;
  const bool dev_ok = dev(std::size_t(n - 1)) <= dev(top0) * (1 + 1e-6) + 1e-12;
  rep.p3_ok = slope_ok && dev_ok;
  rep.p3_msg = "top-decade slope " + std::to_string(c) +
               (slope_ok ? (dev_ok ? ", |p - c rho|/sqrt(p) non-growing" : ", |p - c rho|/sqrt(p) growing")
                         : " not in (0, 1]");

  rep.p4_ok = true;
  for (int i = 0; i < n; ++i)
    if (dp[i] > 1 + 1e-12) {
      rep.p4_ok = false;
      rep.has_p4_violation = true;
      rep.p4_violation_density = rho[i];
      break;
    }
  rep.p4_msg = rep.p4_ok ? "P' <= 1 on the sample grid"
                         : "P' > 1 from rho=" + std::to_string(rep.p4_violation_density);
  return rep;
}

}  // namespace tpp
