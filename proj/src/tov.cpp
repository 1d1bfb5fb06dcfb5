#include "tpp/tov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tpp/errors.hpp"
#include "tpp/ode.hpp"
#include "tpp/quadrature.hpp"

namespace tpp {

namespace {

constexpr double kPi = std::numbers::pi;
using Pair = ode::DormandPrince54<double, 2>;
using State = Pair::State;

struct Rhs {
  const StructureModel& model;
  long evals = 0;

  State operator()(double r, const State& u) {
    ++evals;
    const double y = u[0], m = u[1];
    const double rho = y > 0 ? model.density(y) : 0.0;
    State out;
    out[1] = 4 * kPi * r * r * rho;
    if (!model.relativistic) {
      out[0] = -m / (r * r);
      return out;
    }
    const double p = rho > 0 ? model.pressure(rho) : 0.0;
    const double denom = 1 - 2 * m / r;
    if (!(denom > 1e-12)) throw NumericalError("horizon formation: 2m/r reached " + std::to_string(2 * m / r));
    out[0] = -(m / (r * r) + 4 * kPi * r * p) / denom;
    return out;
  }
};

struct Node {
  double r;
  State u, f;
};

// Adaptive integration from (r0, u0) to exactly r1.
Node advance(Rhs& rhs, Node from, double r1, double h, const SolverConfig& cfg, SolverDiagnostics& diag) {
  while (from.r < r1) {
    const bool last = from.r + h >= r1;
    const double hh = last ? r1 - from.r : h;
    auto step = Pair::step(rhs, from.r, from.u, from.f, hh);
    const double err = Pair::error_norm(step.error, from.u, step.u, cfg.abs_tol, cfg.rel_tol);
    if (!(err <= 1)) {
      ++diag.rejected;
      h = std::isfinite(err) ? Pair::next_step(hh, err) : hh / 4;
      continue;
    }
    ++diag.accepted;
    from = {last ? r1 : from.r + hh, step.u, step.deriv};
    h = Pair::next_step(hh, err);
  }
  return from;
}

}  // namespace

void SolverConfig::check() const {
  if (!(abs_tol > 0) || !(rel_tol >= 1e-14) || !(r_min_factor > 0) || !(max_step_factor > 0) || !(surface_tol > 0) ||
      !(r_max_factor > 1) || surface_nodes < 2 || !(surface_layer > 0 && surface_layer < 1))
    throw ConfigError("solver: tolerances and factors must be positive, rel_tol >= 1e-14");
}

ProfilePoint RadialProfile::interpolate(double radius) const {
  const std::size_t i = interp::segment_index<double>(r, radius);
  const auto yy = interp::hermite(r[i], r[i + 1], y[i], y[i + 1], dy[i], dy[i + 1], radius);
  const auto mm = interp::hermite(r[i], r[i + 1], m[i], m[i + 1], dm[i], dm[i + 1], radius);
  return {yy.value, yy.slope, mm.value, mm.slope};
}

RadialProfile integrate_structure(const StructureModel& model, double yc, const SolverConfig& cfg) {
  cfg.check();
  if (!(yc > 0)) throw DomainError("integrate_structure: central value must be positive");
  Rhs rhs{model};
  RadialProfile out;
  SolverDiagnostics& diag = out.diag;

  const double rho_c = model.density(yc);
  const double p_c = model.relativistic ? model.pressure(rho_c) : 0.0;
  const double a = 2 * kPi * (rho_c / 3 + p_c);
  const double gp = model.dg_dy(yc);
  const double r_s = std::sqrt(yc / a);
  out.core_scale = r_s;
  // Next Taylor term of y is of relative size (r / r_s)^4.
  const double r_min =
      std::min(cfg.r_min_factor * r_s, r_s * std::pow(cfg.abs_tol / std::max(yc, cfg.abs_tol), 0.25));
  diag.r_min = r_min;

  State u0;
  u0[0] = yc - a * r_min * r_min;
  u0[1] = 4 * kPi / 3 * rho_c * std::pow(r_min, 3) - 4 * kPi / 5 * gp * a * std::pow(r_min, 5);
  Node cur{r_min, u0, rhs(r_min, u0)};

  std::vector<Node> nodes{{0.0, State(yc, 0.0), State(0.0, 0.0)}, cur};
  double h = r_min;
  const double r_max = cfg.r_max_factor * r_s;
  Node surface{};
  bool found = false;
  while (!found) {
    h = std::min(h, cfg.max_step_factor * std::max(cur.r, r_s));
    if (cur.r + h > r_max) throw NumericalError("no boundary found before r_max=" + std::to_string(r_max));
    auto step = Pair::step(rhs, cur.r, cur.u, cur.f, h);
    const double err = Pair::error_norm(step.error, cur.u, step.u, cfg.abs_tol, cfg.rel_tol);
    if (!(err <= 1)) {
      ++diag.rejected;
      h = std::isfinite(err) ? Pair::next_step(h, err) : h / 4;
      continue;
    }
    ++diag.accepted;
    if (step.u[0] > 0) {
      diag.local_error_y += std::abs(step.error[0]);
      diag.local_error_m += std::abs(step.error[1]);
      cur = {cur.r + h, step.u, step.deriv};
      nodes.push_back(cur);
      h = Pair::next_step(h, err);
      continue;
    }
    // y changed sign inside (cur.r, cur.r + h]: locate the zero by
    // Illinois iteration on the step length, re-stepping from cur.
    double ha = 0, fa = cur.u[0];
    double hb = h, fb = step.u[0];
    Pair::Step best = step;
    double hbest = h;
    int side = 0;
    for (int it = 0; it < 200; ++it) {
      ++diag.surface_iterations;
      double hm = (ha * fb - hb * fa) / (fb - fa);
      if (!(hm > ha && hm < hb)) hm = 0.5 * (ha + hb);
      auto s = Pair::step(rhs, cur.r, cur.u, cur.f, hm);
      const double fm = s.u[0];
      if (std::abs(fm) < std::abs(best.u[0]) || (std::abs(fm) == std::abs(best.u[0]) && hm < hbest)) {
        best = s;
        hbest = hm;
      }
      if (std::abs(fm) <= cfg.surface_tol) break;
      if (fm > 0) {
        ha = hm;
        fa = fm;
        if (side == 1) fb *= 0.5;
        side = 1;
      } else {
        hb = hm;
        fb = fm;
        if (side == -1) fa *= 0.5;
        side = -1;
      }
      if (hb - ha <= 4 * std::numeric_limits<double>::epsilon() * (cur.r + hb)) break;
    }
    surface = {cur.r + hbest, best.u, best.deriv};
    diag.surface_residual = std::abs(best.u[0]);
    found = true;
  }
  const double R = surface.r;

  // Rebuild the outer layer on nodes clustered towards R.
  const double layer_start = R * (1 - cfg.surface_layer);
  while (nodes.size() > 2 && nodes.back().r >= layer_start) nodes.pop_back();
  Node from = nodes.back();
  const int J = cfg.surface_nodes;
  const double expo = 1 + model.surface_exponent;
  double hstep = std::max(from.r - nodes[nodes.size() - 2].r, r_min);
  for (int j = J; j >= 1; --j) {
    const double target = R - (R - layer_start) * std::pow(double(j) / J, expo);
    if (target <= from.r) continue;
    from = advance(rhs, from, target, hstep, cfg, diag);
    nodes.push_back(from);
  }
  surface.f = rhs(R, surface.u);
  nodes.push_back(surface);
  diag.rhs_evals = rhs.evals;

  for (const auto& n : nodes) {
    out.r.push_back(n.r);
    out.y.push_back(n.u[0]);
    out.m.push_back(n.u[1]);
    out.dy.push_back(n.f[0]);
    out.dm.push_back(n.f[1]);
  }
  out.R = R;
  out.M = surface.u[1];
  return out;
}

StructureModel relativistic_model(const EquationOfState& eos) {
  auto e = std::make_shared<EquationOfState>(eos);
  StructureModel model;
  model.density = [e](double y) { return e->density_of_enthalpy(y); };
  model.pressure = [e](double rho) { return e->pressure(rho); };
  model.dg_dy = [e](double y) { return e->dg_dy(y); };
  model.relativistic = true;
  model.surface_exponent = e->gamma() > 1 ? 1 / (e->gamma() - 1) : 1.0;
  return model;
}

SteadyState solve_steady_state(const EquationOfState& eos, double kappa, const SolverConfig& cfg) {
  if (!(kappa > 0)) throw DomainError("solve_steady_state: kappa must be positive");
  if (kappa > eos.max_enthalpy())
    throw DomainError("solve_steady_state: kappa=" + std::to_string(kappa) + " exceeds Q(rho_cap)=" +
                      std::to_string(eos.max_enthalpy()));
  SteadyState st;
  st.eos_ = std::make_shared<EquationOfState>(eos);
  st.profile_ = integrate_structure(relativistic_model(eos), kappa, cfg);
  const RadialProfile& pr = st.profile_;
  st.kappa = kappa;
  st.z = std::expm1(kappa);
  st.R = pr.R;
  st.M = pr.M;
  st.diag = pr.diag;
  if (!(2 * st.M / st.R < 1)) throw NumericalError("horizon formation at the boundary");
  st.mu_R = 0.5 * std::log1p(-2 * st.M / st.R);

  const std::size_t n = pr.r.size();
  st.grid = pr.r;
  st.y = pr.y;
  st.m = pr.m;
  st.rho.resize(n);
  st.p.resize(n);
  st.lambda.resize(n);
  st.mu.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool boundary = i + 1 == n;
    st.rho[i] = boundary ? 0.0 : eos.density_of_enthalpy(pr.y[i]);
    st.p[i] = boundary ? 0.0 : eos.pressure(st.rho[i]);
    st.lambda[i] = pr.r[i] > 0 ? -0.5 * std::log1p(-2 * pr.m[i] / pr.r[i]) : 0.0;
    st.mu[i] = st.mu_R - pr.y[i];
  }

  // Invariants of an equilibrium. Where the density has vanished to many
  // digits the mass can only be trusted to the integrator tolerance.
  const double m_jitter = cfg.abs_tol + cfg.rel_tol * st.M;
  for (std::size_t i = 1; i < n; ++i) {
    if (!(st.y[i] < st.y[i - 1])) throw InvariantViolation("y not strictly decreasing at r=" + std::to_string(st.grid[i]));
    if (st.m[i] < st.m[i - 1] - m_jitter) throw InvariantViolation("m decreasing at r=" + std::to_string(st.grid[i]));
    if (!(st.rho[i] <= st.rho[i - 1])) throw InvariantViolation("rho increasing at r=" + std::to_string(st.grid[i]));
    if (2 * st.m[i] / st.grid[i] > 8.0 / 9.0)
      throw InvariantViolation("Buchdahl bound violated at r=" + std::to_string(st.grid[i]));
  }

  // Baryon number with 8-point Gauss rules between output nodes.
  const auto& gl = quad::gauss_legendre<8>();
  double N = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    N += gl.integrate(
        [&](double r) {
          const LocalState s = st.at(r);
          return std::exp(s.lambda) * eos.baryon_density(s.rho) * r * r;
        },
        pr.r[i], pr.r[i + 1]);
  }
  st.N = 4 * kPi * N;
  return st;
}

LocalState SteadyState::at(double r) const {
  if (!(r >= 0)) throw DomainError("SteadyState::at: negative radius");
  LocalState s{};
  if (r >= R) {
    const auto ext = extend_exterior(r);
    const double f = 1 - 2 * M / r;
    s.y = ext.y;
    s.mu = ext.mu;
    s.lambda = ext.lambda;
    s.m = M;
    s.dm = 0;
    s.dmu = M / (r * r * f);
    s.dy = -s.dmu;
    s.dlambda = -s.dmu;
    s.interior = false;
    return s;
  }
  const ProfilePoint pt = profile_.interpolate(r);
  s.y = pt.y;
  s.dy = pt.dy;
  s.m = pt.m;
  s.dm = pt.dm;
  s.rho = eos_->density_of_enthalpy(pt.y);
  s.p = s.rho > 0 ? eos_->pressure(s.rho) : 0.0;
  s.gprime = eos_->dg_dy(pt.y);
  s.mu = mu_R - pt.y;
  s.dmu = -pt.dy;
  if (r > 0) {
    const double f = 1 - 2 * pt.m / r;
    s.lambda = -0.5 * std::log(f);
    s.dlambda = (4 * kPi * r * s.rho - pt.m / (r * r)) / f;
  }
  s.interior = true;
  return s;
}

ExteriorValues SteadyState::extend_exterior(double r) const {
  if (!(r >= R)) throw DomainError("extend_exterior: radius inside the star");
  const double mu = 0.5 * std::log1p(-2 * M / r);
  return {mu_R - mu, mu, -mu};
}

PsiValues SteadyState::psi_inverse(double r) const {
  if (r >= R) return {false, std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0};
  const LocalState s = at(r);
  return {true, std::exp(-s.mu) / s.gprime, std::exp(s.mu) * s.gprime, s.gprime};
}

double SteadyState::psi(double r) const {
  if (r >= R) throw DomainError("psi is undefined at or outside the boundary");
  return psi_inverse(r).psi;
}

}  // namespace tpp
