#include "tpp/newtonian.hpp"

#include <algorithm>
#include <cmath>

#include "tpp/errors.hpp"

namespace tpp {

double LaneEmdenState::g0(double yv) const {
  if (!(yv > 0)) return 0;
  return std::pow(k, -alpha) * std::pow((gamma - 1) / gamma * yv, alpha);
}

double LaneEmdenState::dg0(double yv) const {
  if (!(yv > 0)) return 0;
  return alpha * g0(yv) / yv;
}

double LaneEmdenState::y(double sv) const {
  if (sv >= S0) return M0 / sv - M0 / S0;
  return profile.interpolate(sv).y;
}

double LaneEmdenState::dy(double sv) const {
  if (sv >= S0) return -M0 / (sv * sv);
  return profile.interpolate(sv).dy;
}

double LaneEmdenState::mass(double sv) const {
  if (sv >= S0) return M0;
  return profile.interpolate(sv).m;
}

LaneEmdenState solve_lane_emden(double gamma, double k, const SolverConfig& cfg) {
  if (!(gamma > 1 && gamma <= 2) || !(k > 0)) throw DomainError("solve_lane_emden: need 1 < gamma <= 2 and k > 0");
  LaneEmdenState le;
  le.gamma = gamma;
  le.k = k;
  le.alpha = 1 / (gamma - 1);
  StructureModel model;
  model.density = [&le](double yv) { return le.g0(yv); };
  model.pressure = [](double) { return 0.0; };
  model.dg_dy = [&le](double yv) { return le.dg0(yv); };
  model.relativistic = false;
  model.surface_exponent = le.alpha;
  le.profile = integrate_structure(model, 1.0, cfg);
  le.S0 = le.profile.R;
  le.M0 = le.profile.M;
  le.s = le.profile.r;
  le.y0 = le.profile.y;
  for (double yv : le.y0) le.rho0.push_back(le.g0(yv));
  le.rho0.back() = 0;
  return le;
}

double RescaledState::r_of_s(double s_) const { return s_ * std::pow(kappa, -a); }

std::pair<double, double> rescaled_values(const SteadyState& state, double alpha, double s) {
  const double a = (alpha - 1) / 2;
  const double kappa = state.kappa;
  const double r = s * std::pow(kappa, -a);
  const LocalState ls = state.at(r);
  return {ls.y / kappa, ls.dy * std::pow(kappa, -a) / kappa};
}

RescaledState rescale_state(const SteadyState& state, double alpha, const std::vector<double>& s_grid) {
  RescaledState rs;
  rs.kappa = state.kappa;
  rs.alpha = alpha;
  rs.a = (alpha - 1) / 2;
  const double ka = std::pow(state.kappa, rs.a);
  rs.S = state.R * ka;
  rs.ybar_inf = state.mu_R / state.kappa;
  if (s_grid.empty()) {
    for (double r : state.grid) rs.s.push_back(r * ka);
  } else {
    rs.s = s_grid;
  }
  const double mscale = std::pow(state.kappa, (alpha - 3) / 2);
  const double pscale = std::pow(state.kappa, -alpha - 1);
  for (double sv : rs.s) {
    const LocalState ls = state.at(sv / ka);
    rs.ybar.push_back(ls.y / state.kappa);
    rs.dybar.push_back(ls.dy / (ka * state.kappa));
    rs.mbar.push_back(ls.m * mscale);
    rs.pbar.push_back(ls.p * pscale);
  }
  return rs;
}

NewtonianLimitReport newtonian_limit_check(const EquationOfState& eos, const std::vector<double>& kappas,
                                           const SolverConfig& cfg, int samples) {
  if (kappas.size() < 2) throw DomainError("newtonian_limit_check: need at least two kappa values");
  NewtonianLimitReport rep;
  const LaneEmdenState le = solve_lane_emden(eos.gamma(), eos.k(), cfg);
  rep.S0 = le.S0;
  rep.M0 = le.M0;
  const double alpha = le.alpha;
  std::vector<double> lx, ly;
  for (double kappa : kappas) {
    const SteadyState st = solve_steady_state(eos, kappa, cfg);
    const RescaledState rs = rescale_state(st, alpha);
    const double s_max = 4 * std::max(le.S0, rs.S);
    std::vector<double> grid = rs.s;
    grid.insert(grid.end(), le.s.begin(), le.s.end());
    for (int i = 0; i <= samples; ++i) grid.push_back(s_max * i / samples);
    std::sort(grid.begin(), grid.end());
    NewtonianLimitRow row;
    row.kappa = kappa;
    for (double sv : grid) {
      if (sv > s_max) break;
      const auto [yb, dyb] = rescaled_values(st, alpha, sv);
      row.err_c0 = std::max(row.err_c0, std::abs(yb - le.y(sv)));
      row.err_c1 = std::max(row.err_c1, std::abs(dyb - le.dy(sv)));
    }
    // Limits at infinity belong to the supremum as well.
    row.err_c0 = std::max(row.err_c0, std::abs(rs.ybar_inf + le.M0 / le.S0));
    rep.rows.push_back(row);
    lx.push_back(std::log(kappa));
    ly.push_back(std::log(row.total()));
  }
  const double n = double(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  rep.q = sxy / sxx;
  rep.C = std::exp(my - rep.q * mx);
  return rep;
}

}  // namespace tpp
