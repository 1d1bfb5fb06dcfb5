#pragma once

#include <vector>

#include "tpp/eos.hpp"
#include "tpp/tov.hpp"

namespace tpp {

/// Lane–Emden star y0'' + (2/s) y0' = -4 pi g0(y0) with y0(0) = 1, where
/// g0(y) = k^{-alpha} ((gamma-1)/gamma)^alpha y_+^alpha.
struct LaneEmdenState {
  double gamma = 0, k = 0, alpha = 0;
  double S0 = 0;  // first zero of y0
  double M0 = 0;  // m0(S0)
  RadialProfile profile;
  std::vector<double> s, y0, rho0;

  double g0(double y) const;
  double dg0(double y) const;
  /// y0 and y0' at s, continued by the vacuum solution M0/s - M0/S0.
  double y(double s) const;
  double dy(double s) const;
  double mass(double s) const;
};

LaneEmdenState solve_lane_emden(double gamma, double k, const SolverConfig& cfg = {});

/// A relativistic state in the variables s = kappa^a r, ybar = y / kappa,
/// mbar = kappa^{(alpha-3)/2} m with a = (alpha - 1) / 2.
struct RescaledState {
  double kappa = 0, alpha = 0, a = 0;
  double S = 0;          // rescaled boundary
  double ybar_inf = 0;   // limit of ybar at infinity
  std::vector<double> s, ybar, dybar, mbar, pbar;

  double r_of_s(double s_) const;
};

/// Rescales onto the given s grid (the state's own rescaled nodes when empty).
RescaledState rescale_state(const SteadyState& state, double alpha, const std::vector<double>& s_grid = {});

/// ybar(s), ybar'(s) for any s >= 0, using the vacuum continuation outside.
std::pair<double, double> rescaled_values(const SteadyState& state, double alpha, double s);

struct NewtonianLimitRow {
  double kappa = 0;
  double err_c0 = 0;
  double err_c1 = 0;
  double total() const { return err_c0 + err_c1; }
};

struct NewtonianLimitReport {
  std::vector<NewtonianLimitRow> rows;
  double C = 0;  // E(kappa) ~ C kappa^q
  double q = 0;
  double S0 = 0, M0 = 0;
};

NewtonianLimitReport newtonian_limit_check(const EquationOfState& eos, const std::vector<double>& kappas,
                                           const SolverConfig& cfg = {}, int samples = 4000);

}  // namespace tpp
