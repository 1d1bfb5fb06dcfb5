#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "tpp/eos.hpp"

namespace tpp {

struct SolverConfig {
  double abs_tol = 1e-14;
  double rel_tol = 1e-11;
  double r_min_factor = 1e-3;     // start-off radius as a fraction of the core scale
  double max_step_factor = 0.02;  // step cap relative to max(r, core scale)
  double surface_tol = 1e-14;     // |y| accepted as the boundary
  double r_max_factor = 1e5;      // give up beyond this many core scales
  int surface_nodes = 48;         // clustered output nodes near the boundary
  double surface_layer = 0.05;    // width of the clustered layer relative to R

  void check() const;
};

struct SolverDiagnostics {
  int accepted = 0;
  int rejected = 0;
  long rhs_evals = 0;
  int surface_iterations = 0;
  double surface_residual = 0;
  double r_min = 0;
  double local_error_y = 0;  // sum of accepted local error estimates
  double local_error_m = 0;
};

/// Right-hand side ingredients of the structure system. The Newtonian
/// variant drops the metric factor and the pressure source.
struct StructureModel {
  std::function<double(double)> density;   // rho as a function of y (0 for y <= 0)
  std::function<double(double)> pressure;  // p as a function of rho
  std::function<double(double)> dg_dy;     // d rho / d y
  bool relativistic = true;
  double surface_exponent = 1.5;  // rho ~ (R - r)^exponent near the boundary
};

struct ProfilePoint {
  double y, dy, m, dm;
};

/// Accepted integrator nodes of (y, m) with their derivatives; evaluated
/// between nodes by cubic Hermite interpolation.
struct RadialProfile {
  std::vector<double> r, y, m, dy, dm;
  double R = 0;
  double M = 0;
  double core_scale = 0;
  SolverDiagnostics diag;

  ProfilePoint interpolate(double radius) const;
};

/// Integrates the structure system from the regular center y(0) = yc out
/// to the first zero of y.
RadialProfile integrate_structure(const StructureModel& model, double yc, const SolverConfig& cfg);

struct LocalState {
  double y, dy, m, dm, rho, p, lambda, mu, dmu, dlambda, gprime;
  bool interior;
};

struct ExteriorValues {
  double y, mu, lambda;
};

struct PsiValues {
  bool inside;     // psi is defined only for r < R
  double psi;      // e^{-mu} / g'(y), NaN outside
  double psi_inv;  // e^{mu} g'(y), 0 outside
  double gprime;
};

/// Relativistic equilibrium for central value kappa = y(0).
class SteadyState {
 public:
  double kappa = 0;
  double z = 0;
  double R = 0;
  double M = 0;
  double N = 0;
  double mu_R = 0;
  std::vector<double> grid, y, rho, p, m, lambda, mu;
  SolverDiagnostics diag;

  LocalState at(double r) const;
  ExteriorValues extend_exterior(double r) const;
  PsiValues psi_inverse(double r) const;
  double psi(double r) const;

  const RadialProfile& profile() const { return profile_; }
  const EquationOfState& eos() const { return *eos_; }

 private:
  friend SteadyState solve_steady_state(const EquationOfState&, double, const SolverConfig&);
  RadialProfile profile_;
  std::shared_ptr<const EquationOfState> eos_;
};

SteadyState solve_steady_state(const EquationOfState& eos, double kappa, const SolverConfig& cfg = {});

StructureModel relativistic_model(const EquationOfState& eos);

}  // namespace tpp
