#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tpp/eos.hpp"
#include "tpp/modes.hpp"
#include "tpp/spectral.hpp"
#include "tpp/tov.hpp"

namespace tpp {

struct MassRadius {
  double M = 0;
  double R = 0;
};

/// kappa -> (M, R). Usually a steady-state solve; tests inject closed forms.
using FamilyModel = std::function<MassRadius(double)>;

FamilyModel steady_state_model(const EquationOfState& eos, const SolverConfig& cfg = {});

enum class DerivativeMode { Resolve, Grid };

std::string to_string(DerivativeMode m);

struct FamilyConfig {
  double rel_step = 1e-3;       // derivative step h, re-solves at kappa (1 +- h), kappa (1 +- 2h)
  double noise_factor = 10;     // "derivative = 0" when below this multiple of its error estimate
  double solver_noise = 1e-11;  // relative accuracy of one solve
  double refine_tol = 1e-6;     // relative bracket width of refined extrema
  int max_refine = 200;
  DerivativeMode derivatives = DerivativeMode::Resolve;
  int threads = 0;

  void check() const;
};

struct Derivative {
  double value = 0;
  double error = 0;  // Richardson (or grid spread) estimate
  double floor = 0;  // noise_factor * max(error, solver noise)

  bool is_zero() const { return std::abs(value) <= floor; }
};

struct FamilyPoint {
  double kappa = 0;
  double M = 0;
  double R = 0;
  double MR = 0;
  Derivative dM, dMR, dR;
  bool has_derivatives = false;
};

enum class ExtremumWhich { MassExtremum, RatioExtremum };
enum class ExtremumKind { Max, Min, InflectionCritical };
enum class Orientation { Counterclockwise, Clockwise };

std::string to_string(ExtremumWhich w);
std::string to_string(ExtremumKind k);
std::string to_string(Orientation o);

struct ExtremumEvent {
  double kappa_star = 0;
  ExtremumWhich which = ExtremumWhich::MassExtremum;
  ExtremumKind kind = ExtremumKind::Max;
  Orientation orientation = Orientation::Counterclockwise;
  bool confident = true;
  int iterations = 0;
  double bracket_lo = 0, bracket_hi = 0;
  FamilyPoint at;  // derivatives at kappa_star
};

struct FamilyCurve {
  std::vector<FamilyPoint> points;
  std::vector<ExtremumEvent> extrema_M, extrema_MR;
  std::vector<int> i_kappa;  // -1 where derivatives are unavailable
  FamilyModel model;
  FamilyConfig cfg;
};

/// Richardson-extrapolated central differences from four re-solves.
FamilyPoint evaluate_point(const FamilyModel& model, double kappa, const FamilyConfig& cfg);

std::vector<double> kappa_grid(double kappa_min, double kappa_max, int points, bool log_scale);

FamilyCurve sweep_family(const FamilyModel& model, const std::vector<double>& grid, const FamilyConfig& cfg = {});
FamilyCurve sweep_family(const EquationOfState& eos, const std::vector<double>& grid, const FamilyConfig& cfg = {},
                         const SolverConfig& solver = {});

/// Brackets sign changes of dM or d(M/R) and refines them with fresh solves.
std::vector<ExtremumEvent> find_extrema(const FamilyCurve& curve, ExtremumWhich which);

/// Winding index from the signs of dM and d(M/R); throws when both vanish.
int winding_index(const FamilyPoint& p);
int winding_index(const FamilyCurve& curve, double kappa);

enum class RowFlag { Confident, NearDegenerate, Unresolved };

std::string to_string(RowFlag f);

struct TppConfig {
  FamilyConfig family;
  SolverConfig solver;
  SpectralConfig spectral;
  ModesConfig modes;
  bool compute_modes = true;
  double gap_threshold = 1e-3;       // kernel gap of the reduced operator
  double mode_gap_threshold = 1e-3;  // smallest |eigenvalue| of the constrained density pencil
};

struct TppRow {
  double kappa = 0, M = 0, R = 0, MR = 0, dM = 0, dMR = 0;
  int i_kappa = -1;
  int n_minus_sigma = 0;
  int n_u_formula = 0;
  int n_u_direct = -1;
  int n_minus_constrained = -1;
  double kernel_gap = 0;
  double mode_gap = 0;
  std::vector<double> growth_rates;
  RowFlag flag = RowFlag::Confident;
  bool consistent = true;
};

struct TppEvent {
  ExtremumEvent event;
  int nu_before = -1, nu_after = -1;
  int nminus_before = -1, nminus_after = -1;
  int i_before = -1, i_after = -1;
  double kernel_gap = 0;  // reduced-operator gap at kappa_star
};

struct TppReport {
  std::vector<TppRow> rows;
  std::vector<TppEvent> events;  // kappa-ordered, mass and ratio extrema merged
  FamilyCurve curve;
  int failures = 0;  // confident rows violating the index formula
  double deepest_kappa = 0;
};

TppReport tpp_report(const EquationOfState& eos, const std::vector<double>& grid, const TppConfig& cfg = {});

}  // namespace tpp
