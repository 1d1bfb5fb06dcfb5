#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tpp/interpolation.hpp"

namespace tpp {

enum class EosKind { Polytrope, PolytropeLinearHybrid, Tabulated };

std::string to_string(EosKind kind);

struct EosSample {
  double rho = 0;
  double p = 0;
};

/// Log-spaced density grid for validation.
struct SampleSpec {
  double rho_min = 1e-8;
  double rho_max = 1e3;
  int points = 400;
  double gamma_tol = 1e-2;
};

struct EosValidationReport {
  bool p1_ok = false, p2_ok = false, p3_ok = false, p4_ok = false;
  std::string p1_msg, p2_msg, p3_msg, p4_msg;
  double fitted_gamma = 0;
  double fitted_slope_top = 0;
  bool has_p4_violation = false;
  double p4_violation_density = 0;

  bool all_ok() const { return p1_ok && p2_ok && p3_ok && p4_ok; }
};

/// Barotropic equation of state P(rho) together with the enthalpy map
/// Q(rho) = int_0^rho P'/(s + P) ds, its inverse g and the baryon density.
/// Immutable after construction; Q and the baryon integral are tabulated
/// eagerly so that g can be evaluated cheaply inside ODE right-hand sides.
class EquationOfState {
 public:
  static EquationOfState polytrope(double k, double gamma, double rho_cap = 1e3);
  static EquationOfState hybrid(double k, double gamma, double rho_t, double rho_cap = 1e12);
  /// Hybrid whose linear branch has unit sound speed.
  static EquationOfState hybrid_causal(double k, double gamma, double rho_cap = 1e12);
  static EquationOfState tabulated(std::vector<EosSample> table);
  static EquationOfState from_file(const std::filesystem::path& path);

  EosKind kind() const { return kind_; }
  double k() const { return k_; }
  double gamma() const { return gamma_; }
  double rho_t() const { return rho_t_; }
  double rho_cap() const { return rho_cap_; }
  double cs2_high() const { return cs2_; }
  const std::vector<EosSample>& table() const { return table_; }

  double pressure(double rho) const;
  double sound_speed_sq(double rho) const;
  double enthalpy(double rho) const;
  double density_of_enthalpy(double y) const;
  double dg_dy(double y) const;
  double baryon_density(double rho) const;

  /// Q(rho_cap): the largest central value the representation supports.
  double max_enthalpy() const;
  bool has_enthalpy() const { return cache_ != nullptr; }

  EosValidationReport validate(const SampleSpec& spec = {}) const;

  struct Cache;

 private:
  EquationOfState() = default;

  // Unchecked evaluation, including extrapolation beyond rho_cap.
  double p_raw(double rho) const;
  double dp_raw(double rho) const;
  void build_cache();
  void require_cache() const;

  EosKind kind_ = EosKind::Polytrope;
  double k_ = 1, gamma_ = 2, rho_t_ = 0, cs2_ = 0, rho_cap_ = 0;
  std::vector<EosSample> table_;
  interp::MonotoneCubic<double> log_table_;
  std::shared_ptr<const Cache> cache_;
};

}  // namespace tpp
