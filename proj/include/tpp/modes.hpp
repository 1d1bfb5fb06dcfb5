#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tpp/tov.hpp"

namespace tpp {

enum class VelocityWeight { Baryon, Enthalpy };

std::string to_string(VelocityWeight w);

struct ModesConfig {
  int cells = 400;
  int nodes = 400;  // velocity nodes; must equal cells
  double clustering = 2.0;
  VelocityWeight weight = VelocityWeight::Baryon;
  double symmetry_tol = 1e-8;
  int report_eigenvalues = 6;

  void check() const;
};

/// Per-cell quadrature of the metric kernel H(s) = e^{mu+lambda}(2 s mu' + 1) e^{2 lambda} / s^2
/// that couples the enclosed mass perturbation to the induced potential.
class DensityKernel {
 public:
  DensityKernel(const SteadyState& state, const std::vector<double>& edges);

  int cells() const { return int(edges_.size()) - 1; }
  const std::vector<double>& edges() const { return edges_; }
  const Eigen::VectorXd& volumes() const { return vol_; }   // 4 pi (r_{c+1}^3 - r_c^3) / 3
  const Eigen::VectorXd& local() const { return local_; }   // 4 pi int e^{mu+lambda} / g' r^2 over the cell
  double exterior() const { return exterior_; }              // int_R^inf H = 1 / (R - 2M)

  /// Symmetric pairing -int_0^inf H m_i m_j ds of two cell indicators.
  double coupling(int i, int j) const;

  /// Same pairing evaluated column-wise as 4 pi int r^2 chi_i e^{mu+lambda} mubar_j.
  double coupling_by_column(int i, int j) const;

  /// e^{mu+lambda} mubar at radius r for a piecewise-constant density.
  double potential_times_metric(const Eigen::VectorXd& rho, double r) const;

  /// Quadrature points and weights of cell c (graded in the last cell).
  const Eigen::VectorXd& points(int c) const { return pts_[std::size_t(c)]; }
  const Eigen::VectorXd& weights(int c) const { return wts_[std::size_t(c)]; }

 private:
  double tail_from(double r, int cell, double cum_mass, double rho_cell) const;
  double kernel(double s) const;

  const SteadyState* state_;
  std::vector<double> edges_;
  std::vector<Eigen::VectorXd> pts_, wts_;
  std::vector<Eigen::VectorXd> a_, b_;  // per point: int_{r_q}^{r_{c+1}} H and H * (enclosed cell mass)
  Eigen::VectorXd vol_, local_, g0_, g2_, hi_, tail_;
  double exterior_ = 0;
};

/// Cell partition of [0, R] for density perturbations.
std::vector<double> density_cells(const SteadyState& state, int cells, double clustering);

/// mubar_rho at the given radii (rho extended by zero outside the star).
std::vector<double> induced_potential(const SteadyState& state, const std::vector<double>& edges,
                                      const Eigen::VectorXd& rho_cells, const std::vector<double>& radii);

struct DensityForm {
  Eigen::MatrixXd Lmat;     // <L rho_i, rho_j> for cell indicators
  Eigen::MatrixXd Lraw;     // column-wise assembly before averaging
  Eigen::VectorXd Xgram;    // diagonal Gram of the weighted space
  Eigen::VectorXd mean_vec; // cell volumes
  std::vector<double> edges;
  double asymmetry = 0;     // relative, before symmetrization
};

DensityForm assemble_L(const SteadyState& state, const ModesConfig& cfg);
DensityForm assemble_L(const DensityKernel& kernel, double symmetry_tol = 1e-8);

/// Negative count of the pencil (Lmat, Xgram) without constraint.
int morse_index(const DensityForm& form);

struct ConstrainedSpectrum {
  int n_minus = 0;
  Eigen::VectorXd eigenvalues;  // ascending, relative to the X Gram
};

/// Pencil restricted to mean_vec^T rho = 0.
ConstrainedSpectrum constrained_spectrum(const DensityForm& form);
int constrained_morse_index(const DensityForm& form);

struct ModeForm {
  Eigen::MatrixXd Smode;          // <L A v_i, A v_j>
  Eigen::MatrixXd Ygram;          // velocity Gram
  Eigen::MatrixXd Amap;           // cell densities of A v_j (cells x free nodes)
  std::vector<double> node_r;     // free velocity nodes
  std::vector<double> weight_profile;  // velocity weight at all nodes, zero at R
  double range_defect = 0;        // max |mean_vec^T A v_j| / |A v_j|
  double asymmetry = 0;
};

ModeForm assemble_modes(const SteadyState& state, const DensityForm& form, VelocityWeight weight);

struct ModeReport {
  double kappa = 0;
  int n_u_direct = 0;
  int n_minus_constrained = 0;
  int n_minus_L = 0;
  double constrained_gap = 0;           // smallest |eigenvalue| of the constrained density pencil
  std::vector<double> growth_rates;
  std::vector<double> lowest;           // lowest velocity pencil eigenvalues
  std::vector<double> eigenvalue_gaps;  // spacings of the lowest eigenvalues
  double L_asymmetry = 0;
  double S_asymmetry = 0;
  double range_defect = 0;
  VelocityWeight weight = VelocityWeight::Baryon;
  Eigen::VectorXd lowest_mode;          // coefficients of the lowest velocity mode
  std::vector<double> node_r;
  std::vector<double> edges;
  Eigen::MatrixXd Amap;
};

ModeReport unstable_modes(const SteadyState& state, const ModesConfig& cfg = {});

/// CSV "r,v,rho_of_v" of the lowest velocity mode, sampled at cell midpoints.
std::string mode_profile_csv(const SteadyState& state, const ModeReport& report);

}  // namespace tpp
