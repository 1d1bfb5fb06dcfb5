#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tpp/eos.hpp"
#include "tpp/newtonian.hpp"
#include "tpp/tov.hpp"
#include "tpp/tridiagonal.hpp"

namespace tpp {

struct SpectralConfig {
  int elements = 512;          // total element count, interior plus exterior
  double exterior_share = 0.2; // fraction of elements placed outside the star
  double out_factor = 25;      // R_out = out_factor * R
  double clustering = 2.0;     // surface grading exponent of the interior mesh
  int eigenpairs = 4;          // lowest pencil eigenpairs to report
  bool refine_check = true;    // repeat the count on a doubled mesh

  void check() const;
};

struct RadialMesh {
  std::vector<double> nodes;  // 0 = r_0 < ... < r_N = R_out
  double R = 0;
  double R_out = 0;
  int interior_elements = 0;  // nodes[interior_elements] == R
  double clustering = 0;
  double robin_coeff = 0;     // boundary coefficient of the quadratic form

  int elements() const { return int(nodes.size()) - 1; }
};

/// Partition of [0, R] equidistributing a monitor that mixes the core
/// scale, a uniform part and surface grading.
std::vector<double> graded_nodes(double R, double core_scale, int cells, double clustering);

/// Interior nodes equidistribute a monitor combining the core scale, a
/// uniform part and surface grading; exterior nodes are log-spaced.
RadialMesh build_mesh(double R, double core_scale, const SpectralConfig& cfg);

/// Pointwise data of the reduced form in the conjugated variable
/// w = e^{nu} phi: stiffness c(r), potential q(r) (entering as -q w^2),
/// and nu, nu' for the Gram transform.
struct SigmaPoint {
  double c, q, nu, dnu;
};

struct SigmaCoefficients {
  double R = 0;
  double kappa = 0;
  double core_scale = 0;
  std::function<SigmaPoint(double)> at;
  std::function<double(double)> robin_stiffness;  // exterior energy per w(R_out)^2
  std::function<double(double)> robin_gram;       // exterior Gram per w(R_out)^2
};

SigmaCoefficients relativistic_coefficients(const SteadyState& state);
SigmaCoefficients newtonian_coefficients(const LaneEmdenState& le);

struct FormPair {
  tridiag::SymmetricTridiagonal<double> S;
  tridiag::SymmetricTridiagonal<double> B;
  RadialMesh mesh;
  double kappa = 0;
};

FormPair assemble_sigma(const SigmaCoefficients& coeffs, const RadialMesh& mesh);

/// Q[w] evaluated by direct quadrature of the continuous form on the
/// piecewise-linear interpolant of node values (independent of assembly).
double sigma_quadratic_form(const SigmaCoefficients& coeffs, const RadialMesh& mesh,
                            const Eigen::VectorXd& w, int points_per_cell = 12);

int morse_index(const FormPair& pair);

struct KernelGap {
  double gap = 0;                // smallest |theta|
  double theta = 0;              // the eigenvalue attaining it
  Eigen::VectorXd vector;
  double residual = 0;
  bool confident = true;
};

KernelGap kernel_gap(const FormPair& pair);

struct SpectralReport {
  int n_minus = 0;
  int n_minus_refined = -1;
  bool converged = false;
  KernelGap kernel;
  double kernel_gap_refined = 0;
  std::vector<double> lowest;
  std::vector<Eigen::VectorXd> lowest_vectors;
  bool rayleigh_certified = true;  // v^T S v < 0 for every negative pair
  int elements = 0;
};

SpectralReport analyze_sigma(const SigmaCoefficients& coeffs, const SpectralConfig& cfg);

struct NullResidual {
  double residual = 0;
  double center_value = 0;
  double boundary_component = 0;  // equals (R_out - 2M) d mu_R / d kappa
};

/// Relative weak residual of Sigma_kappa applied to dy/dkappa, built from
/// the states at kappa +- delta. Boundary test function excluded.
NullResidual null_direction_residual(const EquationOfState& eos, double kappa, double delta,
                                     const SpectralConfig& cfg, const SolverConfig& solver = {});

/// "i j value" triplets of the upper triangle of S and B.
std::string dump_triplets(const FormPair& pair);

}  // namespace tpp
