#include "tpp/modes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "tpp/errors.hpp"
#include "tpp/quadrature.hpp"
#include "tpp/spectral.hpp"

namespace tpp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kPoints = 8;

double cell_mass(double a, double s) { return 4 * kPi * (s * s * s - a * a * a) / 3; }

// Largest relative deviation from symmetry after Jacobi scaling by d.
double scaled_asymmetry(const Eigen::MatrixXd& A, const Eigen::VectorXd& d) {
  const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd B = s.asDiagonal() * A * s.asDiagonal();
  const double scale = B.cwiseAbs().maxCoeff();
  if (!(scale > 0)) return 0;
  return (B - B.transpose()).cwiseAbs().maxCoeff() / scale;
}

double velocity_weight(const SteadyState& state, const LocalState& ls, VelocityWeight w) {
  if (!(ls.rho > 0)) return 0;
  if (w == VelocityWeight::Baryon) return std::exp(-1.5 * ls.lambda) * std::sqrt(state.eos().baryon_density(ls.rho));
  return std::exp(0.5 * (ls.mu - 3 * ls.lambda)) * std::sqrt(ls.rho + ls.p);
}

int count_negative(const Eigen::VectorXd& ev) { return int((ev.array() < 0).count()); }

// 1/g' grows like (R - r)^{-e} at the boundary; the last cell is mapped
// r = R - L t^grade so the integrand becomes smooth in t.
double surface_grade(const SteadyState& state) {
  const double gamma = state.eos().gamma();
  const double e = (2 - gamma) / (gamma - 1);
  if (!(e < 1)) throw DomainError("modes: the weighted density space needs gamma > 3/2 at low density");
  return std::max(1.0, 2 / (1 - e));
}

void cell_rule(const std::vector<double>& edges, int c, double grade, Eigen::VectorXd& r, Eigen::VectorXd& w) {
  const auto& gl = quad::gauss_legendre<kPoints>();
  const double lo = edges[std::size_t(c)], hi = edges[std::size_t(c) + 1];
  const bool last = std::size_t(c) + 2 == edges.size();
  r.resize(kPoints);
  w.resize(kPoints);
  for (int q = 0; q < kPoints; ++q) {
    if (!last) {
      r[q] = gl.node(q, lo, hi);
      w[q] = gl.weight(q, lo, hi);
    } else {
      const double t = gl.node(q, 0.0, 1.0), L = hi - lo;
      r[q] = hi - L * std::pow(t, grade);
      w[q] = gl.weight(q, 0.0, 1.0) * L * grade * std::pow(t, grade - 1);
    }
  }
}

}  // namespace

std::string to_string(VelocityWeight w) { return w == VelocityWeight::Baryon ? "baryon" : "enthalpy"; }

void ModesConfig::check() const {
  if (cells < 16) throw ConfigError("modes: cells must be >= 16");
  if (nodes != cells) throw ConfigError("modes: nodes must equal cells");
  if (cells > 2000) throw ConfigError("modes: cells must be <= 2000");
  if (!(clustering >= 1)) throw ConfigError("modes: clustering must be >= 1");
  if (!(symmetry_tol > 0)) throw ConfigError("modes: symmetry_tol must be positive");
}

std::vector<double> density_cells(const SteadyState& state, int cells, double clustering) {
  return graded_nodes(state.R, state.profile().core_scale, cells, clustering);
}

double DensityKernel::kernel(double s) const {
  const LocalState ls = state_->at(s);
  return std::exp(ls.mu + 3 * ls.lambda) * (2 * s * ls.dmu + 1) / (s * s);
}

DensityKernel::DensityKernel(const SteadyState& state, const std::vector<double>& edges)
    : state_(&state), edges_(edges) {
  const int n = cells();
  if (n < 1 || edges.front() != 0 || std::abs(edges.back() - state.R) > 1e-14 * state.R)
    throw DomainError("DensityKernel: edges must partition [0, R]");
  for (int c = 0; c < n; ++c)
    if (!(edges[std::size_t(c) + 1] > edges[std::size_t(c)])) throw DomainError("DensityKernel: edges not increasing");
  const double grade = surface_grade(state);

  const auto& gl = quad::gauss_legendre<kPoints>();
  vol_.resize(n);
  local_.resize(n);
  g0_.resize(n);
  g2_.resize(n);
  hi_.resize(n);
  tail_.resize(n);
  pts_.resize(std::size_t(n));
  wts_.resize(std::size_t(n));
  a_.resize(std::size_t(n));
  b_.resize(std::size_t(n));
  for (int c = 0; c < n; ++c) {
    const double lo = edges_[std::size_t(c)], hi = edges_[std::size_t(c) + 1];
    Eigen::VectorXd r, w;
    cell_rule(edges_, c, grade, r, w);
    vol_[c] = cell_mass(lo, hi);
    double loc = 0, g0 = 0, g2 = 0, h = 0;
    Eigen::VectorXd av(kPoints), bv(kPoints);
    for (int q = 0; q < kPoints; ++q) {
      const LocalState ls = state.at(r[q]);
      if (!(ls.gprime > 0)) throw NumericalError("DensityKernel: g' vanished inside the star");
      loc += w[q] * 4 * kPi * std::exp(ls.mu + ls.lambda) / ls.gprime * r[q] * r[q];
      const double H = std::exp(ls.mu + 3 * ls.lambda) * (2 * r[q] * ls.dmu + 1) / (r[q] * r[q]);
      const double m = cell_mass(lo, r[q]);
      g0 += w[q] * H * m;
      g2 += w[q] * H * m * m;
      h += w[q] * H;
      double sa = 0, sb = 0;
      for (int k = 0; k < kPoints; ++k) {
        const double s = gl.node(k, r[q], hi), ws = gl.weight(k, r[q], hi);
        const double Hs = kernel(s);
        sa += ws * Hs;
        sb += ws * Hs * cell_mass(lo, s);
      }
      av[q] = sa;
      bv[q] = sb;
    }
    local_[c] = loc;
    g0_[c] = g0;
    g2_[c] = g2;
    hi_[c] = c == 0 ? 0.0 : h;  // the first cell integral diverges; it always multiplies zero mass
    pts_[std::size_t(c)] = r;
    wts_[std::size_t(c)] = w;
    a_[std::size_t(c)] = av;
    b_[std::size_t(c)] = bv;
  }
  double acc = 0;
  for (int c = n - 1; c >= 0; --c) {
    tail_[c] = acc;
    acc += hi_[c];
  }
  exterior_ = 1 / (state.R - 2 * state.M);
}

double DensityKernel::coupling(int i, int j) const {
  if (i > j) std::swap(i, j);
  const double Mi = vol_[i], Mj = vol_[j];
  if (i < j) return -Mi * (g0_[j] + Mj * tail_[j]) - Mi * Mj * exterior_;
  return -(g2_[i] + Mi * Mi * tail_[i]) - Mi * Mi * exterior_;
}

double DensityKernel::coupling_by_column(int i, int j) const {
  const double Mj = vol_[j];
  const Eigen::VectorXd& r = pts_[std::size_t(i)];
  const Eigen::VectorXd& w = wts_[std::size_t(i)];
  double sum = 0;
  for (int q = 0; q < kPoints; ++q) {
    double inner;
    if (i < j)
      inner = g0_[j] + Mj * (tail_[j] + exterior_);
    else if (i == j)
      inner = b_[std::size_t(i)][q] + Mj * (tail_[j] + exterior_);
    else
      inner = Mj * (a_[std::size_t(i)][q] + tail_[i] + exterior_);
    sum += w[q] * 4 * kPi * r[q] * r[q] * inner;
  }
  return -sum;
}

double DensityKernel::tail_from(double r, int cell, double cum_mass, double rho_cell) const {
  const auto& gl = quad::gauss_legendre<kPoints>();
  const double lo = edges_[std::size_t(cell)], hi = edges_[std::size_t(cell) + 1];
  double sa = 0, sb = 0;
  for (int k = 0; k < kPoints; ++k) {
    const double s = gl.node(k, r, hi), ws = gl.weight(k, r, hi);
    const double Hs = kernel(s);
    sa += ws * Hs;
    sb += ws * Hs * cell_mass(lo, s);
  }
  return cum_mass * sa + rho_cell * sb;
}

double DensityKernel::potential_times_metric(const Eigen::VectorXd& rho, double r) const {
  const int n = cells();
  if (rho.size() != n) throw DomainError("potential_times_metric: density has the wrong size");
  if (!(r >= 0)) throw DomainError("potential_times_metric: negative radius");
  const double total = rho.dot(vol_);
  if (r >= state_->R) return -total / (r - 2 * state_->M);
  const int i = int(std::upper_bound(edges_.begin(), edges_.end(), r) - edges_.begin()) - 1;
  double cum = 0;
  for (int c = 0; c < i; ++c) cum += rho[c] * vol_[c];
  double sum = tail_from(r, i, cum, rho[i]);
  cum += rho[i] * vol_[i];
  for (int c = i + 1; c < n; ++c) {
    sum += cum * hi_[c] + rho[c] * g0_[c];
    cum += rho[c] * vol_[c];
  }
  return -(sum + total * exterior_);
}

std::vector<double> induced_potential(const SteadyState& state, const std::vector<double>& edges,
                                      const Eigen::VectorXd& rho_cells, const std::vector<double>& radii) {
  const DensityKernel kernel(state, edges);
  std::vector<double> out;
  out.reserve(radii.size());
  for (double r : radii) {
    const double v = kernel.potential_times_metric(rho_cells, r);
    if (r >= state.R) {
      out.push_back(v);
    } else {
      const LocalState ls = state.at(r);
      out.push_back(std::exp(-ls.mu - ls.lambda) * v);
    }
  }
  return out;
}

DensityForm assemble_L(const DensityKernel& kernel, double symmetry_tol) {
  const int n = kernel.cells();
  DensityForm f;
  f.edges = kernel.edges();
  f.Xgram = kernel.local();
  f.mean_vec = kernel.volumes();
  f.Lraw.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) f.Lraw(i, j) = kernel.coupling_by_column(i, j);
  f.Lraw.diagonal() += f.Xgram;
  f.asymmetry = scaled_asymmetry(f.Lraw, f.Xgram);
  if (f.asymmetry > symmetry_tol)
    throw NumericalError("assemble_L: relative asymmetry " + std::to_string(f.asymmetry) + " exceeds tolerance");
  f.Lmat = 0.5 * (f.Lraw + f.Lraw.transpose());
  return f;
}

DensityForm assemble_L(const SteadyState& state, const ModesConfig& cfg) {
  cfg.check();
  const DensityKernel kernel(state, density_cells(state, cfg.cells, cfg.clustering));
  return assemble_L(kernel, cfg.symmetry_tol);
}

int morse_index(const DensityForm& form) {
  const Eigen::VectorXd s = form.Xgram.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd A = s.asDiagonal() * form.Lmat * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("morse_index: eigensolver did not converge");
  return count_negative(es.eigenvalues());
}

ConstrainedSpectrum constrained_spectrum(const DensityForm& form) {
  const int n = int(form.Lmat.rows());
  if (n < 2) throw DomainError("constrained_spectrum: need at least two cells");
  // In Jacobi-scaled coordinates x = X^{1/2} rho the constraint reads u^T x = 0.
  const Eigen::VectorXd s = form.Xgram.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd A = s.asDiagonal() * form.Lmat * s.asDiagonal();
  const Eigen::VectorXd u = s.cwiseProduct(form.mean_vec);
  // Householder reflector P with P u parallel to e_0; its remaining
  // columns span the constraint space.
  Eigen::VectorXd v = u;
  v[0] += (u[0] >= 0 ? 1.0 : -1.0) * u.norm();
  const double beta = 2 / v.squaredNorm();
  const Eigen::RowVectorXd vtA = v.transpose() * A;
  A.noalias() -= beta * v * vtA;
  const Eigen::VectorXd Av = A * v;
  A.noalias() -= beta * Av * v.transpose();
  const Eigen::MatrixXd P = A.bottomRightCorner(n - 1, n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (P + P.transpose()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("constrained_spectrum: eigensolver did not converge");
  return {count_negative(es.eigenvalues()), es.eigenvalues()};
}

int constrained_morse_index(const DensityForm& form) { return constrained_spectrum(form).n_minus; }

ModeForm assemble_modes(const SteadyState& state, const DensityForm& form, VelocityWeight weight) {
  const std::vector<double>& edges = form.edges;
  const int n = int(edges.size()) - 1;
  const int m = n - 1;
  ModeForm mf;
  // zeta = r^2 W v is linear in V = r^3 / 3 on each cell, vanishing at both
  // ends; A v is then the cellwise constant -d zeta / dV.
  mf.Amap = Eigen::MatrixXd::Zero(n, m);
  std::vector<double> dV(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    const double a = edges[std::size_t(c)], b = edges[std::size_t(c) + 1];
    dV[std::size_t(c)] = (b * b * b - a * a * a) / 3;
  }
  // Basis function k sits at edge k + 1: rising on cell k, falling on k + 1.
  for (int k = 0; k < m; ++k) {
    mf.Amap(k, k) = -1 / dV[std::size_t(k)];
    mf.Amap(k + 1, k) = 1 / dV[std::size_t(k) + 1];
  }
  for (int k = 0; k < m; ++k) mf.node_r.push_back(edges[std::size_t(k) + 1]);
  for (double r : edges) mf.weight_profile.push_back(r >= state.R ? 0.0 : velocity_weight(state, state.at(r), weight));
  if (mf.weight_profile.back() != 0) throw DomainError("assemble_modes: velocity weight does not vanish at the surface");

  double defect = 0;
  for (int k = 0; k < m; ++k) {
    const Eigen::VectorXd col = mf.Amap.col(k).cwiseProduct(form.mean_vec);
    defect = std::max(defect, std::abs(col.sum()) / col.cwiseAbs().sum());
  }
  mf.range_defect = defect;

  const Eigen::MatrixXd Sraw = mf.Amap.transpose() * form.Lraw * mf.Amap;
  mf.Smode = mf.Amap.transpose() * form.Lmat * mf.Amap;
  mf.Smode = 0.5 * (mf.Smode + mf.Smode.transpose());

  // Gram of 4 pi int v^2 r^2 dr = 4 pi int zeta^2 / (r^2 W^2) dr.
  mf.Ygram = Eigen::MatrixXd::Zero(m, m);
  const double grade = surface_grade(state);
  Eigen::VectorXd r, w;
  for (int c = 0; c < n; ++c) {
    const double Va = edges[std::size_t(c)] * edges[std::size_t(c)] * edges[std::size_t(c)] / 3;
    cell_rule(edges, c, grade, r, w);
    double e00 = 0, e01 = 0, e11 = 0;
    for (int q = 0; q < r.size(); ++q) {
      const double W = velocity_weight(state, state.at(r[q]), weight);
      if (!(W > 0)) throw NumericalError("assemble_modes: velocity weight vanished inside the star");
      const double V = r[q] * r[q] * r[q] / 3;
      const double p1 = (V - Va) / dV[std::size_t(c)], p0 = 1 - p1;
      const double g = w[q] * 4 * kPi / (r[q] * r[q] * W * W);
      e00 += g * p0 * p0;
      e01 += g * p0 * p1;
      e11 += g * p1 * p1;
    }
    // Edge c carries basis c - 1, edge c + 1 carries basis c.
    const int k0 = c - 1, k1 = c;
    if (k0 >= 0) mf.Ygram(k0, k0) += e00;
    if (k1 < m) mf.Ygram(k1, k1) += e11;
    if (k0 >= 0 && k1 < m) {
      mf.Ygram(k0, k1) += e01;
      mf.Ygram(k1, k0) += e01;
    }
  }
  mf.asymmetry = scaled_asymmetry(Sraw, mf.Ygram.diagonal());
  return mf;
}

ModeReport unstable_modes(const SteadyState& state, const ModesConfig& cfg) {
  cfg.check();
  const DensityKernel kernel(state, density_cells(state, cfg.cells, cfg.clustering));
  const DensityForm form = assemble_L(kernel, cfg.symmetry_tol);
  ModeReport rep;
  rep.kappa = state.kappa;
  rep.weight = cfg.weight;
  rep.L_asymmetry = form.asymmetry;
  rep.n_minus_L = morse_index(form);
  const ConstrainedSpectrum cs = constrained_spectrum(form);
  rep.n_minus_constrained = cs.n_minus;
  rep.constrained_gap = cs.eigenvalues.cwiseAbs().minCoeff();

  const ModeForm mf = assemble_modes(state, form, cfg.weight);
  rep.S_asymmetry = mf.asymmetry;
  if (mf.asymmetry > cfg.symmetry_tol)
    throw NumericalError("unstable_modes: relative asymmetry " + std::to_string(mf.asymmetry) + " exceeds tolerance");
  rep.range_defect = mf.range_defect;
  const Eigen::VectorXd s = mf.Ygram.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd S = s.asDiagonal() * mf.Smode * s.asDiagonal();
  const Eigen::MatrixXd Y = s.asDiagonal() * mf.Ygram * s.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Y);
  if (es.info() != Eigen::Success) throw NumericalError("unstable_modes: generalized eigensolver failed");
  const Eigen::VectorXd& theta = es.eigenvalues();
  rep.n_u_direct = count_negative(theta);
  for (int i = 0; i < rep.n_u_direct; ++i) rep.growth_rates.push_back(std::sqrt(-theta[i]));
  const int shown = std::min<int>(cfg.report_eigenvalues, int(theta.size()));
  for (int i = 0; i < shown; ++i) rep.lowest.push_back(theta[i]);
  for (int i = 1; i < shown; ++i) rep.eigenvalue_gaps.push_back(theta[i] - theta[i - 1]);
  rep.lowest_mode = s.cwiseProduct(es.eigenvectors().col(0));
  rep.node_r = mf.node_r;
  rep.edges = form.edges;
  rep.Amap = mf.Amap;
  return rep;
}

std::string mode_profile_csv(const SteadyState& state, const ModeReport& report) {
  std::ostringstream out;
  out << "r,v,rho_of_v\n";
  const auto& e = report.edges;
  const int n = int(e.size()) - 1;
  if (n < 2 || report.lowest_mode.size() != n - 1) return out.str();
  const Eigen::VectorXd rho = report.Amap * report.lowest_mode;
  char buf[96];
  for (int c = 0; c < n; ++c) {
    const double a = e[std::size_t(c)], b = e[std::size_t(c) + 1];
    const double r = 0.5 * (a + b);
    const double Va = a * a * a / 3, Vb = b * b * b / 3, V = r * r * r / 3;
    const double z0 = c > 0 ? report.lowest_mode[c - 1] : 0.0;
    const double z1 = c + 1 < n ? report.lowest_mode[c] : 0.0;
    const double zeta = z0 + (z1 - z0) * (V - Va) / (Vb - Va);
    const double W = velocity_weight(state, state.at(r), report.weight);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r, zeta / (r * r * W), rho[c]);
    out << buf;
  }
  return out.str();
}

}  // namespace tpp
