#include "tpp/spectral.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "tpp/errors.hpp"
#include "tpp/quadrature.hpp"

namespace tpp {

namespace {

constexpr double kPi = std::numbers::pi;
using Tri = tridiag::SymmetricTridiagonal<double>;

}  // namespace

void SpectralConfig::check() const {
  if (elements < 64) throw ConfigError("spectral: elements must be >= 64");
  if (!(out_factor >= 10)) throw ConfigError("spectral: out_factor must be >= 10");
  if (!(exterior_share > 0 && exterior_share < 0.5)) throw ConfigError("spectral: exterior_share must be in (0, 0.5)");
  if (!(clustering >= 1)) throw ConfigError("spectral: clustering must be >= 1");
  if (eigenpairs < 1) throw ConfigError("spectral: eigenpairs must be >= 1");
}

std::vector<double> graded_nodes(double R, double core_scale, int cells, double clustering) {
  if (!(R > 0) || !(core_scale > 0)) throw DomainError("graded_nodes: radius and core scale must be positive");
  if (cells < 1 || !(clustering >= 1)) throw DomainError("graded_nodes: need cells >= 1 and clustering >= 1");
  const double log_norm = std::log1p(R / core_scale);
  auto monitor = [&](double r) {
    const double x = r / R;
    return (std::log1p(r / core_scale) / log_norm + x + 1 - std::pow(1 - x, 1 / clustering)) / 3;
  };
  std::vector<double> nodes;
  nodes.reserve(std::size_t(cells) + 1);
  nodes.push_back(0);
  for (int j = 1; j < cells; ++j) {
    const double target = double(j) / cells;
    double lo = nodes.back(), hi = R;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * R; ++it) {
      const double mid = 0.5 * (lo + hi);
      (monitor(mid) < target ? lo : hi) = mid;
    }
    nodes.push_back(0.5 * (lo + hi));
  }
  nodes.push_back(R);
  return nodes;
}

RadialMesh build_mesh(double R, double core_scale, const SpectralConfig& cfg) {
  cfg.check();
  if (!(R > 0) || !(core_scale > 0)) throw DomainError("build_mesh: radius and core scale must be positive");
  RadialMesh mesh;
  mesh.R = R;
  mesh.R_out = cfg.out_factor * R;
  mesh.clustering = cfg.clustering;
  const int ne = std::max(8, int(std::lround(cfg.elements * cfg.exterior_share)));
  const int ni = cfg.elements - ne;
  mesh.interior_elements = ni;
  mesh.nodes = graded_nodes(R, core_scale, ni, cfg.clustering);
  for (int j = 1; j < ne; ++j) mesh.nodes.push_back(R * std::pow(cfg.out_factor, double(j) / ne));
  mesh.nodes.push_back(mesh.R_out);
  for (std::size_t i = 1; i < mesh.nodes.size(); ++i)
    if (!(mesh.nodes[i] > mesh.nodes[i - 1])) throw NumericalError("build_mesh: nodes not strictly increasing");
  return mesh;
}

SigmaCoefficients relativistic_coefficients(const SteadyState& state) {
  SigmaCoefficients c;
  c.R = state.R;
  c.kappa = state.kappa;
  c.core_scale = state.profile().core_scale;
  const double M = state.M;
  const SteadyState* st = &state;
  c.at = [st, M](double r) -> SigmaPoint {
    if (r >= st->R) return {(r - 2 * M) * (r - 2 * M), 0.0, 0.0, 0.0};
    const LocalState s = st->at(r);
    const double lift = 2 * r * s.dmu + 1;
    if (!(lift >= 1 - 1e-12))
      throw InvariantViolation("reduced form: 2 r mu' + 1 < 1 at r=" + std::to_string(r) + " (profile corrupted)");
    const double nu = s.mu + s.lambda;
    return {std::exp(-s.mu - 3 * s.lambda) * r * r / lift, 4 * kPi * std::exp(-nu) * s.gprime * r * r, nu,
            s.dmu + s.dlambda};
  };
  c.robin_stiffness = [M](double r_out) { return r_out - 2 * M; };
  c.robin_gram = [](double r_out) { return r_out; };
  return c;
}

SigmaCoefficients newtonian_coefficients(const LaneEmdenState& le) {
  SigmaCoefficients c;
  c.R = le.S0;
  c.kappa = 0;
  c.core_scale = le.profile.core_scale;
  const LaneEmdenState* p = &le;
  c.at = [p](double r) -> SigmaPoint {
    const double q = r < p->S0 ? 4 * kPi * p->dg0(p->y(r)) * r * r : 0.0;
    return {r * r, q, 0.0, 0.0};
  };
  c.robin_stiffness = [](double r_out) { return r_out; };
  c.robin_gram = [](double r_out) { return r_out; };
  return c;
}

FormPair assemble_sigma(const SigmaCoefficients& coeffs, const RadialMesh& mesh) {
  if (std::abs(mesh.R - coeffs.R) > 1e-12 * coeffs.R || mesh.nodes.at(std::size_t(mesh.interior_elements)) != mesh.R)
    throw DomainError("assemble_sigma: mesh was not built for this state");
  const int n = mesh.elements() + 1;
  FormPair out{Tri(n), Tri(n), mesh, coeffs.kappa};
  const auto& g2 = quad::gauss_legendre<2>();
  const auto& g4 = quad::gauss_legendre<4>();
  for (int e = 0; e + 1 < n; ++e) {
    const double a = mesh.nodes[std::size_t(e)], b = mesh.nodes[std::size_t(e) + 1], h = b - a;
    const bool touches_surface = e == mesh.interior_elements - 1 || e == mesh.interior_elements;
    const auto& rule = touches_surface ? g4 : g2;
    double s00 = 0, s01 = 0, s11 = 0, b00 = 0, b01 = 0, b11 = 0;
    for (int q = 0; q < rule.size(); ++q) {
      const double r = rule.node(q, a, b), w = rule.weight(q, a, b);
      const SigmaPoint c = coeffs.at(r);
      if (!(c.c > 0)) throw InvariantViolation("reduced form: non-positive principal coefficient at r=" + std::to_string(r));
      const double p0 = (b - r) / h, p1 = (r - a) / h;
      const double d0 = -1 / h, d1 = 1 / h;
      s00 += w * (c.c * d0 * d0 - c.q * p0 * p0);
      s01 += w * (c.c * d0 * d1 - c.q * p0 * p1);
      s11 += w * (c.c * d1 * d1 - c.q * p1 * p1);
      const double wt = std::exp(-2 * c.nu) * r * r;
      const double t0 = d0 - c.dnu * p0, t1 = d1 - c.dnu * p1;
      b00 += w * wt * t0 * t0;
      b01 += w * wt * t0 * t1;
      b11 += w * wt * t1 * t1;
    }
    out.S.diag[e] += s00;
    out.S.diag[e + 1] += s11;
    out.S.off[e] += s01;
    out.B.diag[e] += b00;
    out.B.diag[e + 1] += b11;
    out.B.off[e] += b01;
  }
  out.mesh.robin_coeff = coeffs.robin_stiffness(mesh.R_out);
  out.S.diag[n - 1] += out.mesh.robin_coeff;
  out.B.diag[n - 1] += coeffs.robin_gram(mesh.R_out);
  return out;
}

double sigma_quadratic_form(const SigmaCoefficients& coeffs, const RadialMesh& mesh, const Eigen::VectorXd& w,
                            int points_per_cell) {
  const quad::GaussLegendre<double> rule(points_per_cell);
  double total = 0;
  for (int e = 0; e < mesh.elements(); ++e) {
    const double a = mesh.nodes[std::size_t(e)], b = mesh.nodes[std::size_t(e) + 1];
    const double slope = (w[e + 1] - w[e]) / (b - a);
    for (int q = 0; q < rule.size(); ++q) {
      const double r = rule.node(q, a, b);
      const double val = w[e] + slope * (r - a);
      const SigmaPoint c = coeffs.at(r);
      total += rule.weight(q, a, b) * (c.c * slope * slope - c.q * val * val);
    }
  }
  const double wn = w[w.size() - 1];
  return total + coeffs.robin_stiffness(mesh.R_out) * wn * wn;
}

int morse_index(const FormPair& pair) { return tridiag::count_below(pair.S, pair.B, 0.0); }

KernelGap kernel_gap(const FormPair& pair) {
  const int n = morse_index(pair);
  const int size = int(pair.S.size());
  KernelGap out;
  double best = std::numeric_limits<double>::infinity();
  for (int k : {n - 1, n}) {
    if (k < 0 || k >= size) continue;
    const double th = tridiag::eigenvalue(pair.S, pair.B, k);
    if (std::abs(th) < best) {
      best = std::abs(th);
      out.theta = th;
    }
  }
  out.gap = best;
  const auto ep = tridiag::inverse_iteration(pair.S, pair.B, out.theta);
  out.vector = ep.vector;
  out.residual = ep.residual;
  out.confident = ep.residual < 1e-8;
  return out;
}

SpectralReport analyze_sigma(const SigmaCoefficients& coeffs, const SpectralConfig& cfg) {
  SpectralReport rep;
  const RadialMesh mesh = build_mesh(coeffs.R, coeffs.core_scale, cfg);
  const FormPair pair = assemble_sigma(coeffs, mesh);
  rep.elements = mesh.elements();
  rep.n_minus = morse_index(pair);
  rep.kernel = kernel_gap(pair);
  const int count = std::min<int>(std::max(cfg.eigenpairs, rep.n_minus), int(pair.S.size()));
  for (int k = 0; k < count; ++k) {
    const double th = tridiag::eigenvalue(pair.S, pair.B, k);
    const auto ep = tridiag::inverse_iteration(pair.S, pair.B, th);
    rep.lowest.push_back(th);
    rep.lowest_vectors.push_back(ep.vector);
    if (th < 0 && !(pair.S.quadratic_form(ep.vector) < 0)) rep.rayleigh_certified = false;
  }
  if (cfg.refine_check) {
    SpectralConfig fine = cfg;
    fine.elements *= 2;
    const FormPair p2 = assemble_sigma(coeffs, build_mesh(coeffs.R, coeffs.core_scale, fine));
    rep.n_minus_refined = morse_index(p2);
    rep.kernel_gap_refined = kernel_gap(p2).gap;
    rep.converged = rep.n_minus_refined == rep.n_minus;
  } else {
    rep.converged = true;
  }
  return rep;
}

NullResidual null_direction_residual(const EquationOfState& eos, double kappa, double delta, const SpectralConfig& cfg,
                                     const SolverConfig& solver) {
  if (!(delta > 0) || !(delta < kappa)) throw DomainError("null_direction_residual: need 0 < delta < kappa");
  const SteadyState st = solve_steady_state(eos, kappa, solver);
  const SteadyState plus = solve_steady_state(eos, kappa + delta, solver);
  const SteadyState minus = solve_steady_state(eos, kappa - delta, solver);
  const SigmaCoefficients coeffs = relativistic_coefficients(st);
  const RadialMesh mesh = build_mesh(st.R, st.profile().core_scale, cfg);
  const FormPair pair = assemble_sigma(coeffs, mesh);
  const Eigen::Index n = pair.S.size();
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = mesh.nodes[std::size_t(i)];
    const double v = (plus.at(r).y - minus.at(r).y) / (2 * delta);
    w[i] = std::exp(coeffs.at(r).nu) * v;
  }
  const Eigen::VectorXd sw = pair.S.apply(w);
  const Eigen::VectorXd interior = sw.head(n - 1);
  const double dual = std::sqrt(tridiag::inverse_norm_sq(pair.B.leading(n - 1), interior));
  NullResidual out;
  out.residual = dual / std::sqrt(pair.B.quadratic_form(w));
  out.center_value = w[0] * std::exp(-coeffs.at(0.0).nu);
  out.boundary_component = sw[n - 1];
  return out;
}

std::string dump_triplets(const FormPair& pair) {
  std::ostringstream os;
  char buf[96];
  auto emit = [&](const Tri& t, const char* name) {
    os << "# " << name << "\n";
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", long(i), long(i), t.diag[i]);
      os << buf;
      if (i + 1 < t.size()) {
        std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", long(i), long(i + 1), t.off[i]);
        os << buf;
      }
    }
  };
  emit(pair.S, "S");
  emit(pair.B, "B");
  return os.str();
}

}  // namespace tpp
