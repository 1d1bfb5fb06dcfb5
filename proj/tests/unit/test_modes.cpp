#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "tpp/errors.hpp"
#include "tpp/modes.hpp"
#include "tpp/quadrature.hpp"
#include "tpp/spectral.hpp"

using namespace tpp;

namespace {

const EquationOfState& eos() {
  static const EquationOfState e = EquationOfState::hybrid_causal(1, 5.0 / 3.0);
  return e;
}

Eigen::VectorXd cell_average(const SteadyState& s, const std::vector<double>& edges) {
  const auto& gl = quad::gauss_legendre<16>();
  Eigen::VectorXd v(Eigen::Index(edges.size()) - 1);
  for (Eigen::Index c = 0; c < v.size(); ++c) {
    double num = 0, den = 0;
    for (int q = 0; q < gl.size(); ++q) {
      const double r = gl.node(q, edges[std::size_t(c)], edges[std::size_t(c) + 1]);
      const double w = gl.weight(q, edges[std::size_t(c)], edges[std::size_t(c) + 1]);
      num += w * (r < s.R ? s.at(r).rho : 0.0) * r * r;
      den += w * r * r;
    }
    v[c] = num / den;
  }
  return v;
}

}  // namespace

TEST_CASE("config checks") {
  ModesConfig c;
  c.nodes = c.cells + 1;
  CHECK_THROWS_AS(c.check(), ConfigError);
  const auto soft = EquationOfState::polytrope(1, 1.45);
  const SteadyState st = solve_steady_state(soft, 0.05);
  CHECK_THROWS_AS(unstable_modes(st, {}), DomainError);
}

TEST_CASE("induced potential: linearity and exterior behaviour") {
  const SteadyState st = solve_steady_state(eos(), 0.4);
  const auto edges = density_cells(st, 64, 2.0);
  const Eigen::Index n = Eigen::Index(edges.size()) - 1;
  const std::vector<double> radii{0.0, 0.3 * st.R, 0.9 * st.R, st.R, 2 * st.R};

  for (double v : induced_potential(st, edges, Eigen::VectorXd::Zero(n), radii)) CHECK(v == 0);

  // A mean-zero density leaves no exterior potential.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::VectorXd rho(n);
  for (Eigen::Index i = 0; i < n; ++i) rho[i] = nd(rng);
  const DensityKernel k(st, edges);
  rho.array() -= rho.dot(k.volumes()) / k.volumes().sum();
  const auto mu = induced_potential(st, edges, rho, radii);
  CHECK(std::abs(mu[3]) < 1e-12 * std::abs(mu[1]));
  CHECK(std::abs(mu[4]) < 1e-12 * std::abs(mu[1]));

  // A positive density gives the exterior value -M_rho / (r - 2M).
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
  const auto m1 = induced_potential(st, edges, one, radii);
  const double mass = k.volumes().sum();
  CHECK(m1[4] == doctest::Approx(-mass / (2 * st.R - 2 * st.M)).epsilon(1e-14));
  CHECK(m1[0] < m1[1]);
  CHECK(m1[1] < m1[2]);
}

TEST_CASE("induced potential solves the weak field equation of the reduced form") {
  // -int c w' phi' dr = 4 pi int r^2 rho phi dr with w = e^{mu+lambda} mubar,
  // c the principal coefficient of the reduced form.
  const SteadyState st = solve_steady_state(eos(), 0.8);
  const auto coeffs = relativistic_coefficients(st);
  const auto edges = density_cells(st, 48, 2.0);
  const Eigen::Index n = Eigen::Index(edges.size()) - 1;
  const DensityKernel k(st, edges);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(-1, 1);
  Eigen::VectorXd rho(n);
  for (Eigen::Index i = 0; i < n; ++i) rho[i] = ud(rng);
  const double R = st.R;
  auto phi = [R](double r) { return std::pow(std::sin(std::numbers::pi * r / R), 2); };
  auto dphi = [R](double r) {
    const double a = std::numbers::pi / R;
    return 2 * a * std::sin(a * r) * std::cos(a * r);
  };
  const auto& gl = quad::gauss_legendre<10>();
  double lhs = 0, rhs = 0;
  for (Eigen::Index c = 0; c < n; ++c) {
    const double a = edges[std::size_t(c)], b = edges[std::size_t(c) + 1];
    for (int q = 0; q < gl.size(); ++q) {
      const double r = gl.node(q, a, b), w = gl.weight(q, a, b);
      const double h = 1e-5 * (b - a);
      const double dw = (k.potential_times_metric(rho, r + h) - k.potential_times_metric(rho, r - h)) / (2 * h);
      lhs -= w * coeffs.at(r).c * dw * dphi(r);
      rhs += w * 4 * std::numbers::pi * r * r * rho[c] * phi(r);
    }
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
}

TEST_CASE("column assembly agrees with the symmetric closed form") {
  const SteadyState st = solve_steady_state(eos(), 2.0);
  const DensityKernel k(st, density_cells(st, 60, 2.0));
  double worst = 0;
  for (int i = 0; i < k.cells(); ++i)
    for (int j = 0; j < k.cells(); ++j) {
      const double a = k.coupling(i, j), b = k.coupling_by_column(i, j);
      worst = std::max(worst, std::abs(a - b) / std::sqrt(k.local()[i] * k.local()[j]));
    }
  CHECK(worst < 1e-8);
  const DensityForm f = assemble_L(k);
  CHECK(f.asymmetry < 1e-8);
  CHECK((f.Lmat - f.Lmat.transpose()).cwiseAbs().maxCoeff() == 0);
  CHECK((f.Xgram.array() > 0).all());
}

TEST_CASE("density form inertia equals the reduced-operator index") {
  ModesConfig mc;
  mc.cells = mc.nodes = 200;
  SpectralConfig sc;
  sc.refine_check = false;
  for (double kappa : {0.05, 1.0, 1.6, 3.6}) {
    const SteadyState st = solve_steady_state(eos(), kappa);
    const DensityForm f = assemble_L(st, mc);
    const auto rep = analyze_sigma(relativistic_coefficients(st), sc);
    CHECK(morse_index(f) == rep.n_minus);
  }
}

TEST_CASE("derivative of the family: L applied to d rho / d kappa") {
  for (double kappa : {0.3, 2.0}) {
    const double d = 1e-3 * kappa;
    const SteadyState st = solve_steady_state(eos(), kappa);
    const SteadyState sp = solve_steady_state(eos(), kappa + d);
    const SteadyState sm = solve_steady_state(eos(), kappa - d);
    const auto edges = density_cells(st, 400, 2.0);
    const DensityForm f = assemble_L(DensityKernel(st, edges));
    const Eigen::VectorXd drho = (cell_average(sp, edges) - cell_average(sm, edges)) / (2 * d);
    const Eigen::VectorXd Ld = f.Lmat * drho;
    const double dmuR = (sp.mu_R - sm.mu_R) / (2 * d);
    // Constant on the support, apart from the cell the surface moves through.
    for (Eigen::Index i = 0; i + 1 < Ld.size(); i += 13)
      CHECK(Ld[i] / f.mean_vec[i] == doctest::Approx(dmuR).epsilon(1e-3));
    const double dM = (sp.M - sm.M) / (2 * d);
    const double dMR = (sp.M / sp.R - sm.M / sm.R) / (2 * d);
    const double key = -dMR * dM / (1 - 2 * st.M / st.R);
    CHECK(drho.dot(Ld) == doctest::Approx(key).epsilon(2e-3));
  }
}

TEST_CASE("direct mode count matches the constrained index") {
  ModesConfig mc;
  mc.cells = mc.nodes = 200;
  const std::vector<std::pair<double, int>> expected{{0.05, 0}, {0.3, 0}, {1.0, 1}, {2.0, 1}, {3.6, 2}};
  for (const auto& [kappa, nu] : expected) {
    const SteadyState st = solve_steady_state(eos(), kappa);
    const ModeReport rep = unstable_modes(st, mc);
    CHECK(rep.n_u_direct == nu);
    CHECK(rep.n_minus_constrained == nu);
    CHECK(int(rep.growth_rates.size()) == nu);
    CHECK(rep.range_defect < 1e-12);
    CHECK(rep.L_asymmetry < 1e-8);
    CHECK(rep.S_asymmetry < 1e-8);
    if (nu == 0) CHECK(rep.lowest[0] > 0);
  }
}

TEST_CASE("growth rates converge and the weight switch keeps the count") {
  const SteadyState st = solve_steady_state(eos(), 2.0);
  ModesConfig a, b;
  a.cells = a.nodes = 200;
  b.cells = b.nodes = 400;
  const ModeReport ra = unstable_modes(st, a), rb = unstable_modes(st, b);
  REQUIRE(ra.n_u_direct == 1);
  REQUIRE(rb.n_u_direct == 1);
  CHECK(std::abs(ra.growth_rates[0] / rb.growth_rates[0] - 1) < 1e-2);
  b.weight = VelocityWeight::Enthalpy;
  const ModeReport re = unstable_modes(st, b);
  CHECK(re.n_u_direct == rb.n_u_direct);
  CHECK(re.growth_rates[0] > 0);
}

TEST_CASE("mode profile export") {
  const SteadyState st = solve_steady_state(eos(), 1.0);
  ModesConfig mc;
  mc.cells = mc.nodes = 64;
  const ModeReport rep = unstable_modes(st, mc);
  std::istringstream in(mode_profile_csv(st, rep));
  std::string line;
  std::getline(in, line);
  CHECK(line == "r,v,rho_of_v");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 64);
}
