#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "tpp/errors.hpp"
#include "tpp/spectral.hpp"

using namespace tpp;

namespace {

// Radial square well of strength K on the unit ball: bound s-states of
// -Laplace - K^2 chi are counted by the number of n with (n - 1/2) pi < K.
SigmaCoefficients square_well(double K) {
  SigmaCoefficients c;
  c.R = 1;
  c.core_scale = 0.2;
  c.at = [K](double r) -> SigmaPoint { return {r * r, r < 1 ? K * K * r * r : 0.0, 0.0, 0.0}; };
  c.robin_stiffness = [](double r_out) { return r_out; };
  c.robin_gram = [](double r_out) { return r_out; };
  return c;
}

int expected_bound_states(double K) { return int(std::floor(K / std::numbers::pi + 0.5)); }

}  // namespace

TEST_CASE("config validation") {
  SpectralConfig c;
  c.elements = 32;
  CHECK_THROWS_AS(c.check(), ConfigError);
  c = {};
  c.out_factor = 5;
  CHECK_THROWS_AS(c.check(), ConfigError);
  CHECK_NOTHROW(SpectralConfig{}.check());
}

TEST_CASE("mesh layout") {
  SpectralConfig cfg;
  const RadialMesh m = build_mesh(2.0, 0.3, cfg);
  CHECK(m.elements() == cfg.elements);
  CHECK(m.nodes.front() == 0);
  CHECK(m.nodes[std::size_t(m.interior_elements)] == 2.0);
  CHECK(m.nodes.back() == doctest::Approx(50.0).epsilon(1e-14));
  // Surface grading: the last interior cell is narrower than the average.
  const double last = m.nodes[std::size_t(m.interior_elements)] - m.nodes[std::size_t(m.interior_elements) - 1];
  CHECK(last < 2.0 / m.interior_elements);
}

TEST_CASE("square-well bound-state counts") {
  SpectralConfig cfg;
  for (double K : {1.0, 2.5, 5.0, 9.0, 12.0}) {
    const auto rep = analyze_sigma(square_well(K), cfg);
    CHECK(rep.n_minus == expected_bound_states(K));
    CHECK(rep.converged);
    CHECK(rep.rayleigh_certified);
  }
}

TEST_CASE("Lane-Emden reduced form has exactly one negative direction") {
  SpectralConfig cfg;
  for (double g : {1.5, 5.0 / 3.0, 1.9}) {
    const LaneEmdenState le = solve_lane_emden(g, 1.0);
    const auto rep = analyze_sigma(newtonian_coefficients(le), cfg);
    CHECK(rep.n_minus == 1);
    CHECK(rep.n_minus_refined == 1);
    CHECK(rep.kernel.gap > 0.1);
    CHECK(rep.lowest[0] < 0);
  }
}

TEST_CASE("inertia is invariant under positive diagonal rescaling") {
  const auto eos = EquationOfState::hybrid_causal(1, 5.0 / 3.0);
  SpectralConfig cfg;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  for (double kappa : {0.2, 1.5, 3.6}) {
    const SteadyState st = solve_steady_state(eos, kappa);
    const auto coeffs = relativistic_coefficients(st);
    const FormPair pair = assemble_sigma(coeffs, build_mesh(st.R, st.profile().core_scale, cfg));
    Eigen::VectorXd d(pair.S.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = std::pow(10.0, u(rng));
    FormPair scaled = pair;
    scaled.S = pair.S.scaled(d);
    scaled.B = pair.B.scaled(d);
    CHECK(morse_index(scaled) == morse_index(pair));
  }
}

TEST_CASE("assembled form agrees with direct quadrature") {
  const auto eos = EquationOfState::hybrid_causal(1, 5.0 / 3.0);
  const SteadyState st = solve_steady_state(eos, 0.5);
  const auto coeffs = relativistic_coefficients(st);
  SpectralConfig cfg;
  const FormPair pair = assemble_sigma(coeffs, build_mesh(st.R, st.profile().core_scale, cfg));
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    // Smooth random profile so the comparison probes the coefficients.
    const double a = nd(rng), b = nd(rng), c = nd(rng);
    Eigen::VectorXd w(pair.S.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double x = pair.mesh.nodes[std::size_t(i)] / st.R;
      w[i] = (1 + a * x + b * std::sin(3 * x)) / (1 + x * x) + c * std::exp(-x);
    }
    const double assembled = pair.S.quadratic_form(w);
    const double direct = sigma_quadratic_form(coeffs, pair.mesh, w);
    CHECK(std::abs(assembled - direct) <= 1e-6 * (std::abs(direct) + pair.mesh.robin_coeff * w.squaredNorm() / w.size()));
  }
}

TEST_CASE("outer radius does not change the count") {
  const auto eos = EquationOfState::hybrid_causal(1, 5.0 / 3.0);
  for (double kappa : {0.1, 2.0}) {
    const SteadyState st = solve_steady_state(eos, kappa);
    SpectralConfig a, b;
    b.out_factor = 50;
    const auto ra = analyze_sigma(relativistic_coefficients(st), a);
    const auto rb = analyze_sigma(relativistic_coefficients(st), b);
    CHECK(ra.n_minus == rb.n_minus);
  }
}

TEST_CASE("null direction residual shrinks under refinement") {
  const auto eos = EquationOfState::hybrid_causal(1, 5.0 / 3.0);
  for (double kappa : {0.3, 1.0}) {
    double prev = 1;
    for (double f : {1.0, 2.0, 4.0}) {
      SpectralConfig cfg;
      cfg.elements = int(256 * f);
      const auto nr = null_direction_residual(eos, kappa, 1e-2 * kappa / f, cfg);
      CHECK(nr.residual < 0.5 * prev);
      CHECK(nr.center_value == doctest::Approx(1).epsilon(1e-6));
      prev = nr.residual;
    }
    CHECK(prev < 1e-4);
  }
  CHECK_THROWS_AS(null_direction_residual(eos, 0.1, 0.2, SpectralConfig{}), DomainError);
}

TEST_CASE("triplet dump") {
  const auto rep = assemble_sigma(square_well(2.0), build_mesh(1.0, 0.2, SpectralConfig{}));
  const std::string s = dump_triplets(rep);
  std::istringstream in(s);
  std::string line;
  int lines = 0, headers = 0;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      ++headers;
      continue;
    }
    long i, j;
    double v;
    std::istringstream ls(line);
    const bool parsed = bool(ls >> i >> j >> v);
    REQUIRE(parsed);
    CHECK(j >= i);
    ++lines;
  }
  CHECK(headers == 2);
  CHECK(lines == 2 * (2 * int(rep.S.size()) - 1));
}
