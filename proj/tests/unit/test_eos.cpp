#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tpp/eos.hpp"
#include "tpp/errors.hpp"

using namespace tpp;

namespace {

double closed_form_q(double k, double gamma, double rho) {
  return gamma / (gamma - 1) * std::log1p(k * std::pow(rho, gamma - 1));
}

}  // namespace

TEST_CASE("polytrope pressure and sound speed") {
  const auto e = EquationOfState::polytrope(1, 1.5);
  CHECK(e.pressure(4) == doctest::Approx(8).epsilon(1e-15));
  CHECK(e.sound_speed_sq(4) == doctest::Approx(3).epsilon(1e-15));
  CHECK(e.pressure(0) == 0);
  CHECK_THROWS_AS(e.pressure(-1), DomainError);
  CHECK_THROWS_AS(e.pressure(2e3), DomainError);
  CHECK_THROWS_AS(e.sound_speed_sq(0), DomainError);
}

TEST_CASE("hybrid matches C1 at the transition") {
  const auto e = EquationOfState::hybrid(0.1, 5.0 / 3.0, 1.0, 1e3);
  const double below = 0.1 * std::pow(1.0 - 1e-12, 5.0 / 3.0);
  CHECK(e.pressure(1.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(std::abs(e.pressure(1.0 + 1e-12) - below) < 1e-12);
  const double cs2 = 0.1 * 5.0 / 3.0;
  CHECK(e.cs2_high() == doctest::Approx(cs2).epsilon(1e-15));
  CHECK(e.sound_speed_sq(2.0) == doctest::Approx(cs2).epsilon(1e-15));
  CHECK(e.sound_speed_sq(50.0) == doctest::Approx(cs2).epsilon(1e-15));
  CHECK(e.sound_speed_sq(1.0 - 1e-9) == doctest::Approx(cs2).epsilon(1e-8));
}

TEST_CASE("hybrid rejects superluminal linear branch") {
  CHECK_THROWS_AS(EquationOfState::hybrid(1, 5.0 / 3.0, 10.0), DomainError);
  const auto c = EquationOfState::hybrid_causal(1, 5.0 / 3.0);
  CHECK(c.cs2_high() == doctest::Approx(1).epsilon(1e-12));
  CHECK(c.rho_t() == doctest::Approx(std::pow(0.6, 1.5)).epsilon(1e-14));
}

TEST_CASE("tabulated two-point table") {
  const auto e = EquationOfState::tabulated({{1, 0.5}, {2, 1.0}});
  CHECK(e.sound_speed_sq(1.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(e.pressure(1.5) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(e.rho_cap() == 2);
  CHECK_FALSE(e.has_enthalpy());
  CHECK_THROWS_AS(e.enthalpy(1.0), DomainError);
  CHECK_THROWS_AS(EquationOfState::tabulated({{1, 0.5}, {1, 0.6}}), DomainError);
  CHECK_THROWS_AS(EquationOfState::tabulated({{1, 0.5}, {2, 0.4}}), DomainError);
}

TEST_CASE("tabulated table reproduces a polytrope and reads from file") {
  const double k = 1, gamma = 5.0 / 3.0;
  std::vector<EosSample> t;
  for (int i = 0; i <= 80; ++i) {
    const double rho = std::pow(10.0, -8 + 0.1 * i);
    t.push_back({rho, k * std::pow(rho, gamma)});
  }
  const auto e = EquationOfState::tabulated(t);
  CHECK(e.gamma() == doctest::Approx(gamma).epsilon(1e-12));
  for (double rho : {1e-9, 3e-5, 0.2, 0.7}) {
    CHECK(e.pressure(rho) == doctest::Approx(k * std::pow(rho, gamma)).epsilon(1e-10));
    CHECK(e.enthalpy(rho) == doctest::Approx(closed_form_q(k, gamma, rho)).epsilon(1e-9));
  }

  const auto path = std::filesystem::temp_directory_path() / "tpp_eos_table.txt";
  {
    std::ofstream out(path);
    out << "# rho pressure\n";
    for (const auto& s : t) out << s.rho << " " << s.p << "\n";
  }
  const auto f = EquationOfState::from_file(path);
  CHECK(f.table().size() == t.size());
  CHECK(f.pressure(0.5) == doctest::Approx(e.pressure(0.5)).epsilon(1e-5));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(EquationOfState::from_file("/nonexistent/table.txt"), ConfigError);
}

TEST_CASE("enthalpy agrees with the closed form for a polytrope") {
  const auto e = EquationOfState::polytrope(1, 1.5);
  CHECK(e.enthalpy(4) == doctest::Approx(3 * std::log(3.0)).epsilon(1e-13));
  CHECK(e.enthalpy(0) == 0);
  double prev = 0;
  for (int i = 0; i <= 60; ++i) {
    const double rho = std::pow(10.0, -12 + 0.25 * i);
    if (rho > e.rho_cap()) break;
    const double q = e.enthalpy(rho);
    CHECK(q == doctest::Approx(closed_form_q(1, 1.5, rho)).epsilon(1e-12));
    CHECK(q > prev);
    prev = q;
  }
}

TEST_CASE("inverse enthalpy and its derivative") {
  const auto e = EquationOfState::polytrope(1, 1.5);
  CHECK(e.density_of_enthalpy(-1) == 0);
  CHECK(e.density_of_enthalpy(0) == 0);
  const double y = 3 * std::log(3.0);
  CHECK(e.density_of_enthalpy(y) == doctest::Approx(4).epsilon(1e-13));
  CHECK(e.dg_dy(y) == doctest::Approx(4).epsilon(1e-12));
  CHECK_THROWS_AS(e.density_of_enthalpy(e.max_enthalpy() * 1.01), DomainError);

  // g' -> 0 at the surface: rho / P' ~ rho^{2-gamma} / (k gamma).
  CHECK(e.dg_dy(1e-12) < 1e-5);
  CHECK(e.dg_dy(1e-12) < e.dg_dy(1e-8));

  for (const auto& eos : {EquationOfState::polytrope(1, 5.0 / 3.0), EquationOfState::hybrid_causal(1, 5.0 / 3.0)}) {
    for (int i = 0; i <= 40; ++i) {
      const double rho = std::pow(10.0, -10 + 0.35 * i);
      if (rho > eos.rho_cap()) break;
      CHECK(std::abs(eos.density_of_enthalpy(eos.enthalpy(rho)) - rho) <= 1e-12 * (1 + rho));
    }
    for (double yy : {1e-6, 1e-3, 0.05, 0.7, 1.3, 3.0}) {
      const double h = 1e-5 * yy;
      const double fd = (eos.density_of_enthalpy(yy + h) - eos.density_of_enthalpy(yy - h)) / (2 * h);
      CHECK(eos.dg_dy(yy) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("hybrid enthalpy on the linear branch") {
  const double k = 1, gamma = 5.0 / 3.0;
  const auto e = EquationOfState::hybrid_causal(k, gamma);
  const double rt = e.rho_t(), pt = k * std::pow(rt, gamma);
  const double qt = closed_form_q(k, gamma, rt);
  // With unit sound speed the linear branch integrates to a logarithm.
  for (double rho : {1.0, 10.0, 1e4, 1e9}) {
    const double exact = qt + 0.5 * std::log((2 * rho - rt + pt) / (rt + pt));
    CHECK(e.enthalpy(rho) == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("baryon density") {
  const auto e = EquationOfState::polytrope(1, 5.0 / 3.0);
  CHECK(e.baryon_density(1.0) == doctest::Approx(1).epsilon(1e-14));
  CHECK(e.baryon_density(0.0) == 0);
  // n(rho)/rho tends to exp(int_0^1 P/(s(s+P)) ds); for a polytrope the
  // integral is alpha ln(1 + k) in u = rho^{gamma-1}.
  const double limit = std::exp(1.5 * std::log(2.0));
  CHECK(e.baryon_density(1e-12) / 1e-12 == doctest::Approx(limit).epsilon(1e-6));
  double prev = 0;
  for (int i = 0; i <= 50; ++i) {
    const double rho = std::pow(10.0, -10 + 0.25 * i);
    const double n = e.baryon_density(rho);
    CHECK(n > prev);
    prev = n;
  }
}

TEST_CASE("validation flags") {
  SampleSpec spec{1e-8, 1e3, 400};
  const auto poly = EquationOfState::polytrope(1, 5.0 / 3.0).validate(spec);
  CHECK(poly.p1_ok);
  CHECK(poly.p2_ok);
  CHECK_FALSE(poly.p3_ok);
  CHECK_FALSE(poly.p4_ok);
  REQUIRE(poly.has_p4_violation);
  const double exact = std::pow(0.6, 1.5);
  const double ratio = std::pow(1e11, 1.0 / 399);
  CHECK(poly.p4_violation_density >= exact);
  CHECK(poly.p4_violation_density <= exact * ratio);

  const auto hyb = EquationOfState::hybrid_causal(1, 5.0 / 3.0).validate(spec);
  CHECK(hyb.p1_ok);
  CHECK(hyb.p2_ok);
  CHECK(hyb.p3_ok);
  CHECK(hyb.p4_ok);
  CHECK(hyb.fitted_gamma == doctest::Approx(5.0 / 3.0).epsilon(1e-10));
  // P <= rho follows from (P1) and (P4).
  const auto h = EquationOfState::hybrid_causal(1, 5.0 / 3.0);
  for (int i = 0; i <= 40; ++i) {
    const double rho = std::pow(10.0, -8 + 0.275 * i);
    CHECK(h.pressure(rho) <= rho);
  }

  const auto soft = EquationOfState::polytrope(1, 1.2).validate(spec);
  CHECK_FALSE(soft.p2_ok);
}
