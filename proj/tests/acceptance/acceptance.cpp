// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "tpp/cli.hpp"
#include "tpp/errors.hpp"
#include "tpp/family.hpp"
#include "tpp/modes.hpp"
#include "tpp/newtonian.hpp"
#include "tpp/quadrature.hpp"
#include "tpp/spectral.hpp"

using namespace tpp;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const EquationOfState& hybrid() {
  static const EquationOfState e = EquationOfState::hybrid_causal(1, 5.0 / 3.0);
  return e;
}

// Coexistence audit shared by every sweep.
struct Audit {
  int points = 0, events = 0;
  std::vector<std::string> violations;

  void add(const FamilyCurve& c) {
    for (const auto& p : c.points) {
      if (!p.has_derivatives) continue;
      ++points;
      if (p.dM.is_zero() && p.dMR.is_zero()) violations.push_back("kappa=" + fmt("%.6g", p.kappa));
    }
    for (const auto* list : {&c.extrema_M, &c.extrema_MR})
      for (const auto& e : *list) {
        ++events;
        const Derivative& other = e.which == ExtremumWhich::MassExtremum ? e.at.dMR : e.at.dM;
        if (other.is_zero()) violations.push_back("event at kappa*=" + fmt("%.8g", e.kappa_star));
      }
  }
} audit;

// The 60-point sweep is shared by criteria 7, 8 and 10.
TppReport main_sweep;
bool main_sweep_ok = false;

// ---------------------------------------------------------------------------

Outcome newtonian_baseline() {
  Outcome o;
  for (double g : {1.5, 5.0 / 3.0, 1.9}) {
    const LaneEmdenState le = solve_lane_emden(g, 1.0);
    for (int el : {512, 1024}) {
      SpectralConfig sc;
      sc.elements = el;
      sc.refine_check = false;
      const auto rep = analyze_sigma(newtonian_coefficients(le), sc);
      o.require(rep.n_minus == 1 && rep.kernel.gap > 0,
                "gamma=" + fmt("%.4g", g) + " elements=" + std::to_string(el) + " n-=" + std::to_string(rep.n_minus));
      if (el == 1024) o.note("gamma=" + fmt("%.4g", g) + " gap=" + fmt("%.3e", rep.kernel.gap));
    }
  }
  return o;
}

Outcome small_kappa_index() {
  Outcome o;
  ModesConfig mc;
  mc.cells = mc.nodes = 200;
  const auto grid = kappa_grid(0.005, 0.05, 10, true);
  const FamilyCurve c = sweep_family(hybrid(), grid);
  audit.add(c);
  int ok = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const SteadyState st = solve_steady_state(hybrid(), grid[k]);
    const auto rep = analyze_sigma(relativistic_coefficients(st), SpectralConfig{});
    const int i = c.i_kappa[k];
    const int nu = unstable_modes(st, mc).n_u_direct;
    const bool good = rep.n_minus == 1 && i == 1 && rep.n_minus - i == 0 && nu == 0;
    o.require(good, "kappa=" + fmt("%.4g", grid[k]) + " n-=" + std::to_string(rep.n_minus) + " i=" + std::to_string(i) +
                        " nu_direct=" + std::to_string(nu));
    ok += good;
  }
  o.note(std::to_string(ok) + "/10 states with n-=1, i=1, n_u=0 (formula and direct)");
  return o;
}

Outcome metric_identity() {
  Outcome o;
  const auto grid = kappa_grid(1e-3, 8.0, 200, true);
  double worst_id = 0, worst_buchdahl = 0;
  for (double kappa : grid) {
    const SteadyState st = solve_steady_state(hybrid(), kappa);
    // Limit of y at infinity from the exterior field equation, with t = 1/r.
    const auto yinf = quad::adaptive_gk15([&](double t) { return -st.M / (1 - 2 * st.M * t); }, 0.0, 1 / st.R, 1e-16, 1e-15);
    worst_id = std::max(worst_id, std::abs(std::exp(2 * yinf.value) - (1 - 2 * st.M / st.R)));
    for (std::size_t i = 1; i < st.grid.size(); ++i) worst_buchdahl = std::max(worst_buchdahl, 2 * st.m[i] / st.grid[i]);
  }
  o.require(worst_id <= 1e-10, "metric identity " + fmt("%.3e", worst_id));
  o.require(worst_buchdahl <= 8.0 / 9.0, "Buchdahl max 2m/r=" + fmt("%.6f", worst_buchdahl));
  o.note("200 states on [1e-3, 8]; max |e^{2 mu(R)} - (1 - 2M/R)| = " + fmt("%.3e", worst_id) +
         ", max 2m/r = " + fmt("%.4f", worst_buchdahl));
  return o;
}

Outcome newtonian_rate() {
  Outcome o;
  const auto rep = newtonian_limit_check(hybrid(), {0.2, 0.1, 0.05, 0.025, 0.0125});
  o.require(rep.q >= 0.9 && rep.q <= 1.1, "q=" + fmt("%.4f", rep.q));
  o.note("q = " + fmt("%.4f", rep.q) + ", C = " + fmt("%.4f", rep.C));
  return o;
}

double sigma_gap(double kappa, int elements) {
  SpectralConfig sc;
  sc.elements = elements;
  sc.refine_check = false;
  const SteadyState st = solve_steady_state(hybrid(), kappa);
  return analyze_sigma(relativistic_coefficients(st), sc).kernel.gap;
}

Outcome kernel_at_extrema() {
  Outcome o;
  const FamilyCurve c = sweep_family(hybrid(), kappa_grid(0.05, 3.6, 36, false));
  audit.add(c);
  o.require(c.extrema_MR.size() >= 2, "expected two critical points of M/R, found " + std::to_string(c.extrema_MR.size()));
  // Refinement couples the bracket tolerance with the mesh.
  const std::pair<double, int> levels[] = {{1e-3, 512}, {1e-5, 1024}, {1e-7, 2048}};
  std::vector<std::vector<double>> gaps(c.extrema_MR.size());
  std::vector<double> kstar;
  for (const auto& [tol, elements] : levels) {
    FamilyCurve refined = c;
    refined.cfg.refine_tol = tol;
    const auto ex = find_extrema(refined, ExtremumWhich::RatioExtremum);
    if (ex.size() != c.extrema_MR.size()) {
      o.require(false, "extremum count changed under refinement");
      return o;
    }
    kstar.clear();
    for (std::size_t k = 0; k < ex.size(); ++k) {
      gaps[k].push_back(sigma_gap(ex[k].kappa_star, elements));
      kstar.push_back(ex[k].kappa_star);
    }
  }
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    const auto& g = gaps[k];
    std::string seq;
    for (double v : g) seq += (seq.empty() ? "" : " > ") + fmt("%.2e", v);
    o.note("kappa*=" + fmt("%.6f", kstar[k]) + " gap " + seq);
    o.require(g.back() < 1e-3, "gap at kappa*=" + fmt("%.6f", kstar[k]) + " not below 1e-3");
    for (std::size_t j = 1; j < g.size(); ++j) o.require(g[j] < g[j - 1], "gap not decreasing at kappa*=" + fmt("%.6f", kstar[k]));
  }
  for (std::size_t k = 0; k + 1 < kstar.size(); ++k) {
    const double mid = 0.5 * (kstar[k] + kstar[k + 1]);
    const double g = sigma_gap(mid, 512);
    o.require(g > 1e-2, "midpoint gap " + fmt("%.3e", g));
    o.note("midpoint " + fmt("%.4f", mid) + " gap " + fmt("%.3e", g));
  }
  // Reported only: midpoints next to mass extrema, where no kernel is expected.
  std::vector<double> all;
  for (const auto& e : c.extrema_M) all.push_back(e.kappa_star);
  for (double k : kstar) all.push_back(k);
  std::sort(all.begin(), all.end());
  std::string info;
  for (std::size_t k = 0; k + 1 < all.size(); ++k) {
    const double mid = 0.5 * (all[k] + all[k + 1]);
    info += (info.empty() ? "" : ", ") + fmt("%.3f", mid) + ":" + fmt("%.1e", sigma_gap(mid, 512));
  }
  o.note("all-event midpoints (info) " + info);
  return o;
}

Outcome null_direction() {
  Outcome o;
  for (double kappa : {0.3, 1.0, 2.0}) {
    std::vector<double> res;
    for (int f : {1, 2, 4}) {
      SpectralConfig sc;
      sc.elements = 256 * f;
      res.push_back(null_direction_residual(hybrid(), kappa, 1e-2 * kappa / f, sc).residual);
    }
    const double rate = std::log2(res[0] / res[2]) / 2;
    const double def = null_direction_residual(hybrid(), kappa, 1e-3 * kappa, SpectralConfig{}).residual;
    o.require(res[1] < res[0] && res[2] < res[1], "residual not decreasing at kappa=" + fmt("%.2g", kappa));
    o.require(rate >= 1.5, "observed order " + fmt("%.2f", rate) + " at kappa=" + fmt("%.2g", kappa));
    o.require(def <= 1e-3, "default residual " + fmt("%.3e", def));
    o.note("kappa=" + fmt("%.2g", kappa) + " order " + fmt("%.2f", rate) + " default " + fmt("%.2e", def));
  }
  return o;
}

Outcome index_formula() {
  Outcome o;
  TppConfig cfg;
  cfg.modes.cells = cfg.modes.nodes = 400;
  main_sweep = tpp_report(hybrid(), kappa_grid(0.05, 3.2, 60, false), cfg);
  main_sweep_ok = true;
  audit.add(main_sweep.curve);
  int confident = 0, bad = 0;
  for (const auto& r : main_sweep.rows) {
    if (r.flag != RowFlag::Confident) continue;
    ++confident;
    const bool ok = r.n_minus_constrained == r.n_minus_sigma - r.i_kappa && r.n_minus_sigma - r.i_kappa == r.n_u_direct;
    if (!ok) {
      ++bad;
      o.require(false, "kappa=" + fmt("%.5f", r.kappa));
    }
  }
  const auto& ev = main_sweep.curve.extrema_M;
  o.require(ev.size() >= 2 && ev[0].kappa_star > 0.05 && ev[1].kappa_star < 3.2, "sweep does not span two mass extrema");
  o.require(confident >= 50, "only " + std::to_string(confident) + " confident rows");
  o.note(std::to_string(confident) + "/60 confident rows, " + std::to_string(bad) + " violations, " +
         std::to_string(ev.size()) + " mass extrema");
  return o;
}

Outcome turning_points() {
  Outcome o;
  if (!main_sweep_ok) {
    o.require(false, "criterion 7 sweep unavailable");
    return o;
  }
  bool first_mass = true;
  int ratio = 0;
  for (const TppEvent& e : main_sweep.events) {
    const std::string where = "kappa*=" + fmt("%.5f", e.event.kappa_star);
    if (e.event.which == ExtremumWhich::MassExtremum && first_mass) {
      first_mass = false;
      o.require(e.event.kind == ExtremumKind::Max, "first mass extremum is not a maximum");
      o.require(e.nu_before == 0 && e.nu_after == 1, "n_u " + std::to_string(e.nu_before) + "->" + std::to_string(e.nu_after));
      o.require(e.event.orientation == Orientation::Counterclockwise, "orientation " + to_string(e.event.orientation));
      o.note("mass max " + where + " n_u 0->1 " + to_string(e.event.orientation));
    } else if (e.event.which == ExtremumWhich::RatioExtremum) {
      ++ratio;
      o.require(e.nu_before == e.nu_after, "n_u changes across ratio extremum " + where);
      o.require(e.nminus_after - e.nminus_before == e.i_after - e.i_before, "jump mismatch at " + where);
      o.note("ratio ext " + where + " n_u " + std::to_string(e.nu_before) + "=" + std::to_string(e.nu_after) + ", jump n- " +
             std::to_string(e.nminus_after - e.nminus_before) + " = jump i " + std::to_string(e.i_after - e.i_before));
    }
  }
  o.require(!first_mass, "no mass extremum found");
  o.require(ratio >= 1, "no ratio extremum found");
  return o;
}

Outcome deep_spiral() {
  Outcome o;
  TppConfig cfg;
  cfg.modes.cells = cfg.modes.nodes = 400;
  const TppReport rep = tpp_report(hybrid(), kappa_grid(3.3, 6.0, 10, false), cfg);
  audit.add(rep.curve);
  int max_nminus = 0, max_nu = 0;
  for (const auto& r : rep.rows) {
    max_nminus = std::max(max_nminus, r.n_minus_sigma);
    max_nu = std::max(max_nu, r.n_u_direct);
  }
  o.require(max_nminus >= 2, "max n- = " + std::to_string(max_nminus));
  o.require(max_nu >= 2, "max n_u = " + std::to_string(max_nu));
  o.require(rep.failures == 0, std::to_string(rep.failures) + " index-formula failures");
  o.note("kappa up to 6: max n- = " + std::to_string(max_nminus) + ", max n_u = " + std::to_string(max_nu) +
         ", growth rates at kappa=6: " + std::to_string(rep.rows.back().growth_rates.size()));
  return o;
}

Outcome no_coexistence() {
  Outcome o;
  o.require(audit.points > 0, "no sweeps audited");
  for (const auto& v : audit.violations) o.require(false, v);
  o.note(std::to_string(audit.points) + " points and " + std::to_string(audit.events) + " events audited across criteria 2, 5, 7, 9");
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome hygiene() {
  Outcome o;
  std::mt19937_64 rng(20241018);
  std::uniform_real_distribution<double> u(-3, 3);
  double worst_asym = 0;
  for (double kappa : {0.3, 1.5, 3.6}) {
    const SteadyState st = solve_steady_state(hybrid(), kappa);
    SpectralConfig sc;
    const FormPair pair = assemble_sigma(relativistic_coefficients(st), build_mesh(st.R, st.profile().core_scale, sc));
    Eigen::VectorXd d(pair.S.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = std::pow(10.0, u(rng));
    FormPair scaled = pair;
    scaled.S = pair.S.scaled(d);
    scaled.B = pair.B.scaled(d);
    o.require(morse_index(scaled) == morse_index(pair), "Sigma inertia changed under rescaling at kappa=" + fmt("%.2g", kappa));

    ModesConfig mc;
    const DensityForm f = assemble_L(st, mc);
    Eigen::VectorXd e(f.Lmat.rows());
    for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = std::pow(10.0, u(rng));
    const Eigen::MatrixXd scaledL = e.asDiagonal() * f.Lmat * e.asDiagonal();
    // Jacobi-normalize so the eigen count is well conditioned, then compare.
    const Eigen::VectorXd j = scaledL.diagonal().cwiseAbs().cwiseSqrt().cwiseInverse();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j.asDiagonal() * scaledL * j.asDiagonal(), Eigen::EigenvaluesOnly);
    const int neg = int((es.eigenvalues().array() < 0).count());
    o.require(neg == morse_index(f), "L inertia changed under rescaling at kappa=" + fmt("%.2g", kappa));

    const ModeReport mr = unstable_modes(st, mc);
    worst_asym = std::max({worst_asym, f.asymmetry, mr.L_asymmetry, mr.S_asymmetry});
  }
  o.require(worst_asym <= 1e-8, "asymmetry " + fmt("%.3e", worst_asym));
  o.note("inertia invariant at 3 kappa; max relative asymmetry before symmetrization " + fmt("%.2e", worst_asym));

  const auto base = std::filesystem::temp_directory_path() / "tpp_acceptance_determinism";
  std::filesystem::remove_all(base);
  const std::vector<std::string> common{"--sweep.kappa_min=0.3", "--sweep.kappa_max=1.6", "--sweep.points=8",
                                        "--modes.cells=100",     "--modes.nodes=100"};
  std::vector<std::string> files{"tpp.json", "curve.csv", "mass_radius.csv", "events.csv"};
  int codes[2];
  for (int run = 0; run < 2; ++run) {
    std::vector<std::string> args{"tpp", "--out", (base / ("run" + std::to_string(run))).string(),
                                  "--threads=" + std::to_string(run == 0 ? 0 : 1)};
    args.insert(args.end(), common.begin(), common.end());
    std::ostringstream out, err;
    codes[run] = cli::run(args, out, err);
  }
  o.require(codes[0] == 0 && codes[1] == 0, "CLI runs failed");
  for (const auto& f : files) {
    const std::string a = slurp(base / "run0" / f), b = slurp(base / "run1" / f);
    o.require(!a.empty() && a == b, f + " differs between runs");
  }
  o.note("two CLI runs (different thread counts) produced byte-identical tpp.json, curve.csv, mass_radius.csv, events.csv");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: shares the runtime of another criterion
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "Newtonian spectral baseline", 5, newtonian_baseline},
      {2, "small-kappa relativistic index", 30, small_kappa_index},
      {3, "metric identity and Buchdahl bound", 60, metric_identity},
      {4, "Newtonian limit rate", 30, newtonian_rate},
      {5, "kernel at critical points of M/R", 120, kernel_at_extrema},
      {6, "null direction residual", 60, null_direction},
      {7, "index formula cross-check", 600, index_formula},
      {8, "turning point events", 0, turning_points},
      {9, "deep-spiral growth", 600, deep_spiral},
      {10, "no coexistence", 0, no_coexistence},
      {11, "numerics hygiene", 60, hygiene},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0) o.require(dt < c.limit_s, "runtime " + fmt("%.1f", dt) + " s over " + fmt("%.0f", c.limit_s) + " s");
    failed += !o.pass;
    std::printf("%s criterion %d (%s) [%.2f s]: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, dt, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
