#include "tpp/family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tpp/errors.hpp"
#include "tpp/parallel.hpp"

namespace tpp {

namespace {

// Rethrows a library error with the offending kappa prepended, keeping its type.
[[noreturn]] void rethrow_at(const Error& e, double kappa) {
  const std::string msg = "kappa=" + std::to_string(kappa) + ": " + e.what();
  if (dynamic_cast<const DomainError*>(&e)) throw DomainError(msg);
  if (dynamic_cast<const NumericalError*>(&e)) throw NumericalError(msg);
  if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
  if (dynamic_cast<const InvariantViolation*>(&e)) throw InvariantViolation(msg);
  throw Error(msg);
}

MassRadius call(const FamilyModel& model, double kappa) {
  try {
    return model(kappa);
  } catch (const Error& e) {
    rethrow_at(e, kappa);
  }
}

Derivative richardson(double fp1, double fm1, double fp2, double fm2, double scale, double delta,
                      const FamilyConfig& cfg) {
  const double dh = (fp1 - fm1) / (2 * delta);
  const double d2h = (fp2 - fm2) / (4 * delta);
  Derivative d;
  d.value = (4 * dh - d2h) / 3;
  d.error = std::abs(dh - d2h) / 3;
  d.floor = cfg.noise_factor * std::max(d.error, cfg.solver_noise * scale / delta);
  return d;
}

const Derivative& pick(const FamilyPoint& p, ExtremumWhich w) { return w == ExtremumWhich::MassExtremum ? p.dM : p.dMR; }

void check_grid(const std::vector<double>& grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0)) throw DomainError("kappa grid: values must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("kappa grid: values must be strictly increasing");
  }
}

}  // namespace

std::string to_string(DerivativeMode m) { return m == DerivativeMode::Resolve ? "resolve" : "grid"; }
std::string to_string(ExtremumWhich w) { return w == ExtremumWhich::MassExtremum ? "MassExtremum" : "RatioExtremum"; }
std::string to_string(ExtremumKind k) {
  switch (k) {
    case ExtremumKind::Max: return "Max";
    case ExtremumKind::Min: return "Min";
    default: return "InflectionCritical";
  }
}
std::string to_string(Orientation o) { return o == Orientation::Counterclockwise ? "Counterclockwise" : "Clockwise"; }
std::string to_string(RowFlag f) {
  switch (f) {
    case RowFlag::Confident: return "confident";
    case RowFlag::NearDegenerate: return "near-degenerate";
    default: return "unresolved";
  }
}

void FamilyConfig::check() const {
  if (!(rel_step > 0 && rel_step < 0.1)) throw ConfigError("family: rel_step must lie in (0, 0.1)");
  if (!(noise_factor >= 1)) throw ConfigError("family: noise_factor must be >= 1");
  if (!(solver_noise >= 0)) throw ConfigError("family: solver_noise must be >= 0");
  if (!(refine_tol > 0 && refine_tol < 1e-2)) throw ConfigError("family: refine_tol must lie in (0, 1e-2)");
  if (max_refine < 1) throw ConfigError("family: max_refine must be >= 1");
}

FamilyModel steady_state_model(const EquationOfState& eos, const SolverConfig& cfg) {
  auto shared = std::make_shared<const EquationOfState>(eos);
  return [shared, cfg](double kappa) {
    const SteadyState s = solve_steady_state(*shared, kappa, cfg);
    return MassRadius{s.M, s.R};
  };
}

FamilyPoint evaluate_point(const FamilyModel& model, double kappa, const FamilyConfig& cfg) {
  FamilyPoint p;
  p.kappa = kappa;
  const MassRadius c = call(model, kappa);
  p.M = c.M;
  p.R = c.R;
  p.MR = c.M / c.R;
  const double delta = cfg.rel_step * kappa;
  const MassRadius p1 = call(model, kappa + delta), m1 = call(model, kappa - delta);
  const MassRadius p2 = call(model, kappa + 2 * delta), m2 = call(model, kappa - 2 * delta);
  p.dM = richardson(p1.M, m1.M, p2.M, m2.M, std::abs(c.M), delta, cfg);
  p.dR = richardson(p1.R, m1.R, p2.R, m2.R, std::abs(c.R), delta, cfg);
  p.dMR = richardson(p1.M / p1.R, m1.M / m1.R, p2.M / p2.R, m2.M / m2.R, std::abs(p.MR), delta, cfg);
  p.has_derivatives = true;
  return p;
}

std::vector<double> kappa_grid(double kappa_min, double kappa_max, int points, bool log_scale) {
  if (!(kappa_min > 0) || !(kappa_max > kappa_min)) throw ConfigError("kappa grid: need 0 < kappa_min < kappa_max");
  if (points < 2) throw ConfigError("kappa grid: need at least two points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double t = double(i) / (points - 1);
    g[std::size_t(i)] = log_scale ? kappa_min * std::pow(kappa_max / kappa_min, t) : kappa_min + t * (kappa_max - kappa_min);
  }
  g.back() = kappa_max;
  return g;
}

FamilyCurve sweep_family(const FamilyModel& model, const std::vector<double>& grid, const FamilyConfig& cfg) {
  cfg.check();
  check_grid(grid);
  FamilyCurve curve;
  curve.model = model;
  curve.cfg = cfg;
  const int n = int(grid.size());
  if (cfg.derivatives == DerivativeMode::Resolve) {
    curve.points = parallel_map(n, [&](int i) { return evaluate_point(model, grid[std::size_t(i)], cfg); }, cfg.threads);
  } else {
    curve.points = parallel_map(
        n,
        [&](int i) {
          FamilyPoint p;
          p.kappa = grid[std::size_t(i)];
          const MassRadius c = call(model, p.kappa);
          p.M = c.M;
          p.R = c.R;
          p.MR = c.M / c.R;
          return p;
        },
        cfg.threads);
    // Three-point differences on the (possibly uneven) grid; the spread of
    // the one-sided slopes stands in for the error.
    auto grid_derivative = [&](int i, auto get) {
      const FamilyPoint &a = curve.points[std::size_t(i) - 1], &b = curve.points[std::size_t(i)],
                        &c = curve.points[std::size_t(i) + 1];
      const double h1 = b.kappa - a.kappa, h2 = c.kappa - b.kappa;
      const double back = (get(b) - get(a)) / h1, fwd = (get(c) - get(b)) / h2;
      Derivative d;
      d.value = (h2 * back + h1 * fwd) / (h1 + h2);
      d.error = std::abs(fwd - back) / 2;
      d.floor = cfg.noise_factor * std::max(d.error, cfg.solver_noise * std::abs(get(b)) / std::min(h1, h2));
      return d;
    };
    for (int i = 1; i + 1 < n; ++i) {
      FamilyPoint& p = curve.points[std::size_t(i)];
      p.dM = grid_derivative(i, [](const FamilyPoint& q) { return q.M; });
      p.dR = grid_derivative(i, [](const FamilyPoint& q) { return q.R; });
      p.dMR = grid_derivative(i, [](const FamilyPoint& q) { return q.MR; });
      p.has_derivatives = true;
    }
    // Near suspected sign changes the grid stencil is replaced by re-solves.
    std::vector<int> redo;
    for (int i = 1; i + 1 < n; ++i) {
      const FamilyPoint& p = curve.points[std::size_t(i)];
      bool suspect = p.dM.is_zero() || p.dMR.is_zero();
      for (int j : {i - 1, i + 1}) {
        const FamilyPoint& q = curve.points[std::size_t(j)];
        if (!q.has_derivatives) continue;
        suspect = suspect || (q.dM.value > 0) != (p.dM.value > 0) || (q.dMR.value > 0) != (p.dMR.value > 0);
      }
      if (suspect) redo.push_back(i);
    }
    const auto fresh = parallel_map(
        int(redo.size()), [&](int k) { return evaluate_point(model, grid[std::size_t(redo[std::size_t(k)])], cfg); },
        cfg.threads);
    for (std::size_t k = 0; k < redo.size(); ++k) curve.points[std::size_t(redo[k])] = fresh[k];
  }
  curve.i_kappa.resize(curve.points.size());
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const FamilyPoint& p = curve.points[i];
    if (!p.has_derivatives) {
      curve.i_kappa[i] = -1;
      continue;
    }
    try {
      curve.i_kappa[i] = winding_index(p);
    } catch (const Error& e) {
      rethrow_at(e, p.kappa);
    }
  }
  if (n >= 5) {
    curve.extrema_M = find_extrema(curve, ExtremumWhich::MassExtremum);
    curve.extrema_MR = find_extrema(curve, ExtremumWhich::RatioExtremum);
  }
  return curve;
}

FamilyCurve sweep_family(const EquationOfState& eos, const std::vector<double>& grid, const FamilyConfig& cfg,
                         const SolverConfig& solver) {
  return sweep_family(steady_state_model(eos, solver), grid, cfg);
}

std::vector<ExtremumEvent> find_extrema(const FamilyCurve& curve, ExtremumWhich which) {
  if (curve.points.size() < 5) throw DomainError("find_extrema: curve needs at least 5 points");
  if (!curve.model) throw DomainError("find_extrema: curve carries no model for refinement");
  const FamilyConfig& cfg = curve.cfg;
  std::vector<const FamilyPoint*> pts;
  for (const auto& p : curve.points)
    if (p.has_derivatives) pts.push_back(&p);

  struct Bracket {
    const FamilyPoint *a, *b;
  };
  std::vector<Bracket> brackets;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    if ((pick(*pts[i], which).value > 0) != (pick(*pts[i + 1], which).value > 0)) brackets.push_back({pts[i], pts[i + 1]});

  auto refine = [&](int k) {
    const Bracket& br = brackets[std::size_t(k)];
    ExtremumEvent ev;
    ev.which = which;
    double a = br.a->kappa, b = br.b->kappa;
    double fa = pick(*br.a, which).value, fb = pick(*br.b, which).value;
    FamilyPoint best = std::abs(fa) < std::abs(fb) ? *br.a : *br.b;
    int side = 0;
    bool done = false;
    // Illinois variant of regula falsi on the Richardson derivative.
    for (ev.iterations = 0; ev.iterations < cfg.max_refine; ++ev.iterations) {
      if (b - a <= cfg.refine_tol * a) {
        done = true;
        break;
      }
      double c = (a * fb - b * fa) / (fb - fa);
      const double guard = 0.01 * (b - a);
      c = std::clamp(c, a + guard, b - guard);
      const FamilyPoint pc = evaluate_point(curve.model, c, cfg);
      const double fc = pick(pc, which).value;
      if (std::abs(fc) <= std::abs(pick(best, which).value)) best = pc;
      if (fc == 0) {
        a = b = c;
        done = true;
        break;
      }
      if ((fc > 0) == (fb > 0)) {
        b = c;
        fb = fc;
        if (side == -1) fa *= 0.5;
        side = -1;
      } else {
        a = c;
        fa = fc;
        if (side == 1) fb *= 0.5;
        side = 1;
      }
    }
    ev.bracket_lo = a;
    ev.bracket_hi = b;
    ev.confident = done;
    ev.kappa_star = a == b ? a : (a * fb - b * fa) / (fb - fa);
    ev.at = evaluate_point(curve.model, ev.kappa_star, cfg);
    const Derivative& left = pick(*br.a, which);
    const Derivative& right = pick(*br.b, which);
    if (std::abs(right.value - left.value) <= left.floor + right.floor)
      ev.kind = ExtremumKind::InflectionCritical;
    else
      ev.kind = left.value > 0 ? ExtremumKind::Max : ExtremumKind::Min;
    // Turning sense of the tangent (dR, dM) across the event.
    const double cross = br.a->dR.value * br.b->dM.value - br.a->dM.value * br.b->dR.value;
    ev.orientation = cross > 0 ? Orientation::Counterclockwise : Orientation::Clockwise;
    // An event where the complementary derivative also vanishes would be
    // the coexistence the theory rules out.
    const Derivative& other = which == ExtremumWhich::MassExtremum ? ev.at.dMR : ev.at.dM;
    if (other.is_zero()) ev.confident = false;
    return ev;
  };
  return parallel_map(int(brackets.size()), refine, cfg.threads);
}

int winding_index(const FamilyPoint& p) {
  if (!p.has_derivatives) throw DomainError("winding_index: point has no derivative estimates");
  const bool zm = p.dM.is_zero(), zr = p.dMR.is_zero();
  if (zm && zr) throw InvariantViolation("coexistence detected: dM and d(M/R) both inside the noise floor");
  if (zm) return 1;
  if (zr) return 0;
  return p.dM.value * p.dMR.value > 0 ? 1 : 0;
}

int winding_index(const FamilyCurve& curve, double kappa) {
  const auto& pts = curve.points;
  if (pts.empty() || kappa < pts.front().kappa || kappa > pts.back().kappa)
    throw DomainError("winding_index: kappa outside the curve range");
  auto it = std::lower_bound(pts.begin(), pts.end(), kappa, [](const FamilyPoint& p, double k) { return p.kappa < k; });
  if (it->kappa == kappa) return winding_index(*it);
  const FamilyPoint& hi = *it;
  const FamilyPoint& lo = *(it - 1);
  if (!lo.has_derivatives || !hi.has_derivatives) throw DomainError("winding_index: neighbours lack derivatives");
  const double t = (kappa - lo.kappa) / (hi.kappa - lo.kappa);
  auto mix = [t](const Derivative& a, const Derivative& b) {
    Derivative d;
    d.value = (1 - t) * a.value + t * b.value;
    d.error = std::max(a.error, b.error);
    d.floor = std::max(a.floor, b.floor);
    return d;
  };
  FamilyPoint p;
  p.kappa = kappa;
  p.dM = mix(lo.dM, hi.dM);
  p.dMR = mix(lo.dMR, hi.dMR);
  p.dR = mix(lo.dR, hi.dR);
  p.has_derivatives = true;
  return winding_index(p);
}

TppReport tpp_report(const EquationOfState& eos, const std::vector<double>& grid, const TppConfig& cfg) {
  cfg.solver.check();
  cfg.spectral.check();
  if (cfg.compute_modes) cfg.modes.check();
  TppReport rep;
  rep.curve = sweep_family(eos, grid, cfg.family, cfg.solver);

  struct Local {
    SpectralReport sigma;
    ModeReport modes;
  };
  const auto shared = std::make_shared<const EquationOfState>(eos);
  const auto locals = parallel_map(
      int(grid.size()),
      [&](int i) {
        const double kappa = grid[std::size_t(i)];
        try {
          const SteadyState st = solve_steady_state(*shared, kappa, cfg.solver);
          Local l;
          l.sigma = analyze_sigma(relativistic_coefficients(st), cfg.spectral);
          if (cfg.compute_modes) l.modes = unstable_modes(st, cfg.modes);
          return l;
        } catch (const Error& e) {
          rethrow_at(e, kappa);
        }
      },
      cfg.family.threads);

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const FamilyPoint& p = rep.curve.points[i];
    const Local& l = locals[i];
    TppRow row;
    row.kappa = p.kappa;
    row.M = p.M;
    row.R = p.R;
    row.MR = p.MR;
    row.dM = p.dM.value;
    row.dMR = p.dMR.value;
    row.i_kappa = rep.curve.i_kappa[i];
    row.n_minus_sigma = l.sigma.n_minus;
    row.kernel_gap = l.sigma.kernel.gap;
    row.n_u_formula = row.i_kappa >= 0 ? row.n_minus_sigma - row.i_kappa : -1;
    if (cfg.compute_modes) {
      row.n_u_direct = l.modes.n_u_direct;
      row.n_minus_constrained = l.modes.n_minus_constrained;
      row.mode_gap = l.modes.constrained_gap;
      row.growth_rates = l.modes.growth_rates;
    }
    if (row.i_kappa < 0) {
      row.flag = RowFlag::Unresolved;
    } else {
      const bool degenerate = row.kernel_gap < cfg.gap_threshold || !l.sigma.converged || p.dM.is_zero() ||
                              p.dMR.is_zero() || (cfg.compute_modes && row.mode_gap < cfg.mode_gap_threshold);
      row.flag = degenerate ? RowFlag::NearDegenerate : RowFlag::Confident;
    }
    row.consistent = row.n_u_formula >= 0;
    if (cfg.compute_modes)
      row.consistent = row.consistent && row.n_u_formula == row.n_u_direct && row.n_minus_constrained == row.n_u_direct;
    if (row.flag == RowFlag::Confident && !row.consistent) ++rep.failures;
    rep.rows.push_back(row);
  }

  std::vector<ExtremumEvent> all = rep.curve.extrema_M;
  all.insert(all.end(), rep.curve.extrema_MR.begin(), rep.curve.extrema_MR.end());
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.kappa_star < b.kappa_star; });
  rep.events = parallel_map(
      int(all.size()),
      [&](int k) {
        TppEvent te;
        te.event = all[std::size_t(k)];
        const SteadyState st = solve_steady_state(*shared, te.event.kappa_star, cfg.solver);
        SpectralConfig sc = cfg.spectral;
        sc.refine_check = false;
        te.kernel_gap = analyze_sigma(relativistic_coefficients(st), sc).kernel.gap;
        return te;
      },
      cfg.family.threads);
  for (TppEvent& te : rep.events) {
    const TppRow* before = nullptr;
    const TppRow* after = nullptr;
    for (const TppRow& r : rep.rows) {
      if (r.flag != RowFlag::Confident) continue;
      if (r.kappa < te.event.kappa_star) before = &r;
      if (r.kappa > te.event.kappa_star && !after) after = &r;
    }
    auto nu = [&](const TppRow& r) { return cfg.compute_modes ? r.n_u_direct : r.n_u_formula; };
    if (before) {
      te.nu_before = nu(*before);
      te.nminus_before = before->n_minus_sigma;
      te.i_before = before->i_kappa;
    }
    if (after) {
      te.nu_after = nu(*after);
      te.nminus_after = after->n_minus_sigma;
      te.i_after = after->i_kappa;
    }
  }
  rep.deepest_kappa = grid.empty() ? 0.0 : grid.back();
  return rep;
}

}  // namespace tpp
