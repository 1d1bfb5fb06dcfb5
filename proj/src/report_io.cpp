#include "tpp/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tpp/errors.hpp"

namespace tpp {

namespace {

std::string join(std::initializer_list<std::string> cols) {
  std::string s;
  for (const auto& c : cols) {
    if (!s.empty()) s += ',';
    s += c;
  }
  return s + '\n';
}

std::string str(int v) { return std::to_string(v); }

OrderedJson array(const std::vector<double>& v) { return OrderedJson(v); }

std::string event_label(std::size_t i) {
  std::string s;
  for (std::size_t n = i + 1; n > 0; n = (n - 1) / 26) s.insert(s.begin(), char('A' + (n - 1) % 26));
  return s;
}

}  // namespace

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string provenance_line(const std::string& config_hash) {
  return "# config_hash=" + config_hash + " schema_version=" + str(kSchemaVersion) + "\n";
}

OrderedJson json_envelope(const std::string& config_hash, const std::string& kind) {
  OrderedJson j;
  j["schema_version"] = kSchemaVersion;
  j["config_hash"] = config_hash;
  j["kind"] = kind;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_csv(const std::filesystem::path& path, const std::string& config_hash, const std::string& body) {
  write_text(path, provenance_line(config_hash) + body);
}

void write_json(const std::filesystem::path& path, const OrderedJson& doc) { write_text(path, doc.dump(2) + "\n"); }

int stability_color(const TppRow& row) {
  const int nu = row.n_u_direct >= 0 ? row.n_u_direct : row.n_u_formula;
  return std::clamp(nu, 0, 3);
}

std::string curve_csv(const TppReport& rep) {
  std::string s = "kappa,M,R,M_over_R,dM,dMR,i,nminus,nu_formula,nu_direct,flag\n";
  for (const auto& r : rep.rows)
    s += join({fmt17(r.kappa), fmt17(r.M), fmt17(r.R), fmt17(r.MR), fmt17(r.dM), fmt17(r.dMR), str(r.i_kappa),
               str(r.n_minus_sigma), str(r.n_u_formula), str(r.n_u_direct), to_string(r.flag)});
  return s;
}

std::string mass_radius_csv(const TppReport& rep) {
  std::string s = "R,M,kappa,color\n";
  for (const auto& r : rep.rows) s += join({fmt17(r.R), fmt17(r.M), fmt17(r.kappa), str(stability_color(r))});
  return s;
}

std::string events_csv(const TppReport& rep) {
  std::string s =
      "label,kappa_star,which,kind,orientation,confident,M,R,nu_before,nu_after,nminus_before,nminus_after,"
      "i_before,i_after,kernel_gap\n";
  for (std::size_t k = 0; k < rep.events.size(); ++k) {
    const TppEvent& e = rep.events[k];
    s += join({event_label(k), fmt17(e.event.kappa_star), to_string(e.event.which), to_string(e.event.kind),
               to_string(e.event.orientation), e.event.confident ? "1" : "0", fmt17(e.event.at.M), fmt17(e.event.at.R),
               str(e.nu_before), str(e.nu_after), str(e.nminus_before), str(e.nminus_after), str(e.i_before),
               str(e.i_after), fmt17(e.kernel_gap)});
  }
  return s;
}

std::string sweep_csv(const FamilyCurve& curve) {
  std::string s = "kappa,M,R,M_over_R,dM,dMR,dR,i\n";
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    const FamilyPoint& p = curve.points[k];
    s += join({fmt17(p.kappa), fmt17(p.M), fmt17(p.R), fmt17(p.MR), fmt17(p.dM.value), fmt17(p.dMR.value),
               fmt17(p.dR.value), str(curve.i_kappa[k])});
  }
  return s;
}

std::string profile_csv(const SteadyState& s) {
  std::string out = "r,y,rho,p,m,lambda,mu\n";
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    out += join({fmt17(s.grid[i]), fmt17(s.y[i]), fmt17(s.rho[i]), fmt17(s.p[i]), fmt17(s.m[i]), fmt17(s.lambda[i]),
                 fmt17(s.mu[i])});
  return out;
}

std::string newtonian_csv(const NewtonianLimitReport& rep) {
  std::string s = "kappa,err_c0,err_c1\n";
  for (const auto& r : rep.rows) s += join({fmt17(r.kappa), fmt17(r.err_c0), fmt17(r.err_c1)});
  return s;
}

OrderedJson to_json(const EosValidationReport& rep) {
  OrderedJson j;
  j["all_ok"] = rep.all_ok();
  j["p1"] = {{"ok", rep.p1_ok}, {"message", rep.p1_msg}};
  j["p2"] = {{"ok", rep.p2_ok}, {"message", rep.p2_msg}};
  j["p3"] = {{"ok", rep.p3_ok}, {"message", rep.p3_msg}};
  j["p4"] = {{"ok", rep.p4_ok}, {"message", rep.p4_msg}};
  j["fitted_gamma"] = rep.fitted_gamma;
  j["fitted_slope_top"] = rep.fitted_slope_top;
  j["p4_violation_density"] = rep.has_p4_violation ? OrderedJson(rep.p4_violation_density) : OrderedJson(nullptr);
  return j;
}

OrderedJson to_json(const SteadyState& s) {
  OrderedJson j;
  j["kappa"] = s.kappa;
  j["R"] = s.R;
  j["M"] = s.M;
  j["N"] = s.N;
  j["z"] = s.z;
  j["mu_R"] = s.mu_R;
  j["compactness"] = 2 * s.M / s.R;
  j["profile"] = {{"r", array(s.grid)}, {"y", array(s.y)},           {"rho", array(s.rho)}, {"p", array(s.p)},
                  {"m", array(s.m)},    {"lambda", array(s.lambda)}, {"mu", array(s.mu)}};
  return j;
}

OrderedJson to_json(const SpectralReport& rep) {
  OrderedJson j;
  j["n_minus"] = rep.n_minus;
  j["n_minus_refined"] = rep.n_minus_refined;
  j["converged"] = rep.converged;
  j["kernel_gap"] = rep.kernel.gap;
  j["kernel_theta"] = rep.kernel.theta;
  j["kernel_residual"] = rep.kernel.residual;
  j["kernel_gap_refined"] = rep.kernel_gap_refined;
  j["lowest"] = rep.lowest;
  j["rayleigh_certified"] = rep.rayleigh_certified;
  j["elements"] = rep.elements;
  return j;
}

OrderedJson to_json(const ModeReport& rep) {
  OrderedJson j;
  j["kappa"] = rep.kappa;
  j["weight"] = to_string(rep.weight);
  j["n_u_direct"] = rep.n_u_direct;
  j["n_minus_constrained"] = rep.n_minus_constrained;
  j["n_minus_L"] = rep.n_minus_L;
  j["constrained_gap"] = rep.constrained_gap;
  j["growth_rates"] = rep.growth_rates;
  j["lowest"] = rep.lowest;
  j["eigenvalue_gaps"] = rep.eigenvalue_gaps;
  j["L_asymmetry"] = rep.L_asymmetry;
  j["S_asymmetry"] = rep.S_asymmetry;
  j["range_defect"] = rep.range_defect;
  j["cells"] = int(rep.edges.size()) - 1;
  return j;
}

OrderedJson to_json(const NewtonianLimitReport& rep) {
  OrderedJson j;
  j["C"] = rep.C;
  j["q"] = rep.q;
  j["S0"] = rep.S0;
  j["M0"] = rep.M0;
  OrderedJson rows = OrderedJson::array();
  for (const auto& r : rep.rows) rows.push_back({{"kappa", r.kappa}, {"err_c0", r.err_c0}, {"err_c1", r.err_c1}});
  j["rows"] = rows;
  return j;
}

OrderedJson to_json(const ExtremumEvent& ev) {
  OrderedJson j;
  j["kappa_star"] = ev.kappa_star;
  j["which"] = to_string(ev.which);
  j["kind"] = to_string(ev.kind);
  j["orientation"] = to_string(ev.orientation);
  j["confident"] = ev.confident;
  j["iterations"] = ev.iterations;
  j["bracket"] = {ev.bracket_lo, ev.bracket_hi};
  j["M"] = ev.at.M;
  j["R"] = ev.at.R;
  j["dM"] = ev.at.dM.value;
  j["dMR"] = ev.at.dMR.value;
  return j;
}

OrderedJson to_json(const TppReport& rep) {
  OrderedJson j;
  int confident = 0;
  for (const auto& r : rep.rows) confident += r.flag == RowFlag::Confident;
  j["summary"] = {{"points", rep.rows.size()},
                  {"confident", confident},
                  {"failures", rep.failures},
                  {"events", rep.events.size()},
                  {"deepest_kappa", rep.deepest_kappa}};
  OrderedJson events = OrderedJson::array();
  for (std::size_t k = 0; k < rep.events.size(); ++k) {
    const TppEvent& e = rep.events[k];
    OrderedJson full;
    full["label"] = event_label(k);
    const OrderedJson ej = to_json(e.event);
    for (auto it = ej.begin(); it != ej.end(); ++it) full[it.key()] = it.value();
    full["nu"] = {e.nu_before, e.nu_after};
    full["nminus"] = {e.nminus_before, e.nminus_after};
    full["i"] = {e.i_before, e.i_after};
    full["kernel_gap"] = e.kernel_gap;
    events.push_back(full);
  }
  j["events"] = events;
  OrderedJson rows = OrderedJson::array();
  for (const auto& r : rep.rows) {
    OrderedJson rj;
    rj["kappa"] = r.kappa;
    rj["M"] = r.M;
    rj["R"] = r.R;
    rj["M_over_R"] = r.MR;
    rj["dM"] = r.dM;
    rj["dMR"] = r.dMR;
    rj["i"] = r.i_kappa;
    rj["nminus"] = r.n_minus_sigma;
    rj["nu_formula"] = r.n_u_formula;
    rj["nu_direct"] = r.n_u_direct;
    rj["nminus_constrained"] = r.n_minus_constrained;
    rj["kernel_gap"] = r.kernel_gap;
    rj["mode_gap"] = r.mode_gap;
    rj["growth_rates"] = r.growth_rates;
    rj["flag"] = to_string(r.flag);
    rj["consistent"] = r.consistent;
    rows.push_back(rj);
  }
  j["rows"] = rows;
  return j;
}

void emit_plot_data(const TppReport& rep, const std::filesystem::path& out_dir, const std::string& config_hash) {
  write_csv(out_dir / "mass_radius.csv", config_hash, mass_radius_csv(rep));
  write_csv(out_dir / "events.csv", config_hash, events_csv(rep));
}

std::vector<MassRadiusRow> read_mass_radius_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::vector<MassRadiusRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "R,M,kappa,color") throw IoError("unexpected mass_radius.csv header '" + line + "'");
      header = true;
      continue;
    }
    MassRadiusRow r;
    char* end = nullptr;
    const char* p = line.c_str();
    r.R = std::strtod(p, &end);
    r.M = std::strtod(end + 1, &end);
    r.kappa = std::strtod(end + 1, &end);
    r.color = int(std::strtol(end + 1, &end, 10));
    if (*end != '\0') throw IoError("malformed mass_radius.csv row '" + line + "'");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace tpp
