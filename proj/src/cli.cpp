#include "tpp/cli.hpp"

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "tpp/config.hpp"
#include "tpp/errors.hpp"
#include "tpp/report_io.hpp"

namespace tpp::cli {

namespace {

const std::vector<std::string> kCommands{"eos-validate", "solve", "sweep", "spectrum", "modes", "tpp", "newtonian-check"};

struct Outcome {
  OrderedJson summary = OrderedJson::object();
  std::vector<std::string> files;
  std::optional<std::string> invariant_failure;
};

// Turns leftover "--a.b=v" / "--a.b v" tokens into override pairs.
std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& rest) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const std::string& tok = rest[i];
    if (tok.rfind("--", 0) != 0 || tok.size() < 3) throw ConfigError("unexpected argument '" + tok + "'");
    const std::string body = tok.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else {
      if (i + 1 >= rest.size()) throw ConfigError("override '" + tok + "' has no value");
      out.emplace_back(body, rest[++i]);
    }
  }
  return out;
}

class Writer {
 public:
  Writer(const Config& cfg, Outcome& o) : cfg_(cfg), o_(o), dir_(cfg.out_dir()), hash_(cfg.hash()) {}

  void csv(const std::string& name, const std::string& body) {
    if (!cfg_.wants("csv")) return;
    write_csv(dir_ / name, hash_, body);
    o_.files.push_back(name);
  }
  void json(const std::string& name, const std::string& kind, const OrderedJson& payload) {
    if (!cfg_.wants("json")) return;
    OrderedJson doc = json_envelope(hash_, kind);
    doc["config"] = cfg_.canonical();
    for (auto it = payload.begin(); it != payload.end(); ++it) doc[it.key()] = it.value();
    write_json(dir_ / name, doc);
    o_.files.push_back(name);
  }
  void text(const std::string& name, const std::string& body) {
    write_text(dir_ / name, provenance_line(hash_) + body);
    o_.files.push_back(name);
  }
  const std::string& hash() const { return hash_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  const Config& cfg_;
  Outcome& o_;
  std::filesystem::path dir_;
  std::string hash_;
};

OrderedJson eos_description(const EquationOfState& e) {
  OrderedJson j;
  j["type"] = to_string(e.kind());
  j["k"] = e.k();
  j["gamma"] = e.gamma();
  j["rho_t"] = e.rho_t();
  j["cs2_high"] = e.cs2_high();
  j["rho_cap"] = e.rho_cap();
  return j;
}

Outcome cmd_eos_validate(const Config& cfg) {
  Outcome o;
  Writer w(cfg, o);
  const EquationOfState eos = cfg.eos();
  const EosValidationReport rep = eos.validate();
  w.json("eos.json", "eos-validate", {{"eos", eos_description(eos)}, {"validation", to_json(rep)}});
  o.summary["all_ok"] = rep.all_ok();
  return o;
}

Outcome cmd_solve(const Config& cfg) {
  Outcome o;
  Writer w(cfg, o);
  const SteadyState s = solve_steady_state(cfg.eos(), cfg.point_kappa(), cfg.solver());
  w.json("steady_state.json", "solve", {{"state", to_json(s)}});
  w.csv("profile.csv", profile_csv(s));
  o.summary["M"] = s.M;
  o.summary["R"] = s.R;
  return o;
}

Outcome cmd_sweep(const Config& cfg) {
  Outcome o;
  Writer w(cfg, o);
  const FamilyCurve c = sweep_family(cfg.eos(), cfg.grid(), cfg.family(), cfg.solver());
  OrderedJson ext = OrderedJson::array();
  std::vector<ExtremumEvent> all = c.extrema_M;
  all.insert(all.end(), c.extrema_MR.begin(), c.extrema_MR.end());
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.kappa_star < b.kappa_star; });
  for (const auto& e : all) ext.push_back(to_json(e));
  w.csv("sweep.csv", sweep_csv(c));
  w.json("sweep.json", "sweep", {{"extrema", ext}});
  o.summary["points"] = c.points.size();
  o.summary["extrema"] = all.size();
  return o;
}

Outcome cmd_spectrum(const Config& cfg) {
  Outcome o;
  Writer w(cfg, o);
  const SteadyState s = solve_steady_state(cfg.eos(), cfg.point_kappa(), cfg.solver());
  const SigmaCoefficients coeffs = relativistic_coefficients(s);
  const SpectralReport rep = analyze_sigma(coeffs, cfg.spectral());
  w.json("spectrum.json", "spectrum", {{"kappa", s.kappa}, {"spectrum", to_json(rep)}});
  if (cfg.wants("triplets"))
    w.text("sigma_triplets.txt", dump_triplets(assemble_sigma(coeffs, build_mesh(s.R, s.profile().core_scale, cfg.spectral()))));
  o.summary["n_minus"] = rep.n_minus;
  o.summary["kernel_gap"] = rep.kernel.gap;
  return o;
}

Outcome cmd_modes(const Config& cfg) {
  Outcome o;
  Writer w(cfg, o);
  const SteadyState s = solve_steady_state(cfg.eos(), cfg.point_kappa(), cfg.solver());
  const ModeReport rep = unstable_modes(s, cfg.modes());
  w.json("modes.json", "modes", {{"modes", to_json(rep)}});
  w.csv("mode.csv", mode_profile_csv(s, rep));
  o.summary["n_u_direct"] = rep.n_u_direct;
  o.summary["growth_rates"] = rep.growth_rates;
  return o;
}

Outcome cmd_tpp(const Config& cfg) {
  Outcome o;
  Writer w(cfg, o);
  const TppReport rep = tpp_report(cfg.eos(), cfg.grid(), cfg.tpp());
  w.json("tpp.json", "tpp", to_json(rep));
  w.csv("curve.csv", curve_csv(rep));
  if (cfg.wants("csv")) {
    emit_plot_data(rep, w.dir(), w.hash());
    o.files.push_back("mass_radius.csv");
    o.files.push_back("events.csv");
  }
  o.summary["points"] = rep.rows.size();
  o.summary["events"] = rep.events.size();
  o.summary["failures"] = rep.failures;
  if (rep.failures > 0)
    o.invariant_failure = "index formula violated at " + std::to_string(rep.failures) + " confidently classified rows";
  return o;
}

Outcome cmd_newtonian(const Config& cfg) {
  Outcome o;
  Writer w(cfg, o);
  const NewtonianLimitReport rep = newtonian_limit_check(cfg.eos(), cfg.newtonian_kappas(), cfg.solver(),
                                                         cfg.doc["newtonian"]["samples"].get<int>());
  w.csv("newtonian.csv", newtonian_csv(rep));
  w.json("newtonian.json", "newtonian-check", {{"fit", to_json(rep)}});
  o.summary["q"] = rep.q;
  o.summary["C"] = rep.C;
  return o;
}

Outcome dispatch(const std::string& command, const Config& cfg) {
  if (command == "eos-validate") return cmd_eos_validate(cfg);
  if (command == "solve") return cmd_solve(cfg);
  if (command == "sweep") return cmd_sweep(cfg);
  if (command == "spectrum") return cmd_spectrum(cfg);
  if (command == "modes") return cmd_modes(cfg);
  if (command == "tpp") return cmd_tpp(cfg);
  return cmd_newtonian(cfg);
}

int code_for(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return ConfigFailure;
  if (dynamic_cast<const InvariantViolation*>(&e)) return Invariant;
  return NumericalFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::string command = "tpp";
  std::optional<Config> cfg;

  auto fail = [&](int code, const std::string& kind, const std::string& message) {
    OrderedJson rec;
    rec["schema_version"] = kSchemaVersion;
    rec["status"] = "error";
    rec["command"] = command;
    rec["exit_code"] = code;
    rec["kind"] = kind;
    rec["message"] = message;
    if (cfg) {
      rec["config_hash"] = cfg->hash();
      try {
        write_json(cfg->out_dir() / "error.json", rec);
      } catch (const Error&) {
      }
    }
    err << rec.dump() << '\n';
    return code;
  };

  CLI::App app{"Turning-point stability analysis of relativistic steady states", "tpp"};
  app.allow_extras();
  std::string config_path, out_dir;
  app.add_option("command", command, "eos-validate | solve | sweep | spectrum | modes | tpp | newtonian-check")
      ->check(CLI::IsMember(kCommands));
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  app.footer("Any leaf of the configuration can be overridden with --block.leaf=value.");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Ok;
  } catch (const CLI::ParseError& e) {
    return fail(ConfigFailure, "config", e.what());
  }

  try {
    auto overrides = parse_overrides(app.remaining());
    if (!out_dir.empty()) overrides.emplace_back("output.directory", OrderedJson(out_dir).dump());
    if (!config_path.empty() && !std::filesystem::exists(config_path))
      throw ConfigError("config file '" + config_path + "' not found");
    cfg = load_config(config_path, overrides);
    const Outcome o = dispatch(command, *cfg);
    if (o.invariant_failure) return fail(Invariant, "invariant", *o.invariant_failure);
    std::error_code ec;
    std::filesystem::remove(cfg->out_dir() / "error.json", ec);
    OrderedJson rec;
    rec["schema_version"] = kSchemaVersion;
    rec["status"] = "ok";
    rec["command"] = command;
    rec["config_hash"] = cfg->hash();
    rec["output"] = cfg->out_dir().string();
    rec["files"] = o.files;
    rec["summary"] = o.summary;
    out << rec.dump() << '\n';
    return Ok;
  } catch (const Error& e) {
    return fail(code_for(e), e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(NumericalFailure, "internal", e.what());
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace tpp::cli
