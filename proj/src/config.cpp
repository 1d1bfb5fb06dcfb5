#include "tpp/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "tpp/errors.hpp"
#include "tpp/parallel.hpp"

namespace tpp {

namespace {

const Json& leaf(const Json& doc, const std::string& block, const std::string& key) {
  if (!doc.contains(block) || !doc[block].is_object()) throw ConfigError("config: missing block '" + block + "'");
  const Json& b = doc[block];
  if (!b.contains(key)) throw ConfigError("config: missing leaf '" + block + "." + key + "'");
  return b[key];
}

template <typename T>
T get(const Json& doc, const std::string& block, const std::string& key) {
  const Json& v = leaf(doc, block, key);
  try {
    if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_arithmetic_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config: leaf '" + block + "." + key + "' has the wrong type (" + v.dump() + ")");
  }
}

// Every leaf of `user` must exist in `reference`; null reference leaves accept anything.
void check_known(const Json& user, const Json& reference, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError("config: '" + (prefix.empty() ? "<root>" : prefix) + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!reference.contains(it.key())) throw ConfigError("config: unknown key '" + path + "'");
    const Json& ref = reference[it.key()];
    if (ref.is_object()) {
      check_known(it.value(), ref, path);
    } else if (!ref.is_null() && !it.value().is_null()) {
      const bool same = (ref.is_number() && it.value().is_number()) || ref.type() == it.value().type();
      if (!same) throw ConfigError("config: leaf '" + path + "' has the wrong type (" + it.value().dump() + ")");
    }
  }
}

}  // namespace

Json default_config() {
  return Json::parse(R"({
    "threads": 0,
    "eos": {"type": "hybrid", "k": 1.0, "gamma": 1.6666666666666667, "rho_t": null, "table_path": "", "rho_cap": null},
    "solver": {"abs_tol": 1e-14, "rel_tol": 1e-11, "r_min_factor": 1e-3, "max_step_factor": 0.02,
               "surface_tol": 1e-14, "r_max_factor": 1e5, "surface_nodes": 48, "surface_layer": 0.05},
    "spectral": {"elements": 512, "out_factor": 25.0, "clustering": 2.0, "exterior_share": 0.2,
                 "eigenpairs": 4, "refine_check": true},
    "sweep": {"kappa_min": 0.05, "kappa_max": 3.2, "points": 60, "scale": "linear",
              "derivatives": "resolve", "rel_step": 1e-3, "noise_factor": 10.0, "solver_noise": 1e-11,
              "refine_tol": 1e-6, "max_refine": 200, "gap_threshold": 1e-3, "mode_gap_threshold": 1e-3},
    "modes": {"enabled": true, "cells": 400, "nodes": 400, "clustering": 2.0, "weight": "baryon"},
    "point": {"kappa": 0.5},
    "newtonian": {"kappas": [0.2, 0.1, 0.05, 0.025, 0.0125], "samples": 4000},
    "output": {"directory": "out", "formats": ["csv", "json"]}
  })");
}

void apply_override(Json& doc, const std::string& path, const std::string& value) {
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (const Json::parse_error&) {
    parsed = value;
  }
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override: malformed path '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      return;
    }
    if (!node->contains(key)) (*node)[key] = Json::object();
    node = &(*node)[key];
    if (!node->is_object()) throw ConfigError("override: '" + path + "' descends into a leaf");
    start = dot + 1;
  }
}

void validate(const Json& doc) {
  check_known(doc, default_config(), "");
  const double kmin = get<double>(doc, "sweep", "kappa_min"), kmax = get<double>(doc, "sweep", "kappa_max");
  if (!(kmin > 0)) throw ConfigError("config: sweep.kappa_min must be > 0");
  if (!(kmax > kmin)) throw ConfigError("config: sweep.kappa_max must exceed sweep.kappa_min");
  if (get<int>(doc, "sweep", "points") < 2) throw ConfigError("config: sweep.points must be >= 2");
  const auto scale = get<std::string>(doc, "sweep", "scale");
  if (scale != "linear" && scale != "log") throw ConfigError("config: sweep.scale must be 'linear' or 'log'");
  const auto der = get<std::string>(doc, "sweep", "derivatives");
  if (der != "resolve" && der != "grid") throw ConfigError("config: sweep.derivatives must be 'resolve' or 'grid'");
  const auto type = get<std::string>(doc, "eos", "type");
  if (type != "polytrope" && type != "hybrid" && type != "tabulated")
    throw ConfigError("config: eos.type must be polytrope, hybrid or tabulated");
  if (type == "tabulated" && get<std::string>(doc, "eos", "table_path").empty())
    throw ConfigError("config: eos.table_path is required for a tabulated EOS");
  const auto w = get<std::string>(doc, "modes", "weight");
  if (w != "baryon" && w != "enthalpy") throw ConfigError("config: modes.weight must be 'baryon' or 'enthalpy'");
  if (!(get<double>(doc, "point", "kappa") > 0)) throw ConfigError("config: point.kappa must be > 0");
  if (doc["threads"].is_number_integer() == false || doc["threads"].get<int>() < 0)
    throw ConfigError("config: threads must be a non-negative integer");
  for (const auto& k : leaf(doc, "newtonian", "kappas"))
    if (!k.is_number() || !(k.get<double>() > 0)) throw ConfigError("config: newtonian.kappas must be positive numbers");
  for (const auto& f : leaf(doc, "output", "formats"))
    if (!f.is_string()) throw ConfigError("config: output.formats must list strings");

  Config c{doc, {}};
  c.solver().check();
  c.spectral().check();
  c.modes().check();
  c.family().check();
}

Config load_config(const std::filesystem::path& file,
                   const std::vector<std::pair<std::string, std::string>>& overrides) {
  Json doc = default_config();
  std::filesystem::path base = std::filesystem::current_path();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config: cannot open '" + file.string() + "'");
    Json user;
    try {
      user = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config: '" + file.string() + "' is not valid JSON: " + e.what());
    }
    check_known(user, doc, "");
    doc.merge_patch(user);
    // merge_patch drops nulls; restore the leaves that default to null.
    for (const auto& [block, key] : {std::pair{"eos", "rho_t"}, std::pair{"eos", "rho_cap"}})
      if (!doc[block].contains(key)) doc[block][key] = nullptr;
    base = std::filesystem::absolute(file).parent_path();
  }
  for (const auto& [path, value] : overrides) apply_override(doc, path, value);
  validate(doc);
  return Config{doc, base};
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

Json Config::canonical() const {
  Json canon = doc;
  canon.erase("output");
  canon.erase("threads");
  return canon;
}

std::string Config::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical().dump())));
  return buf;
}

SolverConfig Config::solver() const {
  SolverConfig s;
  s.abs_tol = get<double>(doc, "solver", "abs_tol");
  s.rel_tol = get<double>(doc, "solver", "rel_tol");
  s.r_min_factor = get<double>(doc, "solver", "r_min_factor");
  s.max_step_factor = get<double>(doc, "solver", "max_step_factor");
  s.surface_tol = get<double>(doc, "solver", "surface_tol");
  s.r_max_factor = get<double>(doc, "solver", "r_max_factor");
  s.surface_nodes = get<int>(doc, "solver", "surface_nodes");
  s.surface_layer = get<double>(doc, "solver", "surface_layer");
  return s;
}

SpectralConfig Config::spectral() const {
  SpectralConfig s;
  s.elements = get<int>(doc, "spectral", "elements");
  s.out_factor = get<double>(doc, "spectral", "out_factor");
  s.clustering = get<double>(doc, "spectral", "clustering");
  s.exterior_share = get<double>(doc, "spectral", "exterior_share");
  s.eigenpairs = get<int>(doc, "spectral", "eigenpairs");
  s.refine_check = get<bool>(doc, "spectral", "refine_check");
  return s;
}

ModesConfig Config::modes() const {
  ModesConfig m;
  m.cells = get<int>(doc, "modes", "cells");
  m.nodes = get<int>(doc, "modes", "nodes");
  m.clustering = get<double>(doc, "modes", "clustering");
  m.weight = get<std::string>(doc, "modes", "weight") == "enthalpy" ? VelocityWeight::Enthalpy : VelocityWeight::Baryon;
  return m;
}

FamilyConfig Config::family() const {
  FamilyConfig f;
  f.rel_step = get<double>(doc, "sweep", "rel_step");
  f.noise_factor = get<double>(doc, "sweep", "noise_factor");
  f.solver_noise = get<double>(doc, "sweep", "solver_noise");
  f.refine_tol = get<double>(doc, "sweep", "refine_tol");
  f.max_refine = get<int>(doc, "sweep", "max_refine");
  f.derivatives = get<std::string>(doc, "sweep", "derivatives") == "grid" ? DerivativeMode::Grid : DerivativeMode::Resolve;
  f.threads = threads();
  return f;
}

TppConfig Config::tpp() const {
  TppConfig t;
  t.family = family();
  t.solver = solver();
  t.spectral = spectral();
  t.modes = modes();
  t.compute_modes = get<bool>(doc, "modes", "enabled");
  t.gap_threshold = get<double>(doc, "sweep", "gap_threshold");
  t.mode_gap_threshold = get<double>(doc, "sweep", "mode_gap_threshold");
  return t;
}

EquationOfState Config::eos() const {
  const auto type = get<std::string>(doc, "eos", "type");
  const double k = get<double>(doc, "eos", "k"), gamma = get<double>(doc, "eos", "gamma");
  const Json& cap = leaf(doc, "eos", "rho_cap");
  if (type == "tabulated") {
    std::filesystem::path p = get<std::string>(doc, "eos", "table_path");
    if (p.is_relative()) p = base_dir / p;
    return EquationOfState::from_file(p);
  }
  if (type == "polytrope") return cap.is_null() ? EquationOfState::polytrope(k, gamma) : EquationOfState::polytrope(k, gamma, cap.get<double>());
  const Json& rt = leaf(doc, "eos", "rho_t");
  const double c = cap.is_null() ? 1e12 : cap.get<double>();
  return rt.is_null() ? EquationOfState::hybrid_causal(k, gamma, c) : EquationOfState::hybrid(k, gamma, rt.get<double>(), c);
}

std::vector<double> Config::grid() const {
  return kappa_grid(get<double>(doc, "sweep", "kappa_min"), get<double>(doc, "sweep", "kappa_max"),
                    get<int>(doc, "sweep", "points"), get<std::string>(doc, "sweep", "scale") == "log");
}

double Config::point_kappa() const { return get<double>(doc, "point", "kappa"); }

std::vector<double> Config::newtonian_kappas() const { return leaf(doc, "newtonian", "kappas").get<std::vector<double>>(); }

int Config::threads() const { return resolve_threads(doc["threads"].get<int>()); }

std::filesystem::path Config::out_dir() const { return get<std::string>(doc, "output", "directory"); }

bool Config::wants(const std::string& format) const {
  for (const auto& f : leaf(doc, "output", "formats"))
    if (f == format) return true;
  return false;
}

}  // namespace tpp
