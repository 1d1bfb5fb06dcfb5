#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpp/eos.hpp"
#include "tpp/family.hpp"
#include "tpp/modes.hpp"
#include "tpp/spectral.hpp"
#include "tpp/tov.hpp"

namespace tpp {

using Json = nlohmann::json;

/// Fully resolved run configuration: the canonical JSON document plus the
/// typed views the pipelines consume.
struct Config {
  Json doc;
  std::filesystem::path base_dir;  // relative table paths resolve against this

  SolverConfig solver() const;
  SpectralConfig spectral() const;
  ModesConfig modes() const;
  FamilyConfig family() const;
  TppConfig tpp() const;
  EquationOfState eos() const;
  std::vector<double> grid() const;
  double point_kappa() const;
  std::vector<double> newtonian_kappas() const;
  int threads() const;
  std::filesystem::path out_dir() const;
  bool wants(const std::string& format) const;

  /// The document without the output block and thread count: everything
  /// that can change a computed number.
  Json canonical() const;

  /// FNV-1a of the canonical dump.
  std::string hash() const;
};

Json default_config();

/// Applies "a.b.c=value" style overrides; the value is parsed as JSON and
/// falls back to a plain string.
void apply_override(Json& doc, const std::string& path, const std::string& value);

/// Defaults, then the file (if given), then overrides; validated.
Config load_config(const std::filesystem::path& file, const std::vector<std::pair<std::string, std::string>>& overrides);

void validate(const Json& doc);

std::uint64_t fnv1a(const std::string& bytes);

}  // namespace tpp
