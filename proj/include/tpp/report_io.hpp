#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpp/eos.hpp"
#include "tpp/family.hpp"
#include "tpp/modes.hpp"
#include "tpp/newtonian.hpp"
#include "tpp/spectral.hpp"
#include "tpp/tov.hpp"

namespace tpp {

using OrderedJson = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// %.17g, the round-trip format used for every number written to CSV.
std::string fmt17(double v);

/// First line of every CSV file.
std::string provenance_line(const std::string& config_hash);

/// JSON object opening with schema_version and config_hash.
OrderedJson json_envelope(const std::string& config_hash, const std::string& kind);

void write_text(const std::filesystem::path& path, const std::string& content);
void write_csv(const std::filesystem::path& path, const std::string& config_hash, const std::string& body);
void write_json(const std::filesystem::path& path, const OrderedJson& doc);

// CSV bodies (header row included, provenance line excluded).
std::string curve_csv(const TppReport& rep);
std::string mass_radius_csv(const TppReport& rep);
std::string events_csv(const TppReport& rep);
std::string sweep_csv(const FamilyCurve& curve);
std::string profile_csv(const SteadyState& s);
std::string newtonian_csv(const NewtonianLimitReport& rep);

OrderedJson to_json(const EosValidationReport& rep);
OrderedJson to_json(const SteadyState& s);
OrderedJson to_json(const SpectralReport& rep);
OrderedJson to_json(const ModeReport& rep);
OrderedJson to_json(const NewtonianLimitReport& rep);
OrderedJson to_json(const ExtremumEvent& ev);
OrderedJson to_json(const TppReport& rep);

/// Stability colour of a row: min(n_u, 3), taking the direct count when available.
int stability_color(const TppRow& row);

/// Writes mass_radius.csv and events.csv into out_dir.
void emit_plot_data(const TppReport& rep, const std::filesystem::path& out_dir, const std::string& config_hash);

struct MassRadiusRow {
  double R = 0, M = 0, kappa = 0;
  int color = 0;
};

std::vector<MassRadiusRow> read_mass_radius_csv(const std::filesystem::path& path);

}  // namespace tpp
