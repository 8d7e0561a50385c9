#pragma once

// Run configuration for the command-line front end. The on-disk format is
// flat `key = value` text (one key per line, `#` comments) or a flat JSON
// object with the same keys. Every key is validated before any computation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ffqkd/geometry.hpp"
#include "ffqkd/optimize.hpp"
#include "ffqkd/storage.hpp"

namespace ffqkd::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { Csv, Json };

struct RunConfig {
  std::string preset = "none";
  ChannelParams channel;
  bool c_qm_auto = true;  ///< c_QM = c_q at alpha_QM = 0.2, otherwise c
  bool no_dark_counts = false;
  SweepSpec spec;  ///< chi_grid is rebuilt from chi_min/chi_max/chi_points
  double chi_min = 0.01;
  double chi_max = 0.5;
  int chi_points = 12;

  double min_km = 1;
  double max_km = 500;
  double step_km = 1;

  std::vector<int> repeaters{0, 1};
  std::optional<double> f = 2.0 / 3.0;  ///< nullopt takes c_q / c_c from the channel
  std::vector<std::optional<int>> depths{0, 1, 2, 3, 4, 5, std::nullopt};  ///< nullopt is N = inf

  double gamma_min = 0;
  double gamma_max = 1;
  double gamma_step = 0.01;

  double alpha_qm_min = 0;
  double alpha_qm_max = 0.1;
  double alpha_qm_step = 0.005;

  double p0 = 0.1;
  double p1 = 1;
  std::int64_t m = 5;
  std::int64_t trials = 100000;
  int bins = 0;
  int streams = 16;
  std::uint64_t seed = 1;

  bool single_node = true;
  StorageConfig storage_config = StorageConfig::Repeater;

  OutputFormat format = OutputFormat::Csv;
  std::string output;  ///< empty writes to stdout

  /// Channel parameters after the c_QM and dark-count switches are applied.
  ChannelParams effective_channel() const;
  SweepSpec effective_spec() const;
  double effective_f() const;
  std::vector<double> distance_grid() const;
  std::vector<double> alpha_qm_grid() const;
  std::vector<double> gamma_grid() const;
  void validate() const;
};

struct ConfigEntry {
  std::string key;
  std::string value;
};

/// All keys with their current values, in schema order; parses back to the same config.
std::vector<ConfigEntry> describe(const RunConfig& config);

std::vector<std::string> config_keys();

/// Assigns one key; unknown keys and malformed values throw ConfigError.
void set_key(RunConfig& config, std::string_view key, std::string_view value);

RunConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// Flat text. Lines of the form `# key = value` are read as well when
/// `metadata` is set, so an emitted CSV can be fed back as a config.
void apply_text(RunConfig& config, std::string_view text, std::string_view origin = "<config>",
                bool metadata = false);
void apply_json(RunConfig& config, std::string_view text, std::string_view origin = "<config>");

/// Dispatches on content: JSON object, emitted CSV, or flat text.
void apply_file(RunConfig& config, const std::filesystem::path& path);

std::vector<std::optional<int>> parse_depths(std::string_view text);
std::string format_double(double value);

}  // namespace ffqkd::cli
