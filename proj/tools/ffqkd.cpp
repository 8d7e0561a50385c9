#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ffqkd/commands.hpp"

namespace {

using namespace ffqkd::cli;

struct Shared {
  std::string preset;
  std::vector<std::string> config_files;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;  // config key -> value from dedicated options
};

void add_common(CLI::App* sub, Shared& s) {
  sub->add_option("--preset", s.preset, "built-in preset: fig1c, fig2b, fig2c, heatmap-d2");
  sub->add_option("-c,--config", s.config_files, "config file (key = value, JSON, or an emitted CSV)");
  sub->add_option("--set", s.sets, "override one key: --set key=value");
  // shorthand options for frequently changed keys
  const std::vector<std::pair<std::string, std::string>> shorthands = {
      {"--alpha", "alpha_db_per_km"},  {"--alpha-qm", "alpha_qm_db_per_km"}, {"--min-km", "min_km"},
      {"--max-km", "max_km"},          {"--step-km", "step_km"},             {"--repeaters", "repeaters"},
      {"--depths", "depths"},          {"--f", "f"},                         {"--mode", "mode"},
      {"--seed", "seed"},              {"--trials", "trials"},               {"--p0", "p0"},
      {"--p1", "p1"},                  {"--m", "m"},                         {"--format", "format"},
      {"-o,--output", "output"},       {"--storage-config", "storage_config"}, {"--cutoff", "cutoff"},
  };
  for (const auto& [flag, key] : shorthands) {
    sub->add_option_function<std::string>(flag, [&s, key = key](const std::string& v) { s.flags[key] = v; },
                                          "sets " + key);
  }
  sub->add_flag_function("--no-dark-counts", [&s](std::int64_t) { s.flags["no_dark_counts"] = "true"; },
                         "disable detector dark counts");
}

RunConfig build_config(const Shared& s) {
  RunConfig config = s.preset.empty() ? RunConfig{} : preset(s.preset);
  for (const auto& file : s.config_files) apply_file(config, file);
  // dedicated options, then generic --set overrides
  for (const auto& [key, value] : s.flags) set_key(config, key, value);
  for (const auto& kv : s.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_key(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

void emit(const Table& table, const RunConfig& config) {
  const std::string text = render(table, config);
  if (config.output.empty()) {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw std::runtime_error("failed writing to stdout");
  } else {
    write_atomic(config.output, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Key rates, bounds and timing for all-photonic multi-node QKD relays"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kGenerator));

  Shared shared;
  const std::vector<std::pair<std::string, std::function<Table(const RunConfig&)>>> commands = {
      {"bounds", cmd_bounds},         {"ideal", cmd_ideal},   {"practical", cmd_practical},
      {"heatmap", cmd_heatmap},       {"sim", cmd_sim},       {"thresholds", cmd_thresholds},
      {"storage", cmd_storage},
  };
  const std::map<std::string, std::string> help = {
      {"bounds", "repeaterless and n-repeater secret-key capacities"},
      {"ideal", "ideal nested-chain rates K_N and their crossovers with the bounds"},
      {"practical", "optimised multi-node rate with single-node and bound references"},
      {"heatmap", "optimal d2/L over (alpha_QM, L) with the break-even contour"},
      {"sim", "Monte Carlo of heralding and fixed-buffer matching"},
      {"thresholds", "critical memory loss and minimum scaling cost"},
      {"storage", "optical storage times for repeater or slow-light placement"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, fn] : commands) {
    subs[name] = app.add_subcommand(name, help.at(name));
    add_common(subs[name], shared);
  }
  app.add_subcommand("keys", "list config keys with their defaults");
  app.add_subcommand("presets", "list built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand("keys")) {
      for (const auto& e : describe(RunConfig{})) std::cout << e.key << " = " << e.value << "\n";
      return 0;
    }
    if (app.got_subcommand("presets")) {
      for (const auto& name : preset_names()) std::cout << name << "\n";
      return 0;
    }
    for (const auto& [name, fn] : commands)
      if (app.got_subcommand(subs[name])) {
        const RunConfig config = build_config(shared);
        emit(fn(config), config);
        return 0;
      }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "ffqkd: config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ffqkd: %s\n", e.what());
    return 1;
  }
  return 1;
}
