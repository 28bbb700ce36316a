// probemine: command-line driver for the trajectory mining pipeline.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "probemine/error.hpp"
#include "probemine/pipeline.hpp"
#include "probemine/synthgen.hpp"

int main(int argc, char** argv) {
  using namespace probemine;

  CLI::App app{"Wi-Fi probe trajectory mining: ingest, preprocess and cluster by time, person and location"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_file;
  std::string log_level = "info";
  bool print_config = false;
  bool dump_scenario = false;
  app.add_option("--config", config_file, "flat key = value config file");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");
  app.add_flag("--dump-scenario", dump_scenario, "print the built-in default scenario and exit");

  std::map<std::string, std::string> overrides;
  for (const auto& key : config_keys()) {
    const std::string name(key.name);
    app.add_option_function<std::string>(
           "--" + name, [&overrides, name](const std::string& v) { overrides[name] = v; },
           fmt::format("{} (default: {})", key.help, key.default_value.empty() ? "unset" : key.default_value))
        ->group("Pipeline");
  }

  const std::array<std::pair<const char*, const char*>, 8> commands = {{
      {"synth", "generate a synthetic probe log with planted ground truth"},
      {"ingest", "parse and coalesce a probe log into sensor-level day trajectories"},
      {"preprocess", "merge to building level and filter"},
      {"cluster-time", "cluster (building, day) hourly head-count profiles"},
      {"cluster-person", "cluster day trajectories by stay time per location category"},
      {"cluster-location", "transition matrices, Ward clustering and dominant directions"},
      {"report", "summarise every stage into report.txt"},
      {"all", "run every stage in order (synth first when no input is set)"},
  }};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto logger = spdlog::stderr_color_mt("probemine");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");

  if (dump_scenario) {
    std::cout << synth::default_scenario().to_text();
    return 0;
  }

  try {
    std::map<std::string, std::string> values;
    if (!config_file.empty()) values = load_config(config_file);
    for (const auto& [k, v] : overrides) values[k] = v;
    const auto cfg = PipelineConfig::from_values(values);
    if (print_config) {
      for (const auto& [k, v] : cfg.to_values()) std::cout << k << " = " << v << "\n";
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 2;
    }
    Pipeline pipeline(cfg);
    pipeline.run(app.get_subcommands().front()->get_name());
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return 2;
  } catch (const StageDependencyError& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
