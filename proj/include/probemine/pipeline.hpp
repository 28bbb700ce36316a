#pragma once

// Stage orchestration. Stages talk only through files in the output
// directory, so each one can be rerun on its own.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "probemine/by_location.hpp"
#include "probemine/core.hpp"

namespace probemine {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

/// Every recognised key with its default, in documentation order.
const std::vector<ConfigKey>& config_keys();

struct PipelineConfig {
  std::filesystem::path out = "out";
  /// Probe log; empty means <out>/synth/probes.csv.
  std::filesystem::path input;
  /// Empty means the built-in deployment.
  std::filesystem::path registry;
  /// Empty means <out>/synth/calendar.csv.
  std::filesystem::path calendar;
  /// Empty means the built-in default scenario.
  std::filesystem::path scenario;
  bool pre_coalesced = false;
  Duration tz_offset = kDefaultTzOffset;

  std::optional<std::uint64_t> seed;
  std::uint64_t synth_seed = 1;
  std::optional<std::size_t> synth_devices;
  std::optional<int> synth_days;

  std::size_t time_k = 4;
  std::size_t person_k = 8;
  std::size_t restarts = 20;
  std::size_t sse_k_max = 10;
  std::size_t silhouette_sample = 2000;

  Duration coalesce_gap = 180;
  Duration merge_threshold = 21600;
  Duration min_span = 300;
  Duration max_stay = 57600;

  double dominant_threshold = 0.55;
  std::vector<by_location::Window> windows{by_location::kAllWindows.begin(), by_location::kAllWindows.end()};
  by_location::HacInput hac_input = by_location::HacInput::Dissimilarity;
  by_location::CutRule hac_cut{0.75, true};

  /// Worker cap. Never part of the config hash: it cannot change results.
  std::size_t threads = 1;

  /// Throws ConfigError on unknown keys, unparsable values or values out of
  /// range.
  static PipelineConfig from_values(const std::map<std::string, std::string>& values);
  /// Canonical `key = value` lines for every key, sorted by name.
  std::map<std::string, std::string> to_values() const;
  /// CRC-32 over the canonical values, excluding `out` and `threads`.
  std::string hash() const;
};

/// Flat `key = value` lines; `#` starts a comment. Throws ConfigError.
std::map<std::string, std::string> parse_config(std::istream& in);
std::map<std::string, std::string> load_config(const std::filesystem::path& path);

inline constexpr std::array<std::string_view, 8> kStages = {
    "synth", "ingest", "preprocess", "cluster-time", "cluster-person", "cluster-location", "report", "all"};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);

  /// Runs one subcommand. Throws StageDependencyError naming a missing
  /// upstream file, or any error of the stage itself.
  void run(std::string_view stage);

  void synth();
  void ingest();
  void preprocess();
  void cluster_time();
  void cluster_person();
  void cluster_location();
  void report();
  /// Every stage in order; synth first when no input log is configured.
  void all();

  const PipelineConfig& config() const { return cfg_; }
  std::filesystem::path path(std::string_view name) const { return cfg_.out / name; }

 private:
  struct StageRecord;
  void record(const StageRecord& rec);
  std::filesystem::path require(const std::filesystem::path& p, std::string_view stage) const;
  std::filesystem::path input_path() const;
  std::filesystem::path calendar_path(std::string_view stage) const;
  std::uint64_t clustering_seed(std::string_view stage) const;

  PipelineConfig cfg_;
};

}  // namespace probemine
