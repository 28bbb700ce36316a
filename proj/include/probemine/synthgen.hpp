#pragma once

// Seeded synthetic probe-log generator. Devices follow behavioural
// archetypes whose daily itineraries depend on the day type; the emitted log
// is accompanied by the planted truth.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "probemine/by_location.hpp"
#include "probemine/calendar.hpp"
#include "probemine/core.hpp"
#include "probemine/registry.hpp"

namespace probemine::synth {

enum class TargetKind { Building, Category, Area, Home, Work };

/// Where a step takes place. Pools (category, area) draw a building per
/// day, never the building of the previous stay.
struct Target {
  TargetKind kind = TargetKind::Building;
  BuildingId building;
  Category category = Category::Mall;
  Area area = Area::Facility;

  std::string str() const;
  /// `building:X`, `category:mall`, `area:facility`, `home`, `work`.
  static Target parse(std::string_view s);
  bool operator==(const Target&) const = default;
};

enum class StartMode { At, Profile, After };
enum class StayMode { Duration, Until };

struct Step {
  Target target;
  StartMode start = StartMode::After;
  /// Clock time (seconds after local midnight, up to 27:00) for At.
  Duration start_clock = 0;
  Duration start_jitter = 0;
  StayMode stay = StayMode::Duration;
  /// Mean duration, or mean end clock for Until.
  Duration stay_value = 0;
  Duration stay_jitter = 0;

  std::string str() const;
  /// `<target> at HH:MM~<jitter> | profile | after` then
  /// `stay <dur>~<jitter> | until HH:MM~<jitter>`. Durations take s/m/h.
  static Step parse(std::string_view s);
};

struct WeightedBuilding {
  BuildingId building;
  double weight = 1;
};

struct ArchetypeSpec {
  std::string name;
  double share = 0;
  /// Probability of appearing on a day of each group.
  std::array<double, kDayGroupCount> presence{1, 1, 1, 1};
  /// Added to every `until` clock on days of each group.
  std::array<Duration, kDayGroupCount> until_shift{};
  std::vector<Step> steps;
  /// Pool for the per-device `work` building.
  Target work{TargetKind::Area, {}, Category::Mall, Area::Facility};
  /// Optional preferences; empty means uniform over the pool.
  std::vector<WeightedBuilding> work_weights;
  std::vector<WeightedBuilding> home_weights;
};

/// Start-hour weights (local clock hours 0..23) for `profile` steps.
using DayProfile = std::array<double, 24>;

enum class Emission { Bursts, Continuous };

struct Scenario {
  std::size_t devices = 5000;
  int days = 28;
  std::int64_t first_day = 0;
  std::vector<std::int64_t> holidays;
  Duration tz_offset = kDefaultTzOffset;
  int sensors_per_building = 3;
  /// Bursts: probes only around entry, exit and every `max_burst_gap`.
  /// Continuous: a probe every 60-120 s for the whole stay.
  Emission emission = Emission::Bursts;
  int burst_probes = 2;
  Duration burst_spacing = 30;
  Duration max_burst_gap = 4 * kHourSeconds;
  Duration continuous_min_gap = 60;
  Duration continuous_max_gap = 120;
  Duration travel_min = 120;
  Duration travel_max = 900;
  std::array<DayProfile, kDayGroupCount> profiles{};
  std::vector<ArchetypeSpec> archetypes;

  /// Throws SpecError describing the first problem found.
  void validate(const DeploymentRegistry& registry) const;
  Calendar calendar() const;

  static Scenario parse(std::istream& in);
  static Scenario load(const std::filesystem::path& path);
  std::string to_text() const;
};

/// Eight archetypes (short facility visits, mall shoppers, long mall visits,
/// mall workers, hospital visitors, hospital workers, institute members,
/// residents) over 28 days from Monday 2024-03-25 with two public holidays.
Scenario default_scenario();
/// Residents commuting to a facility workplace in the morning and home in
/// the evening.
Scenario commuter_scenario();

struct PlannedStay {
  BuildingId building;
  /// Inclusive probe range: the first and last probe of the stay.
  Timestamp start = 0;
  Timestamp end = 0;

  bool operator==(const PlannedStay&) const = default;
};

struct Probe {
  std::uint32_t device = 0;
  std::uint32_t sensor = 0;
  Timestamp timestamp = 0;

  auto operator<=>(const Probe&) const = default;
};

struct DevicePlan {
  std::uint32_t device = 0;
  std::int64_t day = 0;
  std::uint32_t stay_count = 0;
  /// Empty unless GenerateOptions::keep_stays.
  std::vector<PlannedStay> stays;
};

struct GroundTruth {
  std::vector<std::string> archetypes;
  std::vector<std::string> devices;
  std::vector<std::string> sensors;
  std::vector<std::uint32_t> device_archetype;
  std::vector<BuildingId> device_home;
  std::vector<BuildingId> device_work;
  /// Day group driving each generated day.
  std::vector<std::pair<std::int64_t, DayGroup>> day_groups;
  /// Every device-day with at least one stay, in (day, device) order.
  std::vector<DevicePlan> plans;
  /// Transition counts of the planted itineraries by departure window.
  std::array<by_location::CountMatrix, by_location::kWindowCount> transitions;
};

struct GenerateOptions {
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// Keep stays in GroundTruth::plans (archetype labels are always kept).
  bool keep_stays = true;
};

/// One call per generated day, probes sorted by (timestamp, device, sensor).
using ProbeSink = std::function<void(std::int64_t day, std::span<const Probe> probes)>;

/// Deterministic for a given (scenario, registry, seed); the thread count
/// never changes the output. Throws SpecError for invalid scenarios.
GroundTruth generate(const Scenario& scenario, const DeploymentRegistry& registry, const GenerateOptions& opts,
                     const ProbeSink& sink);

struct SynthOutputs {
  std::filesystem::path probes;
  std::filesystem::path ground_truth;
  std::filesystem::path calendar;
  std::filesystem::path registry;
  std::size_t probe_count = 0;
};

/// Writes probes.csv, ground_truth.csv, calendar.csv and registry.csv.
SynthOutputs generate_to_directory(const Scenario& scenario, const DeploymentRegistry& registry,
                                   const GenerateOptions& opts, const std::filesystem::path& dir,
                                   GroundTruth* truth = nullptr);

/// ground_truth.csv rows: `kind,key,slot,label,value` with kinds
/// device_day (device, date, archetype, stays), building_day (building,
/// date, day group) and transition (from>to, window, -, count).
void write_ground_truth(const GroundTruth& truth, const DeploymentRegistry& registry,
                        const std::filesystem::path& path);

struct TruthTables {
  /// (device, day index) -> archetype name.
  std::vector<std::tuple<std::string, std::int64_t, std::string>> device_days;
  /// (building, day index) -> day group.
  std::vector<std::tuple<BuildingId, std::int64_t, DayGroup>> building_days;
};

TruthTables read_ground_truth(const std::filesystem::path& path);

}  // namespace probemine::synth
