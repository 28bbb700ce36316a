#pragma once

// Probe-log parsing, 3-minute coalescing into detection intervals, and
// assembly of sensor-level day trajectories.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "probemine/core.hpp"

namespace probemine::ingest {

inline constexpr Duration kDefaultCoalesceGap = 180;
/// A log with more than this fraction of malformed lines is rejected.
inline constexpr double kMaxMalformedFraction = 0.10;

struct ProbeEvent {
  DeviceId device;
  SensorId sensor;
  Timestamp timestamp = 0;

  bool operator==(const ProbeEvent&) const = default;
};

struct DetectionInterval {
  DeviceId device;
  SensorId sensor;
  Timestamp first_seen = 0;
  Timestamp last_seen = 0;
  /// Number of probe events absorbed, duplicates included.
  std::int64_t probes = 0;

  bool operator==(const DetectionInterval&) const = default;
};

enum class LogFormat { Csv, JsonLines };

struct ParseReport {
  std::size_t lines = 0;
  std::size_t records = 0;
  std::size_t malformed = 0;
  std::size_t out_of_span = 0;
  LogFormat format = LogFormat::Csv;
};

/// One parsed record. Raw probes have first_seen == last_seen and probes == 1.
struct RawRecord {
  std::string_view device;
  std::string_view sensor;
  Timestamp first_seen = 0;
  Timestamp last_seen = 0;
  std::int64_t probes = 1;
};

using RecordSink = std::function<void(const RawRecord&)>;

/// Line-at-a-time parser for both input formats. Raw logs carry
/// `device,sensor,timestamp`; pre-coalesced logs carry
/// `device,sensor,first_seen,last_seen[,probes]`.
class ProbeLogParser {
 public:
  explicit ProbeLogParser(bool pre_coalesced = false, const TimeFrame* frame = nullptr);

  /// The first non-empty byte decides the format: '{' means JSON-lines.
  void set_format(LogFormat f) { report_.format = f; }
  /// Feeds one line; calls `sink` for a well-formed in-span record.
  void feed(std::string_view line, const RecordSink& sink);
  /// Throws CorruptInput when more than 10% of data lines were malformed.
  const ParseReport& finish() const;
  const ParseReport& report() const { return report_; }

 private:
  bool parse_csv(std::string_view line, RawRecord& rec);
  bool parse_json(std::string_view line, RawRecord& rec);

  bool pre_coalesced_;
  const TimeFrame* frame_;
  bool first_line_ = true;
  std::string json_device_;
  std::string json_sensor_;
  ParseReport report_;
};

/// Parses a whole stream into events, in file order.
std::vector<ProbeEvent> parse_probe_log(std::istream& in, ParseReport* report = nullptr);

/// Streams a probe-log file (`.gz` accepted). Throws IoError / CorruptInput.
ParseReport read_probe_file(const std::filesystem::path& path, bool pre_coalesced,
                            const TimeFrame& frame, const RecordSink& sink);

/// Compact, interned interval storage used between ingest stages.
class IntervalSet {
 public:
  struct Interval {
    std::uint32_t device = 0;
    std::uint32_t sensor = 0;
    Timestamp first_seen = 0;
    Timestamp last_seen = 0;
    std::int64_t probes = 0;
  };

  std::vector<std::string> devices;
  std::vector<SensorId> sensors;
  /// Canonical order: device name, first_seen, last_seen, sensor name.
  std::vector<Interval> intervals;

  std::vector<DetectionInterval> materialize() const;
  std::int64_t total_probes() const;
};

/// Order-independent greedy chaining per (device, sensor): a probe joins a
/// run iff it lies within `gap` of the run's neighbouring probe. Each new
/// probe is merged into the runs it touches, so the result equals sorting
/// and chaining left to right, for any arrival order.
class Coalescer {
 public:
  explicit Coalescer(Duration gap = kDefaultCoalesceGap);

  void add(std::string_view device, std::string_view sensor, Timestamp t) {
    add_span(device, sensor, t, t, 1);
  }
  /// Pre-coalesced record; merged with any run within `gap`.
  void add_span(std::string_view device, std::string_view sensor, Timestamp first, Timestamp last,
                std::int64_t probes);

  std::size_t run_count() const { return run_count_; }
  IntervalSet finish() &&;

 private:
  struct Run {
    Timestamp first;
    Timestamp last;
    std::int64_t probes;
  };

  std::uint32_t intern_device(std::string_view d);
  std::uint32_t intern_sensor(std::string_view s);

  Duration gap_;
  std::unordered_map<std::string, std::uint32_t> device_ids_;
  std::vector<std::string> devices_;
  std::unordered_map<std::string, std::uint32_t> sensor_ids_;
  std::vector<SensorId> sensors_;
  std::unordered_map<std::uint64_t, std::uint32_t> key_slots_;
  std::vector<std::uint64_t> slot_keys_;
  std::vector<std::vector<Run>> runs_;
  std::size_t run_count_ = 0;
};

std::vector<DetectionInterval> coalesce_probes(std::span<const ProbeEvent> events,
                                               Duration gap = kDefaultCoalesceGap);

/// Groups intervals into per-(device, day) sensor-level trajectories in
/// canonical (device, day) order. Intervals crossing 03:00 are split there.
/// Stay and take times are filled in.
void for_each_sensor_trajectory(const IntervalSet& set, const TimeFrame& frame,
                                const std::function<void(DayTrajectory&&)>& sink);
std::vector<DayTrajectory> build_sensor_trajectories(const IntervalSet& set, const TimeFrame& frame);
std::vector<DayTrajectory> build_sensor_trajectories(std::span<const DetectionInterval> intervals,
                                                     const TimeFrame& frame);

}  // namespace probemine::ingest
