#pragma once

// Domain vocabulary shared by every stage: identifiers, day windows and the
// trajectory records produced by ingest and consumed by the perspectives.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace probemine {

/// Unix seconds.
using Timestamp = std::int64_t;
/// Seconds.
using Duration = std::int64_t;

inline constexpr Duration kHourSeconds = 3600;
inline constexpr Duration kDaySeconds = 86400;
/// Analysis days run from 03:00 local to 03:00 local the next day.
inline constexpr Duration kDayStartClock = 3 * kHourSeconds;
/// UTC+8, the deployment city's fixed offset.
inline constexpr Duration kDefaultTzOffset = 8 * kHourSeconds;

/// Short node name: a sensor ("A1") or a building ("A"). Fixed capacity so
/// trajectory entries stay trivially copyable.
class NodeId {
 public:
  static constexpr std::size_t kCapacity = 7;

  NodeId() = default;
  /// Throws MalformedInput when longer than kCapacity.
  explicit NodeId(std::string_view name);

  std::string_view view() const { return {chars_.data(), size()}; }
  std::string str() const { return std::string(view()); }
  std::size_t size() const { return static_cast<unsigned char>(chars_[kCapacity]); }
  bool empty() const { return size() == 0; }

  auto operator<=>(const NodeId&) const = default;

 private:
  std::array<char, kCapacity + 1> chars_{};
};

/// Opaque, pre-hashed device identifier. Raw MAC addresses never get here.
class DeviceId {
 public:
  DeviceId() = default;
  /// Throws MalformedInput when empty.
  explicit DeviceId(std::string value);

  const std::string& str() const { return value_; }
  auto operator<=>(const DeviceId&) const = default;

 private:
  std::string value_;
};

/// Sensor name: a letter naming the building followed by at least one more
/// character distinguishing sensors at that building.
class SensorId {
 public:
  /// Throws MalformedInput unless the name is a valid sensor id.
  explicit SensorId(std::string_view name);

  const NodeId& node() const { return node_; }
  std::string_view view() const { return node_.view(); }
  auto operator<=>(const SensorId&) const = default;

  static bool valid(std::string_view name);

 private:
  NodeId node_;
};

class BuildingId {
 public:
  constexpr BuildingId() = default;
  constexpr explicit BuildingId(char c) : c_(c) {}

  constexpr char value() const { return c_; }
  NodeId node() const { return NodeId(std::string_view(&c_, 1)); }
  std::string str() const { return std::string(1, c_); }
  constexpr auto operator<=>(const BuildingId&) const = default;

 private:
  char c_ = '\0';
};

/// First character of a sensor name. Single-character names are their own
/// building. Throws MalformedInput on an empty name.
BuildingId building_of(std::string_view sensor);
BuildingId building_of(const NodeId& node);

enum class Category { Hospital, Mall, Institute, Residential };
enum class Area { Facility, Residential };

/// Stay-time feature buckets; Residential splits by time of day.
enum class LocationCategory { Hospital, Mall, Institute, ResidentialDay, ResidentialNight };
inline constexpr std::size_t kLocationCategoryCount = 5;

std::string_view to_string(Category c);
std::string_view to_string(Area a);
std::string_view to_string(LocationCategory c);
/// Case-insensitive. Throws MalformedInput on unknown names.
Category parse_category(std::string_view s);
Area parse_area(std::string_view s);

struct DayWindow {
  /// Days since 1970-01-01 of the local calendar date the window starts on.
  std::int64_t index = 0;
  Timestamp start = 0;
  Timestamp end = 0;

  bool contains(Timestamp t) const { return start <= t && t < end; }
  auto operator<=>(const DayWindow&) const = default;
};

struct DatasetSpan {
  Timestamp begin = 0;
  /// Exclusive.
  Timestamp end = 0;
};

/// Local-time arithmetic for a single fixed UTC offset.
class TimeFrame {
 public:
  explicit TimeFrame(Duration tz_offset = kDefaultTzOffset,
                     std::optional<DatasetSpan> span = std::nullopt);

  Duration tz_offset() const { return tz_offset_; }
  const std::optional<DatasetSpan>& span() const { return span_; }
  bool in_span(Timestamp t) const;

  /// Half-open: 03:00:00 belongs to the new day. Throws OutOfRange when t is
  /// outside the configured span.
  DayWindow day_window_of(Timestamp t) const;
  DayWindow window(std::int64_t index) const;

  /// Seconds since local midnight, in [0, 86400).
  Duration clock_seconds(Timestamp t) const;
  /// Local clock hour, 0..23.
  int clock_hour(Timestamp t) const { return static_cast<int>(clock_seconds(t) / kHourSeconds); }
  /// Hour bucket within the analysis day: 0 is 03:00-04:00, 23 is 02:00-03:00.
  int day_hour_bucket(Timestamp t) const { return (clock_hour(t) + 21) % 24; }
  /// Timestamp of a local wall-clock time inside `day`. Clock times before
  /// 03:00 fall on the following calendar date.
  Timestamp at_clock(const DayWindow& day, Duration clock_seconds) const;

  /// "YYYY-MM-DD" of the local date the window starts on.
  static std::string date_string(std::int64_t day_index);
  /// Inverse of date_string. Throws MalformedInput.
  static std::int64_t parse_date(std::string_view date);
  /// 0 = Monday ... 6 = Sunday.
  static int weekday(std::int64_t day_index);

 private:
  Duration tz_offset_;
  std::optional<DatasetSpan> span_;
};

/// One detection of a device at a node: the tuple
/// (device, node, next, start, end, stay, take). The device lives on the
/// owning DayTrajectory.
struct TrajectoryEntry {
  NodeId node;
  /// Empty on the last entry.
  NodeId next;
  Timestamp start = 0;
  Timestamp end = 0;
  Duration stay = 0;
  Duration take = 0;

  bool operator==(const TrajectoryEntry&) const = default;
};

struct DayTrajectory {
  DeviceId device;
  DayWindow day;
  std::vector<TrajectoryEntry> entries;

  bool operator==(const DayTrajectory&) const = default;
};

/// Sets every `next` from the following entry's node, clearing the last.
void relink(DayTrajectory& traj);

/// Chain invariant: sorted starts, next[i] == node[i+1], last next empty,
/// start inside the window and end not past it.
bool chain_holds(const DayTrajectory& traj);

}  // namespace probemine
