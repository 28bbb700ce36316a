#include "probemine/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstring>

#include <fmt/format.h>

#include "probemine/error.hpp"

namespace probemine {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

NodeId::NodeId(std::string_view name) {
  if (name.size() > kCapacity) {
    throw MalformedInput(fmt::format("node name '{}' longer than {} characters", name, kCapacity));
  }
  std::memcpy(chars_.data(), name.data(), name.size());
  chars_[kCapacity] = static_cast<char>(name.size());
}

DeviceId::DeviceId(std::string value) : value_(std::move(value)) {
  if (value_.empty()) throw MalformedInput("empty device id");
}

bool SensorId::valid(std::string_view name) {
  if (name.size() < 2 || name.size() > NodeId::kCapacity) return false;
  if (!std::isalpha(static_cast<unsigned char>(name[0]))) return false;
  return std::all_of(name.begin() + 1, name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

SensorId::SensorId(std::string_view name) {
  if (!valid(name)) throw MalformedInput(fmt::format("invalid sensor id '{}'", name));
  node_ = NodeId(name);
}

BuildingId building_of(std::string_view sensor) {
  if (sensor.empty()) throw MalformedInput("empty sensor id");
  return BuildingId(sensor.front());
}

BuildingId building_of(const NodeId& node) { return building_of(node.view()); }

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Hospital: return "hospital";
    case Category::Mall: return "mall";
    case Category::Institute: return "institute";
    case Category::Residential: return "residential";
  }
  return "?";
}

std::string_view to_string(Area a) {
  return a == Area::Facility ? "facility" : "residential";
}

std::string_view to_string(LocationCategory c) {
  switch (c) {
    case LocationCategory::Hospital: return "hospital";
    case LocationCategory::Mall: return "mall";
    case LocationCategory::Institute: return "institute";
    case LocationCategory::ResidentialDay: return "residential_day";
    case LocationCategory::ResidentialNight: return "residential_night";
  }
  return "?";
}

Category parse_category(std::string_view s) {
  const auto v = lower(s);
  if (v == "hospital") return Category::Hospital;
  if (v == "mall") return Category::Mall;
  if (v == "institute") return Category::Institute;
  if (v == "residential") return Category::Residential;
  throw MalformedInput(fmt::format("unknown category '{}'", s));
}

Area parse_area(std::string_view s) {
  const auto v = lower(s);
  if (v == "facility") return Area::Facility;
  if (v == "residential") return Area::Residential;
  throw MalformedInput(fmt::format("unknown area '{}'", s));
}

TimeFrame::TimeFrame(Duration tz_offset, std::optional<DatasetSpan> span)
    : tz_offset_(tz_offset), span_(span) {}

bool TimeFrame::in_span(Timestamp t) const {
  return !span_ || (span_->begin <= t && t < span_->end);
}

DayWindow TimeFrame::day_window_of(Timestamp t) const {
  if (!in_span(t)) {
    throw OutOfRange(fmt::format("timestamp {} outside dataset span [{}, {})", t, span_->begin,
                                 span_->end));
  }
  return window(floor_div(t + tz_offset_ - kDayStartClock, kDaySeconds));
}

DayWindow TimeFrame::window(std::int64_t index) const {
  const Timestamp start = index * kDaySeconds + kDayStartClock - tz_offset_;
  return DayWindow{index, start, start + kDaySeconds};
}

Duration TimeFrame::clock_seconds(Timestamp t) const {
  const std::int64_t local = t + tz_offset_;
  return local - floor_div(local, kDaySeconds) * kDaySeconds;
}

Timestamp TimeFrame::at_clock(const DayWindow& day, Duration clock) const {
  const Duration since_start = (clock - kDayStartClock + kDaySeconds) % kDaySeconds;
  return day.start + since_start;
}

std::string TimeFrame::date_string(std::int64_t day_index) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day_index}}};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

std::int64_t TimeFrame::parse_date(std::string_view date) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto bad = [&] { return MalformedInput(fmt::format("bad date '{}', want YYYY-MM-DD", date)); };
  if (date.size() != 10 || date[4] != '-' || date[7] != '-') throw bad();
  const char* p = date.data();
  if (std::from_chars(p, p + 4, y).ec != std::errc{} ||
      std::from_chars(p + 5, p + 7, m).ec != std::errc{} ||
      std::from_chars(p + 8, p + 10, d).ec != std::errc{}) {
    throw bad();
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw bad();
  return sys_days{ymd}.time_since_epoch().count();
}

int TimeFrame::weekday(std::int64_t day_index) {
  using namespace std::chrono;
  return static_cast<int>(std::chrono::weekday{sys_days{days{day_index}}}.iso_encoding()) - 1;
}

void relink(DayTrajectory& traj) {
  auto& e = traj.entries;
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i].next = i + 1 < e.size() ? e[i + 1].node : NodeId{};
  }
}

bool chain_holds(const DayTrajectory& traj) {
  const auto& e = traj.entries;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i].end < e[i].start) return false;
    if (!traj.day.contains(e[i].start) || e[i].end > traj.day.end) return false;
    if (i + 1 < e.size()) {
      if (e[i + 1].start < e[i].start) return false;
      if (e[i].next != e[i + 1].node) return false;
    } else if (!e[i].next.empty()) {
      return false;
    }
  }
  return true;
}

}  // namespace probemine
