#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace probemine {

enum class DayLabel { MonThu, Fri, PHEve, Sat, Sun, PH };
inline constexpr std::size_t kDayLabelCount = 6;
inline constexpr std::array<DayLabel, kDayLabelCount> kAllDayLabels = {
    DayLabel::MonThu, DayLabel::Fri, DayLabel::PHEve, DayLabel::Sat, DayLabel::Sun, DayLabel::PH};

/// The four coarse day types: Fridays absorb PH eves, Sundays absorb PHs.
enum class DayGroup { MonThu, FriPHEve, Sat, SunPH };
inline constexpr std::size_t kDayGroupCount = 4;
inline constexpr std::array<DayGroup, kDayGroupCount> kAllDayGroups = {
    DayGroup::MonThu, DayGroup::FriPHEve, DayGroup::Sat, DayGroup::SunPH};

std::string_view to_string(DayLabel l);
std::string_view to_string(DayGroup g);
/// Throws MalformedInput.
DayLabel parse_day_label(std::string_view s);
DayGroup group_of(DayLabel l);

/// Day-type label per analysis day. Public holidays are configuration, never
/// inferred.
class Calendar {
 public:
  Calendar() = default;

  /// CSV `date,day_label` with a header line.
  static Calendar parse(std::istream& in);
  static Calendar load(const std::filesystem::path& path);
  /// Labels `n_days` consecutive days from `first_day` by weekday, then marks
  /// `holidays` as PH and the working day before each as PHEve.
  static Calendar build(std::int64_t first_day, int n_days, const std::vector<std::int64_t>& holidays);

  void set(std::int64_t day_index, DayLabel label) { labels_[day_index] = label; }
  std::optional<DayLabel> label_of(std::int64_t day_index) const;
  std::vector<std::int64_t> days() const;
  std::size_t size() const { return labels_.size(); }
  std::string to_text() const;

 private:
  std::map<std::int64_t, DayLabel> labels_;
};

}  // namespace probemine
