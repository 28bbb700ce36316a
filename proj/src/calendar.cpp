#include "probemine/calendar.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "probemine/core.hpp"
#include "probemine/error.hpp"
#include "probemine/text.hpp"

namespace probemine {

std::string_view to_string(DayLabel l) {
  switch (l) {
    case DayLabel::MonThu: return "MonThu";
    case DayLabel::Fri: return "Fri";
    case DayLabel::PHEve: return "PHEve";
    case DayLabel::Sat: return "Sat";
    case DayLabel::Sun: return "Sun";
    case DayLabel::PH: return "PH";
  }
  return "?";
}

std::string_view to_string(DayGroup g) {
  switch (g) {
    case DayGroup::MonThu: return "MonThu";
    case DayGroup::FriPHEve: return "FriPHEve";
    case DayGroup::Sat: return "Sat";
    case DayGroup::SunPH: return "SunPH";
  }
  return "?";
}

DayLabel parse_day_label(std::string_view s) {
  for (auto l : kAllDayLabels) {
    if (to_string(l) == s) return l;
  }
  throw MalformedInput(fmt::format("unknown day label '{}'", s));
}

DayGroup group_of(DayLabel l) {
  switch (l) {
    case DayLabel::MonThu: return DayGroup::MonThu;
    case DayLabel::Fri:
    case DayLabel::PHEve: return DayGroup::FriPHEve;
    case DayLabel::Sat: return DayGroup::Sat;
    case DayLabel::Sun:
    case DayLabel::PH: return DayGroup::SunPH;
  }
  return DayGroup::MonThu;
}

Calendar Calendar::parse(std::istream& in) {
  Calendar cal;
  std::string line;
  if (!std::getline(in, line)) return cal;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    const auto f = text::split(t, ',');
    if (f.size() != 2) throw MalformedInput(fmt::format("calendar line {}: want date,day_label", lineno));
    cal.set(TimeFrame::parse_date(text::trim(f[0])), parse_day_label(text::trim(f[1])));
  }
  return cal;
}

Calendar Calendar::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open calendar '{}'", path.string()));
  return parse(in);
}

Calendar Calendar::build(std::int64_t first_day, int n_days, const std::vector<std::int64_t>& holidays) {
  Calendar cal;
  const std::set<std::int64_t> ph(holidays.begin(), holidays.end());
  for (int i = 0; i < n_days; ++i) {
    const auto d = first_day + i;
    const int wd = TimeFrame::weekday(d);
    DayLabel l = wd <= 3 ? DayLabel::MonThu : wd == 4 ? DayLabel::Fri : wd == 5 ? DayLabel::Sat : DayLabel::Sun;
    if (ph.count(d)) {
      l = DayLabel::PH;
    } else if (ph.count(d + 1) && wd <= 4) {
      l = DayLabel::PHEve;
    }
    cal.set(d, l);
  }
  return cal;
}

std::optional<DayLabel> Calendar::label_of(std::int64_t day_index) const {
  const auto it = labels_.find(day_index);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::int64_t> Calendar::days() const {
  std::vector<std::int64_t> out;
  out.reserve(labels_.size());
  for (const auto& [d, l] : labels_) out.push_back(d);
  return out;
}

std::string Calendar::to_text() const {
  std::string out = "date,day_label\n";
  for (const auto& [d, l] : labels_) out += fmt::format("{},{}\n", TimeFrame::date_string(d), to_string(l));
  return out;
}

}  // namespace probemine
