#include "probemine/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "probemine/error.hpp"
#include "probemine/parallel.hpp"
#include "probemine/random.hpp"
#include "probemine/text.hpp"

namespace probemine::synth {

using namespace text;
namespace {

constexpr Duration kMinStay = 300;
constexpr Duration kMaxClock = 27 * kHourSeconds;
/// Consecutive probes of one stay must stay below the building merge gap.
constexpr Duration kMergeGap = 6 * kHourSeconds;
constexpr Duration kCoalesceGap = 180;

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const auto b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

Duration parse_duration(std::string_view s) {
  if (s.empty()) throw SpecError("empty duration");
  double scale = 1;
  switch (s.back()) {
    case 's': scale = 1; s.remove_suffix(1); break;
    case 'm': scale = 60; s.remove_suffix(1); break;
    case 'h': scale = 3600; s.remove_suffix(1); break;
    default: break;
  }
  double v = 0;
  if (!parse_double(s, v) || v < 0) throw SpecError(fmt::format("bad duration '{}'", s));
  return static_cast<Duration>(std::llround(v * scale));
}

Duration parse_signed_duration(std::string_view s) {
  if (!s.empty() && s.front() == '-') return -parse_duration(s.substr(1));
  return parse_duration(s);
}

std::string format_duration(Duration d) {
  if (d < 0) return "-" + format_duration(-d);
  if (d != 0 && d % 3600 == 0) return fmt::format("{}h", d / 3600);
  if (d != 0 && d % 60 == 0) return fmt::format("{}m", d / 60);
  return fmt::format("{}s", d);
}

Duration parse_clock(std::string_view s) {
  const auto parts = split(s, ':');
  std::int64_t h = 0;
  std::int64_t m = 0;
  if (parts.size() != 2 || !parse_int(parts[0], h) || !parse_int(parts[1], m) || h < 0 || m < 0 || m > 59) {
    throw SpecError(fmt::format("bad clock time '{}'", s));
  }
  const Duration c = h * kHourSeconds + m * 60;
  if (c > kMaxClock) throw SpecError(fmt::format("clock time '{}' past 27:00", s));
  return c;
}

std::string format_clock(Duration c) { return fmt::format("{:02}:{:02}", c / kHourSeconds, c % kHourSeconds / 60); }

/// `value[~jitter]`.
std::pair<std::string_view, std::string_view> split_jitter(std::string_view s) {
  const auto p = s.find('~');
  if (p == std::string_view::npos) return {s, {}};
  return {s.substr(0, p), s.substr(p + 1)};
}

/// Clock seconds mapped onto [03:00, 27:00] so the analysis day is monotone.
Duration day_clock(Duration c) { return c < kDayStartClock ? c + kDaySeconds : c; }

std::vector<WeightedBuilding> parse_weights(std::string_view s) {
  std::vector<WeightedBuilding> out;
  for (const auto w : words(s)) {
    const auto p = w.find(':');
    double v = 1;
    if (p == std::string_view::npos || p != 1 || !parse_double(w.substr(2), v) || v < 0) {
      throw SpecError(fmt::format("bad building weight '{}'", w));
    }
    out.push_back({BuildingId(w[0]), v});
  }
  return out;
}

std::string format_weights(const std::vector<WeightedBuilding>& ws) {
  std::string out;
  for (const auto& w : ws) out += fmt::format("{}{}:{}", out.empty() ? "" : " ", w.building.str(), w.weight);
  return out;
}

std::vector<BuildingId> pool_of(const Target& t, const DeploymentRegistry& registry) {
  switch (t.kind) {
    case TargetKind::Building:
      if (!registry.find(t.building)) throw SpecError(fmt::format("unknown building '{}'", t.building.str()));
      return {t.building};
    case TargetKind::Category: return registry.buildings_in(t.category);
    case TargetKind::Area: return registry.buildings_in(t.area);
    case TargetKind::Home: return registry.buildings_in(Area::Residential);
    case TargetKind::Work: return {};
  }
  return {};
}

struct WeightedPool {
  std::vector<BuildingId> buildings;
  std::vector<double> weights;

  BuildingId draw(rnd::Engine& rng, BuildingId exclude, bool has_exclude) const {
    double total = 0;
    for (std::size_t i = 0; i < buildings.size(); ++i) {
      if (!(has_exclude && buildings[i] == exclude)) total += weights[i];
    }
    if (total <= 0) throw SpecError("no building left to draw from");
    double x = rnd::unit(rng) * total;
    BuildingId last;
    for (std::size_t i = 0; i < buildings.size(); ++i) {
      if (has_exclude && buildings[i] == exclude) continue;
      last = buildings[i];
      if (weights[i] <= 0) continue;
      if (x < weights[i]) return buildings[i];
      x -= weights[i];
    }
    return last;
  }
};

WeightedPool make_pool(const std::vector<BuildingId>& buildings, const std::vector<WeightedBuilding>& weights) {
  WeightedPool p;
  p.buildings = buildings;
  p.weights.assign(buildings.size(), weights.empty() ? 1.0 : 0.0);
  for (const auto& w : weights) {
    const auto it = std::find(buildings.begin(), buildings.end(), w.building);
    if (it == buildings.end()) throw SpecError(fmt::format("weighted building '{}' is not in the pool", w.building.str()));
    p.weights[static_cast<std::size_t>(it - buildings.begin())] = w.weight;
  }
  return p;
}

std::string device_name(std::uint64_t seed, std::size_t i) {
  return fmt::format("{:016x}", rnd::splitmix64(rnd::derive(seed, 0x6465766963657300ULL) ^ i));
}

std::string sensor_name(BuildingId b, int s) { return fmt::format("{}{}", b.str(), s); }

bool fixed_target(const Target& t) {
  return t.kind == TargetKind::Building || t.kind == TargetKind::Home || t.kind == TargetKind::Work;
}

}  // namespace

std::string Target::str() const {
  switch (kind) {
    case TargetKind::Building: return "building:" + building.str();
    case TargetKind::Category: {
      std::string c(to_string(category));
      std::transform(c.begin(), c.end(), c.begin(), [](unsigned char ch) { return std::tolower(ch); });
      return "category:" + c;
    }
    case TargetKind::Area: {
      std::string a(to_string(area));
      std::transform(a.begin(), a.end(), a.begin(), [](unsigned char ch) { return std::tolower(ch); });
      return "area:" + a;
    }
    case TargetKind::Home: return "home";
    case TargetKind::Work: return "work";
  }
  return "?";
}

Target Target::parse(std::string_view s) {
  Target t;
  if (s == "home") {
    t.kind = TargetKind::Home;
    return t;
  }
  if (s == "work") {
    t.kind = TargetKind::Work;
    return t;
  }
  const auto p = s.find(':');
  if (p == std::string_view::npos) throw SpecError(fmt::format("bad target '{}'", s));
  const auto kind = s.substr(0, p);
  const auto value = s.substr(p + 1);
  try {
    if (kind == "building" && value.size() == 1) {
      t.kind = TargetKind::Building;
      t.building = BuildingId(value[0]);
    } else if (kind == "category") {
      t.kind = TargetKind::Category;
      t.category = parse_category(value);
    } else if (kind == "area") {
      t.kind = TargetKind::Area;
      t.area = parse_area(value);
    } else {
      throw SpecError(fmt::format("bad target '{}'", s));
    }
  } catch (const MalformedInput& e) {
    throw SpecError(e.what());
  }
  return t;
}

std::string Step::str() const {
  std::string out = target.str();
  switch (start) {
    case StartMode::At: out += fmt::format(" at {}~{}", format_clock(start_clock), format_duration(start_jitter)); break;
    case StartMode::Profile: out += " profile"; break;
    case StartMode::After: out += " after"; break;
  }
  if (stay == StayMode::Duration) {
    out += fmt::format(" stay {}~{}", format_duration(stay_value), format_duration(stay_jitter));
  } else {
    out += fmt::format(" until {}~{}", format_clock(stay_value), format_duration(stay_jitter));
  }
  return out;
}

Step Step::parse(std::string_view s) {
  const auto w = words(s);
  Step step;
  std::size_t i = 0;
  if (w.empty()) throw SpecError("empty step");
  step.target = Target::parse(w[i++]);
  if (i >= w.size()) throw SpecError(fmt::format("step '{}' has no start", s));
  const auto mode = w[i++];
  if (mode == "at") {
    if (i >= w.size()) throw SpecError(fmt::format("step '{}': 'at' needs a clock time", s));
    const auto [v, j] = split_jitter(w[i++]);
    step.start = StartMode::At;
    step.start_clock = parse_clock(v);
    step.start_jitter = j.empty() ? 0 : parse_duration(j);
  } else if (mode == "profile") {
    step.start = StartMode::Profile;
  } else if (mode == "after") {
    step.start = StartMode::After;
  } else {
    throw SpecError(fmt::format("step '{}': unknown start '{}'", s, mode));
  }
  if (i >= w.size()) throw SpecError(fmt::format("step '{}' has no stay", s));
  const auto stay = w[i++];
  if (i >= w.size()) throw SpecError(fmt::format("step '{}': '{}' needs a value", s, stay));
  const auto [v, j] = split_jitter(w[i++]);
  if (stay == "stay") {
    step.stay = StayMode::Duration;
    step.stay_value = parse_duration(v);
  } else if (stay == "until") {
    step.stay = StayMode::Until;
    step.stay_value = parse_clock(v);
  } else {
    throw SpecError(fmt::format("step '{}': unknown stay '{}'", s, stay));
  }
  step.stay_jitter = j.empty() ? 0 : parse_duration(j);
  if (i != w.size()) throw SpecError(fmt::format("step '{}': trailing words", s));
  return step;
}

Calendar Scenario::calendar() const { return Calendar::build(first_day, days, holidays); }

void Scenario::validate(const DeploymentRegistry& registry) const {
  if (devices == 0) throw SpecError("devices must be >= 1");
  if (days < 1) throw SpecError("days must be >= 1");
  if (sensors_per_building < 1 || sensors_per_building > 99) throw SpecError("sensors_per_building must be 1..99");
  if (burst_probes < 1) throw SpecError("burst_probes must be >= 1");
  if (burst_spacing < 1 || burst_spacing > kCoalesceGap) throw SpecError("burst_spacing must be 1..180 s");
  if (max_burst_gap < 1 || max_burst_gap >= kMergeGap) throw SpecError("max_burst_gap must be below 6 h");
  if (continuous_min_gap < 1 || continuous_min_gap > continuous_max_gap || continuous_max_gap > kCoalesceGap) {
    throw SpecError("continuous gaps must satisfy 1 <= min <= max <= 180 s");
  }
  if (travel_min < 1 || travel_min > travel_max) throw SpecError("travel must satisfy 1 s <= min <= max");
  if (archetypes.empty()) throw SpecError("scenario has no archetypes");
  double total = 0;
  for (const auto& a : archetypes) {
    const auto where = fmt::format("archetype '{}'", a.name);
    if (!(a.share >= 0 && a.share <= 1)) throw SpecError(where + ": share must be in [0, 1]");
    total += a.share;
    for (const auto p : a.presence) {
      if (!(p >= 0 && p <= 1)) throw SpecError(where + ": presence must be in [0, 1]");
    }
    if (a.steps.empty()) throw SpecError(where + ": no steps");
    if (a.work.kind == TargetKind::Home || a.work.kind == TargetKind::Work) {
      throw SpecError(where + ": work pool must be a building, category or area");
    }
    make_pool(pool_of(a.work, registry), a.work_weights);
    make_pool(registry.buildings_in(Area::Residential), a.home_weights);
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
      const auto& s = a.steps[i];
      const auto at = fmt::format("{} step {}", where, i + 1);
      if (s.target.kind != TargetKind::Work && s.target.kind != TargetKind::Home && pool_of(s.target, registry).empty()) {
        throw SpecError(at + ": target matches no building");
      }
      if (i == 0 && s.start == StartMode::After) throw SpecError(at + ": first step cannot start 'after'");
      if (s.stay == StayMode::Duration && s.stay_value <= 0) throw SpecError(at + ": stay must be positive");
      if (s.start == StartMode::Profile) {
        for (const auto& p : profiles) {
          if (std::accumulate(p.begin(), p.end(), 0.0) <= 0) throw SpecError(at + ": profile start with an empty profile");
        }
      }
      if (s.start == StartMode::At && s.stay == StayMode::Until &&
          day_clock(s.stay_value) <= day_clock(s.start_clock)) {
        throw SpecError(at + ": stay ends before it starts");
      }
      if (i > 0) {
        const auto& prev = a.steps[i - 1];
        if (fixed_target(s.target) && s.target == prev.target) {
          throw SpecError(at + ": same place as the previous step");
        }
        if (s.start == StartMode::At && prev.start == StartMode::At) {
          const Duration prev_end = prev.stay == StayMode::Until ? day_clock(prev.stay_value)
                                                                 : day_clock(prev.start_clock) + prev.stay_value;
          if (prev_end > day_clock(s.start_clock)) throw SpecError(at + ": overlaps the previous mandatory stay");
        }
      }
    }
  }
  if (std::abs(total - 1.0) > 1e-6) throw SpecError(fmt::format("archetype shares sum to {}, not 1", total));
}

Scenario Scenario::parse(std::istream& in) {
  Scenario sc;
  sc.archetypes.clear();
  std::string line;
  int lineno = 0;
  enum class Section { Global, Profile, Archetype } section = Section::Global;
  std::size_t profile = 0;
  const auto fail = [&](const std::string& msg) { throw SpecError(fmt::format("scenario line {}: {}", lineno, msg)); };
  while (std::getline(in, line)) {
    ++lineno;
    auto text = std::string_view(line);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') fail("unterminated section header");
      const auto w = words(text.substr(1, text.size() - 2));
      if (w.size() != 2) fail("section header needs a kind and a name");
      if (w[0] == "profile") {
        section = Section::Profile;
        bool found = false;
        for (std::size_t g = 0; g < kDayGroupCount; ++g) {
          if (to_string(kAllDayGroups[g]) == w[1]) {
            profile = g;
            found = true;
          }
        }
        if (!found) fail(fmt::format("unknown day group '{}'", w[1]));
      } else if (w[0] == "archetype") {
        section = Section::Archetype;
        sc.archetypes.push_back({});
        sc.archetypes.back().name = std::string(w[1]);
      } else {
        fail(fmt::format("unknown section '{}'", w[0]));
      }
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    const auto key = trim(text.substr(0, eq));
    const auto value = trim(text.substr(eq + 1));
    const auto as_int = [&]() {
      std::int64_t v = 0;
      if (!parse_int(value, v)) fail(fmt::format("'{}' needs an integer", key));
      return v;
    };
    const auto numbers = [&](std::size_t n) {
      std::vector<double> out;
      for (const auto w : words(value)) {
        double v = 0;
        if (!parse_double(w, v)) fail(fmt::format("bad number '{}'", w));
        out.push_back(v);
      }
      if (out.size() != n) fail(fmt::format("'{}' needs {} numbers", key, n));
      return out;
    };
    try {
      if (section == Section::Global) {
        if (key == "devices") {
          const auto v = as_int();
          if (v < 0) fail("devices must be >= 0");
          sc.devices = static_cast<std::size_t>(v);
        } else if (key == "days") {
          sc.days = static_cast<int>(as_int());
        } else if (key == "first_date") {
          sc.first_day = TimeFrame::parse_date(value);
        } else if (key == "holidays") {
          sc.holidays.clear();
          for (const auto w : words(value)) sc.holidays.push_back(TimeFrame::parse_date(w));
        } else if (key == "tz_offset") {
          sc.tz_offset = as_int();
        } else if (key == "sensors_per_building") {
          sc.sensors_per_building = static_cast<int>(as_int());
        } else if (key == "emission") {
          if (value == "bursts") sc.emission = Emission::Bursts;
          else if (value == "continuous") sc.emission = Emission::Continuous;
          else fail("emission must be bursts or continuous");
        } else if (key == "burst_probes") {
          sc.burst_probes = static_cast<int>(as_int());
        } else if (key == "burst_spacing") {
          sc.burst_spacing = parse_duration(value);
        } else if (key == "max_burst_gap") {
          sc.max_burst_gap = parse_duration(value);
        } else if (key == "continuous_gap" || key == "travel") {
          const auto w = words(value);
          if (w.size() != 2) fail(fmt::format("'{}' needs a minimum and a maximum", key));
          auto& lo = key == "travel" ? sc.travel_min : sc.continuous_min_gap;
          auto& hi = key == "travel" ? sc.travel_max : sc.continuous_max_gap;
          lo = parse_duration(w[0]);
          hi = parse_duration(w[1]);
        } else {
          fail(fmt::format("unknown key '{}'", key));
        }
      } else if (section == Section::Profile) {
        if (key != "weights") fail(fmt::format("unknown profile key '{}'", key));
        const auto v = numbers(24);
        for (std::size_t h = 0; h < 24; ++h) {
          if (v[h] < 0) fail("profile weights must be >= 0");
          sc.profiles[profile][h] = v[h];
        }
      } else {
        auto& a = sc.archetypes.back();
        if (key == "share") {
          a.share = numbers(1)[0];
        } else if (key == "presence") {
          const auto v = numbers(kDayGroupCount);
          std::copy(v.begin(), v.end(), a.presence.begin());
        } else if (key == "until_shift") {
          const auto w = words(value);
          if (w.size() != kDayGroupCount) fail("until_shift needs one duration per day group");
          for (std::size_t g = 0; g < kDayGroupCount; ++g) a.until_shift[g] = parse_signed_duration(w[g]);
        } else if (key == "work") {
          a.work = Target::parse(value);
        } else if (key == "work_weights") {
          a.work_weights = parse_weights(value);
        } else if (key == "home_weights") {
          a.home_weights = parse_weights(value);
        } else if (key == "step") {
          a.steps.push_back(Step::parse(value));
        } else {
          fail(fmt::format("unknown archetype key '{}'", key));
        }
      }
    } catch (const SpecError&) {
      throw;
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  return sc;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open scenario '{}'", path.string()));
  return parse(in);
}

std::string Scenario::to_text() const {
  std::string out;
  out += fmt::format("devices = {}\ndays = {}\nfirst_date = {}\n", devices, days, TimeFrame::date_string(first_day));
  out += "holidays =";
  for (const auto h : holidays) out += " " + TimeFrame::date_string(h);
  out += fmt::format("\ntz_offset = {}\nsensors_per_building = {}\n", tz_offset, sensors_per_building);
  out += fmt::format("emission = {}\n", emission == Emission::Bursts ? "bursts" : "continuous");
  out += fmt::format("burst_probes = {}\nburst_spacing = {}\nmax_burst_gap = {}\n", burst_probes,
                     format_duration(burst_spacing), format_duration(max_burst_gap));
  out += fmt::format("continuous_gap = {} {}\ntravel = {} {}\n", format_duration(continuous_min_gap),
                     format_duration(continuous_max_gap), format_duration(travel_min), format_duration(travel_max));
  for (std::size_t g = 0; g < kDayGroupCount; ++g) {
    out += fmt::format("\n[profile {}]\nweights =", to_string(kAllDayGroups[g]));
    for (const auto w : profiles[g]) out += fmt::format(" {}", w);
    out += "\n";
  }
  for (const auto& a : archetypes) {
    out += fmt::format("\n[archetype {}]\nshare = {}\npresence = {} {} {} {}\nwork = {}\n", a.name, a.share,
                       a.presence[0], a.presence[1], a.presence[2], a.presence[3], a.work.str());
    if (a.until_shift != std::array<Duration, kDayGroupCount>{}) {
      out += "until_shift =";
      for (const auto d : a.until_shift) out += " " + format_duration(d);
      out += "\n";
    }
    if (!a.work_weights.empty()) out += "work_weights = " + format_weights(a.work_weights) + "\n";
    if (!a.home_weights.empty()) out += "home_weights = " + format_weights(a.home_weights) + "\n";
    for (const auto& s : a.steps) out += "step = " + s.str() + "\n";
  }
  return out;
}

namespace {

struct Prepared {
  const Scenario& sc;
  const DeploymentRegistry& registry;
  TimeFrame frame;
  std::vector<WeightedPool> work_pools;
  std::vector<WeightedPool> home_pools;
  /// [archetype][step]; empty for home/work steps.
  std::vector<std::vector<WeightedPool>> step_pools;
  std::array<std::vector<double>, kDayGroupCount> profile_cdf;
};

Timestamp clock_time(const DayWindow& day, double clock) {
  const auto t = day.start + static_cast<Timestamp>(std::llround(clock)) - kDayStartClock;
  return std::clamp<Timestamp>(t, day.start, day.end - 1);
}

std::vector<PlannedStay> plan_day(const Prepared& p, const ArchetypeSpec& a, std::size_t ai, BuildingId home,
                                  BuildingId work, const DayWindow& day, DayGroup group, rnd::Engine& rng) {
  std::vector<PlannedStay> stays;
  if (!rnd::bernoulli(rng, a.presence[static_cast<std::size_t>(group)])) return stays;
  const auto& sc = p.sc;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const auto& step = a.steps[i];
    const bool has_prev = !stays.empty();
    const BuildingId prev = has_prev ? stays.back().building : BuildingId{};
    BuildingId b;
    switch (step.target.kind) {
      case TargetKind::Home: b = home; break;
      case TargetKind::Work: b = work; break;
      case TargetKind::Building: b = step.target.building; break;
      default: b = p.step_pools[ai][i].draw(rng, prev, has_prev); break;
    }
    Timestamp start = 0;
    switch (step.start) {
      case StartMode::At:
        start = clock_time(day, rnd::truncated_normal(rng, static_cast<double>(day_clock(step.start_clock)),
                                                      static_cast<double>(step.start_jitter)));
        break;
      case StartMode::Profile: {
        const auto& cdf = p.profile_cdf[static_cast<std::size_t>(group)];
        const double x = rnd::unit(rng) * cdf.back();
        const auto hour = static_cast<Duration>(std::upper_bound(cdf.begin(), cdf.end(), x) - cdf.begin());
        const double clock = static_cast<double>(day_clock(std::min<Duration>(hour, 23) * kHourSeconds)) +
                             rnd::uniform(rng, 0, kHourSeconds);
        start = clock_time(day, clock);
        break;
      }
      case StartMode::After:
        start = stays.empty() ? day.start
                              : stays.back().end + static_cast<Timestamp>(rnd::uniform(
                                                       rng, static_cast<double>(sc.travel_min),
                                                       static_cast<double>(sc.travel_max) + 1));
        break;
    }
    if (has_prev) {
      // A stay at the same building as the previous one would merge with it.
      if (b == prev) continue;
      start = std::max(start, stays.back().end + sc.travel_min);
    }
    if (start + kMinStay >= day.end) break;
    Timestamp end = 0;
    if (step.stay == StayMode::Duration) {
      end = start + static_cast<Timestamp>(std::llround(
                        rnd::truncated_normal(rng, static_cast<double>(step.stay_value),
                                              static_cast<double>(step.stay_jitter))));
    } else {
      const auto shift = a.until_shift[static_cast<std::size_t>(group)];
      end = clock_time(day, rnd::truncated_normal(rng, static_cast<double>(day_clock(step.stay_value) + shift),
                                                  static_cast<double>(step.stay_jitter)));
    }
    end = std::min(std::max(end, start + kMinStay), day.end - 1);
    stays.push_back({b, start, end});
  }
  return stays;
}

void emit(const Scenario& sc, const PlannedStay& s, std::uint32_t device, std::uint32_t sensor, rnd::Engine& rng,
          std::vector<Probe>& out) {
  const auto push = [&](Timestamp t) { out.push_back({device, sensor, t}); };
  const auto step = [&](Duration lo, Duration hi) {
    return static_cast<Timestamp>(rnd::below(rng, static_cast<std::uint64_t>(hi - lo + 1))) + lo;
  };
  if (sc.emission == Emission::Continuous) {
    for (Timestamp t = s.start; t < s.end; t += step(sc.continuous_min_gap, sc.continuous_max_gap)) push(t);
    push(s.end);
    return;
  }
  Timestamp t = s.start;
  for (int k = 0; k < sc.burst_probes && t < s.end; ++k, t += step(1, sc.burst_spacing)) push(t);
  const Duration span = s.end - s.start;
  const auto anchors = (span + sc.max_burst_gap - 1) / sc.max_burst_gap - 1;
  for (Duration j = 1; j <= anchors; ++j) push(s.start + span * j / (anchors + 1));
  t = s.end;
  for (int k = 0; k < sc.burst_probes && t > s.start; ++k, t -= step(1, sc.burst_spacing)) push(t);
}

}  // namespace

GroundTruth generate(const Scenario& sc, const DeploymentRegistry& registry, const GenerateOptions& opts,
                     const ProbeSink& sink) {
  sc.validate(registry);
  Prepared p{sc, registry, TimeFrame(sc.tz_offset), {}, {}, {}, {}};
  for (const auto& a : sc.archetypes) {
    p.work_pools.push_back(make_pool(pool_of(a.work, registry), a.work_weights));
    p.home_pools.push_back(make_pool(registry.buildings_in(Area::Residential), a.home_weights));
    auto& pools = p.step_pools.emplace_back();
    for (const auto& s : a.steps) {
      pools.push_back(fixed_target(s.target) ? WeightedPool{} : make_pool(pool_of(s.target, registry), {}));
    }
  }
  for (std::size_t g = 0; g < kDayGroupCount; ++g) {
    std::partial_sum(sc.profiles[g].begin(), sc.profiles[g].end(), std::back_inserter(p.profile_cdf[g]));
  }

  GroundTruth truth;
  const auto n = sc.devices;
  for (const auto& a : sc.archetypes) truth.archetypes.push_back(a.name);
  for (std::size_t i = 0; i < n; ++i) truth.devices.push_back(device_name(opts.seed, i));
  for (const auto& node : registry.nodes()) {
    for (int s = 1; s <= sc.sensors_per_building; ++s) truth.sensors.push_back(sensor_name(node.building, s));
  }

  // Exact quotas by largest remainder, then a seeded shuffle.
  std::vector<std::size_t> quota(sc.archetypes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t a = 0; a < sc.archetypes.size(); ++a) {
    const double exact = sc.archetypes[a].share * static_cast<double>(n);
    quota[a] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[a];
    if (sc.archetypes[a].share > 0) remainders.push_back({exact - std::floor(exact), a});
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t r = 0; assigned < n && r < remainders.size(); ++r, ++assigned) ++quota[remainders[r].second];
  for (std::size_t a = 0; a < quota.size(); ++a) truth.device_archetype.insert(truth.device_archetype.end(), quota[a], static_cast<std::uint32_t>(a));
  {
    rnd::Engine rng(rnd::derive(opts.seed, 0x61726368ULL));
    for (std::size_t i = n; i > 1; --i) std::swap(truth.device_archetype[i - 1], truth.device_archetype[rnd::below(rng, i)]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    rnd::Engine rng(rnd::derive(opts.seed, i, 0));
    const auto a = truth.device_archetype[i];
    truth.device_home.push_back(p.home_pools[a].draw(rng, {}, false));
    truth.device_work.push_back(p.work_pools[a].draw(rng, {}, false));
  }

  for (auto& m : truth.transitions) m = by_location::CountMatrix(registry.size());
  const auto calendar = sc.calendar();
  std::vector<std::vector<PlannedStay>> stays(n);
  std::vector<std::vector<Probe>> probes(n);
  std::vector<Probe> day_probes;
  for (const auto day_index : calendar.days()) {
    const auto day = p.frame.window(day_index);
    const auto group = group_of(*calendar.label_of(day_index));
    truth.day_groups.push_back({day_index, group});
    parallel_for(n, opts.threads, [&](std::size_t i) {
      rnd::Engine rng(rnd::derive(opts.seed, i, static_cast<std::uint64_t>(day_index) + 1));
      const auto a = truth.device_archetype[i];
      stays[i] = plan_day(p, sc.archetypes[a], a, truth.device_home[i], truth.device_work[i], day, group, rng);
      probes[i].clear();
      for (const auto& s : stays[i]) {
        const auto b = registry.index_of(s.building);
        const auto sensor = static_cast<std::uint32_t>(b * sc.sensors_per_building +
                                                       rnd::below(rng, static_cast<std::uint64_t>(sc.sensors_per_building)));
        emit(sc, s, static_cast<std::uint32_t>(i), sensor, rng, probes[i]);
      }
    });
    day_probes.clear();
    for (std::size_t i = 0; i < n; ++i) {
      day_probes.insert(day_probes.end(), probes[i].begin(), probes[i].end());
      const auto& st = stays[i];
      if (st.empty()) continue;
      for (std::size_t k = 0; k + 1 < st.size(); ++k) {
        const auto clock = p.frame.clock_seconds(st[k].end);
        for (std::size_t w = 0; w < by_location::kWindowCount; ++w) {
          const auto [lo, hi] = by_location::window_range(by_location::kAllWindows[w]);
          if (clock >= lo && clock < hi) {
            ++truth.transitions[w](registry.index_of(st[k].building), registry.index_of(st[k + 1].building));
          }
        }
      }
      DevicePlan plan{static_cast<std::uint32_t>(i), day_index, static_cast<std::uint32_t>(st.size()), {}};
      if (opts.keep_stays) plan.stays = st;
      truth.plans.push_back(std::move(plan));
    }
    std::sort(day_probes.begin(), day_probes.end(), [](const Probe& x, const Probe& y) {
      if (x.timestamp != y.timestamp) return x.timestamp < y.timestamp;
      if (x.device != y.device) return x.device < y.device;
      return x.sensor < y.sensor;
    });
    if (sink) sink(day_index, day_probes);
  }
  return truth;
}

void write_ground_truth(const GroundTruth& truth, const DeploymentRegistry& registry,
                        const std::filesystem::path& path) {
  FileWriter out(path);
  auto& buf = out.buffer();
  buf += "kind,key,slot,label,value\n";
  for (const auto& plan : truth.plans) {
    fmt::format_to(std::back_inserter(buf), "device_day,{},{},{},{}\n", truth.devices[plan.device],
                   TimeFrame::date_string(plan.day), truth.archetypes[truth.device_archetype[plan.device]],
                   plan.stay_count);
    out.maybe_flush();
  }
  for (const auto& [day, group] : truth.day_groups) {
    for (const auto& node : registry.nodes()) {
      fmt::format_to(std::back_inserter(buf), "building_day,{},{},{},\n", node.building.str(),
                     TimeFrame::date_string(day), to_string(group));
    }
  }
  for (std::size_t w = 0; w < by_location::kWindowCount; ++w) {
    const auto& m = truth.transitions[w];
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (m(i, j) == 0) continue;
        fmt::format_to(std::back_inserter(buf), "transition,{}>{},{},,{}\n", registry.node(i).building.str(),
                       registry.node(j).building.str(), by_location::to_string(by_location::kAllWindows[w]), m(i, j));
      }
    }
  }
  out.close();
}

TruthTables read_ground_truth(const std::filesystem::path& path) {
  TruthTables t;
  LineReader in(path);
  std::string_view line;
  bool header = true;
  std::size_t lineno = 0;
  while (in.next(line)) {
    ++lineno;
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 5) throw MalformedInput(fmt::format("ground truth line {}: want 5 fields", lineno));
    if (f[0] == "device_day") {
      t.device_days.emplace_back(std::string(f[1]), TimeFrame::parse_date(f[2]), std::string(f[3]));
    } else if (f[0] == "building_day") {
      if (f[1].size() != 1) throw MalformedInput(fmt::format("ground truth line {}: bad building", lineno));
      DayGroup g = DayGroup::MonThu;
      bool found = false;
      for (const auto cand : kAllDayGroups) {
        if (to_string(cand) == f[3]) {
          g = cand;
          found = true;
        }
      }
      if (!found) throw MalformedInput(fmt::format("ground truth line {}: bad day group", lineno));
      t.building_days.emplace_back(BuildingId(f[1][0]), TimeFrame::parse_date(f[2]), g);
    }
  }
  return t;
}

SynthOutputs generate_to_directory(const Scenario& scenario, const DeploymentRegistry& registry,
                                   const GenerateOptions& opts, const std::filesystem::path& dir,
                                   GroundTruth* truth_out) {
  std::filesystem::create_directories(dir);
  SynthOutputs out{dir / "probes.csv", dir / "ground_truth.csv", dir / "calendar.csv", dir / "registry.csv", 0};
  // Names are fixed before the first day is emitted.
  std::vector<std::string> devices;
  std::vector<std::string> sensors;
  for (std::size_t i = 0; i < scenario.devices; ++i) devices.push_back(device_name(opts.seed, i));
  for (const auto& node : registry.nodes()) {
    for (int s = 1; s <= scenario.sensors_per_building; ++s) sensors.push_back(sensor_name(node.building, s));
  }
  FileWriter probes(out.probes);
  probes.write("device,sensor,timestamp\n");
  auto& buf = probes.buffer();
  auto truth = generate(scenario, registry, opts, [&](std::int64_t, std::span<const Probe> ps) {
    for (const auto& pr : ps) {
      buf += devices[pr.device];
      buf += ',';
      buf += sensors[pr.sensor];
      fmt::format_to(std::back_inserter(buf), ",{}\n", pr.timestamp);
      probes.maybe_flush();
    }
    out.probe_count += ps.size();
  });
  probes.close();
  write_ground_truth(truth, registry, out.ground_truth);
  write_file(out.calendar, scenario.calendar().to_text());
  write_file(out.registry, registry.to_text());
  if (truth_out) *truth_out = std::move(truth);
  return out;
}

}  // namespace probemine::synth
