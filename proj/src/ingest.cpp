#include "probemine/ingest.hpp"

#include <algorithm>
#include <istream>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "probemine/error.hpp"
#include "probemine/preprocess.hpp"
#include "probemine/text.hpp"

namespace probemine::ingest {

namespace {

// Below this many data lines a log is never rejected as corrupt; malformed
// lines are only counted.
constexpr std::size_t kCorruptionMinLines = 20;

bool looks_like_header(std::string_view line) {
  return text::trim(line).substr(0, 6) == "device";
}

}  // namespace

ProbeLogParser::ProbeLogParser(bool pre_coalesced, const TimeFrame* frame)
    : pre_coalesced_(pre_coalesced), frame_(frame) {}

bool ProbeLogParser::parse_csv(std::string_view line, RawRecord& rec) {
  std::string_view f[6];
  std::size_t n = 0;
  std::size_t start = 0;
  while (n < 6) {
    const auto p = line.find(',', start);
    f[n++] = line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start);
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  rec.device = text::trim(f[0]);
  rec.sensor = text::trim(f[1]);
  if (!pre_coalesced_) {
    if (n != 3 || !text::parse_int(text::trim(f[2]), rec.first_seen)) return false;
    rec.last_seen = rec.first_seen;
    rec.probes = 1;
    return true;
  }
  if (n != 4 && n != 5) return false;
  if (!text::parse_int(text::trim(f[2]), rec.first_seen) ||
      !text::parse_int(text::trim(f[3]), rec.last_seen)) {
    return false;
  }
  rec.probes = 1;
  if (n == 5 && !text::parse_int(text::trim(f[4]), rec.probes)) return false;
  return true;
}

bool ProbeLogParser::parse_json(std::string_view line, RawRecord& rec) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return false;
  const auto dev = j.find("device");
  const auto sen = j.find("sensor");
  if (dev == j.end() || sen == j.end() || !dev->is_string() || !sen->is_string()) return false;
  json_device_ = dev->get<std::string>();
  json_sensor_ = sen->get<std::string>();
  rec.device = json_device_;
  rec.sensor = json_sensor_;
  auto int_field = [&](const char* key, std::int64_t& out) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) return false;
    out = it->get<std::int64_t>();
    return true;
  };
  rec.probes = 1;
  if (!pre_coalesced_) {
    if (!int_field("timestamp", rec.first_seen)) return false;
    rec.last_seen = rec.first_seen;
    return true;
  }
  if (!int_field("first_seen", rec.first_seen) || !int_field("last_seen", rec.last_seen)) return false;
  if (j.contains("probes") && !int_field("probes", rec.probes)) return false;
  return true;
}

void ProbeLogParser::feed(std::string_view line, const RecordSink& sink) {
  if (text::trim(line).empty()) return;
  if (first_line_) {
    first_line_ = false;
    if (text::trim(line).front() == '{') report_.format = LogFormat::JsonLines;
    if (report_.format == LogFormat::Csv && looks_like_header(line)) return;
  }
  ++report_.lines;
  RawRecord rec;
  const bool ok = report_.format == LogFormat::Csv ? parse_csv(line, rec) : parse_json(line, rec);
  if (!ok || rec.device.empty() || !SensorId::valid(rec.sensor) || rec.last_seen < rec.first_seen ||
      rec.probes < 1) {
    ++report_.malformed;
    return;
  }
  if (frame_ && (!frame_->in_span(rec.first_seen) || !frame_->in_span(rec.last_seen))) {
    ++report_.out_of_span;
    return;
  }
  ++report_.records;
  sink(rec);
}

const ParseReport& ProbeLogParser::finish() const {
  if (report_.lines >= kCorruptionMinLines &&
      static_cast<double>(report_.malformed) > kMaxMalformedFraction * static_cast<double>(report_.lines)) {
    throw CorruptInput(fmt::format("{} of {} lines malformed (limit {:.0f}%)", report_.malformed,
                                   report_.lines, kMaxMalformedFraction * 100));
  }
  return report_;
}

std::vector<ProbeEvent> parse_probe_log(std::istream& in, ParseReport* report) {
  if (!in) throw IoError("unreadable probe stream");
  ProbeLogParser parser;
  std::vector<ProbeEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    parser.feed(line, [&](const RawRecord& r) {
      events.push_back({DeviceId(std::string(r.device)), SensorId(r.sensor), r.first_seen});
    });
  }
  if (in.bad()) throw IoError("error reading probe stream");
  const auto& rep = parser.finish();
  if (report) *report = rep;
  return events;
}

ParseReport read_probe_file(const std::filesystem::path& path, bool pre_coalesced, const TimeFrame& frame,
                            const RecordSink& sink) {
  text::LineReader reader(path);
  ProbeLogParser parser(pre_coalesced, &frame);
  std::string_view line;
  while (reader.next(line)) parser.feed(line, sink);
  return parser.finish();
}

std::vector<DetectionInterval> IntervalSet::materialize() const {
  std::vector<DetectionInterval> out;
  out.reserve(intervals.size());
  for (const auto& iv : intervals) {
    out.push_back({DeviceId(devices[iv.device]), sensors[iv.sensor], iv.first_seen, iv.last_seen, iv.probes});
  }
  return out;
}

std::int64_t IntervalSet::total_probes() const {
  std::int64_t n = 0;
  for (const auto& iv : intervals) n += iv.probes;
  return n;
}

Coalescer::Coalescer(Duration gap) : gap_(gap) {}

std::uint32_t Coalescer::intern_device(std::string_view d) {
  auto [it, inserted] = device_ids_.try_emplace(std::string(d), static_cast<std::uint32_t>(devices_.size()));
  if (inserted) devices_.emplace_back(d);
  return it->second;
}

std::uint32_t Coalescer::intern_sensor(std::string_view s) {
  auto [it, inserted] = sensor_ids_.try_emplace(std::string(s), static_cast<std::uint32_t>(sensors_.size()));
  if (inserted) sensors_.emplace_back(s);
  return it->second;
}

void Coalescer::add_span(std::string_view device, std::string_view sensor, Timestamp first, Timestamp last,
                         std::int64_t probes) {
  const std::uint64_t key = (std::uint64_t{intern_device(device)} << 32) | intern_sensor(sensor);
  auto [slot_it, inserted] = key_slots_.try_emplace(key, static_cast<std::uint32_t>(runs_.size()));
  if (inserted) {
    runs_.emplace_back();
    slot_keys_.push_back(key);
  }
  auto& runs = runs_[slot_it->second];

  // Runs are disjoint, sorted, and separated by more than gap_. Find every
  // run within gap_ of [first, last] and fold them into one.
  auto lo = std::lower_bound(runs.begin(), runs.end(), first - gap_,
                             [](const Run& r, Timestamp v) { return r.last < v; });
  auto hi = lo;
  while (hi != runs.end() && hi->first - gap_ <= last) ++hi;

  if (lo == hi) {
    runs.insert(lo, Run{first, last, probes});
    ++run_count_;
    return;
  }
  Run merged{std::min(first, lo->first), std::max(last, (hi - 1)->last), probes};
  for (auto it = lo; it != hi; ++it) merged.probes += it->probes;
  *lo = merged;
  run_count_ -= static_cast<std::size_t>(hi - lo - 1);
  runs.erase(lo + 1, hi);
}

IntervalSet Coalescer::finish() && {
  IntervalSet set;
  std::vector<std::uint32_t> dev_order(devices_.size());
  std::iota(dev_order.begin(), dev_order.end(), 0u);
  std::sort(dev_order.begin(), dev_order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return devices_[a] < devices_[b]; });
  std::vector<std::uint32_t> dev_rank(devices_.size());
  for (std::uint32_t r = 0; r < dev_order.size(); ++r) dev_rank[dev_order[r]] = r;

  std::vector<std::uint32_t> sen_order(sensors_.size());
  std::iota(sen_order.begin(), sen_order.end(), 0u);
  std::sort(sen_order.begin(), sen_order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return sensors_[a] < sensors_[b]; });
  std::vector<std::uint32_t> sen_rank(sensors_.size());
  for (std::uint32_t r = 0; r < sen_order.size(); ++r) sen_rank[sen_order[r]] = r;

  set.devices.reserve(devices_.size());
  for (auto i : dev_order) set.devices.push_back(std::move(devices_[i]));
  set.sensors.reserve(sensors_.size());
  for (auto i : sen_order) set.sensors.push_back(sensors_[i]);

  set.intervals.reserve(run_count_);
  for (std::size_t slot = 0; slot < runs_.size(); ++slot) {
    const auto key = slot_keys_[slot];
    const auto dev = dev_rank[key >> 32];
    const auto sen = sen_rank[key & 0xffffffffu];
    for (const auto& r : runs_[slot]) set.intervals.push_back({dev, sen, r.first, r.last, r.probes});
    std::vector<Run>().swap(runs_[slot]);
  }
  std::sort(set.intervals.begin(), set.intervals.end(), [](const auto& a, const auto& b) {
    return std::tie(a.device, a.first_seen, a.last_seen, a.sensor) <
           std::tie(b.device, b.first_seen, b.last_seen, b.sensor);
  });
  return set;
}

std::vector<DetectionInterval> coalesce_probes(std::span<const ProbeEvent> events, Duration gap) {
  Coalescer c(gap);
  for (const auto& e : events) c.add(e.device.str(), e.sensor.view(), e.timestamp);
  return std::move(c).finish().materialize();
}

void for_each_sensor_trajectory(const IntervalSet& set, const TimeFrame& frame,
                                const std::function<void(DayTrajectory&&)>& sink) {
  struct Piece {
    std::int64_t day;
    Timestamp start;
    Timestamp end;
    std::uint32_t sensor;
  };
  std::vector<Piece> pieces;
  const auto& ivs = set.intervals;
  std::size_t i = 0;
  while (i < ivs.size()) {
    const auto device = ivs[i].device;
    pieces.clear();
    for (; i < ivs.size() && ivs[i].device == device; ++i) {
      Timestamp f = ivs[i].first_seen;
      const Timestamp l = ivs[i].last_seen;
      while (true) {
        const auto w = frame.day_window_of(f);
        if (l < w.end) {
          pieces.push_back({w.index, f, l, ivs[i].sensor});
          break;
        }
        pieces.push_back({w.index, f, w.end, ivs[i].sensor});
        f = w.end;
      }
    }
    std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
      return std::tie(a.day, a.start, a.end, a.sensor) < std::tie(b.day, b.start, b.end, b.sensor);
    });
    std::size_t p = 0;
    while (p < pieces.size()) {
      DayTrajectory traj;
      traj.device = DeviceId(set.devices[device]);
      traj.day = frame.window(pieces[p].day);
      for (const auto day = pieces[p].day; p < pieces.size() && pieces[p].day == day; ++p) {
        TrajectoryEntry e;
        e.node = set.sensors[pieces[p].sensor].node();
        e.start = pieces[p].start;
        e.end = pieces[p].end;
        traj.entries.push_back(e);
      }
      sink(prep::compute_stay_take(std::move(traj)));
    }
  }
}

std::vector<DayTrajectory> build_sensor_trajectories(const IntervalSet& set, const TimeFrame& frame) {
  std::vector<DayTrajectory> out;
  for_each_sensor_trajectory(set, frame, [&](DayTrajectory&& t) { out.push_back(std::move(t)); });
  return out;
}

std::vector<DayTrajectory> build_sensor_trajectories(std::span<const DetectionInterval> intervals,
                                                     const TimeFrame& frame) {
  // Intervals are used exactly as given; only the ids are interned.
  IntervalSet set;
  std::vector<std::string> devs;
  std::vector<SensorId> sens;
  for (const auto& iv : intervals) {
    devs.push_back(iv.device.str());
    sens.push_back(iv.sensor);
  }
  std::sort(devs.begin(), devs.end());
  devs.erase(std::unique(devs.begin(), devs.end()), devs.end());
  std::sort(sens.begin(), sens.end());
  sens.erase(std::unique(sens.begin(), sens.end()), sens.end());
  set.devices = devs;
  set.sensors = sens;
  for (const auto& iv : intervals) {
    const auto d = static_cast<std::uint32_t>(std::lower_bound(devs.begin(), devs.end(), iv.device.str()) - devs.begin());
    const auto s = static_cast<std::uint32_t>(std::lower_bound(sens.begin(), sens.end(), iv.sensor) - sens.begin());
    set.intervals.push_back({d, s, iv.first_seen, iv.last_seen, iv.probes});
  }
  std::sort(set.intervals.begin(), set.intervals.end(), [](const auto& a, const auto& b) {
    return std::tie(a.device, a.first_seen, a.last_seen, a.sensor) <
           std::tie(b.device, b.first_seen, b.last_seen, b.sensor);
  });
  return build_sensor_trajectories(set, frame);
}

}  // namespace probemine::ingest
