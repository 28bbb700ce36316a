#include "probemine/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "probemine/by_location.hpp"
#include "probemine/by_person.hpp"
#include "probemine/by_time.hpp"
#include "probemine/calendar.hpp"
#include "probemine/error.hpp"
#include "probemine/ingest.hpp"
#include "probemine/parallel.hpp"
#include "probemine/preprocess.hpp"
#include "probemine/registry.hpp"
#include "probemine/synthgen.hpp"
#include "probemine/text.hpp"
#include "probemine/trajectory_io.hpp"

namespace probemine {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSensorTrajectories = "sensor_trajectories.jsonl";
constexpr std::string_view kTrajectories = "trajectories.jsonl";
constexpr std::string_view kIngestReport = "ingest_report.json";
constexpr std::string_view kPreprocessReport = "preprocess_report.json";
constexpr std::string_view kTimeSummary = "time_summary.json";
constexpr std::string_view kPersonSummary = "person_summary.json";
constexpr std::string_view kLocationSummary = "location_summary.json";
constexpr std::string_view kManifest = "manifest.json";

DeploymentRegistry load_registry(const PipelineConfig& cfg) {
  return cfg.registry.empty() ? DeploymentRegistry::standard() : DeploymentRegistry::load(cfg.registry);
}

void write_json(const fs::path& p, const json& j) { text::write_file(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
  try {
    return json::parse(text::read_file(p));
  } catch (const json::exception& e) {
    throw MalformedInput(fmt::format("{}: {}", p.string(), e.what()));
  }
}

std::string hour_header(std::string_view prefix) {
  std::string out(prefix);
  for (std::size_t h = 0; h < 24; ++h) out += fmt::format(",h{}", h);
  return out + "\n";
}

template <typename Range>
void append_values(std::string& out, const Range& values, std::string_view spec = "{:.6f}") {
  for (const auto v : values) {
    out += ',';
    out += fmt::format(fmt::runtime(spec), v);
  }
  out += '\n';
}

std::string day_label_or_blank(const Calendar& cal, std::int64_t day) {
  const auto l = cal.label_of(day);
  return l ? std::string(to_string(*l)) : std::string();
}

}  // namespace

struct Pipeline::StageRecord {
  std::string name;
  std::vector<fs::path> inputs;
  std::vector<std::string> outputs;
  json counts = json::object();
  double seconds = 0;
};

Pipeline::Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {}

fs::path Pipeline::require(const fs::path& p, std::string_view stage) const {
  if (!fs::exists(p)) {
    throw StageDependencyError(fmt::format("{} needs '{}'; run the stage that produces it first", stage, p.string()));
  }
  return p;
}

fs::path Pipeline::input_path() const {
  return cfg_.input.empty() ? cfg_.out / "synth" / "probes.csv" : cfg_.input;
}

fs::path Pipeline::calendar_path(std::string_view stage) const {
  return require(cfg_.calendar.empty() ? cfg_.out / "synth" / "calendar.csv" : cfg_.calendar, stage);
}

std::uint64_t Pipeline::clustering_seed(std::string_view stage) const {
  if (!cfg_.seed) throw ConfigError(fmt::format("{} needs a seed (--seed or 'seed' in the config file)", stage));
  return *cfg_.seed;
}

void Pipeline::record(const StageRecord& rec) {
  const auto manifest_path = cfg_.out / kManifest;
  json old = fs::exists(manifest_path) ? read_json(manifest_path) : json::object();
  json m;
  m["config_hash"] = cfg_.hash();
  json config = json::object();
  for (const auto& [k, v] : cfg_.to_values()) {
    if (k != "out" && k != "threads") config[k] = v;
  }
  m["config"] = config;
  json stages = json::object();
  for (const auto name : kStages) {
    const std::string key(name);
    if (key == rec.name) {
      json s;
      s["config_hash"] = cfg_.hash();
      json inputs = json::object();
      for (const auto& p : rec.inputs) inputs[p.filename().string()] = text::file_crc32(p);
      s["inputs"] = inputs;
      s["outputs"] = rec.outputs;
      s["counts"] = rec.counts;
      s["seconds"] = rec.seconds;
      stages[key] = s;
    } else if (old.contains("stages") && old["stages"].contains(key)) {
      stages[key] = old["stages"][key];
    }
  }
  m["stages"] = stages;
  write_json(manifest_path, m);
}

void Pipeline::run(std::string_view stage) {
  if (stage == "synth") synth();
  else if (stage == "ingest") ingest();
  else if (stage == "preprocess") preprocess();
  else if (stage == "cluster-time") cluster_time();
  else if (stage == "cluster-person") cluster_person();
  else if (stage == "cluster-location") cluster_location();
  else if (stage == "report") report();
  else if (stage == "all") all();
  else throw ConfigError(fmt::format("unknown stage '{}'", stage));
}

void Pipeline::all() {
  if (cfg_.input.empty()) synth();
  ingest();
  preprocess();
  cluster_time();
  cluster_person();
  cluster_location();
  report();
}

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

void Pipeline::synth() {
  Timer timer;
  fs::create_directories(cfg_.out);
  const auto registry = load_registry(cfg_);
  auto scenario = cfg_.scenario.empty() ? synth::default_scenario() : synth::Scenario::load(cfg_.scenario);
  if (cfg_.synth_devices) scenario.devices = *cfg_.synth_devices;
  if (cfg_.synth_days) scenario.days = *cfg_.synth_days;
  scenario.tz_offset = cfg_.tz_offset;
  const auto dir = cfg_.out / "synth";
  spdlog::info("synth: {} devices x {} days, seed {}", scenario.devices, scenario.days, cfg_.synth_seed);
  const auto outputs = synth::generate_to_directory(scenario, registry, {cfg_.synth_seed, cfg_.threads, false}, dir);
  text::write_file(dir / "scenario.scn", scenario.to_text());
  spdlog::info("synth: wrote {} probes", outputs.probe_count);

  StageRecord rec{"synth", {}, {"synth/probes.csv", "synth/ground_truth.csv", "synth/calendar.csv",
                                "synth/registry.csv", "synth/scenario.scn"}};
  if (!cfg_.scenario.empty()) rec.inputs.push_back(cfg_.scenario);
  rec.counts["devices"] = scenario.devices;
  rec.counts["days"] = scenario.days;
  rec.counts["probes"] = outputs.probe_count;
  rec.seconds = timer.seconds();
  record(rec);
}

void Pipeline::ingest() {
  Timer timer;
  const auto in = require(input_path(), "ingest");
  fs::create_directories(cfg_.out);
  const auto registry = load_registry(cfg_);
  const TimeFrame frame(cfg_.tz_offset);

  spdlog::info("ingest: reading {}", in.string());
  ingest::Coalescer coalescer(cfg_.coalesce_gap);
  const auto report = ingest::read_probe_file(in, cfg_.pre_coalesced, frame, [&](const ingest::RawRecord& r) {
    coalescer.add_span(r.device, r.sensor, r.first_seen, r.last_seen, r.probes);
  });
  if (report.malformed > 0) spdlog::warn("ingest: skipped {} malformed lines", report.malformed);
  const auto set = std::move(coalescer).finish();
  std::size_t unknown = 0;
  for (const auto& s : set.sensors) {
    if (!registry.find(building_of(s.node()))) {
      spdlog::warn("ingest: sensor {} belongs to no registry building", s.view());
      ++unknown;
    }
  }

  io::TrajectoryWriter writer(path(kSensorTrajectories));
  ingest::for_each_sensor_trajectory(set, frame, [&](DayTrajectory&& t) { writer.write(t); });
  writer.close();
  spdlog::info("ingest: {} records -> {} intervals -> {} sensor trajectories", report.records,
               set.intervals.size(), writer.count());

  json r;
  r["format"] = report.format == ingest::LogFormat::Csv ? "csv" : "jsonl";
  r["lines"] = report.lines;
  r["records"] = report.records;
  r["malformed"] = report.malformed;
  r["out_of_span"] = report.out_of_span;
  r["devices"] = set.devices.size();
  r["sensors"] = set.sensors.size();
  r["unknown_sensors"] = unknown;
  r["intervals"] = set.intervals.size();
  r["probes"] = set.total_probes();
  r["trajectories"] = writer.count();
  write_json(path(kIngestReport), r);

  StageRecord rec{"ingest", {in}, {std::string(kSensorTrajectories), std::string(kIngestReport)}};
  rec.counts = r;
  rec.seconds = timer.seconds();
  record(rec);
}

void Pipeline::preprocess() {
  Timer timer;
  const auto in = require(path(kSensorTrajectories), "preprocess");
  prep::FilterOptions opts{cfg_.min_span, cfg_.max_stay};
  prep::FilterReport report;
  std::size_t entries_in = 0;
  std::size_t entries_out = 0;
  io::TrajectoryWriter writer(path(kTrajectories));
  io::for_each_trajectory(in, [&](DayTrajectory&& t) {
    ++report.input;
    entries_in += t.entries.size();
    auto merged = prep::merge_to_building_level(std::move(t), cfg_.merge_threshold);
    switch (prep::classify(merged, opts)) {
      case prep::FilterVerdict::TooShort: ++report.too_short; return;
      case prep::FilterVerdict::Anomalous: ++report.anomalous; return;
      case prep::FilterVerdict::Keep: break;
    }
    ++report.kept;
    entries_out += merged.entries.size();
    writer.write(merged);
  });
  writer.close();
  spdlog::info("preprocess: {} trajectories, kept {} (short {}, anomalous {})", report.input, report.kept,
               report.too_short, report.anomalous);

  json r;
  r["input"] = report.input;
  r["kept"] = report.kept;
  r["too_short"] = report.too_short;
  r["anomalous"] = report.anomalous;
  r["sensor_entries"] = entries_in;
  r["building_entries"] = entries_out;
  write_json(path(kPreprocessReport), r);

  StageRecord rec{"preprocess", {in}, {std::string(kTrajectories), std::string(kPreprocessReport)}};
  rec.counts = r;
  rec.seconds = timer.seconds();
  record(rec);
}

void Pipeline::cluster_time() {
  Timer timer;
  const auto in = require(path(kTrajectories), "cluster-time");
  const auto cal_path = calendar_path("cluster-time");
  const auto seed = clustering_seed("cluster-time");
  const auto registry = load_registry(cfg_);
  const auto calendar = Calendar::load(cal_path);
  const TimeFrame frame(cfg_.tz_offset);

  by_time::HourlyCounter counter(registry, frame, calendar.days());
  std::size_t outside = 0;
  const auto days = counter.days();
  io::for_each_trajectory(in, [&](DayTrajectory&& t) {
    if (!std::binary_search(days.begin(), days.end(), t.day.index)) ++outside;
    counter.add(t);
  });
  if (outside > 0) spdlog::warn("cluster-time: {} trajectories fall on days missing from the calendar", outside);

  struct Result {
    std::vector<by_time::DayFeature> features;
    std::optional<by_time::CalendarAssignment> assignment;
    std::vector<cluster::SsePoint> sse;
    std::string skipped;
  };
  const auto& nodes = registry.nodes();
  std::vector<Result> results(nodes.size());
  parallel_for(nodes.size(), cfg_.threads, [&](std::size_t b) {
    auto& r = results[b];
    r.features = counter.features(nodes[b].building);
    try {
      r.assignment = by_time::cluster_days(r.features, cfg_.time_k, seed, cfg_.restarts, 1);
      const auto points = by_time::profile_matrix(r.features);
      std::set<std::vector<double>> distinct;
      for (std::size_t i = 0; i < points.size(); ++i) {
        distinct.insert({points.row(i).begin(), points.row(i).end()});
      }
      const auto k_max = std::min(cfg_.sse_k_max, distinct.size());
      r.sse = cluster::sse_curve(points, 1, k_max, seed, cfg_.restarts, 1);
    } catch (const Infeasible& e) {
      r.skipped = e.what();
    }
  });

  StageRecord rec{"cluster-time", {in, cal_path}, {}};
  std::string assignments = "building,date,day_label,cluster\n";
  json buildings = json::array();
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    const auto& r = results[b];
    const auto name = nodes[b].building.str();
    json jb;
    jb["building"] = name;
    jb["days"] = r.features.size();

    std::string counts = hour_header("date");
    for (const auto& f : r.features) {
      counts += TimeFrame::date_string(f.day.index);
      append_values(counts, f.counts, "{}");
    }
    const auto counts_name = fmt::format("counts_{}.csv", name);
    text::write_file(path(counts_name), counts);
    rec.outputs.push_back(counts_name);

    if (!r.assignment) {
      spdlog::warn("cluster-time: building {} skipped: {}", name, r.skipped);
      jb["skipped"] = r.skipped;
      buildings.push_back(jb);
      continue;
    }
    const auto& a = *r.assignment;
    std::vector<std::size_t> sizes(a.k, 0);
    for (std::size_t i = 0; i < a.days.size(); ++i) {
      ++sizes[a.clusters[i]];
      assignments += fmt::format("{},{},{},{}\n", name, TimeFrame::date_string(a.days[i]),
                                 day_label_or_blank(calendar, a.days[i]), a.clusters[i] + 1);
    }

    const auto table = by_time::day_type_confusion(a, calendar);
    std::string confusion = "day_label,days,empty";
    for (std::size_t c = 0; c < a.k; ++c) confusion += fmt::format(",cluster_{}", c + 1);
    confusion += "\n";
    for (std::size_t l = 0; l < kDayLabelCount; ++l) {
      confusion += fmt::format("{},{},{}", to_string(kAllDayLabels[l]), table.days[l], table.empty[l] ? 1 : 0);
      append_values(confusion, table.percent[l], "{:.1f}");
    }
    const auto confusion_name = fmt::format("confusion_{}.csv", name);
    text::write_file(path(confusion_name), confusion);

    std::string curves = hour_header("date,cluster");
    const auto grouped = by_time::cluster_daily_curves(r.features, a);
    for (std::size_t c = 0; c < grouped.size(); ++c) {
      for (const auto& dc : grouped[c]) {
        curves += fmt::format("{},{}", TimeFrame::date_string(dc.day), c + 1);
        append_values(curves, dc.curve);
      }
    }
    const auto curves_name = fmt::format("curves_{}.csv", name);
    text::write_file(path(curves_name), curves);

    std::string sse = "k,sse,increased\n";
    for (const auto& p : r.sse) sse += fmt::format("{},{:.9g},{}\n", p.k, p.sse, p.increased ? 1 : 0);
    const auto sse_name = fmt::format("sse_{}.csv", name);
    text::write_file(path(sse_name), sse);

    rec.outputs.insert(rec.outputs.end(), {confusion_name, curves_name, sse_name});
    jb["sse"] = a.sse;
    jb["sizes"] = sizes;
    buildings.push_back(jb);
  }
  text::write_file(path("calendar_assignments.csv"), assignments);
  rec.outputs.push_back("calendar_assignments.csv");

  json summary;
  summary["k"] = cfg_.time_k;
  summary["days"] = days.size();
  summary["trajectories_outside_calendar"] = outside;
  summary["buildings"] = buildings;
  write_json(path(kTimeSummary), summary);
  rec.outputs.push_back(std::string(kTimeSummary));
  rec.counts["buildings"] = nodes.size();
  rec.counts["days"] = days.size();
  rec.seconds = timer.seconds();
  record(rec);
  spdlog::info("cluster-time: {} buildings x {} days", nodes.size(), days.size());
}

void Pipeline::cluster_person() {
  Timer timer;
  const auto in = require(path(kTrajectories), "cluster-person");
  const auto cal_path = calendar_path("cluster-person");
  const auto seed = clustering_seed("cluster-person");
  const auto registry = load_registry(cfg_);
  const auto calendar = Calendar::load(cal_path);
  const TimeFrame frame(cfg_.tz_offset);

  const auto trajs = io::read_trajectories(in);
  std::vector<by_person::PersonFeature> features(trajs.size());
  parallel_for(trajs.size(), cfg_.threads,
               [&](std::size_t i) { features[i] = by_person::person_features(trajs[i], registry, frame); });
  spdlog::info("cluster-person: clustering {} day trajectories, k = {}", features.size(), cfg_.person_k);
  const auto pc = by_person::cluster_persons(features, cfg_.person_k, seed, cfg_.restarts, cfg_.threads,
                                             cfg_.silhouette_sample);

  StageRecord rec{"cluster-person", {in, cal_path}, {}};
  {
    text::FileWriter fw(path("person_features.csv"));
    fw.write("device,date,hospital,mall,institute,residential_day,residential_night\n");
    text::FileWriter aw(path("person_assignments.csv"));
    aw.write("device,date,cluster\n");
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto& f = features[i];
      const auto date = TimeFrame::date_string(f.day.index);
      fmt::format_to(std::back_inserter(fw.buffer()), "{},{},{},{},{},{},{}\n", f.device.str(), date, f.stay[0],
                     f.stay[1], f.stay[2], f.stay[3], f.stay[4]);
      fmt::format_to(std::back_inserter(aw.buffer()), "{},{},CP{}\n", f.device.str(), date, pc.clusters[i] + 1);
      fw.maybe_flush();
      aw.maybe_flush();
    }
    fw.close();
    aw.close();
    rec.outputs.insert(rec.outputs.end(), {"person_features.csv", "person_assignments.csv"});
  }

  std::string clusters = "cluster,size,hospital,mall,institute,residential_day,residential_night\n";
  for (std::size_t c = 0; c < pc.k; ++c) {
    clusters += fmt::format("CP{},{}", c + 1, pc.sizes[c]);
    append_values(clusters, pc.centroids.row(c), "{:.1f}");
  }
  text::write_file(path("person_clusters.csv"), clusters);
  rec.outputs.push_back("person_clusters.csv");

  std::vector<std::vector<const DayTrajectory*>> members(pc.k);
  for (std::size_t i = 0; i < trajs.size(); ++i) members[pc.clusters[i]].push_back(&trajs[i]);
  const std::array<Category, 4> categories = {Category::Hospital, Category::Mall, Category::Institute,
                                              Category::Residential};
  const auto name = [&](std::size_t idx) { return registry.node(idx).building.str(); };

  json cps = json::array();
  for (std::size_t c = 0; c < pc.k; ++c) {
    const auto id = c + 1;
    const auto& m = members[c];
    json jc;
    jc["cluster"] = fmt::format("CP{}", id);
    jc["size"] = pc.sizes[c];

    std::string edges = "from,to,weight\n";
    for (const auto& e : by_person::cluster_transition_graph(m, registry)) {
      edges += fmt::format("{},{},{}\n", name(e.a), name(e.b), e.weight);
    }
    std::string uniques = "unique_locations,probability\n";
    const auto hist = by_person::unique_location_histogram(m, registry);
    for (std::size_t u = 0; u < hist.size(); ++u) uniques += fmt::format("{},{:.6f}\n", u + 1, hist[u]);
    std::string startend = "hour,start,end\n";
    const auto se = by_person::start_end_distributions(m, frame);
    for (std::size_t h = 0; h < 24; ++h) startend += fmt::format("{},{:.6f},{:.6f}\n", h, se.start[h], se.end[h]);
    for (const auto& [file, body] : {std::pair{fmt::format("cp_{}_edges.csv", id), edges},
                                     std::pair{fmt::format("cp_{}_uniques.csv", id), uniques},
                                     std::pair{fmt::format("cp_{}_startend.csv", id), startend}}) {
      text::write_file(path(file), body);
      rec.outputs.push_back(file);
    }

    // One file per day group; rows per building category and statistic.
    std::array<std::string, kDayGroupCount> curve_files;
    std::array<bool, kDayGroupCount> present{};
    for (auto& f : curve_files) f = hour_header("category,stat");
    for (const auto cat : categories) {
      const auto bs = registry.buildings_in(cat);
      const std::set<BuildingId> set(bs.begin(), bs.end());
      const auto curves = by_person::daytype_count_curves(m, set, calendar);
      for (std::size_t g = 0; g < kDayGroupCount; ++g) {
        if (curves[g].empty) continue;
        present[g] = true;
        for (const auto& [stat, values] : {std::pair{"avg", &curves[g].avg}, std::pair{"min", &curves[g].min},
                                           std::pair{"max", &curves[g].max}}) {
          curve_files[g] += fmt::format("{},{}", to_string(cat), stat);
          append_values(curve_files[g], *values, "{:.4f}");
        }
      }
    }
    json empty_groups = json::array();
    for (std::size_t g = 0; g < kDayGroupCount; ++g) {
      if (!present[g]) {
        empty_groups.push_back(to_string(kAllDayGroups[g]));
        continue;
      }
      const auto file = fmt::format("cp_{}_{}_curves.csv", id, to_string(kAllDayGroups[g]));
      text::write_file(path(file), curve_files[g]);
      rec.outputs.push_back(file);
    }
    jc["empty_day_groups"] = empty_groups;
    jc["centroid"] = std::vector<double>(pc.centroids.row(c).begin(), pc.centroids.row(c).end());
    cps.push_back(jc);
  }

  json summary;
  summary["k"] = pc.k;
  summary["trajectories"] = trajs.size();
  summary["sse"] = pc.sse;
  summary["silhouette"] = pc.silhouette ? json(*pc.silhouette) : json(nullptr);
  summary["silhouette_sample"] = pc.silhouette_sample;
  summary["clusters"] = cps;
  write_json(path(kPersonSummary), summary);
  rec.outputs.push_back(std::string(kPersonSummary));
  rec.counts["trajectories"] = trajs.size();
  rec.seconds = timer.seconds();
  record(rec);
  spdlog::info("cluster-person: done");
}

void Pipeline::cluster_location() {
  Timer timer;
  const auto in = require(path(kTrajectories), "cluster-location");
  const auto registry = load_registry(cfg_);
  const TimeFrame frame(cfg_.tz_offset);
  const auto n = registry.size();

  std::array<by_location::CountMatrix, by_location::kWindowCount> counts;
  for (auto& c : counts) c = by_location::CountMatrix(n);
  io::for_each_trajectory(in, [&](DayTrajectory&& t) {
    for (const auto w : cfg_.windows) by_location::count_transitions(t, w, registry, frame, counts[static_cast<std::size_t>(w)]);
  });

  StageRecord rec{"cluster-location", {in}, {}};
  const auto name = [&](std::size_t i) { return registry.node(i).building.str(); };
  std::array<std::vector<by_location::DominantEdge>, by_location::kWindowCount> dominant;
  json windows = json::array();
  for (const auto w : cfg_.windows) {
    const auto wi = static_cast<std::size_t>(w);
    const auto wname = std::string(by_location::to_string(w));
    const auto& nm = counts[wi];

    std::string ncsv = "from";
    for (std::size_t j = 0; j < n; ++j) ncsv += "," + name(j);
    ncsv += "\n";
    for (std::size_t i = 0; i < n; ++i) {
      ncsv += name(i);
      for (std::size_t j = 0; j < n; ++j) ncsv += fmt::format(",{}", nm(i, j));
      ncsv += "\n";
    }

    const auto t = by_location::transition_probability(nm);
    const auto lc = by_location::cluster_locations(t, cfg_.hac_cut, cfg_.hac_input);
    std::string tcsv = "from";
    for (const auto j : lc.order) tcsv += "," + name(j);
    tcsv += "\n";
    for (std::size_t r = 0; r < n; ++r) {
      tcsv += name(lc.order[r]);
      for (std::size_t c = 0; c < n; ++c) tcsv += fmt::format(",{:.6f}", lc.reordered(r, c));
      tcsv += "\n";
    }

    json dendro;
    dendro["window"] = wname;
    dendro["hac_input"] = std::string(by_location::to_string(cfg_.hac_input));
    json leaves = json::array();
    for (std::size_t i = 0; i < n; ++i) leaves.push_back(name(i));
    dendro["leaves"] = leaves;
    json merges = json::array();
    for (const auto& m : lc.dendrogram.merges) merges.push_back({{"a", m.a}, {"b", m.b}, {"height", m.height}, {"size", m.size}});
    dendro["merges"] = merges;
    dendro["threshold"] = lc.threshold;
    json order = json::array();
    for (const auto i : lc.order) order.push_back(name(i));
    dendro["leaf_order"] = order;
    json clusters = json::object();
    for (std::size_t i = 0; i < n; ++i) clusters[name(i)] = lc.clusters.empty() ? 0 : lc.clusters[i] + 1;
    dendro["clusters"] = clusters;

    dominant[wi] = by_location::dominant_directions(nm, w, cfg_.dominant_threshold);
    std::string dcsv = "from,to,probability\n";
    for (const auto& e : dominant[wi]) dcsv += fmt::format("{},{},{:.6f}\n", name(e.from), name(e.to), e.probability);

    for (const auto& [file, body] : {std::pair{fmt::format("N_{}.csv", wname), ncsv},
                                     std::pair{fmt::format("T_{}.csv", wname), tcsv},
                                     std::pair{fmt::format("dendrogram_{}.json", wname), dendro.dump(2) + "\n"},
                                     std::pair{fmt::format("dominant_{}.csv", wname), dcsv}}) {
      text::write_file(path(file), body);
      rec.outputs.push_back(file);
    }
    std::size_t n_clusters = 0;
    for (const auto c : lc.clusters) n_clusters = std::max(n_clusters, c + 1);
    windows.push_back({{"window", wname},
                       {"transitions", nm.total()},
                       {"clusters", n_clusters},
                       {"threshold", lc.threshold},
                       {"dominant_edges", dominant[wi].size()}});
  }

  json flows = json::object();
  for (const auto& node : registry.nodes()) {
    const auto report = by_location::building_flow_report(dominant, node.building, registry);
    const auto file = fmt::format("flow_report_{}.txt", node.building.str());
    text::write_file(path(file), by_location::format_flow_report(report, registry));
    rec.outputs.push_back(file);
    flows[node.building.str()] = std::string(by_location::to_string(report.pattern));
  }

  json summary;
  summary["windows"] = windows;
  summary["flow_patterns"] = flows;
  write_json(path(kLocationSummary), summary);
  rec.outputs.push_back(std::string(kLocationSummary));
  rec.seconds = timer.seconds();
  record(rec);
  spdlog::info("cluster-location: {} windows", cfg_.windows.size());
}

void Pipeline::report() {
  Timer timer;
  const std::array<std::string_view, 5> inputs = {kIngestReport, kPreprocessReport, kTimeSummary, kPersonSummary,
                                                  kLocationSummary};
  std::vector<json> docs;
  StageRecord rec{"report", {}, {"report.txt"}};
  for (const auto name : inputs) {
    const auto p = require(path(name), "report");
    docs.push_back(read_json(p));
    rec.inputs.push_back(p);
  }
  const auto& ing = docs[0];
  const auto& pre = docs[1];
  const auto& tim = docs[2];
  const auto& per = docs[3];
  const auto& loc = docs[4];

  std::string out;
  out += "ingest\n";
  out += fmt::format("  lines {}  records {}  malformed {}  intervals {}  sensor trajectories {}\n",
                     ing["lines"].get<std::size_t>(), ing["records"].get<std::size_t>(),
                     ing["malformed"].get<std::size_t>(), ing["intervals"].get<std::size_t>(),
                     ing["trajectories"].get<std::size_t>());
  out += "preprocess\n";
  out += fmt::format("  input {}  kept {}  too short {}  anomalous {}\n", pre["input"].get<std::size_t>(),
                     pre["kept"].get<std::size_t>(), pre["too_short"].get<std::size_t>(),
                     pre["anomalous"].get<std::size_t>());
  out += fmt::format("by time (k = {}, {} days)\n", tim["k"].get<std::size_t>(), tim["days"].get<std::size_t>());
  for (const auto& b : tim["buildings"]) {
    if (b.contains("skipped")) {
      out += fmt::format("  {}  skipped: {}\n", b["building"].get<std::string>(), b["skipped"].get<std::string>());
      continue;
    }
    std::string sizes;
    for (const auto& s : b["sizes"]) sizes += fmt::format(" {}", s.get<std::size_t>());
    out += fmt::format("  {}  cluster sizes{}\n", b["building"].get<std::string>(), sizes);
  }
  out += fmt::format("by person (k = {}, {} trajectories, silhouette {})\n", per["k"].get<std::size_t>(),
                     per["trajectories"].get<std::size_t>(),
                     per["silhouette"].is_null() ? std::string("n/a") : fmt::format("{:.3f}", per["silhouette"].get<double>()));
  out += "  cluster      size   hospital       mall  institute    res-day  res-night  (hours)\n";
  for (const auto& c : per["clusters"]) {
    const auto cen = c["centroid"].get<std::vector<double>>();
    out += fmt::format("  {:<8} {:>8}", c["cluster"].get<std::string>(), c["size"].get<std::size_t>());
    for (const auto v : cen) out += fmt::format(" {:>10.2f}", v / 3600.0);
    out += "\n";
  }
  out += "by location\n";
  for (const auto& w : loc["windows"]) {
    out += fmt::format("  {:<8} transitions {}  clusters {}  dominant edges {}\n", w["window"].get<std::string>(),
                       w["transitions"].get<std::int64_t>(), w["clusters"].get<std::size_t>(),
                       w["dominant_edges"].get<std::size_t>());
  }
  out += "  flow patterns:";
  for (const auto& [b, p] : loc["flow_patterns"].items()) out += fmt::format(" {}={}", b, p.get<std::string>());
  out += "\n";
  text::write_file(path("report.txt"), out);
  rec.seconds = timer.seconds();
  record(rec);
}

}  // namespace probemine
