#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "probemine/error.hpp"
#include "probemine/ingest.hpp"
#include "probemine/preprocess.hpp"
#include "probemine/synthgen.hpp"
#include "support.hpp"

namespace probemine::synth {
namespace {

const DeploymentRegistry& registry() {
  static const auto r = DeploymentRegistry::standard();
  return r;
}

Scenario from_text(const std::string& text) {
  std::istringstream in(text);
  return Scenario::parse(in);
}

const char* kSingleStay = R"(
devices = 3
days = 2
first_date = 2024-03-25
emission = continuous
continuous_gap = 60s 120s

[archetype patient]
share = 1
step = building:H at 09:00~0m until 12:00~0m
)";

struct Run {
  GroundTruth truth;
  std::vector<Probe> probes;
};

Run run(const Scenario& sc, std::uint64_t seed, std::size_t threads = 1) {
  Run r;
  r.truth = generate(sc, registry(), {seed, threads, true},
                     [&](std::int64_t, std::span<const Probe> p) { r.probes.insert(r.probes.end(), p.begin(), p.end()); });
  return r;
}

/// Probes through coalescing, chaining and building merge.
std::map<std::pair<std::string, std::int64_t>, DayTrajectory> ingest(const Run& r, const Scenario& sc) {
  ingest::Coalescer c;
  for (const auto& p : r.probes) c.add(r.truth.devices[p.device], r.truth.sensors[p.sensor], p.timestamp);
  std::map<std::pair<std::string, std::int64_t>, DayTrajectory> out;
  for (auto& t : ingest::build_sensor_trajectories(std::move(c).finish(), TimeFrame(sc.tz_offset))) {
    auto key = std::make_pair(t.device.str(), t.day.index);
    out.emplace(std::move(key), prep::merge_to_building_level(std::move(t)));
  }
  return out;
}

Scenario small_default(std::size_t devices, int days) {
  auto sc = default_scenario();
  sc.devices = devices;
  sc.days = days;
  return sc;
}

TEST(Scenario, TextRoundTrip) {
  for (const auto& sc : {default_scenario(), commuter_scenario(), from_text(kSingleStay)}) {
    const auto text = sc.to_text();
    const auto again = from_text(text);
    EXPECT_EQ(again.to_text(), text);
    EXPECT_NO_THROW(again.validate(registry()));
  }
}

TEST(Scenario, DefaultShape) {
  const auto sc = default_scenario();
  EXPECT_EQ(sc.archetypes.size(), 8u);
  EXPECT_EQ(sc.devices, 5000u);
  EXPECT_EQ(sc.days, 28);
  EXPECT_EQ(sc.first_day, test::monday());
  EXPECT_EQ(sc.holidays.size(), 2u);
  const double total =
      std::accumulate(sc.archetypes.begin(), sc.archetypes.end(), 0.0, [](double s, const auto& a) { return s + a.share; });
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Scenario, ValidationErrors) {
  const auto bad = [](const std::string& text) {
    EXPECT_THROW(from_text(text).validate(registry()), SpecError) << text;
  };
  bad("devices = 0\n[archetype x]\nshare = 1\nstep = building:H at 09:00~0m stay 1h~0m\n");
  bad("[archetype x]\nshare = 0.5\nstep = building:H at 09:00~0m stay 1h~0m\n");
  bad("[archetype x]\nshare = 1\nstep = building:Z at 09:00~0m stay 1h~0m\n");
  bad("[archetype x]\nshare = 1\nstep = building:H after stay 1h~0m\n");
  bad("[archetype x]\nshare = 1\nstep = building:H at 09:00~0m until 08:00~0m\n");
  bad("[archetype x]\nshare = 1\nstep = building:H at 09:00~0m stay 1h~0m\nstep = building:H after stay 1h~0m\n");
  bad("[archetype x]\nshare = 1\nstep = building:H profile stay 1h~0m\n");
  bad("max_burst_gap = 6h\n[archetype x]\nshare = 1\nstep = building:H at 09:00~0m stay 1h~0m\n");
  EXPECT_THROW(from_text("nonsense = 1\n"), SpecError);
  EXPECT_THROW(from_text("[archetype x]\nstep = building:H at 25x\n"), SpecError);
  EXPECT_THROW(from_text("[archetype x]\nuntil_shift = 0 0\n"), SpecError);
}

TEST(Generate, ContinuousSingleStayRoundTrips) {
  const auto sc = from_text(kSingleStay);
  const auto r = run(sc, 5);
  const auto trajs = ingest(r, sc);
  ASSERT_EQ(trajs.size(), 6u);
  for (const auto& [key, t] : trajs) {
    ASSERT_EQ(t.entries.size(), 1u);
    EXPECT_EQ(t.entries[0].node, NodeId("H"));
    EXPECT_EQ(t.entries[0].start, test::at(key.second, 9));
    EXPECT_EQ(t.entries[0].end, test::at(key.second, 12));
  }
}

TEST(Generate, DeterministicAcrossThreads) {
  const auto sc = small_default(300, 7);
  const auto a = run(sc, 11, 1);
  const auto b = run(sc, 11, 6);
  EXPECT_EQ(a.probes, b.probes);
  EXPECT_EQ(a.truth.device_archetype, b.truth.device_archetype);
  ASSERT_EQ(a.truth.plans.size(), b.truth.plans.size());
  for (std::size_t i = 0; i < a.truth.plans.size(); ++i) EXPECT_EQ(a.truth.plans[i].stays, b.truth.plans[i].stays);
  const auto c = run(sc, 12, 1);
  EXPECT_NE(a.probes, c.probes);
}

TEST(Generate, SharesAreQuotas) {
  auto sc = small_default(1000, 1);
  sc.archetypes[0].share += sc.archetypes[2].share;
  sc.archetypes[2].share = 0;
  const auto r = run(sc, 3);
  std::vector<std::size_t> counts(sc.archetypes.size());
  for (const auto a : r.truth.device_archetype) ++counts[a];
  EXPECT_EQ(counts[2], 0u);
  for (std::size_t a = 0; a < counts.size(); ++a) {
    EXPECT_LE(std::abs(static_cast<double>(counts[a]) - sc.archetypes[a].share * 1000), 1.0) << a;
  }
}

TEST(Generate, ItinerariesSurviveIngest) {
  const auto sc = small_default(400, 7);
  const auto r = run(sc, 9);
  const auto trajs = ingest(r, sc);
  ASSERT_EQ(trajs.size(), r.truth.plans.size());
  for (const auto& plan : r.truth.plans) {
    const auto it = trajs.find({r.truth.devices[plan.device], plan.day});
    ASSERT_NE(it, trajs.end());
    const auto& entries = it->second.entries;
    ASSERT_EQ(entries.size(), plan.stays.size()) << r.truth.archetypes[r.truth.device_archetype[plan.device]];
    const auto window_end = it->second.day.end;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      EXPECT_EQ(building_of(entries[k].node), plan.stays[k].building);
      EXPECT_EQ(entries[k].start, plan.stays[k].start);
      // A stay running into 03:00 can coalesce with the next morning's
      // first probe at the same sensor; the split then ends it at 03:00.
      if (plan.stays[k].end == window_end - 1 && entries[k].end == window_end) continue;
      EXPECT_EQ(entries[k].end, plan.stays[k].end);
    }
  }
}

std::size_t archetype_index(const GroundTruth& t, const std::string& name) {
  return static_cast<std::size_t>(std::find(t.archetypes.begin(), t.archetypes.end(), name) - t.archetypes.begin());
}

TEST(Generate, HospitalWorkersAndResidents) {
  const auto sc = small_default(1000, 14);
  const auto r = run(sc, 21);
  const auto worker = archetype_index(r.truth, "hospital_worker");
  const auto resident = archetype_index(r.truth, "resident");
  const TimeFrame frame(sc.tz_offset);
  std::size_t workers = 0;
  std::size_t in_range = 0;
  Duration total_at_h = 0;
  std::size_t residents = 0;
  for (const auto& plan : r.truth.plans) {
    const auto a = r.truth.device_archetype[plan.device];
    if (a == worker) {
      Duration at_h = 0;
      for (const auto& s : plan.stays) at_h += s.building == BuildingId('H') ? s.end - s.start : 0;
      if (at_h >= 7 * kHourSeconds + 1800 && at_h <= 15 * kHourSeconds) ++in_range;
      total_at_h += at_h;
      ++workers;
    } else if (a == resident) {
      const auto& last = plan.stays.back();
      EXPECT_EQ(last.building, r.truth.device_home[plan.device]);
      EXPECT_GE(last.end, frame.window(plan.day).end - 600);
      ++residents;
    }
  }
  ASSERT_GT(workers, 500u);
  EXPECT_GE(static_cast<double>(in_range), 0.95 * static_cast<double>(workers));
  const double mean_hours = static_cast<double>(total_at_h) / static_cast<double>(workers) / kHourSeconds;
  EXPECT_GE(mean_hours, 7.5);
  EXPECT_LE(mean_hours, 15.0);
  EXPECT_GT(residents, 2000u);
}

TEST(GroundTruth, FileRoundTrip) {
  const auto dir = test::scratch_dir("synth_truth");
  GroundTruth truth;
  const auto out = generate_to_directory(small_default(50, 3), registry(), {4, 2, false}, dir, &truth);
  EXPECT_GT(out.probe_count, 0u);
  const auto tables = read_ground_truth(out.ground_truth);
  EXPECT_EQ(tables.device_days.size(), truth.plans.size());
  EXPECT_EQ(tables.building_days.size(), 3 * registry().size());
  for (const auto& [dev, day, name] : tables.device_days) {
    const auto i = static_cast<std::size_t>(std::find(truth.devices.begin(), truth.devices.end(), dev) - truth.devices.begin());
    ASSERT_LT(i, truth.devices.size());
    EXPECT_EQ(name, truth.archetypes[truth.device_archetype[i]]);
  }
}

}  // namespace
}  // namespace probemine::synth
