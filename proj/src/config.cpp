#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "probemine/error.hpp"
#include "probemine/pipeline.hpp"
#include "probemine/text.hpp"

namespace probemine {
namespace {

const std::vector<ConfigKey> kKeys = {
    {"out", "out", "output directory"},
    {"input", "", "probe log (CSV or JSON lines, .gz accepted); empty uses <out>/synth/probes.csv"},
    {"registry", "", "deployment registry CSV; empty uses the built-in 20-building deployment"},
    {"calendar", "", "day-label calendar CSV; empty uses <out>/synth/calendar.csv"},
    {"scenario", "", "generator scenario file; empty uses the built-in default"},
    {"pre-coalesced", "false", "input rows are detection intervals rather than single probes"},
    {"tz-offset", "28800", "fixed local UTC offset in seconds"},
    {"seed", "", "clustering seed (required by the clustering stages)"},
    {"synth-seed", "1", "generator seed"},
    {"synth-devices", "", "override the scenario device count"},
    {"synth-days", "", "override the scenario day count"},
    {"time-k", "4", "clusters for the by-time perspective"},
    {"person-k", "8", "clusters for the by-person perspective"},
    {"restarts", "20", "k-means restarts"},
    {"sse-k-max", "10", "largest k of the per-building SSE curve"},
    {"silhouette-sample", "2000", "points scored by the person silhouette (0 disables)"},
    {"coalesce-gap", "180", "largest probe gap inside one detection interval, seconds"},
    {"merge-threshold", "21600", "largest take time merged into one building stay, seconds"},
    {"min-span", "300", "shortest kept trajectory span, seconds"},
    {"max-stay", "57600", "longest plausible single stay, seconds"},
    {"dominant-threshold", "0.55", "share of a pair's transitions that makes a direction dominant"},
    {"windows", "morning,midday,evening", "transition windows to analyse"},
    {"hac-input", "dissimilarity", "dissimilarity or row-vectors"},
    {"hac-cut", "0.75", "dendrogram cut height"},
    {"hac-cut-mode", "relative", "relative (fraction of the top merge) or absolute"},
    {"threads", "0", "worker threads; 0 uses every hardware thread"},
};

std::int64_t as_int(const std::string& key, const std::string& v, std::int64_t lo) {
  std::int64_t out = 0;
  if (!text::parse_int(v, out)) throw ConfigError(fmt::format("{} must be an integer, got '{}'", key, v));
  if (out < lo) throw ConfigError(fmt::format("{} must be >= {}, got {}", key, lo, out));
  return out;
}

double as_double(const std::string& key, const std::string& v) {
  double out = 0;
  if (!text::parse_double(v, out) || !std::isfinite(out)) {
    throw ConfigError(fmt::format("{} must be a number, got '{}'", key, v));
  }
  return out;
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("{} must be true or false, got '{}'", key, v));
}

}  // namespace

const std::vector<ConfigKey>& config_keys() { return kKeys; }

PipelineConfig PipelineConfig::from_values(const std::map<std::string, std::string>& given) {
  std::map<std::string, std::string> v;
  for (const auto& k : kKeys) v[std::string(k.name)] = std::string(k.default_value);
  for (const auto& [key, value] : given) {
    if (!v.contains(key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
    v[key] = value;
  }
  PipelineConfig c;
  c.out = v["out"];
  if (c.out.empty()) throw ConfigError("out must not be empty");
  c.input = v["input"];
  c.registry = v["registry"];
  c.calendar = v["calendar"];
  c.scenario = v["scenario"];
  c.pre_coalesced = as_bool("pre-coalesced", v["pre-coalesced"]);
  c.tz_offset = as_int("tz-offset", v["tz-offset"], -14 * kHourSeconds);
  if (c.tz_offset > 14 * kHourSeconds) throw ConfigError("tz-offset must be within +-14 h");
  if (!v["seed"].empty()) c.seed = static_cast<std::uint64_t>(as_int("seed", v["seed"], 0));
  c.synth_seed = static_cast<std::uint64_t>(as_int("synth-seed", v["synth-seed"], 0));
  if (!v["synth-devices"].empty()) c.synth_devices = static_cast<std::size_t>(as_int("synth-devices", v["synth-devices"], 1));
  if (!v["synth-days"].empty()) c.synth_days = static_cast<int>(as_int("synth-days", v["synth-days"], 1));
  c.time_k = static_cast<std::size_t>(as_int("time-k", v["time-k"], 1));
  c.person_k = static_cast<std::size_t>(as_int("person-k", v["person-k"], 1));
  c.restarts = static_cast<std::size_t>(as_int("restarts", v["restarts"], 1));
  c.sse_k_max = static_cast<std::size_t>(as_int("sse-k-max", v["sse-k-max"], 1));
  c.silhouette_sample = static_cast<std::size_t>(as_int("silhouette-sample", v["silhouette-sample"], 0));
  c.coalesce_gap = as_int("coalesce-gap", v["coalesce-gap"], 1);
  c.merge_threshold = as_int("merge-threshold", v["merge-threshold"], 1);
  c.min_span = as_int("min-span", v["min-span"], 1);
  c.max_stay = as_int("max-stay", v["max-stay"], 1);
  c.dominant_threshold = as_double("dominant-threshold", v["dominant-threshold"]);
  if (c.dominant_threshold < 0.5 || c.dominant_threshold >= 1) {
    throw ConfigError("dominant-threshold must be in [0.5, 1)");
  }
  c.windows.clear();
  for (const auto w : text::split(v["windows"], ',')) {
    try {
      const auto win = by_location::parse_window(text::trim(w));
      if (std::find(c.windows.begin(), c.windows.end(), win) != c.windows.end()) {
        throw ConfigError(fmt::format("window '{}' listed twice", text::trim(w)));
      }
      c.windows.push_back(win);
    } catch (const MalformedInput& e) {
      throw ConfigError(e.what());
    }
  }
  if (c.windows.empty()) throw ConfigError("windows must name at least one window");
  std::sort(c.windows.begin(), c.windows.end());
  c.hac_input = by_location::parse_hac_input(v["hac-input"]);
  c.hac_cut.value = as_double("hac-cut", v["hac-cut"]);
  if (c.hac_cut.value <= 0) throw ConfigError("hac-cut must be positive");
  if (v["hac-cut-mode"] == "relative") c.hac_cut.relative = true;
  else if (v["hac-cut-mode"] == "absolute") c.hac_cut.relative = false;
  else throw ConfigError("hac-cut-mode must be relative or absolute");
  c.threads = static_cast<std::size_t>(as_int("threads", v["threads"], 0));
  if (c.threads == 0) c.threads = std::max(1u, std::thread::hardware_concurrency());
  return c;
}

std::map<std::string, std::string> PipelineConfig::to_values() const {
  std::map<std::string, std::string> v;
  v["out"] = out.string();
  v["input"] = input.string();
  v["registry"] = registry.string();
  v["calendar"] = calendar.string();
  v["scenario"] = scenario.string();
  v["pre-coalesced"] = pre_coalesced ? "true" : "false";
  v["tz-offset"] = std::to_string(tz_offset);
  v["seed"] = seed ? std::to_string(*seed) : "";
  v["synth-seed"] = std::to_string(synth_seed);
  v["synth-devices"] = synth_devices ? std::to_string(*synth_devices) : "";
  v["synth-days"] = synth_days ? std::to_string(*synth_days) : "";
  v["time-k"] = std::to_string(time_k);
  v["person-k"] = std::to_string(person_k);
  v["restarts"] = std::to_string(restarts);
  v["sse-k-max"] = std::to_string(sse_k_max);
  v["silhouette-sample"] = std::to_string(silhouette_sample);
  v["coalesce-gap"] = std::to_string(coalesce_gap);
  v["merge-threshold"] = std::to_string(merge_threshold);
  v["min-span"] = std::to_string(min_span);
  v["max-stay"] = std::to_string(max_stay);
  v["dominant-threshold"] = fmt::format("{}", dominant_threshold);
  std::string ws;
  for (const auto w : windows) ws += (ws.empty() ? "" : ",") + std::string(by_location::to_string(w));
  v["windows"] = ws;
  v["hac-input"] = std::string(by_location::to_string(hac_input));
  v["hac-cut"] = fmt::format("{}", hac_cut.value);
  v["hac-cut-mode"] = hac_cut.relative ? "relative" : "absolute";
  v["threads"] = std::to_string(threads);
  return v;
}

std::string PipelineConfig::hash() const {
  std::string canon;
  for (const auto& [k, val] : to_values()) {
    if (k == "out" || k == "threads") continue;
    canon += k + " = " + val + "\n";
  }
  return text::crc32_hex(canon);
}

std::map<std::string, std::string> parse_config(std::istream& in) {
  std::map<std::string, std::string> v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = std::string_view(line);
    if (const auto h = t.find('#'); h != std::string_view::npos) t = t.substr(0, h);
    t = text::trim(t);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("config line {}: expected key = value", lineno));
    const auto key = std::string(text::trim(t.substr(0, eq)));
    if (key.empty()) throw ConfigError(fmt::format("config line {}: empty key", lineno));
    v[key] = std::string(text::trim(t.substr(eq + 1)));
  }
  return v;
}

std::map<std::string, std::string> load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  return parse_config(in);
}

}  // namespace probemine
