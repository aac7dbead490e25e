#include "oranlab/sim/scenario.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace oranlab::sim {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(key, e.what());
  }
}

std::array<double, kNumSlices> read_slice_doubles(const nlohmann::json& j, const char* key,
                                                   std::array<double, kNumSlices> def) {
  if (!j.contains(key)) return def;
  const auto& obj = j.at(key);
  if (!obj.is_object()) fail(key, "expected an object keyed by slice name");
  for (auto s : kAllSlices) {
    auto name = std::string(to_string(s));
    if (obj.contains(name)) {
      if (!obj.at(name).is_number()) fail(std::string(key) + "." + name, "expected a number");
      def[index_of(s)] = obj.at(name).get<double>();
    }
  }
  return def;
}

nlohmann::json slice_doubles_to_json(const std::array<double, kNumSlices>& v) {
  nlohmann::json j = nlohmann::json::object();
  for (auto s : kAllSlices) j[std::string(to_string(s))] = v[index_of(s)];
  return j;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (n_bs < 1) fail("n_bs", "must be >= 1");
  if (ues_per_slice_per_bs < 1) fail("ues_per_slice_per_bs", "no UEs: must be >= 1");
  if (total_prbs < static_cast<int>(kNumSlices)) fail("total_prbs", "must be >= 3 (one per slice)");
  if (tti_ms != 1) fail("tti_ms", "only 1 ms TTIs are supported");
  for (auto s : kAllSlices) {
    if (!(slice_rates_bps[index_of(s)] > 0.0)) fail("slice_rates_bps." + std::string(to_string(s)), "must be > 0");
    if (packet_bytes[index_of(s)] < 1) fail("packet_bytes." + std::string(to_string(s)), "must be >= 1");
    if (uplink.offered_bps[index_of(s)] < 0.0) fail("uplink.offered_bps", "must be >= 0");
  }
  if (!(uniform_rate_bps > 0.0)) fail("uniform_rate_bps", "must be > 0");
  if (reporting_period_ms < 1) fail("reporting_period_ms", "must be >= 1");
  if (dl_buffer_cap_bytes < 1) fail("dl_buffer_cap_bytes", "must be >= 1");
  if (!(pf_ewma_alpha > 0.0 && pf_ewma_alpha <= 1.0)) fail("pf_ewma_alpha", "must be in (0, 1]");
  if (initial_slicing) {
    if (auto err = check_slicing(*initial_slicing, total_prbs)) fail("initial_slicing", *err);
  }
  if (channel.mean_cqi_min < 1.0 || channel.mean_cqi_max > 15.0 || channel.mean_cqi_min > channel.mean_cqi_max) {
    fail("channel.mean_cqi", "need 1 <= mean_cqi_min <= mean_cqi_max <= 15");
  }
  if (channel.step_period_ms < 1) fail("channel.step_period_ms", "must be >= 1");
  if (channel.reversion < 0.0) fail("channel.reversion", "must be >= 0");
}

double ScenarioConfig::offered_rate_bps(Slice s) const {
  return traffic_profile == TrafficProfile::Uniform ? uniform_rate_bps : slice_rates_bps[index_of(s)];
}

bool ScenarioConfig::is_constant_bitrate(Slice s) const {
  return traffic_profile == TrafficProfile::Uniform || s == Slice::eMBB;
}

SlicingProfile ScenarioConfig::default_slicing() const {
  if (initial_slicing) return *initial_slicing;
  const int base = total_prbs / 3;
  return SlicingProfile{{base + total_prbs % 3, base, base}};
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
  ScenarioConfig cfg;
  read_if(j, "n_bs", cfg.n_bs);
  read_if(j, "ues_per_slice_per_bs", cfg.ues_per_slice_per_bs);
  read_if(j, "total_prbs", cfg.total_prbs);
  read_if(j, "tti_ms", cfg.tti_ms);
  if (j.contains("traffic_profile")) {
    auto t = parse_traffic_profile(j.at("traffic_profile").get<std::string>());
    if (!t) fail("traffic_profile", "expected \"slice-based\" or \"uniform\"");
    cfg.traffic_profile = *t;
  }
  cfg.slice_rates_bps = read_slice_doubles(j, "slice_rates_bps", cfg.slice_rates_bps);
  read_if(j, "uniform_rate_bps", cfg.uniform_rate_bps);
  if (j.contains("packet_bytes")) {
    std::array<double, kNumSlices> def{};
    for (std::size_t i = 0; i < kNumSlices; ++i) def[i] = cfg.packet_bytes[i];
    auto v = read_slice_doubles(j, "packet_bytes", def);
    for (std::size_t i = 0; i < kNumSlices; ++i) cfg.packet_bytes[i] = static_cast<int>(v[i]);
  }
  read_if(j, "reporting_period_ms", cfg.reporting_period_ms);
  read_if(j, "rng_seed", cfg.rng_seed);
  read_if(j, "dl_buffer_cap_bytes", cfg.dl_buffer_cap_bytes);
  read_if(j, "pf_ewma_alpha", cfg.pf_ewma_alpha);
  if (j.contains("initial_slicing")) {
    auto p = parse_slicing(j.at("initial_slicing").get<std::string>());
    if (!p) fail("initial_slicing", "expected \"eMBB-MTC-URLLC\" PRB counts, e.g. \"36-3-11\"");
    cfg.initial_slicing = *p;
  }
  if (j.contains("initial_scheduling")) {
    auto p = parse_scheduling(j.at("initial_scheduling").get<std::string>());
    if (!p) fail("initial_scheduling", "expected e.g. \"RR-WF-PF\"");
    cfg.initial_scheduling = *p;
  }
  if (j.contains("channel")) {
    const auto& c = j.at("channel");
    read_if(c, "mean_cqi_min", cfg.channel.mean_cqi_min);
    read_if(c, "mean_cqi_max", cfg.channel.mean_cqi_max);
    read_if(c, "step_period_ms", cfg.channel.step_period_ms);
    read_if(c, "reversion", cfg.channel.reversion);
  }
  if (j.contains("uplink")) {
    const auto& u = j.at("uplink");
    cfg.uplink.offered_bps = read_slice_doubles(u, "offered_bps", cfg.uplink.offered_bps);
    read_if(u, "rate_jitter", cfg.uplink.rate_jitter);
    read_if(u, "errors_per_mbit", cfg.uplink.errors_per_mbit);
    read_if(u, "mean_buffer_ms", cfg.uplink.mean_buffer_ms);
  }
  cfg.validate();
  return cfg;
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["n_bs"] = cfg.n_bs;
  j["ues_per_slice_per_bs"] = cfg.ues_per_slice_per_bs;
  j["total_prbs"] = cfg.total_prbs;
  j["tti_ms"] = cfg.tti_ms;
  j["traffic_profile"] = std::string(to_string(cfg.traffic_profile));
  j["slice_rates_bps"] = slice_doubles_to_json(cfg.slice_rates_bps);
  j["uniform_rate_bps"] = cfg.uniform_rate_bps;
  j["packet_bytes"] = slice_doubles_to_json(
      {static_cast<double>(cfg.packet_bytes[0]), static_cast<double>(cfg.packet_bytes[1]),
       static_cast<double>(cfg.packet_bytes[2])});
  j["reporting_period_ms"] = cfg.reporting_period_ms;
  j["rng_seed"] = cfg.rng_seed;
  j["dl_buffer_cap_bytes"] = cfg.dl_buffer_cap_bytes;
  j["pf_ewma_alpha"] = cfg.pf_ewma_alpha;
  if (cfg.initial_slicing) j["initial_slicing"] = format_slicing(*cfg.initial_slicing);
  j["initial_scheduling"] = format_scheduling(cfg.initial_scheduling);
  j["channel"] = {{"mean_cqi_min", cfg.channel.mean_cqi_min},
                  {"mean_cqi_max", cfg.channel.mean_cqi_max},
                  {"step_period_ms", cfg.channel.step_period_ms},
                  {"reversion", cfg.channel.reversion}};
  j["uplink"] = {{"offered_bps", slice_doubles_to_json(cfg.uplink.offered_bps)},
                 {"rate_jitter", cfg.uplink.rate_jitter},
                 {"errors_per_mbit", cfg.uplink.errors_per_mbit},
                 {"mean_buffer_ms", cfg.uplink.mean_buffer_ms}};
  return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("scenario: " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace oranlab::sim
