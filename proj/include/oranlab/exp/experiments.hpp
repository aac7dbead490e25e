#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oranlab/data/analysis.hpp"
#include "oranlab/ric/testbed.hpp"
#include "oranlab/xapp/training.hpp"
#include "oranlab/xapp/xapps.hpp"

namespace oranlab::exp {

namespace fs = std::filesystem;

enum class Mode : std::uint8_t { Collect, TrainOffline, TrainOnline, Evaluate, Analyze };
std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view text);

/// Everything an experiment run needs. Paths are resolved by the caller.
struct ExperimentSpec {
  Mode mode = Mode::Collect;
  sim::ScenarioConfig scenario;
  std::string scenario_path;  // informational, recorded in the manifest
  /// Simulated seconds: collection length, evaluation arm length, or online
  /// exploration cap depending on the mode.
  double duration_s = 300.0;
  xapp::AgentVariant agent = xapp::AgentVariant::Base;
  std::uint64_t seed = 1;
  fs::path out = "out";
  int workers = 1;
  /// Pace the simulated clock to wall-clock time (live demos).
  bool realtime = false;

  fs::path dataset;     // train-offline, analyze
  fs::path checkpoint;  // train-online, evaluate

  xapp::ActionCatalogue catalogue = xapp::ActionCatalogue::make_default();
  int settle_windows = 1;

  ml::PpoConfig ppo;
  xapp::TrainConfig train;
  ml::AutoencoderConfig autoencoder;
  std::size_t autoencoder_samples = 4096;

  /// Baseline arms: every catalogue slicing with each of these all-slice
  /// policies.
  std::vector<Policy> baseline_policies{Policy::RR, Policy::WF, Policy::PF};
  /// Length of the greedy evaluation after online training, seconds.
  double eval_duration_s = 300.0;
  TrafficProfile online_traffic = TrafficProfile::Uniform;
  xapp::OnlineConfig online;
  double online_entropy_coef = 0.05;

  std::vector<std::string> analyze_metrics{data::kMetricNames.begin(), data::kMetricNames.end()};
  double rho = 0.9;

  /// Throws ConfigError naming the first bad field.
  void validate() const;
};

nlohmann::json spec_to_json(const ExperimentSpec& s);
/// Missing keys keep their defaults. Throws ConfigError on bad values.
ExperimentSpec spec_from_json(const nlohmann::json& j, ExperimentSpec base = {});
/// FNV-1a of the canonical JSON form.
std::string spec_hash(const ExperimentSpec& s);

/// Manifest written next to every run's outputs.
void write_manifest(const ExperimentSpec& s, bool complete, const nlohmann::json& extra);

// ---- collect ----
struct CollectResult {
  fs::path dataset;
  std::size_t rows = 0;
  std::size_t expected_rows = 0;  // recorded windows x UEs
  int dwell_windows = 0;
  bool complete = false;
};
CollectResult run_collect(const ExperimentSpec& s);

// ---- train-offline ----
struct OfflineResult {
  fs::path checkpoint;
  std::vector<xapp::LossRow> curve;
  std::vector<double> autoencoder_losses;
  bool plateau_stop = false;
};
OfflineResult run_train_offline(const ExperimentSpec& s);

// ---- evaluate ----
struct ArmResult {
  std::string name;
  std::vector<xapp::WindowLog> windows;
  double mean_reward = 0.0;
  std::vector<std::uint64_t> action_histogram;
};

/// Runs one arm on a fresh testbed: `make` builds the xApp after all nodes
/// registered. The first window (before any control) is included.
ArmResult run_arm(const sim::ScenarioConfig& scenario, const std::string& name, double duration_s,
                  const std::function<std::unique_ptr<xapp::XappBase>(ric::RicService&)>& make,
                  bool realtime = false);
/// Same, but ends early (after the current millisecond) once `stop` holds.
/// `inspect`, when set, sees the xApp after the run and before teardown.
ArmResult run_arm_until(const sim::ScenarioConfig& scenario, const std::string& name, double duration_s,
                        const std::function<std::unique_ptr<xapp::XappBase>(ric::RicService&)>& make,
                        const std::function<bool(const xapp::XappBase&)>& stop, bool realtime = false,
                        const std::function<void(const xapp::XappBase&)>& inspect = {});

struct EvalResult {
  std::vector<ArmResult> arms;  // agent first, then baselines
  const ArmResult& best_baseline() const;
  double median_baseline_reward() const;
};
EvalResult run_evaluate(const ExperimentSpec& s);

// ---- train-online ----
struct OnlineResult {
  fs::path checkpoint;
  std::vector<xapp::UpdateLog> updates;
  ArmResult during;  // exploration phase
  ArmResult after;   // greedy, online-trained
  ArmResult frozen;  // greedy, offline checkpoint as loaded
};
OnlineResult run_train_online(const ExperimentSpec& s);

// ---- analyze ----
struct AnalyzeResult {
  std::vector<std::pair<Slice, data::CorrelationReport>> correlations;
  std::vector<std::pair<Slice, data::FeatureReport>> features;
};
AnalyzeResult run_analyze(const ExperimentSpec& s);

// ---- summaries shared by reports and tests ----
double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v);
/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> v, double q);
/// Shannon entropy (nats) of a count histogram.
double histogram_entropy(const std::vector<std::uint64_t>& h);
std::vector<double> slice_rates(const ArmResult& a, Slice s);
std::vector<double> cell_rates(const ArmResult& a);
std::vector<double> rewards(const ArmResult& a);
/// "value,cumulative" CDF rows of `v`.
std::string cdf_csv(std::vector<double> v);

}  // namespace oranlab::exp
