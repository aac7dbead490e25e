// colctl: experiment driver.
//
//   colctl collect       --scenario s.json --duration 300 --out runs/sweep
//   colctl train-offline --dataset runs/sweep/dataset.csv --out runs/offline
//   colctl evaluate      --checkpoint runs/offline/agent.ckpt --out runs/eval
//   colctl train-online  --checkpoint runs/offline/agent.ckpt --out runs/online
//   colctl analyze       --dataset runs/sweep/dataset.csv --out runs/analysis
//
// Settings are layered: built-in defaults, then --config, then ORANLAB_*
// environment variables, then command-line flags.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "oranlab/exp/experiments.hpp"

namespace {

using namespace oranlab;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Flags {
  std::string config;
  std::string scenario;
  std::string agent;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> duration;
  std::optional<int> workers;
  std::string dataset;
  std::string checkpoint;
  std::optional<int> n_bs;
  std::optional<int> max_updates;
  bool realtime = false;
};

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return (v && *v) ? v : nullptr;
}

template <typename T>
T env_number(const char* name, const char* text) {
  try {
    std::size_t used = 0;
    T v;
    if constexpr (std::is_floating_point_v<T>) {
      v = static_cast<T>(std::stod(text, &used));
    } else {
      v = static_cast<T>(std::stoll(text, &used));
    }
    if (used != std::string_view(text).size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(name) + ": not a number: '" + text + "'");
  }
}

exp::ExperimentSpec build_spec(exp::Mode mode, const Flags& f) {
  exp::ExperimentSpec s;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ConfigError("config: cannot open " + f.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: " + std::string(e.what()));
    }
    s = exp::spec_from_json(j, s);
  }
  s.mode = mode;

  std::string scenario = f.scenario;
  if (scenario.empty() && env("ORANLAB_SCENARIO")) scenario = env("ORANLAB_SCENARIO");
  if (!scenario.empty()) {
    if (!fs::exists(scenario)) throw ConfigError("scenario: file not found: " + scenario);
    s.scenario = sim::load_scenario(scenario);
    s.scenario_path = scenario;
  }
  if (auto* v = env("ORANLAB_SEED")) s.seed = env_number<std::uint64_t>("ORANLAB_SEED", v);
  if (auto* v = env("ORANLAB_OUT")) s.out = v;
  if (auto* v = env("ORANLAB_WORKERS")) s.workers = env_number<int>("ORANLAB_WORKERS", v);
  if (auto* v = env("ORANLAB_DURATION")) s.duration_s = env_number<double>("ORANLAB_DURATION", v);

  if (!f.agent.empty()) {
    auto v = xapp::parse_agent_variant(f.agent);
    if (!v) throw ConfigError("agent: unknown variant '" + f.agent + "'");
    s.agent = *v;
  }
  if (f.seed) s.seed = *f.seed;
  if (!f.out.empty()) s.out = f.out;
  if (f.duration) s.duration_s = *f.duration;
  if (f.workers) s.workers = *f.workers;
  if (!f.dataset.empty()) s.dataset = f.dataset;
  if (!f.checkpoint.empty()) s.checkpoint = f.checkpoint;
  if (f.n_bs) s.scenario.n_bs = *f.n_bs;
  if (f.max_updates) s.train.max_updates = *f.max_updates;
  if (f.realtime) s.realtime = true;
  s.validate();
  return s;
}

void report(const exp::ArmResult& a) {
  std::cout << "  " << a.name << ": reward " << a.mean_reward << ", cell rate " << exp::mean(exp::cell_rates(a)) / 1e6
            << " Mbit/s over " << a.windows.size() << " windows\n";
}

int run(exp::Mode mode, const Flags& f) {
  const auto s = build_spec(mode, f);
  std::cout << "colctl " << exp::to_string(mode) << ": out=" << s.out.string() << " seed=" << s.seed
            << " spec=" << exp::spec_hash(s) << "\n";
  switch (mode) {
    case exp::Mode::Collect: {
      const auto r = exp::run_collect(s);
      std::cout << "  " << r.rows << " rows, dwell " << r.dwell_windows << " windows/profile"
                << (r.complete ? "" : ", INCOMPLETE sweep") << "\n";
      return r.complete ? kExitOk : kExitRuntime;
    }
    case exp::Mode::TrainOffline: {
      const auto r = exp::run_train_offline(s);
      std::cout << "  " << r.curve.size() << " updates" << (r.plateau_stop ? " (entropy plateau)" : "")
                << ", checkpoint " << r.checkpoint.string() << "\n";
      return kExitOk;
    }
    case exp::Mode::Evaluate: {
      const auto r = exp::run_evaluate(s);
      report(r.arms.front());
      std::cout << "  best baseline " << r.best_baseline().name << ": " << r.best_baseline().mean_reward
                << ", median " << r.median_baseline_reward() << "\n";
      return kExitOk;
    }
    case exp::Mode::TrainOnline: {
      const auto r = exp::run_train_online(s);
      std::cout << "  " << r.updates.size() << " online updates, checkpoint " << r.checkpoint.string() << "\n";
      report(r.during);
      report(r.after);
      report(r.frozen);
      return kExitOk;
    }
    case exp::Mode::Analyze: {
      const auto r = exp::run_analyze(s);
      for (const auto& [slice, fr] : r.features) {
        std::cout << "  " << to_string(slice) << ": " << fr.selected.size() << " features kept\n";
      }
      return kExitOk;
    }
  }
  return kExitOk;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "Experiment JSON (see docs/config.md)");
  sub->add_option("--scenario", f.scenario, "Scenario JSON file");
  sub->add_option("--agent", f.agent, "drl-base | drl-reduced | drl-no-ae");
  sub->add_option("--seed", f.seed, "Scenario and training seed");
  sub->add_option("--out", f.out, "Output directory");
  sub->add_option("--duration", f.duration, "Simulated seconds");
  sub->add_option("--workers", f.workers, "Offline training worker threads");
  sub->add_option("--dataset", f.dataset, "Dataset CSV");
  sub->add_option("--checkpoint", f.checkpoint, "Agent checkpoint");
  sub->add_option("--n-bs", f.n_bs, "Override the scenario's base-station count");
  sub->add_option("--max-updates", f.max_updates, "Offline PPO update cap");
  sub->add_flag("--realtime", f.realtime, "Pace simulated time to the wall clock");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open RAN closed-loop lab experiment driver"};
  app.require_subcommand(1);
  Flags f;
  struct Verb {
    const char* name;
    const char* help;
  };
  const Verb verbs[] = {
      {"collect", "Sweep the action catalogue and write a KPM dataset"},
      {"train-offline", "Train the slicing agent on a collected dataset"},
      {"train-online", "Continue training a checkpoint against the live simulator"},
      {"evaluate", "Compare a checkpoint against static slicing/scheduling baselines"},
      {"analyze", "Per-slice correlations, linear fits and feature selection"},
  };
  for (const auto& v : verbs) add_common(app.add_subcommand(v.name, v.help), f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  const auto* sub = app.get_subcommands().front();
  try {
    return run(*exp::parse_mode(sub->get_name()), f);
  } catch (const ConfigError& e) {
    std::cerr << "colctl: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "colctl: " << e.what() << "\n";
    return kExitRuntime;
  }
}
