#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "oranlab/exp/experiments.hpp"

using namespace oranlab;
using namespace oranlab::exp;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("oranlab_test_exp_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

xapp::ActionCatalogue small_catalogue() {
  return xapp::ActionCatalogue({SlicingProfile{{36, 3, 11}}, SlicingProfile{{16, 17, 17}}},
                               {SchedulingProfile{}, SchedulingProfile{{Policy::PF, Policy::PF, Policy::PF}}});
}

ExperimentSpec small_spec(const fs::path& out) {
  ExperimentSpec s;
  s.catalogue = small_catalogue();
  s.duration_s = 20;
  s.out = out;
  s.agent = xapp::AgentVariant::NoAutoencoder;
  s.train.max_updates = 3;
  s.train.rollout = 64;
  s.train.episode_len = 16;
  s.train.min_updates = 1;
  s.eval_duration_s = 10;
  return s;
}

// Two-armed toy: arm 0 pays 1.
class ToyEnv : public xapp::ReplayEnv {
 public:
  std::size_t n_actions() const override { return 2; }
  void reset(std::mt19937_64&) override { history_.clear(); }
  double step(std::size_t a, std::mt19937_64&) override {
    history_.push(xapp::WindowAggregate{});
    return a == 0 ? 1.0 : 0.0;
  }
};

}  // namespace

TEST_CASE("spec validation") {
  ExperimentSpec s;
  CHECK_NOTHROW(s.validate());
  s.duration_s = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.duration_s = 10;
  s.mode = Mode::TrainOffline;
  s.dataset = "/nonexistent/dataset.csv";
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("dataset"), ConfigError);
  s.mode = Mode::Evaluate;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("checkpoint"), ConfigError);
  s.mode = Mode::Analyze;
  s.dataset.clear();
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.mode = Mode::Collect;
  s.analyze_metrics = {"dl_mcs", "bogus"};
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("spec json round trip") {
  auto s = small_spec("runs/x");
  s.mode = Mode::TrainOnline;
  s.seed = 99;
  s.workers = 45;
  s.scenario.n_bs = 7;
  s.baseline_policies = {Policy::WF};
  const auto back = spec_from_json(spec_to_json(s));
  CHECK(spec_to_json(back) == spec_to_json(s));
  CHECK(spec_hash(back) == spec_hash(s));
  s.seed = 100;
  CHECK(spec_hash(back) != spec_hash(s));
  CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"mode", "dance"}}), ConfigError);
  CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"baseline_policies", {"XX"}}}), ConfigError);
  CHECK(spec_from_json(nlohmann::json::object()).seed == ExperimentSpec{}.seed);
}

TEST_CASE("summaries") {
  CHECK(mean({}) == 0.0);
  CHECK(mean({1, 2, 3}) == 2.0);
  CHECK(variance({1, 2, 3, 4}) == doctest::Approx(5.0 / 3));
  CHECK(quantile({3, 1, 2}, 0.5) == 2.0);
  CHECK(quantile({0, 10}, 0.8) == doctest::Approx(8.0));
  CHECK(histogram_entropy({5, 5}) == doctest::Approx(std::log(2.0)));
  CHECK(histogram_entropy({0, 9, 0}) == 0.0);
  const auto cdf = cdf_csv({3, 1, 2, 2});
  CHECK(cdf == "value,cumulative\n1,0.25\n2,0.75\n3,1\n");
}

TEST_CASE("collect: accounting, manifest, short duration") {
  const auto out = tmp_dir("collect");
  auto s = small_spec(out);
  s.scenario.n_bs = 2;
  const auto r = run_collect(s);
  CHECK(r.complete);
  // 80 windows: (80 - 1) / 4 actions = 19 per action, one of them settling.
  CHECK(r.dwell_windows == 18);
  const auto ds = data::Dataset::load(r.dataset);
  std::set<std::pair<BsId, std::int64_t>> windows;
  for (const auto& row : ds.rows()) windows.insert({row.kpm.bs_id, row.kpm.timestamp_ms});
  CHECK(ds.size() == windows.size() * 6);
  const auto m = manifest(out);
  CHECK(m["complete"] == true);
  CHECK(m["results"]["rows"] == ds.size());
  CHECK(m["spec_hash"] == spec_hash(s));

  s.duration_s = 1;
  CHECK_THROWS_WITH_AS(run_collect(s), doctest::Contains("too short"), ConfigError);
  fs::remove_all(out);
}

TEST_CASE("train-offline: determinism, workers, coverage") {
  const auto out = tmp_dir("offline");
  auto s = small_spec(out / "sweep");
  s.dataset = run_collect(s).dataset;
  s.mode = Mode::TrainOffline;

  s.out = out / "a";
  const auto a = run_train_offline(s);
  s.out = out / "b";
  run_train_offline(s);
  CHECK(a.curve.size() == 3);
  CHECK(slurp(out / "a" / "losses.csv") == slurp(out / "b" / "losses.csv"));
  CHECK(slurp(out / "a" / "losses.csv").rfind("step,policy_loss,value_loss,entropy_loss,mean_reward\n", 0) == 0);

  s.workers = 45;
  s.out = out / "w";
  run_train_offline(s);
  CHECK(manifest(out / "w")["results"]["workers"] == 45);
  CHECK(manifest(out / "w")["workers"] == 45);

  SUBCASE("the autoencoder variant trains its encoder first") {
    s.workers = 1;
    s.agent = xapp::AgentVariant::Base;
    s.autoencoder.epochs = 2;
    s.autoencoder_samples = 256;
    s.out = out / "ae";
    const auto r = run_train_offline(s);
    CHECK(r.autoencoder_losses.size() == 2);
    CHECK(xapp::SlicingAgent::load(r.checkpoint).autoencoder().has_value());
  }
  SUBCASE("a catalogue the data does not cover is refused with the gaps listed") {
    s.catalogue = xapp::ActionCatalogue::make_default();
    s.out = out / "gaps";
    CHECK_THROWS_WITH_AS(run_train_offline(s), doctest::Contains("42-3-5"), ConfigError);
  }
  fs::remove_all(out);
}

TEST_CASE("plateau stop halts a converging run before the cap") {
  ml::PpoAgent agent(1, 2, {}, 3);
  xapp::TrainConfig cfg;
  cfg.max_updates = 300;
  cfg.rollout = 64;
  cfg.episode_len = 8;
  cfg.min_updates = 10;
  cfg.plateau_window = 10;
  cfg.plateau_threshold = 1e-4;
  const auto r = xapp::train_ppo(
      agent, [] { return std::make_unique<ToyEnv>(); }, [](const xapp::WindowHistory&) { return ml::VectorXd::Ones(1); },
      cfg);
  CHECK(r.plateau_stop);
  CHECK(r.curve.size() < 300);
  CHECK(agent.policy(ml::VectorXd::Ones(1))(0) > 0.95);
}

TEST_CASE("evaluate and train-online") {
  const auto out = tmp_dir("eval");
  auto s = small_spec(out / "sweep");
  s.dataset = run_collect(s).dataset;
  s.mode = Mode::TrainOffline;
  s.out = out / "offline";
  s.checkpoint = run_train_offline(s).checkpoint;
  const auto before = slurp(s.checkpoint);

  SUBCASE("evaluate") {
    s.mode = Mode::Evaluate;
    s.out = out / "eval";
    s.duration_s = 10;
    const auto r = run_evaluate(s);
    CHECK(r.arms.size() == 1 + 2 * 3);
    CHECK(r.arms[1].name == "static:36-3-11/RR-RR-RR");
    for (const auto& a : r.arms) CHECK(a.windows.size() == 40);
    CHECK(slurp(s.checkpoint) == before);  // never mutated

    // Paired arms: the first window precedes every control, so identical
    // seeds must give identical windows.
    for (const auto& a : r.arms) CHECK(a.windows.front().agg == r.arms[0].windows.front().agg);

    std::ifstream cdf(out / "eval" / "cdf.csv");
    std::string line;
    std::getline(cdf, line);
    CHECK(line == "arm,slice,metric,value,cumulative");
    std::string key;
    double last_c = 0, last_v = -1e300;
    std::size_t rows = 0;
    while (std::getline(cdf, line)) {
      const auto cut = line.find(',', line.find(',', line.find(',') + 1) + 1);
      const auto k = line.substr(0, cut);
      const auto rest = line.substr(cut + 1);
      const double v = std::stod(rest.substr(0, rest.find(',')));
      const double c = std::stod(rest.substr(rest.find(',') + 1));
      if (k != key) {
        key = k;
        last_c = 0;
        last_v = -1e300;
      }
      CHECK(c >= last_c);
      CHECK(v > last_v);
      CHECK(c <= 1.0);
      last_c = c;
      last_v = v;
      ++rows;
    }
    CHECK(rows > 0);
    CHECK(manifest(out / "eval")["complete"] == true);
  }
  SUBCASE("train-online") {
    s.mode = Mode::TrainOnline;
    s.out = out / "online";
    s.duration_s = 40;
    s.online.rollout_len = 32;
    const auto start = xapp::SlicingAgent::load(s.checkpoint).ppo().global_step();
    const auto r = run_train_online(s);
    // 160 windows give 159 transitions; the first window has no action yet.
    CHECK(r.updates.size() == 159 / 32);
    CHECK(r.during.windows.size() <= 160);
    CHECK(r.after.windows.size() == 40);
    CHECK(r.frozen.windows.size() == 40);
    CHECK(xapp::SlicingAgent::load(r.checkpoint).ppo().global_step() == start + 159);
    CHECK(slurp(s.checkpoint) == before);
    CHECK(fs::exists(out / "online" / "online_updates.csv"));
    CHECK(fs::exists(out / "online" / "action_histograms.csv"));

    s.checkpoint = out / "missing.ckpt";
    CHECK_THROWS_AS(run_train_online(s), ConfigError);
  }
  fs::remove_all(out);
}

TEST_CASE("analyze writes per-slice reports") {
  const auto out = tmp_dir("analyze");
  auto s = small_spec(out / "sweep");
  s.dataset = run_collect(s).dataset;
  s.mode = Mode::Analyze;
  s.out = out / "analysis";
  const auto r = run_analyze(s);
  CHECK(r.correlations.size() == 3);
  CHECK(r.features.size() == 3);
  for (auto sl : kAllSlices) {
    const std::string tag(to_string(sl));
    CHECK(fs::exists(out / "analysis" / ("correlation_" + tag + ".csv")));
    CHECK(fs::exists(out / "analysis" / ("features_" + tag + ".txt")));
  }
  CHECK(fs::exists(out / "analysis" / "fits.json"));
  fs::remove_all(out);
}
