#include "oranlab/exp/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "oranlab/ml/checkpoint.hpp"

namespace oranlab::exp {

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  for (int i = 15; i >= 0; --i, v >>= 4) buf[i] = "0123456789abcdef"[v & 0xf];
  return {buf, 16};
}

std::int64_t windows_in(double seconds, const sim::ScenarioConfig& sc) {
  return static_cast<std::int64_t>(std::floor(seconds * 1000.0 / sc.reporting_period_ms + 1e-9));
}

}  // namespace

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Collect: return "collect";
    case Mode::TrainOffline: return "train-offline";
    case Mode::TrainOnline: return "train-online";
    case Mode::Evaluate: return "evaluate";
    case Mode::Analyze: return "analyze";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view text) {
  for (auto m : {Mode::Collect, Mode::TrainOffline, Mode::TrainOnline, Mode::Evaluate, Mode::Analyze}) {
    if (text == to_string(m)) return m;
  }
  return std::nullopt;
}

void ExperimentSpec::validate() const {
  scenario.validate();
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw ConfigError("duration: must be > 0 seconds");
  if (!(eval_duration_s > 0.0)) throw ConfigError("eval_duration_s: must be > 0 seconds");
  if (workers < 1) throw ConfigError("workers: must be >= 1");
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho: must be in (0, 1]");
  if (catalogue.total_prbs() != scenario.total_prbs) throw ConfigError("catalogue.total_prbs: differs from scenario");
  if (settle_windows < 0) throw ConfigError("settle_windows: must be >= 0");
  if (train.max_updates < 1 || train.rollout < 1) throw ConfigError("train: max_updates and rollout must be >= 1");
  if (baseline_policies.empty()) throw ConfigError("baseline_policies: at least one policy required");
  for (const auto& m : analyze_metrics) {
    if (!data::is_metric(m)) throw ConfigError("analyze_metrics: unknown metric '" + m + "'");
  }
  if ((mode == Mode::TrainOffline || mode == Mode::Analyze) && !fs::exists(dataset)) {
    throw ConfigError("dataset: file not found: " + dataset.string());
  }
  if ((mode == Mode::TrainOnline || mode == Mode::Evaluate) && !fs::exists(checkpoint)) {
    throw ConfigError("checkpoint: file not found: " + checkpoint.string());
  }
}

nlohmann::json spec_to_json(const ExperimentSpec& s) {
  nlohmann::json j;
  j["mode"] = to_string(s.mode);
  j["scenario"] = sim::scenario_to_json(s.scenario);
  j["scenario_path"] = s.scenario_path;
  j["duration_s"] = s.duration_s;
  j["agent"] = to_string(s.agent);
  j["seed"] = s.seed;
  j["out"] = s.out.string();
  j["workers"] = s.workers;
  j["realtime"] = s.realtime;
  j["dataset"] = s.dataset.string();
  j["checkpoint"] = s.checkpoint.string();
  j["catalogue"] = s.catalogue;
  j["settle_windows"] = s.settle_windows;
  j["ppo"] = {{"clip", s.ppo.clip},
              {"gamma", s.ppo.gamma},
              {"gae_lambda", s.ppo.gae_lambda},
              {"entropy_coef", s.ppo.entropy_coef},
              {"epochs", s.ppo.epochs},
              {"minibatch", s.ppo.minibatch},
              {"lr", s.ppo.lr},
              {"max_grad_norm", s.ppo.max_grad_norm}};
  j["train"] = {{"max_updates", s.train.max_updates},
                {"rollout", s.train.rollout},
                {"episode_len", s.train.episode_len},
                {"plateau_window", s.train.plateau_window},
                {"plateau_threshold", s.train.plateau_threshold},
                {"min_updates", s.train.min_updates}};
  j["autoencoder"] = {{"mask_prob", s.autoencoder.mask_prob},
                      {"epochs", s.autoencoder.epochs},
                      {"batch", s.autoencoder.batch},
                      {"lr", s.autoencoder.lr},
                      {"samples", s.autoencoder_samples}};
  auto& bp = j["baseline_policies"] = nlohmann::json::array();
  for (auto p : s.baseline_policies) bp.push_back(to_string(p));
  j["eval_duration_s"] = s.eval_duration_s;
  j["online_traffic"] = to_string(s.online_traffic);
  j["online"] = {{"rollout_len", s.online.rollout_len},
                 {"checkpoint_every", s.online.checkpoint_every},
                 {"plateau_window", s.online.plateau_window},
                 {"plateau_threshold", s.online.plateau_threshold},
                 {"entropy_coef", s.online_entropy_coef}};
  j["analyze_metrics"] = s.analyze_metrics;
  j["rho"] = s.rho;
  return j;
}

ExperimentSpec spec_from_json(const nlohmann::json& j, ExperimentSpec s) {
  try {
    if (j.contains("mode")) {
      auto m = parse_mode(j["mode"].get<std::string>());
      if (!m) throw ConfigError("mode: unknown value");
      s.mode = *m;
    }
    if (j.contains("scenario")) s.scenario = sim::scenario_from_json(j["scenario"]);
    s.scenario_path = j.value("scenario_path", s.scenario_path);
    s.duration_s = j.value("duration_s", s.duration_s);
    if (j.contains("agent")) {
      auto v = xapp::parse_agent_variant(j["agent"].get<std::string>());
      if (!v) throw ConfigError("agent: unknown variant");
      s.agent = *v;
    }
    s.seed = j.value("seed", s.seed);
    if (j.contains("out")) s.out = j["out"].get<std::string>();
    s.workers = j.value("workers", s.workers);
    s.realtime = j.value("realtime", s.realtime);
    if (j.contains("dataset")) s.dataset = j["dataset"].get<std::string>();
    if (j.contains("checkpoint")) s.checkpoint = j["checkpoint"].get<std::string>();
    if (j.contains("catalogue")) s.catalogue = j["catalogue"].get<xapp::ActionCatalogue>();
    s.settle_windows = j.value("settle_windows", s.settle_windows);
    if (j.contains("ppo")) {
      const auto& p = j["ppo"];
      s.ppo.clip = p.value("clip", s.ppo.clip);
      s.ppo.gamma = p.value("gamma", s.ppo.gamma);
      s.ppo.gae_lambda = p.value("gae_lambda", s.ppo.gae_lambda);
      s.ppo.entropy_coef = p.value("entropy_coef", s.ppo.entropy_coef);
      s.ppo.epochs = p.value("epochs", s.ppo.epochs);
      s.ppo.minibatch = p.value("minibatch", s.ppo.minibatch);
      s.ppo.lr = p.value("lr", s.ppo.lr);
      s.ppo.max_grad_norm = p.value("max_grad_norm", s.ppo.max_grad_norm);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      s.train.max_updates = t.value("max_updates", s.train.max_updates);
      s.train.rollout = t.value("rollout", s.train.rollout);
      s.train.episode_len = t.value("episode_len", s.train.episode_len);
      s.train.plateau_window = t.value("plateau_window", s.train.plateau_window);
      s.train.plateau_threshold = t.value("plateau_threshold", s.train.plateau_threshold);
      s.train.min_updates = t.value("min_updates", s.train.min_updates);
    }
    if (j.contains("autoencoder")) {
      const auto& a = j["autoencoder"];
      s.autoencoder.mask_prob = a.value("mask_prob", s.autoencoder.mask_prob);
      s.autoencoder.epochs = a.value("epochs", s.autoencoder.epochs);
      s.autoencoder.batch = a.value("batch", s.autoencoder.batch);
      s.autoencoder.lr = a.value("lr", s.autoencoder.lr);
      s.autoencoder_samples = a.value("samples", s.autoencoder_samples);
    }
    if (j.contains("baseline_policies")) {
      s.baseline_policies.clear();
      for (const auto& p : j["baseline_policies"]) {
        auto v = parse_policy(p.get<std::string>());
        if (!v) throw ConfigError("baseline_policies: unknown policy");
        s.baseline_policies.push_back(*v);
      }
    }
    s.eval_duration_s = j.value("eval_duration_s", s.eval_duration_s);
    if (j.contains("online_traffic")) {
      auto t = parse_traffic_profile(j["online_traffic"].get<std::string>());
      if (!t) throw ConfigError("online_traffic: unknown profile");
      s.online_traffic = *t;
    }
    if (j.contains("online")) {
      const auto& o = j["online"];
      s.online.rollout_len = o.value("rollout_len", s.online.rollout_len);
      s.online.checkpoint_every = o.value("checkpoint_every", s.online.checkpoint_every);
      s.online.plateau_window = o.value("plateau_window", s.online.plateau_window);
      s.online.plateau_threshold = o.value("plateau_threshold", s.online.plateau_threshold);
      s.online_entropy_coef = o.value("entropy_coef", s.online_entropy_coef);
    }
    if (j.contains("analyze_metrics")) s.analyze_metrics = j["analyze_metrics"].get<std::vector<std::string>>();
    s.rho = j.value("rho", s.rho);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment spec: ") + e.what());
  }
  return s;
}

std::string spec_hash(const ExperimentSpec& s) {
  const auto text = spec_to_json(s).dump();
  return hex64(ml::fnv1a64(text.data(), text.size()));
}

void write_manifest(const ExperimentSpec& s, bool complete, const nlohmann::json& extra) {
  nlohmann::json m;
  m["tool"] = "colctl";
  m["version"] = ORANLAB_VERSION;
  m["checkpoint_format"] = ml::kCheckpointVersion;
  m["mode"] = to_string(s.mode);
  m["seed"] = s.seed;
  m["workers"] = s.workers;
  m["spec_hash"] = spec_hash(s);
  m["spec"] = spec_to_json(s);
  m["complete"] = complete;
  m["results"] = extra;
  fs::create_directories(s.out);
  write_text(s.out / "manifest.json", m.dump(2) + "\n");
}

// ---- collect ----

CollectResult run_collect(const ExperimentSpec& s) {
  s.validate();
  fs::create_directories(s.out);
  write_manifest(s, false, nlohmann::json::object());
  CollectResult res;
  res.dataset = s.out / "dataset.csv";
  fs::remove(res.dataset);

  const auto total_windows = windows_in(s.duration_s, s.scenario);
  const auto per_action = (total_windows - 1) / static_cast<std::int64_t>(s.catalogue.size());
  res.dwell_windows = static_cast<int>(per_action) - s.settle_windows;
  if (res.dwell_windows < 1) {
    throw ConfigError("duration: " + std::to_string(s.duration_s) + " s is too short to sweep " +
                      std::to_string(s.catalogue.size()) + " actions");
  }

  ric::TestbedConfig tc;
  tc.scenario = s.scenario;
  tc.scenario.rng_seed = s.seed;
  ric::Testbed bed(tc);
  if (!bed.start()) throw std::runtime_error("collect: nodes failed to register");
  data::DatasetWriter writer(res.dataset);
  xapp::CollectorXapp collector(bed.ric(), s.catalogue, writer, res.dwell_windows, s.settle_windows);
  collector.start(bed.now_ms(), static_cast<std::uint32_t>(s.scenario.reporting_period_ms));
  bed.add_agent([&](std::int64_t now) { collector.poll(now); });
  const auto t0 = std::chrono::steady_clock::now();
  const auto sim0 = bed.now_ms();
  const auto end_ms = sim0 + total_windows * s.scenario.reporting_period_ms + 10;
  while (bed.now_ms() < end_ms) {
    if (s.realtime) std::this_thread::sleep_until(t0 + std::chrono::milliseconds(bed.now_ms() - sim0));
    bed.step_ms();
  }
  writer.flush();

  res.rows = collector.rows();
  res.complete = collector.completed_actions() >= s.catalogue.size();
  // Every recorded window contributes one row per UE of its node.
  const auto ues = static_cast<std::size_t>(s.scenario.ues_per_slice_per_bs) * kNumSlices;
  res.expected_rows = res.rows / ues * ues;
  write_manifest(s, res.complete,
                 {{"dataset", res.dataset.string()},
                  {"rows", res.rows},
                  {"dwell_windows", res.dwell_windows},
                  {"actions_swept", collector.completed_actions()},
                  {"windows", total_windows}});
  return res;
}

// ---- train-offline ----

OfflineResult run_train_offline(const ExperimentSpec& s) {
  s.validate();
  fs::create_directories(s.out);
  write_manifest(s, false, nlohmann::json::object());
  const auto ds = data::Dataset::load(s.dataset);
  auto pools = std::make_shared<const xapp::WindowPools>(xapp::window_pools(ds));
  const auto scales = xapp::NormScales::from_scenario(s.scenario);
  const auto reward = xapp::RewardSpec::from_scenario(s.scenario);
  const auto cat = xapp::catalogue_for(s.agent, s.catalogue);
  // Fails early with the list of uncovered actions.
  xapp::SlicingReplayEnv probe(pools, cat, reward);

  OfflineResult res;
  std::optional<ml::Autoencoder> ae;
  if (s.agent != xapp::AgentVariant::NoAutoencoder) {
    auto cfg = s.autoencoder;
    cfg.seed = s.seed;
    auto trained = ml::train_autoencoder(xapp::observation_samples(*pools, scales, s.autoencoder_samples, s.seed), cfg);
    res.autoencoder_losses = trained.losses;
    ae = std::move(trained.model);
  }
  xapp::SlicingAgent agent(s.agent, cat, scales, std::move(ae), s.ppo, s.seed);
  auto tcfg = s.train;
  tcfg.seed = s.seed;
  tcfg.workers = s.workers;
  const auto tr = xapp::train_ppo(
      agent.ppo(), [&] { return std::make_unique<xapp::SlicingReplayEnv>(pools, cat, reward); },
      [&agent](const xapp::WindowHistory& h) { return agent.state(h); }, tcfg);
  res.curve = tr.curve;
  res.plateau_stop = tr.plateau_stop;
  res.checkpoint = s.out / "agent.ckpt";
  agent.save(res.checkpoint, {{"trained_on", s.dataset.string()}});
  write_text(s.out / "losses.csv", xapp::loss_csv(res.curve));
  std::ostringstream ael;
  ael.precision(17);
  ael << "epoch,loss\n";
  for (std::size_t i = 0; i < res.autoencoder_losses.size(); ++i) ael << i << ',' << res.autoencoder_losses[i] << '\n';
  write_text(s.out / "autoencoder_losses.csv", ael.str());
  write_manifest(s, true,
                 {{"checkpoint", res.checkpoint.string()},
                  {"updates", res.curve.size()},
                  {"global_step", agent.ppo().global_step()},
                  {"plateau_stop", res.plateau_stop},
                  {"workers", s.workers}});
  return res;
}

// ---- evaluate ----

ArmResult run_arm(const sim::ScenarioConfig& scenario, const std::string& name, double duration_s,
                  const std::function<std::unique_ptr<xapp::XappBase>(ric::RicService&)>& make,
                  bool realtime) {
  return run_arm_until(scenario, name, duration_s, make, {}, realtime);
}

ArmResult run_arm_until(const sim::ScenarioConfig& scenario, const std::string& name, double duration_s,
                        const std::function<std::unique_ptr<xapp::XappBase>(ric::RicService&)>& make,
                        const std::function<bool(const xapp::XappBase&)>& stop, bool realtime,
                        const std::function<void(const xapp::XappBase&)>& inspect) {
  ric::TestbedConfig tc;
  tc.scenario = scenario;
  ric::Testbed bed(tc);
  if (!bed.start()) throw std::runtime_error("arm " + name + ": nodes failed to register");
  auto x = make(bed.ric());
  x->start(bed.now_ms(), static_cast<std::uint32_t>(scenario.reporting_period_ms));
  bed.add_agent([&](std::int64_t now) { x->poll(now); });
  const std::int64_t end_ms = windows_in(duration_s, scenario) * scenario.reporting_period_ms;
  const auto t0 = std::chrono::steady_clock::now();
  const auto sim0 = bed.now_ms();
  while (bed.now_ms() < end_ms + 10) {
    if (realtime) std::this_thread::sleep_until(t0 + std::chrono::milliseconds(bed.now_ms() - sim0));
    bed.step_ms();
    if (stop && stop(*x)) break;
  }
  ArmResult a;
  a.name = name;
  for (const auto& w : x->windows()) {
    if (w.agg.timestamp_ms <= end_ms) a.windows.push_back(w);
  }
  a.mean_reward = mean(rewards(a));
  if (auto* ss = dynamic_cast<xapp::SchedSlicingXapp*>(x.get())) a.action_histogram = ss->action_histogram();
  if (inspect) inspect(*x);
  return a;
}

const ArmResult& EvalResult::best_baseline() const {
  return *std::max_element(arms.begin() + 1, arms.end(),
                           [](const ArmResult& a, const ArmResult& b) { return a.mean_reward < b.mean_reward; });
}

double EvalResult::median_baseline_reward() const {
  std::vector<double> r;
  for (std::size_t i = 1; i < arms.size(); ++i) r.push_back(arms[i].mean_reward);
  return quantile(r, 0.5);
}

namespace {

void write_arm_cdfs(std::ostream& os, const ArmResult& a) {
  for (auto s : kAllSlices) {
    for (const char* metric : {"rate", "buffer", "tbs"}) {
      std::vector<double> v;
      for (const auto& w : a.windows) {
        const auto& g = w.agg[s];
        v.push_back(metric[0] == 'r' ? g.rate : metric[0] == 'b' ? g.buffer : g.tbs);
      }
      std::istringstream rows(cdf_csv(v));
      std::string line;
      std::getline(rows, line);  // header
      while (std::getline(rows, line)) os << a.name << ',' << to_string(s) << ',' << metric << ',' << line << '\n';
    }
  }
  std::istringstream rows(cdf_csv(cell_rates(a)));
  std::string line;
  std::getline(rows, line);
  while (std::getline(rows, line)) os << a.name << ",cell,rate," << line << '\n';
}

std::string comparison_csv(const std::vector<ArmResult>& arms) {
  std::ostringstream os;
  os.precision(10);
  os << "arm,mean_reward,mean_cell_rate,p80_cell_rate,embb_rate,mtc_tbs,urllc_buffer,windows\n";
  for (const auto& a : arms) {
    std::vector<double> tbs, buf;
    for (const auto& w : a.windows) {
      tbs.push_back(w.agg[Slice::MTC].tbs);
      buf.push_back(w.agg[Slice::URLLC].buffer);
    }
    os << a.name << ',' << a.mean_reward << ',' << mean(cell_rates(a)) << ',' << quantile(cell_rates(a), 0.8) << ','
       << mean(slice_rates(a, Slice::eMBB)) << ',' << mean(tbs) << ',' << mean(buf) << ',' << a.windows.size() << '\n';
  }
  return os.str();
}

}  // namespace

EvalResult run_evaluate(const ExperimentSpec& s) {
  s.validate();
  fs::create_directories(s.out);
  write_manifest(s, false, nlohmann::json::object());
  const auto agent = xapp::SlicingAgent::load(s.checkpoint);
  auto scen = s.scenario;
  scen.rng_seed = s.seed;
  const auto reward = xapp::RewardSpec::from_scenario(scen);
  EvalResult res;
  res.arms.push_back(run_arm(scen, std::string(to_string(agent.variant())), s.duration_s, [&](ric::RicService& ric) {
    return std::make_unique<xapp::SchedSlicingXapp>(ric, agent, reward);
  }, s.realtime));
  for (const auto& sl : s.catalogue.slicings()) {
    for (auto p : s.baseline_policies) {
      const xapp::Action a{sl, SchedulingProfile{{p, p, p}}};
      res.arms.push_back(run_arm(scen, "static:" + xapp::format_action(a), s.duration_s,
                                 [&](ric::RicService& ric) { return std::make_unique<xapp::StaticXapp>(ric, a, reward); },
                                 s.realtime));
    }
  }
  write_text(s.out / "comparison.csv", comparison_csv(res.arms));
  std::ofstream cdf(s.out / "cdf.csv", std::ios::trunc);
  cdf << "arm,slice,metric,value,cumulative\n";
  cdf.precision(17);
  for (const auto& a : res.arms) write_arm_cdfs(cdf, a);
  std::ofstream hist(s.out / "actions.csv", std::ios::trunc);
  hist << "action,profile,count\n";
  for (std::size_t k = 0; k < res.arms[0].action_histogram.size(); ++k) {
    hist << k << ',' << xapp::format_action(agent.catalogue()[k]) << ',' << res.arms[0].action_histogram[k] << '\n';
  }
  write_manifest(s, true,
                 {{"agent_reward", res.arms[0].mean_reward},
                  {"best_baseline", res.best_baseline().name},
                  {"best_baseline_reward", res.best_baseline().mean_reward},
                  {"median_baseline_reward", res.median_baseline_reward()}});
  return res;
}

// ---- train-online ----

OnlineResult run_train_online(const ExperimentSpec& s) {
  s.validate();
  fs::create_directories(s.out);
  write_manifest(s, false, nlohmann::json::object());
  auto agent = xapp::SlicingAgent::load(s.checkpoint);
  const xapp::SlicingAgent frozen = agent;
  agent.ppo().config().entropy_coef = s.online_entropy_coef;
  const auto start_step = agent.ppo().global_step();

  auto scen = s.scenario;
  scen.rng_seed = s.seed;
  scen.traffic_profile = s.online_traffic;
  const auto reward = xapp::RewardSpec::from_scenario(scen);

  OnlineResult res;
  res.checkpoint = s.out / "online.ckpt";
  auto oc = s.online;
  oc.checkpoint_path = res.checkpoint;
  oc.max_steps = start_step + static_cast<std::uint64_t>(windows_in(s.duration_s, scen));
  res.during = run_arm_until(
      scen, "during", s.duration_s,
      [&](ric::RicService& ric) {
        return std::make_unique<xapp::OnlineTrainingXapp>(ric, agent, reward, oc);
      },
      [](const xapp::XappBase& x) { return static_cast<const xapp::OnlineTrainingXapp&>(x).stopped(); },
      s.realtime,
      [&](const xapp::XappBase& x) { res.updates = static_cast<const xapp::OnlineTrainingXapp&>(x).updates(); });
  agent.save(res.checkpoint, {{"resumed_from", s.checkpoint.string()}});

  auto eval = scen;
  eval.rng_seed = s.seed + 1;
  res.after = run_arm(eval, "after", s.eval_duration_s, [&](ric::RicService& ric) {
    return std::make_unique<xapp::SchedSlicingXapp>(ric, agent, reward);
  });
  res.frozen = run_arm(eval, "frozen", s.eval_duration_s, [&](ric::RicService& ric) {
    return std::make_unique<xapp::SchedSlicingXapp>(ric, frozen, reward);
  });

  std::ostringstream ul;
  ul.precision(17);
  ul << "step,policy_loss,value_loss,entropy_loss,mean_entropy,mean_reward,action_entropy\n";
  for (const auto& u : res.updates) {
    ul << u.step << ',' << u.losses.policy << ',' << u.losses.value << ',' << u.losses.entropy << ','
       << u.losses.mean_entropy << ',' << u.losses.mean_reward << ',' << histogram_entropy(u.histogram) << '\n';
  }
  write_text(s.out / "online_updates.csv", ul.str());
  std::ofstream hist(s.out / "action_histograms.csv", std::ios::trunc);
  hist << "update,action,count\n";
  for (std::size_t i = 0; i < res.updates.size(); ++i) {
    for (std::size_t k = 0; k < res.updates[i].histogram.size(); ++k) {
      hist << i + 1 << ',' << k << ',' << res.updates[i].histogram[k] << '\n';
    }
  }
  write_text(s.out / "comparison.csv", comparison_csv({res.during, res.after, res.frozen}));
  std::ofstream cdf(s.out / "cdf.csv", std::ios::trunc);
  cdf << "arm,slice,metric,value,cumulative\n";
  cdf.precision(17);
  for (const auto* a : {&res.during, &res.after, &res.frozen}) write_arm_cdfs(cdf, *a);

  write_manifest(s, true,
                 {{"checkpoint", res.checkpoint.string()},
                  {"updates", res.updates.size()},
                  {"start_step", start_step},
                  {"global_step", agent.ppo().global_step()},
                  {"embb_rate_variance_during", variance(slice_rates(res.during, Slice::eMBB))},
                  {"embb_rate_variance_after", variance(slice_rates(res.after, Slice::eMBB))},
                  {"reward_after", res.after.mean_reward},
                  {"reward_frozen", res.frozen.mean_reward},
                  {"p80_cell_rate_after", quantile(cell_rates(res.after), 0.8)},
                  {"p80_cell_rate_frozen", quantile(cell_rates(res.frozen), 0.8)}});
  return res;
}

// ---- analyze ----

AnalyzeResult run_analyze(const ExperimentSpec& s) {
  s.validate();
  fs::create_directories(s.out);
  write_manifest(s, false, nlohmann::json::object());
  const auto ds = data::Dataset::load(s.dataset);
  AnalyzeResult res;
  nlohmann::json fits = nlohmann::json::object();
  for (auto sl : kAllSlices) {
    data::Filter f;
    f.slice = sl;
    const std::string tag(to_string(sl));
    auto report = data::correlation_matrix(ds, s.analyze_metrics, f);
    write_text(s.out / ("correlation_" + tag + ".csv"), report.to_csv());
    auto features = data::feature_report(ds, s.analyze_metrics, s.rho, f);
    write_text(s.out / ("features_" + tag + ".txt"), features.to_text());
    for (const auto& [y, x] : {std::pair{"dl_phy_tbs", "dl_tx_symbols"}, std::pair{"dl_buffer", "dl_mcs"}}) {
      try {
        const auto fit = data::linear_fit(data::column(ds, x, f), data::column(ds, y, f));
        fits[tag][std::string(y) + "~" + x] = {{"slope", fit.slope}, {"intercept", fit.intercept}};
      } catch (const std::invalid_argument&) {
        fits[tag][std::string(y) + "~" + x] = nullptr;
      }
    }
    res.correlations.emplace_back(sl, std::move(report));
    res.features.emplace_back(sl, std::move(features));
  }
  write_text(s.out / "fits.json", fits.dump(2) + "\n");
  nlohmann::json summary;
  for (const auto& [sl, r] : res.correlations) {
    data::Filter f;
    f.slice = sl;
    const auto tbs = r.at("dl_phy_tbs", "dl_tx_symbols");
    const auto buf = r.at("dl_mcs", "dl_buffer");
    summary[std::string(to_string(sl))] = {{"rows", data::column(ds, "dl_mcs", f).size()},
                                           {"r_tbs_symbols", tbs ? nlohmann::json(*tbs) : nlohmann::json()},
                                           {"r_mcs_buffer", buf ? nlohmann::json(*buf) : nlohmann::json()}};
  }
  write_manifest(s, true, summary);
  return res;
}

// ---- summaries ----

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double histogram_entropy(const std::vector<std::uint64_t>& h) {
  const double total = static_cast<double>(std::accumulate(h.begin(), h.end(), std::uint64_t{0}));
  if (total <= 0.0) return 0.0;
  double e = 0.0;
  for (auto c : h) {
    if (c) {
      const double p = static_cast<double>(c) / total;
      e -= p * std::log(p);
    }
  }
  return e;
}

std::vector<double> slice_rates(const ArmResult& a, Slice s) {
  std::vector<double> v;
  v.reserve(a.windows.size());
  for (const auto& w : a.windows) v.push_back(w.agg[s].rate);
  return v;
}

std::vector<double> cell_rates(const ArmResult& a) {
  std::vector<double> v;
  v.reserve(a.windows.size());
  for (const auto& w : a.windows) v.push_back(w.agg.cell_rate());
  return v;
}

std::vector<double> rewards(const ArmResult& a) {
  std::vector<double> v;
  v.reserve(a.windows.size());
  for (const auto& w : a.windows) v.push_back(w.reward);
  return v;
}

std::string cdf_csv(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::ostringstream os;
  os.precision(17);
  os << "value,cumulative\n";
  for (std::size_t i = 0; i < v.size(); ++i) {
    // Ties collapse onto their last (highest) cumulative value.
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    os << v[i] << ',' << static_cast<double>(i + 1) / static_cast<double>(v.size()) << '\n';
  }
  return os.str();
}

}  // namespace oranlab::exp
