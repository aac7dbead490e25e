#include "oranlab/xapp/training.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <thread>

namespace oranlab::xapp {

WindowPools window_pools(const data::Dataset& ds) {
  std::map<std::pair<BsId, data::Context>, std::map<std::int64_t, std::vector<KpmRecord>>> grouped;
  for (const auto& r : ds.rows()) grouped[{r.kpm.bs_id, r.ctx}][r.kpm.timestamp_ms].push_back(r.kpm);
  WindowPools pools;
  for (const auto& [key, by_time] : grouped) {
    auto& v = pools[key];
    for (const auto& [t, recs] : by_time) v.push_back(aggregate(recs));
  }
  return pools;
}

SlicingReplayEnv::SlicingReplayEnv(std::shared_ptr<const WindowPools> pools, ActionCatalogue catalogue,
                                   RewardSpec reward)
    : pools_(std::move(pools)), cat_(std::move(catalogue)), reward_(reward) {
  const auto gaps = coverage_gaps(*pools_, cat_);
  if (!gaps.empty()) {
    std::string msg = "dataset lacks catalogue actions:";
    for (const auto& g : gaps) msg += " " + g;
    throw ConfigError(msg);
  }
  std::set<BsId> bss;
  for (const auto& [k, v] : *pools_) bss.insert(k.first);
  bss_.assign(bss.begin(), bss.end());
}

std::vector<std::string> SlicingReplayEnv::coverage_gaps(const WindowPools& pools, const ActionCatalogue& cat) {
  std::vector<std::string> gaps;
  for (std::size_t k = 0; k < cat.size(); ++k) {
    const auto a = cat[k];
    const data::Context ctx{a.slicing, a.scheduling};
    bool found = false;
    for (const auto& [key, v] : pools) {
      if (key.second == ctx && !v.empty()) {
        found = true;
        break;
      }
    }
    if (!found) gaps.push_back(format_action(a));
  }
  return gaps;
}

const std::vector<WindowAggregate>& SlicingReplayEnv::pool(BsId bs, std::size_t action) const {
  const auto a = cat_[action];
  const data::Context ctx{a.slicing, a.scheduling};
  auto it = pools_->find({bs, ctx});
  if (it != pools_->end() && !it->second.empty()) return it->second;
  // This base station never ran the action; use the first one that did.
  for (BsId other : bss_) {
    it = pools_->find({other, ctx});
    if (it != pools_->end() && !it->second.empty()) return it->second;
  }
  throw std::logic_error("uncovered action");
}

void SlicingReplayEnv::reset(std::mt19937_64& rng) {
  bs_ = bss_[std::uniform_int_distribution<std::size_t>(0, bss_.size() - 1)(rng)];
  history_.clear();
  last_action_ = SIZE_MAX;
  // Start either fresh or with some history of a random action.
  const auto a = std::uniform_int_distribution<std::size_t>(0, cat_.size() - 1)(rng);
  const int warm = std::uniform_int_distribution<int>(0, ml::kWindowT)(rng);
  for (int i = 0; i < warm; ++i) step(a, rng);
}

double SlicingReplayEnv::step(std::size_t action, std::mt19937_64& rng) {
  const auto& p = pool(bs_, action);
  if (action == last_action_) {
    cursor_ = (cursor_ + 1) % p.size();
  } else {
    cursor_ = std::uniform_int_distribution<std::size_t>(0, p.size() - 1)(rng);
    last_action_ = action;
  }
  const auto& w = p[cursor_];
  history_.push(w);
  return reward_(w);
}

SchedReplayEnv::SchedReplayEnv(std::shared_ptr<const WindowPools> pools, SlicingProfile slicing, Slice slice,
                               SchedRewardSpec reward)
    : slice_(slice), reward_(reward) {
  std::set<BsId> bss;
  for (const auto& [key, v] : *pools) {
    if (key.second.slicing != slicing) continue;
    auto& dst = pools_[{key.first, static_cast<int>(key.second.scheduling[slice])}];
    dst.insert(dst.end(), v.begin(), v.end());
    bss.insert(key.first);
  }
  std::vector<std::string> gaps;
  for (int p = 0; p < 3; ++p) {
    bool found = false;
    for (BsId b : bss) found = found || pools_.count({b, p}) > 0;
    if (!found) gaps.push_back(std::string(to_string(static_cast<Policy>(p))));
  }
  if (!gaps.empty()) {
    std::string msg = "dataset lacks " + std::string(to_string(slice)) + " policies under " + format_slicing(slicing) + ":";
    for (const auto& g : gaps) msg += " " + g;
    throw ConfigError(msg);
  }
  bss_.assign(bss.begin(), bss.end());
}

void SchedReplayEnv::reset(std::mt19937_64& rng) {
  bs_ = bss_[std::uniform_int_distribution<std::size_t>(0, bss_.size() - 1)(rng)];
  history_.clear();
}

double SchedReplayEnv::step(std::size_t action, std::mt19937_64& rng) {
  auto it = pools_.find({bs_, static_cast<int>(action)});
  if (it == pools_.end()) {
    for (BsId b : bss_) {
      it = pools_.find({b, static_cast<int>(action)});
      if (it != pools_.end()) break;
    }
  }
  const auto& p = it->second;
  const auto& w = p[std::uniform_int_distribution<std::size_t>(0, p.size() - 1)(rng)];
  history_.push(w);
  return reward_.slice_reward(slice_, w);
}

std::string loss_csv(const std::vector<LossRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "step,policy_loss,value_loss,entropy_loss,mean_reward\n";
  for (const auto& r : rows) {
    os << r.step << ',' << r.policy << ',' << r.value << ',' << r.entropy << ',' << r.mean_reward << '\n';
  }
  return os.str();
}

namespace {

struct Worker {
  std::unique_ptr<ReplayEnv> env;
  std::mt19937_64 rng;
  int t = 0;
  std::vector<ml::Transition> chunk;
};

void collect(Worker& w, const ml::DenseNet& actor, const ml::DenseNet& critic, const Featurizer& featurize,
             int steps, int episode_len) {
  w.chunk.clear();
  for (int i = 0; i < steps; ++i) {
    const auto s = featurize(w.env->history());
    const auto c = ml::select_action(actor, s, ml::SelectMode::Explore, w.rng);
    const double v = critic.forward(s)(0);
    const double r = w.env->step(static_cast<std::size_t>(c.action), w.rng);
    ml::Transition t{s, c.action, c.log_prob, r, v, false};
    ++w.t;
    if (w.t >= episode_len || i + 1 == steps) {
      t.truncated = true;
      t.bootstrap = critic.forward(featurize(w.env->history()))(0);
    }
    w.chunk.push_back(std::move(t));
    if (w.t >= episode_len) {
      w.env->reset(w.rng);
      w.t = 0;
    }
  }
}

}  // namespace

TrainResult train_ppo(ml::PpoAgent& agent, const EnvFactory& make_env, const Featurizer& featurize,
                      const TrainConfig& cfg) {
  if (cfg.rollout < 1 || cfg.workers < 1 || cfg.episode_len < 1) throw ConfigError("train: bad rollout/workers");
  std::vector<Worker> workers(static_cast<std::size_t>(cfg.workers));
  std::vector<std::uint64_t> seeds(workers.size());
  {
    std::mt19937_64 g(cfg.seed);
    for (auto& s : seeds) s = g();
  }
  for (std::size_t i = 0; i < workers.size(); ++i) {
    workers[i].env = make_env();
    workers[i].rng.seed(seeds[i]);
    workers[i].env->reset(workers[i].rng);
  }
  const int per = (cfg.rollout + cfg.workers - 1) / cfg.workers;
  TrainResult res;
  ml::PlateauDetector plateau(cfg.plateau_window, cfg.plateau_threshold);
  for (int u = 0; u < cfg.max_updates; ++u) {
    const ml::DenseNet& actor = agent.actor();
    const ml::DenseNet& critic = agent.critic();
    if (workers.size() == 1) {
      collect(workers[0], actor, critic, featurize, per, cfg.episode_len);
    } else {
      std::vector<std::thread> threads;
      for (auto& w : workers) {
        threads.emplace_back([&w, &actor, &critic, &featurize, per, &cfg] {
          collect(w, actor, critic, featurize, per, cfg.episode_len);
        });
      }
      for (auto& t : threads) t.join();
    }
    auto buf = agent.new_buffer();
    for (auto& w : workers) {
      for (auto& t : w.chunk) buf.add(std::move(t));
    }
    agent.add_steps(buf.size());
    const auto l = agent.update(buf);
    res.curve.push_back({agent.global_step(), l.policy, l.value, l.entropy, l.mean_reward});
    plateau.push(l.entropy);
    if (cfg.plateau_threshold > 0.0 && u + 1 >= cfg.min_updates && plateau.plateaued()) {
      res.plateau_stop = true;
      break;
    }
  }
  return res;
}

ml::MatrixXd observation_samples(const WindowPools& pools, const NormScales& scales, std::size_t max_samples,
                                 std::uint64_t seed) {
  // Candidate = (pool, end index, slice); histories are the trailing windows
  // of one pool, which includes partially filled ones at the start.
  std::vector<std::tuple<const std::vector<WindowAggregate>*, std::size_t, Slice>> cand;
  for (const auto& [key, v] : pools) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (auto s : kAllSlices) cand.emplace_back(&v, i, s);
    }
  }
  std::mt19937_64 rng(seed);
  if (cand.size() > max_samples) {
    std::shuffle(cand.begin(), cand.end(), rng);
    cand.resize(max_samples);
  }
  ml::MatrixXd out(ml::kObsDim, static_cast<Eigen::Index>(cand.size()));
  for (std::size_t c = 0; c < cand.size(); ++c) {
    const auto& [v, end, s] = cand[c];
    WindowHistory h;
    const std::size_t first = end + 1 >= static_cast<std::size_t>(ml::kWindowT) ? end + 1 - ml::kWindowT : 0;
    for (std::size_t i = first; i <= end; ++i) h.push((*v)[i]);
    out.col(static_cast<Eigen::Index>(c)) = observation(h, s, ObsKind::Slicing, scales);
  }
  return out;
}

}  // namespace oranlab::xapp
