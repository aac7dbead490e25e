#pragma once

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "oranlab/data/dataset.hpp"
#include "oranlab/xapp/agent.hpp"

namespace oranlab::xapp {

/// Per-window aggregates of a dataset, grouped by (bs, context) and ordered
/// by time.
using WindowPools = std::map<std::pair<BsId, data::Context>, std::vector<WindowAggregate>>;
WindowPools window_pools(const data::Dataset& ds);

/// Environment replaying recorded windows: each step pushes one window
/// recorded under the chosen action onto the history.
class ReplayEnv {
 public:
  virtual ~ReplayEnv() = default;
  virtual std::size_t n_actions() const = 0;
  /// Starts an episode on a random base station.
  virtual void reset(std::mt19937_64& rng) = 0;
  /// Returns the reward of the window recorded under `action`.
  virtual double step(std::size_t action, std::mt19937_64& rng) = 0;
  const WindowHistory& history() const { return history_; }

 protected:
  WindowHistory history_;
};

/// Joint slicing/scheduling replay over the catalogue. Consecutive repeats of
/// an action walk forward through the recording.
class SlicingReplayEnv : public ReplayEnv {
 public:
  /// Throws ConfigError listing every catalogue action absent from the data.
  SlicingReplayEnv(std::shared_ptr<const WindowPools> pools, ActionCatalogue catalogue, RewardSpec reward);

  std::size_t n_actions() const override { return cat_.size(); }
  void reset(std::mt19937_64& rng) override;
  double step(std::size_t action, std::mt19937_64& rng) override;

  /// Actions (formatted) without any recorded window.
  static std::vector<std::string> coverage_gaps(const WindowPools& pools, const ActionCatalogue& catalogue);

 private:
  const std::vector<WindowAggregate>& pool(BsId bs, std::size_t action) const;

  std::shared_ptr<const WindowPools> pools_;
  ActionCatalogue cat_;
  RewardSpec reward_;
  std::vector<BsId> bss_;
  BsId bs_ = 0;
  std::size_t last_action_ = SIZE_MAX;
  std::size_t cursor_ = 0;
};

/// Single-slice scheduler replay under one slicing profile; action k selects
/// windows where the slice ran Policy(k).
class SchedReplayEnv : public ReplayEnv {
 public:
  SchedReplayEnv(std::shared_ptr<const WindowPools> pools, SlicingProfile slicing, Slice slice,
                 SchedRewardSpec reward);
  std::size_t n_actions() const override { return 3; }
  void reset(std::mt19937_64& rng) override;
  double step(std::size_t action, std::mt19937_64& rng) override;

 private:
  Slice slice_;
  SchedRewardSpec reward_;
  std::map<std::pair<BsId, int>, std::vector<WindowAggregate>> pools_;
  std::vector<BsId> bss_;
  BsId bs_ = 0;
};

struct TrainConfig {
  int max_updates = 300;
  int rollout = 512;
  int workers = 1;
  int episode_len = 64;
  /// Plateau stop on the entropy loss; threshold 0 disables it.
  std::size_t plateau_window = 30;
  double plateau_threshold = 0.0;
  int min_updates = 50;
  std::uint64_t seed = 1;
};

struct LossRow {
  std::uint64_t step = 0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double mean_reward = 0.0;
};

/// "step,policy_loss,value_loss,entropy_loss,mean_reward"
std::string loss_csv(const std::vector<LossRow>& rows);

struct TrainResult {
  std::vector<LossRow> curve;
  bool plateau_stop = false;
};

using Featurizer = std::function<ml::VectorXd(const WindowHistory&)>;
using EnvFactory = std::function<std::unique_ptr<ReplayEnv>()>;

/// PPO on replayed transitions. Each update gathers `rollout` steps split
/// over `workers` threads, each with its own environment and RNG; chunks are
/// merged in worker order so results do not depend on thread timing.
TrainResult train_ppo(ml::PpoAgent& agent, const EnvFactory& make_env, const Featurizer& featurize,
                      const TrainConfig& cfg);

/// Per-slice observations (one per column) drawn from recorded windows, for
/// autoencoder training. At most `max_samples`, chosen uniformly.
ml::MatrixXd observation_samples(const WindowPools& pools, const NormScales& scales, std::size_t max_samples,
                                 std::uint64_t seed);

}  // namespace oranlab::xapp
