#pragma once

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <vector>

#include "oranlab/ml/checkpoint.hpp"
#include "oranlab/ml/net.hpp"

namespace oranlab::ml {

struct PpoConfig {
  double clip = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double entropy_coef = 0.01;
  int epochs = 4;
  int minibatch = 64;
  double lr = 1e-3;
  double max_grad_norm = 0.5;
  int hidden_layers = 5;
  int hidden_units = 30;
  bool normalize_advantages = true;
};

struct Transition {
  VectorXd state;
  int action = 0;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  /// Segment cut short (episode limit, end of a worker's chunk): the return
  /// is bootstrapped from `bootstrap` and advantages do not flow past it.
  bool truncated = false;
  double bootstrap = 0.0;
};

class StalePolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Transitions collected under one policy version. `bootstrap_value` is V(s')
/// for the state after the last transition when that one is not terminal.
struct TrajectoryBuffer {
  std::uint64_t policy_version = 0;
  std::vector<Transition> items;
  double bootstrap_value = 0.0;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  void add(Transition t) { items.push_back(std::move(t)); }
  void clear() {
    items.clear();
    bootstrap_value = 0.0;
  }
};

struct PpoLosses {
  double policy = 0.0;
  double value = 0.0;
  /// Entropy regularization loss, -entropy_coef * mean policy entropy.
  double entropy = 0.0;
  /// Mean policy entropy in nats.
  double mean_entropy = 0.0;
  double mean_reward = 0.0;
};

enum class SelectMode : std::uint8_t { Explore, Greedy };

struct ActionChoice {
  int action = 0;
  double log_prob = 0.0;
};

/// Explore samples from the policy, Greedy takes the argmax (lowest index on
/// ties).
ActionChoice select_action(const DenseNet& actor, const VectorXd& state, SelectMode mode, std::mt19937_64& rng);

/// Shannon entropy in nats, with probabilities clamped away from zero.
double entropy(const VectorXd& probs);

/// Advantages and returns by generalized advantage estimation.
void compute_gae(const TrajectoryBuffer& buf, double gamma, double lambda, VectorXd& advantages, VectorXd& returns);

/// Actor-critic pair trained with the clipped surrogate objective.
class PpoAgent {
 public:
  PpoAgent(int state_dim, int n_actions, PpoConfig cfg, std::uint64_t seed);

  int state_dim() const { return actor_.input_dim(); }
  int n_actions() const { return actor_.output_dim(); }
  const PpoConfig& config() const { return cfg_; }
  PpoConfig& config() { return cfg_; }

  const DenseNet& actor() const { return actor_; }
  const DenseNet& critic() const { return critic_; }
  DenseNet& mutable_actor() { return actor_; }
  std::mt19937_64& rng() { return rng_; }

  VectorXd policy(const VectorXd& state) const { return actor_.forward(state); }
  double value(const VectorXd& state) const { return critic_.forward(state)(0); }

  /// Uses the agent's own RNG for exploration.
  ActionChoice act(const VectorXd& state, SelectMode mode) { return select_action(actor_, state, mode, rng_); }

  /// An empty buffer stamped with the current policy version.
  TrajectoryBuffer new_buffer() const { return TrajectoryBuffer{policy_version_, {}, 0.0}; }

  /// One PPO update over the buffer, which is emptied afterwards. Throws
  /// StalePolicyError if the buffer predates the current policy and
  /// std::invalid_argument if it is empty.
  PpoLosses update(TrajectoryBuffer& buf);

  std::uint64_t policy_version() const { return policy_version_; }
  std::uint64_t global_step() const { return global_step_; }
  void add_steps(std::uint64_t n) { global_step_ += n; }
  std::uint64_t updates() const { return updates_; }

  /// Weights, optimizer moments, counters and RNG state under `prefix`.
  void save(Checkpoint& c, const std::string& prefix) const;
  void load(const Checkpoint& c, const std::string& prefix);

 private:
  PpoConfig cfg_;
  DenseNet actor_;
  DenseNet critic_;
  Adam actor_opt_;
  Adam critic_opt_;
  std::mt19937_64 rng_;
  std::uint64_t policy_version_ = 0;
  std::uint64_t global_step_ = 0;
  std::uint64_t updates_ = 0;
};

/// Flags a curve whose least-squares slope over the last `window` points has
/// magnitude below `threshold`.
class PlateauDetector {
 public:
  PlateauDetector(std::size_t window, double threshold) : window_(window), threshold_(threshold) {}
  void push(double v);
  bool plateaued() const;
  /// Slope over the current window, or 0 while it is not full.
  double slope() const;
  void reset() { vals_.clear(); }

 private:
  std::size_t window_;
  double threshold_;
  std::deque<double> vals_;
};

}  // namespace oranlab::ml
