#pragma once

#include <vector>

#include "oranlab/ml/ppo.hpp"

namespace oranlab::testgen {

/// Two-armed bandit: arm 0 pays 1, arm 1 pays 0. One constant state, every
/// pull terminal.
struct Bandit {
  ml::VectorXd state = ml::VectorXd::Ones(1);

  ml::PpoLosses round(ml::PpoAgent& agent, int pulls = 64) const {
    auto buf = agent.new_buffer();
    for (int i = 0; i < pulls; ++i) {
      const auto c = agent.act(state, ml::SelectMode::Explore);
      buf.add({state, c.action, c.log_prob, c.action == 0 ? 1.0 : 0.0, agent.value(state), true});
    }
    agent.add_steps(static_cast<std::uint64_t>(pulls));
    return agent.update(buf);
  }

  double p_best(const ml::PpoAgent& agent) const { return agent.policy(state)(0); }
};

}  // namespace oranlab::testgen
