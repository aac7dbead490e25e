#include "oranlab/ml/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oranlab::ml {

namespace {

constexpr double kProbFloor = 1e-12;

void clip_grad_norm(Gradients& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = std::sqrt(g.squared_norm());
  if (norm > max_norm) g.scale(max_norm / norm);
}

DenseNet mlp(int in, int out, const PpoConfig& cfg, Activation head, std::mt19937_64& rng) {
  std::vector<int> dims{in};
  std::vector<Activation> acts;
  for (int i = 0; i < cfg.hidden_layers; ++i) {
    dims.push_back(cfg.hidden_units);
    acts.push_back(Activation::Tanh);
  }
  dims.push_back(out);
  acts.push_back(head);
  return DenseNet(dims, acts, rng);
}

}  // namespace

double entropy(const VectorXd& probs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = std::max(probs(i), kProbFloor);
    h -= probs(i) * std::log(p);
  }
  return h;
}

ActionChoice select_action(const DenseNet& actor, const VectorXd& state, SelectMode mode, std::mt19937_64& rng) {
  const VectorXd p = actor.forward(state);
  int a = 0;
  if (mode == SelectMode::Greedy) {
    p.maxCoeff(&a);
  } else {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    double acc = 0.0;
    a = static_cast<int>(p.size()) - 1;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      acc += p(i);
      if (x < acc) {
        a = static_cast<int>(i);
        break;
      }
    }
  }
  return {a, std::log(std::max(p(a), kProbFloor))};
}

void compute_gae(const TrajectoryBuffer& buf, double gamma, double lambda, VectorXd& advantages, VectorXd& returns) {
  const auto n = static_cast<Eigen::Index>(buf.items.size());
  advantages.resize(n);
  returns.resize(n);
  double next_value = buf.bootstrap_value;
  double gae = 0.0;
  for (Eigen::Index i = n; i-- > 0;) {
    const auto& t = buf.items[static_cast<std::size_t>(i)];
    if (t.truncated && !t.done) {
      next_value = t.bootstrap;
      gae = 0.0;
    }
    const double nonterminal = t.done ? 0.0 : 1.0;
    const double delta = t.reward + gamma * next_value * nonterminal - t.value;
    gae = delta + gamma * lambda * nonterminal * gae;
    advantages(i) = gae;
    returns(i) = gae + t.value;
    next_value = t.value;
  }
}

PpoAgent::PpoAgent(int state_dim, int n_actions, PpoConfig cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
  if (state_dim < 1 || n_actions < 1) throw std::invalid_argument("PpoAgent: dimensions must be positive");
  actor_ = mlp(state_dim, n_actions, cfg_, Activation::Softmax, rng_);
  critic_ = mlp(state_dim, 1, cfg_, Activation::Linear, rng_);
  actor_opt_ = Adam(actor_.num_params(), {cfg_.lr});
  critic_opt_ = Adam(critic_.num_params(), {cfg_.lr});
}

PpoLosses PpoAgent::update(TrajectoryBuffer& buf) {
  if (buf.empty()) throw std::invalid_argument("PpoAgent::update: empty buffer");
  if (buf.policy_version != policy_version_) {
    throw StalePolicyError("trajectory collected under policy version " + std::to_string(buf.policy_version) +
                           ", current is " + std::to_string(policy_version_));
  }
  VectorXd adv, ret;
  compute_gae(buf, cfg_.gamma, cfg_.gae_lambda, adv, ret);
  const auto n = static_cast<std::size_t>(adv.size());
  if (cfg_.normalize_advantages && n > 1) {
    const double mean = adv.mean();
    const double sd = std::sqrt((adv.array() - mean).square().sum() / static_cast<double>(n));
    if (sd > 1e-12) adv = (adv.array() - mean) / sd;
  }

  PpoLosses out;
  for (const auto& t : buf.items) out.mean_reward += t.reward;
  out.mean_reward /= static_cast<double>(n);

  const int sd = state_dim();
  const int na = n_actions();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  int batches = 0;
  const auto mb = static_cast<std::size_t>(std::max(1, cfg_.minibatch));
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t b = std::min(mb, n - start);
      const double inv_b = 1.0 / static_cast<double>(b);
      MatrixXd s(sd, static_cast<Eigen::Index>(b));
      for (std::size_t j = 0; j < b; ++j) s.col(static_cast<Eigen::Index>(j)) = buf.items[order[start + j]].state;

      ForwardCache ac;
      const MatrixXd p = actor_.forward_batch(s, ac);
      MatrixXd dy = MatrixXd::Zero(na, static_cast<Eigen::Index>(b));
      double pl = 0.0, h = 0.0;
      for (std::size_t j = 0; j < b; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const std::size_t k = order[start + j];
        const auto& t = buf.items[k];
        const double a_k = adv(static_cast<Eigen::Index>(k));
        const double pi_a = std::max(p(t.action, jj), kProbFloor);
        const double ratio = std::exp(std::log(pi_a) - t.log_prob);
        const double clipped = std::clamp(ratio, 1.0 - cfg_.clip, 1.0 + cfg_.clip);
        pl += -std::min(ratio * a_k, clipped * a_k);
        // The unclipped branch is the active minimum: gradient flows.
        const bool active = a_k >= 0.0 ? ratio <= 1.0 + cfg_.clip : ratio >= 1.0 - cfg_.clip;
        if (active) dy(t.action, jj) += -a_k / std::exp(t.log_prob) * inv_b;
        h += entropy(p.col(jj));
        if (cfg_.entropy_coef != 0.0) {
          for (int i = 0; i < na; ++i) {
            dy(i, jj) += cfg_.entropy_coef * (std::log(std::max(p(i, jj), kProbFloor)) + 1.0) * inv_b;
          }
        }
      }
      Gradients ag = actor_.backward(ac, dy);
      clip_grad_norm(ag, cfg_.max_grad_norm);
      actor_opt_.step(actor_, ag);

      ForwardCache cc;
      const MatrixXd v = critic_.forward_batch(s, cc);
      MatrixXd dv(1, static_cast<Eigen::Index>(b));
      double vl = 0.0;
      for (std::size_t j = 0; j < b; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double err = v(0, jj) - ret(static_cast<Eigen::Index>(order[start + j]));
        vl += 0.5 * err * err;
        dv(0, jj) = err * inv_b;
      }
      Gradients cg = critic_.backward(cc, dv);
      clip_grad_norm(cg, cfg_.max_grad_norm);
      critic_opt_.step(critic_, cg);

      out.policy += pl * inv_b;
      out.value += vl * inv_b;
      out.mean_entropy += h * inv_b;
      ++batches;
    }
  }
  if (batches > 0) {
    out.policy /= batches;
    out.value /= batches;
    out.mean_entropy /= batches;
  }
  out.entropy = -cfg_.entropy_coef * out.mean_entropy;
  buf.clear();
  ++policy_version_;
  ++updates_;
  return out;
}

void PpoAgent::save(Checkpoint& c, const std::string& prefix) const {
  put_net(c, prefix + ".actor", actor_);
  put_net(c, prefix + ".critic", critic_);
  put_adam(c, prefix + ".actor_opt", actor_opt_);
  put_adam(c, prefix + ".critic_opt", critic_opt_);
  c.meta[prefix + ".rng"] = rng_state(rng_);
  c.meta[prefix + ".policy_version"] = std::to_string(policy_version_);
  c.meta[prefix + ".global_step"] = std::to_string(global_step_);
  c.meta[prefix + ".updates"] = std::to_string(updates_);
}

void PpoAgent::load(const Checkpoint& c, const std::string& prefix) {
  DenseNet actor = actor_, critic = critic_;
  Adam aopt = actor_opt_, copt = critic_opt_;
  std::mt19937_64 rng;
  get_net(c, prefix + ".actor", actor);
  get_net(c, prefix + ".critic", critic);
  get_adam(c, prefix + ".actor_opt", aopt);
  get_adam(c, prefix + ".critic_opt", copt);
  set_rng_state(rng, c.get_meta(prefix + ".rng"));
  const auto version = std::stoull(c.get_meta(prefix + ".policy_version"));
  const auto step = std::stoull(c.get_meta(prefix + ".global_step"));
  const auto updates = std::stoull(c.get_meta(prefix + ".updates"));
  actor_ = std::move(actor);
  critic_ = std::move(critic);
  actor_opt_ = std::move(aopt);
  critic_opt_ = std::move(copt);
  rng_ = rng;
  policy_version_ = version;
  global_step_ = step;
  updates_ = updates;
}

void PlateauDetector::push(double v) {
  vals_.push_back(v);
  while (vals_.size() > window_) vals_.pop_front();
}

double PlateauDetector::slope() const {
  if (window_ < 2 || vals_.size() < window_) return 0.0;
  const double n = static_cast<double>(vals_.size());
  const double xm = (n - 1.0) / 2.0;
  const double ym = std::accumulate(vals_.begin(), vals_.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < vals_.size(); ++i) {
    const double dx = static_cast<double>(i) - xm;
    sxy += dx * (vals_[i] - ym);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

bool PlateauDetector::plateaued() const {
  return window_ >= 2 && vals_.size() >= window_ && std::abs(slope()) < threshold_;
}

}  // namespace oranlab::ml
