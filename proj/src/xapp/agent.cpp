#include "oranlab/xapp/agent.hpp"

#include <charconv>

namespace oranlab::xapp {

namespace {

std::string num(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double get_double(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw ml::CheckpointError("checkpoint lacks meta '" + key + "'");
  double v = 0;
  auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc{}) throw ml::CheckpointError("bad number in meta '" + key + "'");
  return v;
}

}  // namespace

std::string_view to_string(AgentVariant v) {
  switch (v) {
    case AgentVariant::Base: return "drl-base";
    case AgentVariant::Reduced: return "drl-reduced";
    case AgentVariant::NoAutoencoder: return "drl-no-ae";
  }
  return "?";
}

std::optional<AgentVariant> parse_agent_variant(std::string_view text) {
  for (auto v : {AgentVariant::Base, AgentVariant::Reduced, AgentVariant::NoAutoencoder}) {
    if (text == to_string(v)) return v;
  }
  return std::nullopt;
}

ActionCatalogue catalogue_for(AgentVariant v, const ActionCatalogue& full) {
  if (v == AgentVariant::Reduced) return full.without(SlicingProfile{{36, 3, 11}});
  return full;
}

std::map<std::string, std::string> ppo_config_meta(const ml::PpoConfig& c, const std::string& p) {
  return {{p + ".clip", num(c.clip)},
          {p + ".gamma", num(c.gamma)},
          {p + ".gae_lambda", num(c.gae_lambda)},
          {p + ".entropy_coef", num(c.entropy_coef)},
          {p + ".epochs", std::to_string(c.epochs)},
          {p + ".minibatch", std::to_string(c.minibatch)},
          {p + ".lr", num(c.lr)},
          {p + ".max_grad_norm", num(c.max_grad_norm)},
          {p + ".hidden_layers", std::to_string(c.hidden_layers)},
          {p + ".hidden_units", std::to_string(c.hidden_units)},
          {p + ".normalize_advantages", c.normalize_advantages ? "1" : "0"}};
}

ml::PpoConfig ppo_config_from_meta(const std::map<std::string, std::string>& m, const std::string& p) {
  ml::PpoConfig c;
  c.clip = get_double(m, p + ".clip");
  c.gamma = get_double(m, p + ".gamma");
  c.gae_lambda = get_double(m, p + ".gae_lambda");
  c.entropy_coef = get_double(m, p + ".entropy_coef");
  c.epochs = static_cast<int>(get_double(m, p + ".epochs"));
  c.minibatch = static_cast<int>(get_double(m, p + ".minibatch"));
  c.lr = get_double(m, p + ".lr");
  c.max_grad_norm = get_double(m, p + ".max_grad_norm");
  c.hidden_layers = static_cast<int>(get_double(m, p + ".hidden_layers"));
  c.hidden_units = static_cast<int>(get_double(m, p + ".hidden_units"));
  c.normalize_advantages = get_double(m, p + ".normalize_advantages") != 0.0;
  return c;
}

SlicingAgent::SlicingAgent(AgentVariant variant, ActionCatalogue catalogue, NormScales scales,
                           std::optional<ml::Autoencoder> ae, const ml::PpoConfig& ppo_cfg, std::uint64_t seed)
    : variant_(variant), catalogue_(std::move(catalogue)), scales_(scales), ae_(std::move(ae)) {
  scales_.validate();
  if (variant_ != AgentVariant::NoAutoencoder && !ae_) {
    throw std::invalid_argument("SlicingAgent: variant " + std::string(to_string(variant_)) + " needs an autoencoder");
  }
  if (variant_ == AgentVariant::NoAutoencoder) ae_.reset();
  ppo_ = std::make_unique<ml::PpoAgent>(state_dim(), static_cast<int>(catalogue_.size()), ppo_cfg, seed);
}

SlicingAgent::SlicingAgent(const SlicingAgent& o)
    : variant_(o.variant_),
      catalogue_(o.catalogue_),
      scales_(o.scales_),
      ae_(o.ae_),
      ppo_(std::make_unique<ml::PpoAgent>(*o.ppo_)) {}

SlicingAgent& SlicingAgent::operator=(const SlicingAgent& o) {
  if (this != &o) *this = SlicingAgent(o);
  return *this;
}

int SlicingAgent::state_dim(AgentVariant v) {
  return v == AgentVariant::NoAutoencoder ? ml::kObsDim * static_cast<int>(kNumSlices)
                                          : ml::kLatentDim * static_cast<int>(kNumSlices);
}

ml::VectorXd SlicingAgent::state(const WindowHistory& h) const {
  ml::VectorXd s(state_dim());
  for (std::size_t i = 0; i < kNumSlices; ++i) {
    const auto obs = observation(h, kAllSlices[i], ObsKind::Slicing, scales_);
    if (ae_) {
      s.segment(static_cast<Eigen::Index>(i) * ml::kLatentDim, ml::kLatentDim) = ae_->encode(obs);
    } else {
      s.segment(static_cast<Eigen::Index>(i) * ml::kObsDim, ml::kObsDim) = obs;
    }
  }
  if (!s.allFinite()) throw std::runtime_error("non-finite agent state");
  return s;
}

ml::Checkpoint SlicingAgent::to_checkpoint() const {
  ml::Checkpoint c;
  c.meta["kind"] = "slicing-agent";
  c.meta["variant"] = std::string(to_string(variant_));
  c.meta["catalogue"] = catalogue_.to_text();
  c.meta["catalogue.total_prbs"] = std::to_string(catalogue_.total_prbs());
  c.meta.merge(scales_.to_meta("scales"));
  c.meta.merge(ppo_config_meta(ppo_->config(), "ppo"));
  ppo_->save(c, "agent");
  if (ae_) ml::put_autoencoder(c, "ae", *ae_);
  return c;
}

SlicingAgent SlicingAgent::from_checkpoint(const ml::Checkpoint& c) {
  if (c.meta.count("kind") == 0 || c.get_meta("kind") != "slicing-agent") {
    throw ml::CheckpointError("not a slicing-agent checkpoint");
  }
  const auto variant = parse_agent_variant(c.get_meta("variant"));
  if (!variant) throw ml::CheckpointError("unknown agent variant '" + c.get_meta("variant") + "'");
  auto cat = ActionCatalogue::from_text(c.get_meta("catalogue"), std::stoi(c.get_meta("catalogue.total_prbs")));
  std::optional<ml::Autoencoder> ae;
  if (*variant != AgentVariant::NoAutoencoder) {
    std::mt19937_64 rng(0);
    ae = ml::Autoencoder::make(rng);
    ml::get_autoencoder(c, "ae", *ae);
  }
  SlicingAgent agent(*variant, std::move(cat), NormScales::from_meta(c.meta, "scales"), std::move(ae),
                     ppo_config_from_meta(c.meta, "ppo"), 0);
  agent.ppo_->load(c, "agent");
  return agent;
}

void SlicingAgent::save(const std::filesystem::path& path, const std::map<std::string, std::string>& extra) const {
  auto c = to_checkpoint();
  for (const auto& [k, v] : extra) c.meta[k] = v;
  ml::save_checkpoint(path, c);
}

SlicingAgent SlicingAgent::load(const std::filesystem::path& path) {
  return from_checkpoint(ml::load_checkpoint(path));
}

SchedAgents::SchedAgents(NormScales scales, const ml::PpoConfig& ppo_cfg, std::uint64_t seed) : scales_(scales) {
  scales_.validate();
  for (std::size_t i = 0; i < kNumSlices; ++i) {
    agents_[i] = std::make_unique<ml::PpoAgent>(ml::kObsDim, kActions, ppo_cfg, seed + 7919 * i);
  }
}

ml::VectorXd SchedAgents::state(const WindowHistory& h, Slice s) const {
  return observation(h, s, ObsKind::Sched, scales_);
}

ml::Checkpoint SchedAgents::to_checkpoint() const {
  ml::Checkpoint c;
  c.meta["kind"] = "sched-agents";
  c.meta.merge(scales_.to_meta("scales"));
  c.meta.merge(ppo_config_meta(agents_[0]->config(), "ppo"));
  for (auto s : kAllSlices) agents_[index_of(s)]->save(c, "sched." + std::string(to_string(s)));
  return c;
}

SchedAgents SchedAgents::from_checkpoint(const ml::Checkpoint& c) {
  if (c.meta.count("kind") == 0 || c.get_meta("kind") != "sched-agents") {
    throw ml::CheckpointError("not a sched-agents checkpoint");
  }
  SchedAgents a(NormScales::from_meta(c.meta, "scales"), ppo_config_from_meta(c.meta, "ppo"), 0);
  for (auto s : kAllSlices) a.agents_[index_of(s)]->load(c, "sched." + std::string(to_string(s)));
  return a;
}

void SchedAgents::save(const std::filesystem::path& path) const { ml::save_checkpoint(path, to_checkpoint()); }

SchedAgents SchedAgents::load(const std::filesystem::path& path) { return from_checkpoint(ml::load_checkpoint(path)); }

}  // namespace oranlab::xapp
