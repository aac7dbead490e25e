#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "oranlab/ml/autoencoder.hpp"
#include "oranlab/ml/ppo.hpp"
#include "oranlab/xapp/catalogue.hpp"
#include "oranlab/xapp/observation.hpp"

namespace oranlab::xapp {

enum class AgentVariant : std::uint8_t {
  Base,           // autoencoder latents, full catalogue
  Reduced,        // autoencoder latents, catalogue without (36,3,11)
  NoAutoencoder,  // raw windows, full catalogue
};

std::string_view to_string(AgentVariant v);
std::optional<AgentVariant> parse_agent_variant(std::string_view text);

/// Catalogue an agent variant acts over, given the full catalogue.
ActionCatalogue catalogue_for(AgentVariant v, const ActionCatalogue& full);

std::map<std::string, std::string> ppo_config_meta(const ml::PpoConfig& cfg, const std::string& prefix);
ml::PpoConfig ppo_config_from_meta(const std::map<std::string, std::string>& meta, const std::string& prefix);

/// Joint slicing and scheduling agent: state featurization plus the PPO
/// actor-critic over an action catalogue.
class SlicingAgent {
 public:
  /// `ae` is required unless the variant is NoAutoencoder.
  SlicingAgent(AgentVariant variant, ActionCatalogue catalogue, NormScales scales,
               std::optional<ml::Autoencoder> ae, const ml::PpoConfig& ppo_cfg, std::uint64_t seed);

  AgentVariant variant() const { return variant_; }
  const ActionCatalogue& catalogue() const { return catalogue_; }
  const NormScales& scales() const { return scales_; }
  const std::optional<ml::Autoencoder>& autoencoder() const { return ae_; }
  ml::PpoAgent& ppo() { return *ppo_; }
  const ml::PpoAgent& ppo() const { return *ppo_; }

  /// 9 concatenated latents, or the 90 raw window entries.
  static int state_dim(AgentVariant v);
  int state_dim() const { return state_dim(variant_); }
  /// Throws std::runtime_error when the features are not finite.
  ml::VectorXd state(const WindowHistory& h) const;

  /// Full checkpoint including the autoencoder, scales and catalogue.
  ml::Checkpoint to_checkpoint() const;
  static SlicingAgent from_checkpoint(const ml::Checkpoint& c);
  void save(const std::filesystem::path& path, const std::map<std::string, std::string>& extra = {}) const;
  static SlicingAgent load(const std::filesystem::path& path);

 private:
  AgentVariant variant_;
  ActionCatalogue catalogue_;
  NormScales scales_;
  std::optional<ml::Autoencoder> ae_;
  std::unique_ptr<ml::PpoAgent> ppo_;

 public:
  SlicingAgent(const SlicingAgent& o);
  SlicingAgent& operator=(const SlicingAgent& o);
  SlicingAgent(SlicingAgent&&) noexcept = default;
  SlicingAgent& operator=(SlicingAgent&&) noexcept = default;
};

/// Three per-slice scheduler-selection agents (actions RR, WF, PF) over
/// rate, buffer and PRB-ratio windows.
class SchedAgents {
 public:
  SchedAgents(NormScales scales, const ml::PpoConfig& ppo_cfg, std::uint64_t seed);

  static constexpr int kActions = 3;
  ml::PpoAgent& agent(Slice s) { return *agents_[index_of(s)]; }
  const ml::PpoAgent& agent(Slice s) const { return *agents_[index_of(s)]; }
  const NormScales& scales() const { return scales_; }
  ml::VectorXd state(const WindowHistory& h, Slice s) const;

  ml::Checkpoint to_checkpoint() const;
  static SchedAgents from_checkpoint(const ml::Checkpoint& c);
  void save(const std::filesystem::path& path) const;
  static SchedAgents load(const std::filesystem::path& path);

 private:
  NormScales scales_;
  std::array<std::unique_ptr<ml::PpoAgent>, kNumSlices> agents_;
};

}  // namespace oranlab::xapp
