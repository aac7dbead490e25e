#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace oranlab::ml {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation : std::uint8_t { Linear, Tanh, ReLU, Softmax };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

struct Layer {
  MatrixXd weights;  // out x in
  VectorXd biases;   // out
  Activation activation = Activation::Linear;
};

/// Activations kept by a batched forward pass; inputs[k] feeds layer k and
/// outputs[k] is what layer k produced.
struct ForwardCache {
  std::vector<MatrixXd> inputs;
  std::vector<MatrixXd> outputs;
};

struct Gradients {
  std::vector<MatrixXd> weights;
  std::vector<VectorXd> biases;
  /// Gradient with respect to the network input, one column per sample.
  MatrixXd input;

  double squared_norm() const;
  void scale(double s);
  bool all_finite() const;
  void add(const Gradients& other);
};

/// Fully connected feed-forward network. Batched methods take one sample per
/// column.
class DenseNet {
 public:
  DenseNet() = default;
  /// Glorot-uniform weights, zero biases. dims has one more entry than acts.
  DenseNet(const std::vector<int>& dims, const std::vector<Activation>& acts, std::mt19937_64& rng);

  int input_dim() const;
  int output_dim() const;
  std::size_t num_params() const;
  std::vector<int> dims() const;

  /// Throws std::invalid_argument on a dimension mismatch.
  VectorXd forward(const VectorXd& x) const;
  MatrixXd forward_batch(const MatrixXd& x) const;
  MatrixXd forward_batch(const MatrixXd& x, ForwardCache& cache) const;
  /// Parameter gradients for upstream gradient `dy` (dL/d output), summed
  /// over the batch columns.
  Gradients backward(const ForwardCache& cache, const MatrixXd& dy) const;

  /// Flattened parameters, layer by layer: weights (column-major), biases.
  VectorXd get_params() const;
  void set_params(const VectorXd& p);
  static VectorXd flatten(const Gradients& g);

  bool operator==(const DenseNet& o) const;

  std::vector<Layer> layers;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n_params, AdamConfig cfg);

  /// Returns false, leaving params and moments untouched, when any gradient
  /// entry is non-finite.
  bool step(VectorXd& params, const VectorXd& grads);
  /// Convenience for a network.
  bool step(DenseNet& net, const Gradients& g);

  const AdamConfig& config() const { return cfg_; }
  AdamConfig& config() { return cfg_; }
  std::uint64_t t() const { return t_; }
  std::uint64_t skipped() const { return skipped_; }
  const VectorXd& m() const { return m_; }
  const VectorXd& v() const { return v_; }
  void restore(VectorXd m, VectorXd v, std::uint64_t t, std::uint64_t skipped);

 private:
  AdamConfig cfg_;
  VectorXd m_, v_;
  std::uint64_t t_ = 0;
  std::uint64_t skipped_ = 0;
};

/// Softmax with the max subtracted first.
VectorXd softmax(const VectorXd& z);

}  // namespace oranlab::ml
