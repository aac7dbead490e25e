#pragma once

#include <cstdint>
#include <vector>

#include "oranlab/ml/checkpoint.hpp"
#include "oranlab/ml/net.hpp"

namespace oranlab::ml {

/// Window length and metrics per row of a per-slice observation.
inline constexpr int kWindowT = 10;
inline constexpr int kWindowN = 3;
inline constexpr int kObsDim = kWindowT * kWindowN;
inline constexpr int kLatentDim = 3;

struct AutoencoderConfig {
  double mask_prob = 0.2;
  int epochs = 30;
  int batch = 64;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

/// Hourglass 30-256-128-32-3 encoder and its mirror. Hidden layers use ReLU;
/// the bottleneck and the reconstruction are linear.
struct Autoencoder {
  DenseNet encoder;
  DenseNet decoder;

  static Autoencoder make(std::mt19937_64& rng);

  VectorXd encode(const VectorXd& obs) const { return encoder.forward(obs); }
  MatrixXd encode_batch(const MatrixXd& obs) const { return encoder.forward_batch(obs); }
  VectorXd reconstruct(const VectorXd& obs) const { return decoder.forward(encoder.forward(obs)); }
  /// Mean squared reconstruction error over the columns of `obs`.
  double mse(const MatrixXd& obs) const;
};

struct AutoencoderResult {
  Autoencoder model;
  /// Mean training loss per epoch, measured on the corrupted inputs.
  std::vector<double> losses;
};

/// Trains on one observation per column. Each input entry is zeroed with
/// probability mask_prob; the target is the clean observation.
/// Throws std::invalid_argument on an empty dataset or wrong row count.
AutoencoderResult train_autoencoder(const MatrixXd& dataset, const AutoencoderConfig& cfg);

void put_autoencoder(Checkpoint& c, const std::string& prefix, const Autoencoder& ae);
void get_autoencoder(const Checkpoint& c, const std::string& prefix, Autoencoder& ae);

}  // namespace oranlab::ml
