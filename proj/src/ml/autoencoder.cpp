#include "oranlab/ml/autoencoder.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace oranlab::ml {

Autoencoder Autoencoder::make(std::mt19937_64& rng) {
  using A = Activation;
  Autoencoder ae;
  ae.encoder = DenseNet({kObsDim, 256, 128, 32, kLatentDim}, {A::ReLU, A::ReLU, A::ReLU, A::Linear}, rng);
  ae.decoder = DenseNet({kLatentDim, 32, 128, 256, kObsDim}, {A::ReLU, A::ReLU, A::ReLU, A::Linear}, rng);
  return ae;
}

double Autoencoder::mse(const MatrixXd& obs) const {
  if (obs.cols() == 0) return 0.0;
  const MatrixXd rec = decoder.forward_batch(encoder.forward_batch(obs));
  return (rec - obs).squaredNorm() / static_cast<double>(obs.size());
}

AutoencoderResult train_autoencoder(const MatrixXd& dataset, const AutoencoderConfig& cfg) {
  if (dataset.cols() == 0) throw std::invalid_argument("train_autoencoder: empty dataset");
  if (dataset.rows() != kObsDim) throw std::invalid_argument("train_autoencoder: observations must have 30 entries");
  if (cfg.batch < 1 || cfg.epochs < 0 || cfg.mask_prob < 0.0 || cfg.mask_prob >= 1.0) {
    throw std::invalid_argument("train_autoencoder: bad config");
  }
  std::mt19937_64 rng(cfg.seed);
  AutoencoderResult out{Autoencoder::make(rng), {}};
  auto& ae = out.model;
  Adam enc_opt(ae.encoder.num_params(), {cfg.lr});
  Adam dec_opt(ae.decoder.num_params(), {cfg.lr});
  std::bernoulli_distribution drop(cfg.mask_prob);

  const auto n = static_cast<std::size_t>(dataset.cols());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch)) {
      const auto b = std::min(n - start, static_cast<std::size_t>(cfg.batch));
      MatrixXd clean(kObsDim, static_cast<Eigen::Index>(b));
      for (std::size_t j = 0; j < b; ++j) clean.col(static_cast<Eigen::Index>(j)) = dataset.col(order[start + j]);
      MatrixXd noisy = clean;
      if (cfg.mask_prob > 0.0) {
        for (Eigen::Index c = 0; c < noisy.cols(); ++c) {
          for (Eigen::Index r = 0; r < noisy.rows(); ++r) {
            if (drop(rng)) noisy(r, c) = 0.0;
          }
        }
      }
      ForwardCache ec, dc;
      const MatrixXd z = ae.encoder.forward_batch(noisy, ec);
      const MatrixXd rec = ae.decoder.forward_batch(z, dc);
      const MatrixXd diff = rec - clean;
      total += diff.squaredNorm() / static_cast<double>(kObsDim);
      const MatrixXd dy = diff * (2.0 / static_cast<double>(diff.size()));
      Gradients dg = ae.decoder.backward(dc, dy);
      Gradients eg = ae.encoder.backward(ec, dg.input);
      dec_opt.step(ae.decoder, dg);
      enc_opt.step(ae.encoder, eg);
    }
    out.losses.push_back(total / static_cast<double>(n));
  }
  return out;
}

void put_autoencoder(Checkpoint& c, const std::string& prefix, const Autoencoder& ae) {
  put_net(c, prefix + ".enc", ae.encoder);
  put_net(c, prefix + ".dec", ae.decoder);
}

void get_autoencoder(const Checkpoint& c, const std::string& prefix, Autoencoder& ae) {
  Autoencoder tmp = ae;
  get_net(c, prefix + ".enc", tmp.encoder);
  get_net(c, prefix + ".dec", tmp.decoder);
  ae = std::move(tmp);
}

}  // namespace oranlab::ml
