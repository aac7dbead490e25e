#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "oranlab/ml/net.hpp"

namespace oranlab::testgen {

/// Random net with `depth` layers of random widths; hidden activations drawn
/// from {Tanh, Linear, ReLU}, head from {Linear, Softmax, Tanh}.
inline ml::DenseNet random_net(std::mt19937_64& rng, int depth = 3) {
  std::uniform_int_distribution<int> width(1, 7);
  std::uniform_int_distribution<int> pick(0, 2);
  std::vector<int> dims{width(rng)};
  std::vector<ml::Activation> acts;
  const ml::Activation hidden[] = {ml::Activation::Tanh, ml::Activation::Linear, ml::Activation::ReLU};
  const ml::Activation head[] = {ml::Activation::Linear, ml::Activation::Softmax, ml::Activation::Tanh};
  for (int k = 0; k < depth; ++k) {
    dims.push_back(width(rng));
    acts.push_back(k + 1 == depth ? head[pick(rng)] : hidden[pick(rng)]);
  }
  if (acts.back() == ml::Activation::Softmax && dims.back() < 2) dims.back() = 3;
  ml::DenseNet net(dims, acts, rng);
  std::normal_distribution<double> nd(0.0, 0.3);
  for (auto& l : net.layers) {
    for (Eigen::Index i = 0; i < l.biases.size(); ++i) l.biases(i) = nd(rng);
  }
  return net;
}

/// Smallest |pre-activation| at any ReLU unit for this batch. Finite
/// differences are meaningless within h of a kink.
inline double relu_margin(const ml::DenseNet& net, const ml::MatrixXd& x) {
  double margin = 1e300;
  ml::MatrixXd a = x;
  for (const auto& l : net.layers) {
    ml::MatrixXd z = l.weights * a;
    z.colwise() += l.biases;
    if (l.activation == ml::Activation::ReLU) margin = std::min(margin, z.cwiseAbs().minCoeff());
    ml::DenseNet one;
    one.layers.push_back(l);
    a = one.forward_batch(a);
  }
  return margin;
}

/// Max relative error between analytic parameter gradients and central
/// differences of L = sum(w .* net(x)).
inline double gradcheck(const ml::DenseNet& net, const ml::MatrixXd& x, const ml::MatrixXd& w, double h = 1e-5) {
  ml::ForwardCache cache;
  net.forward_batch(x, cache);
  const ml::VectorXd analytic = ml::DenseNet::flatten(net.backward(cache, w));
  ml::DenseNet probe = net;
  ml::VectorXd p = net.get_params();
  auto loss = [&](const ml::VectorXd& q) {
    probe.set_params(q);
    return (probe.forward_batch(x).array() * w.array()).sum();
  };
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    ml::VectorXd up = p, dn = p;
    up(i) += h;
    dn(i) -= h;
    const double numeric = (loss(up) - loss(dn)) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic(i)), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic(i)) / denom);
  }
  return worst;
}

}  // namespace oranlab::testgen
