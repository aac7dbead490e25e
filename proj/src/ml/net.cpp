#include "oranlab/ml/net.hpp"

#include <cmath>
#include <stdexcept>

namespace oranlab::ml {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Tanh: return "tanh";
    case Activation::ReLU: return "relu";
    case Activation::Softmax: return "softmax";
  }
  return "?";
}

Activation parse_activation(std::string_view text) {
  for (auto a : {Activation::Linear, Activation::Tanh, Activation::ReLU, Activation::Softmax}) {
    if (text == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown activation: " + std::string(text));
}

namespace {

void activate(Activation a, MatrixXd& z) {
  switch (a) {
    case Activation::Linear: break;
    case Activation::Tanh: z = z.array().tanh(); break;
    case Activation::ReLU: z = z.array().max(0.0); break;
    case Activation::Softmax:
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const double mx = z.col(c).maxCoeff();
        z.col(c) = (z.col(c).array() - mx).exp();
        z.col(c) /= z.col(c).sum();
      }
      break;
  }
}

/// dL/dz from dL/dy for y = act(z), given y.
MatrixXd activation_backward(Activation a, const MatrixXd& y, const MatrixXd& dy) {
  switch (a) {
    case Activation::Linear: return dy;
    case Activation::Tanh: return (dy.array() * (1.0 - y.array().square())).matrix();
    case Activation::ReLU: return (dy.array() * (y.array() > 0.0).cast<double>()).matrix();
    case Activation::Softmax: {
      // Jacobian-vector product: dz = y * (dy - <y, dy>).
      MatrixXd dz(dy.rows(), dy.cols());
      for (Eigen::Index c = 0; c < dy.cols(); ++c) {
        const double inner = y.col(c).dot(dy.col(c));
        dz.col(c) = y.col(c).array() * (dy.col(c).array() - inner);
      }
      return dz;
    }
  }
  return dy;
}

}  // namespace

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

void Gradients::scale(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
  input *= s;
}

bool Gradients::all_finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

void Gradients::add(const Gradients& other) {
  for (std::size_t k = 0; k < weights.size(); ++k) {
    weights[k] += other.weights[k];
    biases[k] += other.biases[k];
  }
}

DenseNet::DenseNet(const std::vector<int>& dims, const std::vector<Activation>& acts, std::mt19937_64& rng) {
  if (dims.size() < 2 || acts.size() + 1 != dims.size()) {
    throw std::invalid_argument("DenseNet: need one activation per layer");
  }
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    if (dims[k] < 1 || dims[k + 1] < 1) throw std::invalid_argument("DenseNet: layer sizes must be >= 1");
    Layer l;
    const double limit = std::sqrt(6.0 / (dims[k] + dims[k + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    l.weights.resize(dims[k + 1], dims[k]);
    // Fill in a fixed (row-major) order so initial weights do not depend on
    // Eigen's storage.
    for (int r = 0; r < dims[k + 1]; ++r) {
      for (int c = 0; c < dims[k]; ++c) l.weights(r, c) = u(rng);
    }
    l.biases = VectorXd::Zero(dims[k + 1]);
    l.activation = acts[k];
    layers.push_back(std::move(l));
  }
}

int DenseNet::input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weights.cols()); }
int DenseNet::output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weights.rows()); }

std::size_t DenseNet::num_params() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
  return n;
}

std::vector<int> DenseNet::dims() const {
  std::vector<int> d;
  if (layers.empty()) return d;
  d.push_back(input_dim());
  for (const auto& l : layers) d.push_back(static_cast<int>(l.weights.rows()));
  return d;
}

VectorXd DenseNet::forward(const VectorXd& x) const {
  MatrixXd m = x;
  return forward_batch(m).col(0);
}

MatrixXd DenseNet::forward_batch(const MatrixXd& x) const {
  if (layers.empty()) throw std::invalid_argument("DenseNet: empty network");
  if (x.rows() != input_dim()) {
    throw std::invalid_argument("DenseNet: input has " + std::to_string(x.rows()) + " rows, expected " +
                                std::to_string(input_dim()));
  }
  MatrixXd a = x;
  for (const auto& l : layers) {
    MatrixXd z = l.weights * a;
    z.colwise() += l.biases;
    activate(l.activation, z);
    a = std::move(z);
  }
  return a;
}

MatrixXd DenseNet::forward_batch(const MatrixXd& x, ForwardCache& cache) const {
  if (layers.empty()) throw std::invalid_argument("DenseNet: empty network");
  if (x.rows() != input_dim()) {
    throw std::invalid_argument("DenseNet: input has " + std::to_string(x.rows()) + " rows, expected " +
                                std::to_string(input_dim()));
  }
  cache.inputs.resize(layers.size());
  cache.outputs.resize(layers.size());
  const MatrixXd* a = &x;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    cache.inputs[k] = *a;
    MatrixXd z = l.weights * *a;
    z.colwise() += l.biases;
    activate(l.activation, z);
    cache.outputs[k] = std::move(z);
    a = &cache.outputs[k];
  }
  return cache.outputs.back();
}

Gradients DenseNet::backward(const ForwardCache& cache, const MatrixXd& dy) const {
  Gradients g;
  g.weights.resize(layers.size());
  g.biases.resize(layers.size());
  MatrixXd d = dy;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const auto& l = layers[k];
    MatrixXd dz = activation_backward(l.activation, cache.outputs[k], d);
    g.weights[k] = dz * cache.inputs[k].transpose();
    g.biases[k] = dz.rowwise().sum();
    d = l.weights.transpose() * dz;
  }
  g.input = std::move(d);
  return g;
}

VectorXd DenseNet::get_params() const {
  VectorXd p(static_cast<Eigen::Index>(num_params()));
  Eigen::Index o = 0;
  for (const auto& l : layers) {
    p.segment(o, l.weights.size()) = Eigen::Map<const VectorXd>(l.weights.data(), l.weights.size());
    o += l.weights.size();
    p.segment(o, l.biases.size()) = l.biases;
    o += l.biases.size();
  }
  return p;
}

void DenseNet::set_params(const VectorXd& p) {
  if (static_cast<std::size_t>(p.size()) != num_params()) throw std::invalid_argument("DenseNet: parameter count");
  Eigen::Index o = 0;
  for (auto& l : layers) {
    Eigen::Map<VectorXd>(l.weights.data(), l.weights.size()) = p.segment(o, l.weights.size());
    o += l.weights.size();
    l.biases = p.segment(o, l.biases.size());
    o += l.biases.size();
  }
}

VectorXd DenseNet::flatten(const Gradients& g) {
  Eigen::Index n = 0;
  for (std::size_t k = 0; k < g.weights.size(); ++k) n += g.weights[k].size() + g.biases[k].size();
  VectorXd out(n);
  Eigen::Index o = 0;
  for (std::size_t k = 0; k < g.weights.size(); ++k) {
    out.segment(o, g.weights[k].size()) = Eigen::Map<const VectorXd>(g.weights[k].data(), g.weights[k].size());
    o += g.weights[k].size();
    out.segment(o, g.biases[k].size()) = g.biases[k];
    o += g.biases[k].size();
  }
  return out;
}

bool DenseNet::operator==(const DenseNet& o) const {
  if (layers.size() != o.layers.size()) return false;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& a = layers[k];
    const auto& b = o.layers[k];
    if (a.activation != b.activation || a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols())
      return false;
    if (a.weights != b.weights || a.biases != b.biases) return false;
  }
  return true;
}

Adam::Adam(std::size_t n_params, AdamConfig cfg)
    : cfg_(cfg),
      m_(VectorXd::Zero(static_cast<Eigen::Index>(n_params))),
      v_(VectorXd::Zero(static_cast<Eigen::Index>(n_params))) {}

bool Adam::step(VectorXd& params, const VectorXd& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw std::invalid_argument("Adam: shape mismatch");
  if (!grads.allFinite()) {
    ++skipped_;
    return false;
  }
  ++t_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grads;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grads.cwiseProduct(grads);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  params.array() -= cfg_.lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + cfg_.eps);
  return true;
}

bool Adam::step(DenseNet& net, const Gradients& g) {
  VectorXd p = net.get_params();
  const bool ok = step(p, DenseNet::flatten(g));
  if (ok) net.set_params(p);
  return ok;
}

void Adam::restore(VectorXd m, VectorXd v, std::uint64_t t, std::uint64_t skipped) {
  if (m.size() != v.size()) throw std::invalid_argument("Adam: moment size mismatch");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
  skipped_ = skipped;
}

VectorXd softmax(const VectorXd& z) {
  VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace oranlab::ml
