#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "../support/bandit.hpp"
#include "../support/gradcheck.hpp"
#include "oranlab/ml/autoencoder.hpp"
#include "oranlab/ml/checkpoint.hpp"
#include "oranlab/ml/ppo.hpp"

using namespace oranlab;
using namespace oranlab::ml;

namespace {

std::filesystem::path tmp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("oranlab_test_ml_" + name);
}

// Straight-line forward pass with explicit loops.
std::vector<double> naive_forward(const DenseNet& net, std::vector<double> x) {
  for (const auto& l : net.layers) {
    std::vector<double> y(static_cast<std::size_t>(l.weights.rows()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      double s = l.biases(r);
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) s += l.weights(r, c) * x[static_cast<std::size_t>(c)];
      y[static_cast<std::size_t>(r)] = s;
    }
    switch (l.activation) {
      case Activation::Linear: break;
      case Activation::Tanh:
        for (auto& v : y) v = std::tanh(v);
        break;
      case Activation::ReLU:
        for (auto& v : y) v = v > 0 ? v : 0.0;
        break;
      case Activation::Softmax: {
        double mx = y[0];
        for (double v : y) mx = std::max(mx, v);
        double z = 0;
        for (auto& v : y) z += (v = std::exp(v - mx));
        for (auto& v : y) v /= z;
        break;
      }
    }
    x = std::move(y);
  }
  return x;
}

DenseNet logits_actor(const VectorXd& logits, int state_dim = 2) {
  DenseNet net;
  Layer l;
  l.weights = MatrixXd::Zero(logits.size(), state_dim);
  l.biases = logits;
  l.activation = Activation::Softmax;
  net.layers.push_back(l);
  return net;
}

}  // namespace

TEST_CASE("forward: trivial nets") {
  std::mt19937_64 rng(1);
  DenseNet net({4, 3}, {Activation::Linear}, rng);
  net.layers[0].weights.setZero();
  CHECK(net.forward(VectorXd::Random(4)).isZero());

  DenseNet id({3, 3}, {Activation::Linear}, rng);
  id.layers[0].weights.setIdentity();
  const VectorXd x = VectorXd::LinSpaced(3, -1, 1);
  CHECK(id.forward(x) == x);

  CHECK_THROWS_AS(id.forward(VectorXd::Zero(4)), std::invalid_argument);
  CHECK_THROWS_AS(DenseNet({3}, {}, rng), std::invalid_argument);
}

TEST_CASE("forward matches a loop implementation") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = testgen::random_net(rng, 3);
    std::vector<double> x(static_cast<std::size_t>(net.input_dim()));
    for (auto& v : x) v = nd(rng);
    const auto want = naive_forward(net, x);
    const VectorXd got = net.forward(Eigen::Map<VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
    REQUIRE(got.size() == static_cast<Eigen::Index>(want.size()));
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got(static_cast<Eigen::Index>(i)) - want[i]) < 1e-12);
  }
}

TEST_CASE("softmax outputs are distributions") {
  std::mt19937_64 rng(3);
  DenseNet net({5, 8, 6}, {Activation::Tanh, Activation::Softmax}, rng);
  const MatrixXd y = net.forward_batch(MatrixXd::Random(5, 100) * 20);
  CHECK((y.array() >= 0).all());
  for (Eigen::Index c = 0; c < y.cols(); ++c) CHECK(std::abs(y.col(c).sum() - 1.0) < 1e-9);
  CHECK(softmax(VectorXd::Constant(3, 1000.0)).isApprox(VectorXd::Constant(3, 1.0 / 3)));
}

TEST_CASE("backward agrees with central differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = testgen::random_net(rng, 1 + trial % 4);
    MatrixXd x(net.input_dim(), 3), w(net.output_dim(), 3);
    for (auto& v : x.reshaped()) v = nd(rng);
    for (auto& v : w.reshaped()) v = nd(rng);
    if (testgen::relu_margin(net, x) < 1e-3) continue;
    CHECK(testgen::gradcheck(net, x, w) < 1e-4);
    ++checked;
  }
  CHECK(checked > 80);
}

TEST_CASE("backward: zero and scaled upstream") {
  std::mt19937_64 rng(5);
  DenseNet net({4, 6, 3}, {Activation::Tanh, Activation::Softmax}, rng);
  const MatrixXd x = MatrixXd::Random(4, 5);
  ForwardCache cache;
  net.forward_batch(x, cache);
  CHECK(DenseNet::flatten(net.backward(cache, MatrixXd::Zero(3, 5))).isZero());
  const MatrixXd g = MatrixXd::Random(3, 5);
  const VectorXd g1 = DenseNet::flatten(net.backward(cache, g));
  const VectorXd g3 = DenseNet::flatten(net.backward(cache, 3.0 * g));
  CHECK((g3 - 3.0 * g1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("params flatten round trip") {
  std::mt19937_64 rng(2);
  DenseNet net({3, 4, 2}, {Activation::ReLU, Activation::Linear}, rng);
  DenseNet copy = net;
  copy.set_params(VectorXd::Zero(static_cast<Eigen::Index>(net.num_params())));
  CHECK_FALSE(copy == net);
  copy.set_params(net.get_params());
  CHECK(copy == net);
  CHECK(net.num_params() == 3 * 4 + 4 + 4 * 2 + 2);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves params") {
    Adam opt(3, {});
    VectorXd p = VectorXd::LinSpaced(3, 1, 3);
    const VectorXd before = p;
    opt.step(p, VectorXd::Zero(3));
    CHECK(p == before);
  }
  SUBCASE("first step has magnitude lr") {
    for (double g : {1e-3, 0.5, 40.0}) {
      Adam opt(2, {});
      VectorXd p = VectorXd::Zero(2);
      opt.step(p, VectorXd::Constant(2, g));
      // m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
      CHECK(std::abs(-p(0) - 1e-3 * g / (g + 1e-8)) < 1e-15);
    }
  }
  SUBCASE("quadratic bowl") {
    const VectorXd target = (VectorXd(3) << 1.5, -2.0, 0.25).finished();
    Adam opt(3, {0.05});
    VectorXd p = VectorXd::Zero(3);
    for (int i = 0; i < 500; ++i) opt.step(p, 2.0 * (p - target));
    CHECK((p - target).cwiseAbs().maxCoeff() < 1e-3);
  }
  SUBCASE("non-finite gradient skips the step") {
    Adam opt(2, {});
    VectorXd p = VectorXd::Ones(2);
    opt.step(p, VectorXd::Ones(2));
    const VectorXd before = p;
    const VectorXd m = opt.m();
    VectorXd bad = VectorXd::Ones(2);
    bad(1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(opt.step(p, bad));
    CHECK(p == before);
    CHECK(opt.m() == m);
    CHECK(opt.t() == 1);
    CHECK(opt.skipped() == 1);
  }
}

TEST_CASE("entropy and action selection") {
  CHECK(std::abs(entropy(VectorXd::Constant(4, 0.25)) - std::log(4.0)) < 1e-15);
  CHECK(entropy((VectorXd(3) << 1, 0, 0).finished()) == 0.0);

  std::mt19937_64 rng(99);
  const auto uniform = logits_actor(VectorXd::Zero(4));
  std::array<int, 4> counts{};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto c = select_action(uniform, VectorXd::Zero(2), SelectMode::Explore, rng);
    ++counts[static_cast<std::size_t>(c.action)];
    REQUIRE(std::abs(c.log_prob - std::log(0.25)) < 1e-12);
  }
  for (int n : counts) CHECK(std::abs(n / static_cast<double>(draws) - 0.25) < 0.02 * 0.25);

  VectorXd logits(6);
  logits << 5, 1, 1, 1, 1, 1;
  CHECK(select_action(logits_actor(logits), VectorXd::Zero(2), SelectMode::Greedy, rng).action == 0);
  logits << 0.1, 0.3, -2, 0.29, 0, 0;
  const int a = select_action(logits_actor(logits), VectorXd::Zero(2), SelectMode::Greedy, rng).action;
  CHECK(a == 1);
  CHECK(select_action(logits_actor(logits.array() + 123.0), VectorXd::Zero(2), SelectMode::Greedy, rng).action == a);
}

TEST_CASE("gae by hand") {
  TrajectoryBuffer buf;
  buf.add({VectorXd::Zero(1), 0, 0, 1.0, 0.5, false});
  buf.add({VectorXd::Zero(1), 0, 0, 0.0, 0.2, false});
  buf.add({VectorXd::Zero(1), 0, 0, 2.0, 0.1, true});
  buf.add({VectorXd::Zero(1), 0, 0, 1.0, 0.3, false});
  buf.bootstrap_value = 0.4;
  const double g = 0.9, l = 0.5;
  VectorXd adv, ret;
  compute_gae(buf, g, l, adv, ret);
  const double d3 = 1.0 + g * 0.4 - 0.3;
  const double d2 = 2.0 - 0.1;
  const double d1 = 0.0 + g * 0.1 - 0.2;
  const double d0 = 1.0 + g * 0.2 - 0.5;
  const double a3 = d3, a2 = d2, a1 = d1 + g * l * a2, a0 = d0 + g * l * a1;
  CHECK(adv(3) == doctest::Approx(a3).epsilon(1e-14));
  CHECK(adv(2) == doctest::Approx(a2).epsilon(1e-14));
  CHECK(adv(1) == doctest::Approx(a1).epsilon(1e-14));
  CHECK(adv(0) == doctest::Approx(a0).epsilon(1e-14));
  CHECK(ret(0) == doctest::Approx(a0 + 0.5).epsilon(1e-14));

  // A truncated step bootstraps and cuts the advantage chain.
  buf.items[1].truncated = true;
  buf.items[1].bootstrap = 1.5;
  compute_gae(buf, g, l, adv, ret);
  const double t1 = 0.0 + g * 1.5 - 0.2;
  CHECK(adv(1) == doctest::Approx(t1).epsilon(1e-14));
  CHECK(adv(0) == doctest::Approx(d0 + g * l * t1).epsilon(1e-14));
  CHECK(adv(2) == doctest::Approx(a2).epsilon(1e-14));
}

TEST_CASE("ppo: bandit converges") {
  testgen::Bandit bandit;
  for (std::uint64_t seed : {1, 2, 3}) {
    PpoAgent agent(1, 2, {}, seed);
    CHECK(std::abs(bandit.p_best(agent) - 0.5) < 0.3);
    for (int u = 0; u < 200; ++u) {
      bandit.round(agent);
      CHECK(agent.policy_version() == static_cast<std::uint64_t>(u + 1));
    }
    CHECK(bandit.p_best(agent) > 0.99);
    CHECK(agent.global_step() == 200 * 64);
  }
}

TEST_CASE("ppo: zero advantages leave the actor unchanged") {
  PpoConfig cfg;
  cfg.entropy_coef = 0.0;
  PpoAgent agent(3, 4, cfg, 4);
  const DenseNet before = agent.actor();
  auto buf = agent.new_buffer();
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const VectorXd s = VectorXd::Random(3);
    const auto c = agent.act(s, SelectMode::Explore);
    const double v = agent.value(s);
    buf.add({s, c.action, c.log_prob, v, v, true});
  }
  agent.update(buf);
  CHECK(agent.actor() == before);
  CHECK(buf.empty());
}

TEST_CASE("ppo: on-policy discipline") {
  PpoAgent agent(1, 2, {}, 9);
  testgen::Bandit bandit;
  auto stale = agent.new_buffer();
  stale.add({bandit.state, 0, std::log(0.5), 1.0, 0.0, true});
  bandit.round(agent);
  CHECK_THROWS_AS(agent.update(stale), StalePolicyError);
  auto empty = agent.new_buffer();
  CHECK_THROWS_AS(agent.update(empty), std::invalid_argument);
  auto ok = agent.new_buffer();
  ok.add({bandit.state, 0, std::log(0.5), 1.0, 0.0, true});
  agent.update(ok);
  CHECK(ok.size() == 0);
}

TEST_CASE("checkpoint: round trip and resume") {
  testgen::Bandit bandit;
  const auto path = tmp_path("resume.ckpt");

  PpoAgent straight(1, 2, {}, 21);
  std::vector<PpoLosses> a;
  for (int u = 0; u < 100; ++u) a.push_back(bandit.round(straight));

  std::vector<PpoLosses> b;
  {
    PpoAgent first(1, 2, {}, 21);
    for (int u = 0; u < 50; ++u) b.push_back(bandit.round(first));
    Checkpoint c;
    first.save(c, "agent");
    save_checkpoint(path, c);
  }
  PpoAgent resumed(1, 2, {}, 12345);
  const auto loaded = load_checkpoint(path);
  resumed.load(loaded, "agent");
  CHECK(resumed.global_step() == 50 * 64);
  for (int u = 0; u < 50; ++u) b.push_back(bandit.round(resumed));

  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].policy == b[i].policy);
    CHECK(a[i].value == b[i].value);
    CHECK(a[i].entropy == b[i].entropy);
  }
  CHECK(resumed.actor() == straight.actor());
  CHECK(resumed.critic() == straight.critic());

  Checkpoint again;
  resumed.save(again, "agent");
  save_checkpoint(path, again);
  CHECK(load_checkpoint(path) == again);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: damaged files are rejected whole") {
  const auto path = tmp_path("damaged.ckpt");
  PpoAgent agent(2, 3, {}, 1);
  Checkpoint c;
  agent.save(c, "agent");
  c.meta["note"] = "with spaces in it";
  save_checkpoint(path, c);
  std::string bytes;
  {
    std::ifstream f(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(f), {});
  }
  auto write = [&](const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << content;
  };
  auto message = [&]() -> std::string {
    try {
      load_checkpoint(path);
    } catch (const CheckpointError& e) {
      return e.what();
    }
    return "";
  };

  CHECK(load_checkpoint(path).get_meta("note") == "with spaces in it");

  write(bytes.substr(0, bytes.size() / 2));
  CHECK(message().find("truncated") != std::string::npos);
  PpoAgent other(2, 3, {}, 2);
  const DenseNet before = other.actor();
  CHECK_THROWS_AS(other.load(load_checkpoint(path), "agent"), CheckpointError);
  CHECK(other.actor() == before);

  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  write(flipped);
  CHECK(message().find("checksum") != std::string::npos);

  std::string v2 = bytes;
  v2.replace(0, v2.find('\n'), "ORANLAB-CKPT 2");
  write(v2);
  CHECK(message().find("version") != std::string::npos);

  write("hello\n");
  CHECK(message().find("magic") != std::string::npos);

  std::filesystem::remove(path);
  CHECK(message().find("cannot open") != std::string::npos);

  PpoAgent wide(2, 5, {}, 1);
  CHECK_THROWS_AS(wide.load(c, "agent"), CheckpointError);
}

TEST_CASE("autoencoder: structure and errors") {
  std::mt19937_64 rng(1);
  const auto ae = Autoencoder::make(rng);
  CHECK(ae.encoder.dims() == std::vector<int>{30, 256, 128, 32, 3});
  CHECK(ae.decoder.dims() == std::vector<int>{3, 32, 128, 256, 30});
  CHECK(ae.encoder.layers.back().activation == Activation::Linear);
  CHECK(ae.decoder.layers.back().activation == Activation::Linear);
  CHECK(ae.encoder.layers.front().activation == Activation::ReLU);
  CHECK_THROWS_AS(train_autoencoder(MatrixXd(30, 0), {}), std::invalid_argument);
  CHECK_THROWS_AS(train_autoencoder(MatrixXd::Zero(29, 4), {}), std::invalid_argument);

  const VectorXd zero = VectorXd::Zero(kObsDim);
  CHECK(ae.encode(zero).allFinite());
  const VectorXd x = VectorXd::LinSpaced(kObsDim, 0, 1);
  CHECK(ae.encode(x) == ae.encode(x));
}

TEST_CASE("autoencoder: constant dataset fits") {
  const MatrixXd data = VectorXd::LinSpaced(kObsDim, 0.1, 0.9).replicate(1, 128);
  AutoencoderConfig cfg;
  cfg.mask_prob = 0.0;
  cfg.epochs = 150;
  const auto res = train_autoencoder(data, cfg);
  CHECK(res.model.mse(data) < 1e-4);
  CHECK(res.losses.back() < res.losses.front());
}

TEST_CASE("autoencoder: generalizes on low-rank data") {
  // Observations driven by three latent factors.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  MatrixXd basis(kObsDim, 3);
  for (auto& v : basis.reshaped()) v = u(rng) / 3;
  auto sample = [&](int n) {
    MatrixXd f(3, n);
    for (auto& v : f.reshaped()) v = u(rng);
    return MatrixXd(basis * f);
  };
  const MatrixXd train = sample(1024), held = sample(256);
  AutoencoderConfig cfg;
  cfg.mask_prob = 0.0;
  cfg.epochs = 40;
  const auto res = train_autoencoder(train, cfg);
  double tail = 0;
  for (std::size_t i = res.losses.size() - 5; i < res.losses.size(); ++i) tail += res.losses[i] / 5;
  CHECK(res.model.mse(held) <= 2 * tail);
  double first = 0, last = 0;
  for (int i = 0; i < 10; ++i) {
    first += res.losses[static_cast<std::size_t>(i)];
    last += res.losses[res.losses.size() - 1 - static_cast<std::size_t>(i)];
  }
  CHECK(last < first);

  Checkpoint c;
  put_autoencoder(c, "ae", res.model);
  std::mt19937_64 other(99);
  auto copy = Autoencoder::make(other);
  get_autoencoder(c, "ae", copy);
  CHECK(copy.encoder == res.model.encoder);
  CHECK(copy.decoder == res.model.decoder);
}

TEST_CASE("plateau detector") {
  PlateauDetector flat(20, 1e-3);
  for (int i = 0; i < 19; ++i) flat.push(1.0);
  CHECK_FALSE(flat.plateaued());
  flat.push(1.0);
  CHECK(flat.plateaued());

  PlateauDetector ramp(20, 1e-3);
  for (int i = 0; i < 100; ++i) ramp.push(0.01 * i);
  CHECK_FALSE(ramp.plateaued());
  CHECK(ramp.slope() == doctest::Approx(0.01));

  PlateauDetector decay(20, 1e-3);
  int hit = -1;
  for (int i = 0; i < 2000 && hit < 0; ++i) {
    decay.push(std::exp(-i / 50.0));
    if (decay.plateaued()) hit = i;
  }
  // |slope| = e^{-i/50}/50 drops under 1e-3 near i = 150.
  CHECK(hit > 120);
  CHECK(hit < 200);
}
