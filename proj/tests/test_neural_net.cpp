#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <set>

#include "csn/neural_net.hpp"

using namespace csn;

namespace {

const EncodingDims kDims{3, 6, 30};  // desk-shaped

DenseNetParams random_policy(Rng& rng) {
  return DenseNetParams::random_init(
      {kDims.input_size(), 12, 12, kDims.action_vocab()}, rng);
}

DenseNetParams random_value(Rng& rng) {
  return DenseNetParams::random_init({kDims.input_size(), 12, 12, 1}, rng);
}

std::vector<std::uint8_t> full_mask() {
  return std::vector<std::uint8_t>(kDims.action_vocab(), 1);
}

}  // namespace

TEST_CASE("state encoding layout") {
  SUBCASE("initial state at t = 0") {
    const auto enc =
        encode_state({NodeRef::initial(), ReqFlag::kUndefined}, 0, kDims);
    REQUIRE(static_cast<int>(enc.size()) == kDims.input_size());
    CHECK(enc[0] == 1.0);
    double total = 0;
    for (double v : enc) total += v;
    CHECK(total == 1.0);  // single hot node slot, flags (0,0), time 0
  }
  SUBCASE("satellite with a set flag at the horizon") {
    const auto enc =
        encode_state({NodeRef::satellite(2), ReqFlag::kYes}, 30, kDims);
    CHECK(enc[2 + kDims.gateways + 2] == 1.0);
    const int base = 2 + kDims.gateways + kDims.satellites;
    CHECK(enc[base] == 1.0);      // flag value
    CHECK(enc[base + 1] == 1.0);  // flag defined
    CHECK(enc[base + 2] == 1.0);  // t / T
  }
  SUBCASE("distinct states encode distinctly") {
    std::set<std::vector<double>> seen;
    for (int t : {0, 7, 30}) {
      seen.insert(encode_state({NodeRef::initial(), ReqFlag::kUndefined}, t, kDims));
      seen.insert(encode_state({NodeRef::terminal(), ReqFlag::kUndefined}, t, kDims));
      for (int gw = 0; gw < 3; ++gw)
        seen.insert(encode_state({NodeRef::gateway(gw), ReqFlag::kUndefined}, t, kDims));
      for (int sat = 0; sat < 6; ++sat)
        for (ReqFlag flag : {ReqFlag::kNo, ReqFlag::kYes})
          seen.insert(encode_state({NodeRef::satellite(sat), flag}, t, kDims));
    }
    CHECK(seen.size() == 3u * (2 + 3 + 12));
  }
}

TEST_CASE("action vocabulary round-trips") {
  for (int idx = 0; idx < kDims.action_vocab(); ++idx)
    CHECK(action_index(action_from_index(idx, kDims), kDims) == idx);
  CHECK(action_index(ActionToken::hold(), kDims) == 0);
  CHECK(action_index(ActionToken::deliver(), kDims) == 1);
  CHECK(action_index(ActionToken::to_gateway(1), kDims) == 3);
  CHECK(action_index(ActionToken::to_satellite(0), kDims) == 2 + kDims.gateways);
}

TEST_CASE("policy forward: uniform at zero parameters, sums to one") {
  const DenseNetParams zero = DenseNetParams::zeros(
      {kDims.input_size(), 8, kDims.action_vocab()});
  const auto enc =
      encode_state({NodeRef::initial(), ReqFlag::kUndefined}, 0, kDims);

  SUBCASE("equal logits spread mass uniformly over the mask") {
    std::vector<std::uint8_t> mask(kDims.action_vocab(), 0);
    mask[0] = mask[1] = mask[4] = 1;
    const auto probs = policy_forward(zero, enc, mask);
    CHECK(probs[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(probs[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(probs[4] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(probs[2] == 0.0);
  }
  SUBCASE("a single unmasked action takes probability one") {
    Rng rng(5);
    const DenseNetParams net = random_policy(rng);
    std::vector<std::uint8_t> mask(kDims.action_vocab(), 0);
    mask[3] = 1;
    const auto probs = policy_forward(net, enc, mask);
    CHECK(probs[3] == 1.0);
  }
  SUBCASE("random nets: nonnegative, masked-zero, sums to one") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
      const DenseNetParams net = random_policy(rng);
      std::vector<std::uint8_t> mask(kDims.action_vocab(), 0);
      int unmasked = 0;
      for (auto& m : mask)
        if (rng.uniform_int(2)) {
          m = 1;
          ++unmasked;
        }
      if (!unmasked) mask[0] = 1;
      const auto probs = policy_forward(net, enc, mask);
      double total = 0;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        CHECK(probs[i] >= 0.0);
        if (!mask[i]) CHECK(probs[i] == 0.0);
        total += probs[i];
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
  SUBCASE("an all-false mask is rejected") {
    CHECK_THROWS_AS(
        policy_forward(zero, enc, std::vector<std::uint8_t>(kDims.action_vocab(), 0)),
        std::invalid_argument);
  }
}

TEST_CASE("value forward: zero net gives zero, calls are repeatable") {
  const auto enc =
      encode_state({NodeRef::gateway(1), ReqFlag::kUndefined}, 3, kDims);
  const DenseNetParams zero = DenseNetParams::zeros({kDims.input_size(), 8, 1});
  CHECK(value_forward(zero, enc) == 0.0);
  Rng rng(7);
  const DenseNetParams net = random_value(rng);
  const double a = value_forward(net, enc);
  CHECK(std::isfinite(a));
  CHECK(value_forward(net, enc) == a);
}

// Hand-rolled central-difference probe, independent of the backprop path.
namespace {

template <typename Fn>
double max_fd_error(const DenseNetParams& net, const GradientBundle& grad,
                    Fn&& fn) {
  const double eps = 1e-5;
  double worst = 0.0;
  DenseNetParams probe = net;
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (std::size_t i = 0; i < probe.weights[l].size(); ++i) {
      const double saved = probe.weights[l][i];
      probe.weights[l][i] = saved + eps;
      const double hi = fn(probe);
      probe.weights[l][i] = saved - eps;
      const double lo = fn(probe);
      probe.weights[l][i] = saved;
      const double fd = (hi - lo) / (2 * eps);
      const double a = grad.weights[l][i];
      worst = std::max(worst,
                       std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6}));
    }
    for (std::size_t i = 0; i < probe.biases[l].size(); ++i) {
      const double saved = probe.biases[l][i];
      probe.biases[l][i] = saved + eps;
      const double hi = fn(probe);
      probe.biases[l][i] = saved - eps;
      const double lo = fn(probe);
      probe.biases[l][i] = saved;
      const double fd = (hi - lo) / (2 * eps);
      const double a = grad.biases[l][i];
      worst = std::max(worst,
                       std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6}));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("log-probability gradients agree with central differences") {
  Rng rng(11);
  for (int trial = 0; trial < 12; ++trial) {
    const DenseNetParams net = random_policy(rng);
    const auto enc = encode_state(
        {NodeRef::satellite(static_cast<int>(rng.uniform_int(6))), ReqFlag::kNo},
        static_cast<int>(rng.uniform_int(31)), kDims);
    auto mask = full_mask();
    for (auto& m : mask) m = rng.uniform_int(2) ? 1 : 0;
    mask[2] = 1;
    const int action = 2;
    const GradientBundle grad = logprob_gradient(net, enc, mask, action);
    const double err = max_fd_error(net, grad, [&](const DenseNetParams& p) {
      return std::log(policy_forward(p, enc, mask)[action]);
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("value gradients agree with central differences") {
  Rng rng(13);
  for (int trial = 0; trial < 12; ++trial) {
    const DenseNetParams net = random_value(rng);
    const auto enc = encode_state(
        {NodeRef::gateway(static_cast<int>(rng.uniform_int(3))),
         ReqFlag::kUndefined},
        static_cast<int>(rng.uniform_int(31)), kDims);
    const GradientBundle grad = value_gradient(net, enc);
    const double err = max_fd_error(net, grad, [&](const DenseNetParams& p) {
      return value_forward(p, enc);
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("gradient edge cases") {
  Rng rng(17);
  const auto enc =
      encode_state({NodeRef::initial(), ReqFlag::kUndefined}, 1, kDims);
  SUBCASE("single unmasked action has a constant log-probability") {
    const DenseNetParams net = random_policy(rng);
    std::vector<std::uint8_t> mask(kDims.action_vocab(), 0);
    mask[1] = 1;
    const GradientBundle grad = logprob_gradient(net, enc, mask, 1);
    CHECK(max_abs_value(grad) == 0.0);
  }
  SUBCASE("masked actions are rejected") {
    const DenseNetParams net = random_policy(rng);
    std::vector<std::uint8_t> mask(kDims.action_vocab(), 1);
    mask[4] = 0;
    CHECK_THROWS_AS(logprob_gradient(net, enc, mask, 4), std::invalid_argument);
  }
  SUBCASE("gradient shape matches the parameters") {
    const DenseNetParams net = random_policy(rng);
    const GradientBundle grad = logprob_gradient(net, enc, full_mask(), 0);
    CHECK(grad.same_shape(net));
    CHECK(parameter_count(grad) == parameter_count(net));
  }
  SUBCASE("zero encoding with zero first-layer bias kills the input weights") {
    DenseNetParams net = random_value(rng);
    std::fill(net.biases[0].begin(), net.biases[0].end(), 0.0);
    const std::vector<double> zero_enc(kDims.input_size(), 0.0);
    const GradientBundle grad = value_gradient(net, zero_enc);
    for (double w : grad.weights[0]) CHECK(w == 0.0);
  }
}

TEST_CASE("apply_update algebra") {
  Rng rng(19);
  const DenseNetParams net = random_value(rng);
  const GradientBundle g1 = value_gradient(
      net, encode_state({NodeRef::initial(), ReqFlag::kUndefined}, 0, kDims));
  const GradientBundle g2 = value_gradient(
      net, encode_state({NodeRef::gateway(0), ReqFlag::kUndefined}, 5, kDims));

  SUBCASE("zero step is the identity") {
    CHECK(apply_update(net, g1, 0.0, +1) == net);
  }
  SUBCASE("two updates compose additively") {
    const DenseNetParams a = apply_update(apply_update(net, g1, 0.1, +1), g2, 0.1, +1);
    GradientBundle sum = g1;
    for (std::size_t l = 0; l < sum.weights.size(); ++l) {
      for (std::size_t i = 0; i < sum.weights[l].size(); ++i)
        sum.weights[l][i] += g2.weights[l][i];
      for (std::size_t i = 0; i < sum.biases[l].size(); ++i)
        sum.biases[l][i] += g2.biases[l][i];
    }
    const DenseNetParams b = apply_update(net, sum, 0.1, +1);
    for (std::size_t l = 0; l < a.weights.size(); ++l)
      for (std::size_t i = 0; i < a.weights[l].size(); ++i)
        CHECK(a.weights[l][i] == doctest::Approx(b.weights[l][i]).epsilon(1e-12));
  }
  SUBCASE("an update followed by its inverse restores the parameters") {
    const DenseNetParams there = apply_update(net, g1, 0.37, +1);
    const DenseNetParams back = apply_update(there, g1, 0.37, -1);
    for (std::size_t l = 0; l < net.weights.size(); ++l)
      for (std::size_t i = 0; i < net.weights[l].size(); ++i)
        CHECK(back.weights[l][i] ==
              doctest::Approx(net.weights[l][i]).epsilon(1e-12));
  }
  SUBCASE("shape mismatch and bad direction are rejected") {
    const DenseNetParams other = DenseNetParams::zeros({3, 2});
    CHECK_THROWS_AS(apply_update(net, other, 0.1, +1), std::invalid_argument);
    CHECK_THROWS_AS(apply_update(net, g1, 0.1, 2), std::invalid_argument);
  }
  SUBCASE("the input parameters are never mutated") {
    const DenseNetParams before = net;
    (void)apply_update(net, g1, 0.5, +1);
    CHECK(net == before);
  }
}

TEST_CASE("parameter files round-trip exactly") {
  Rng rng(23);
  const DenseNetParams net = random_policy(rng);
  const DenseNetParams loaded = load_net_text(save_net(net));
  CHECK(loaded == net);  // bitwise: 17 significant digits
  CHECK(save_net(loaded) == save_net(net));

  CHECK_THROWS_AS(load_net_text("NET v2 2 3 1\n"), std::runtime_error);
  CHECK_THROWS_AS(load_net_text("NET v1 2 3 1\n0 0 0\n"), std::runtime_error);
}
