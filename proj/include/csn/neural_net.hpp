#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "csn/mdp_env.hpp"
#include "csn/rng.hpp"

namespace csn {

// Fully connected net with tanh hidden layers and an identity output layer.
// Pure value type: updates never mutate in place.
struct DenseNetParams {
  std::vector<int> layer_dims;                // [d_in, hidden..., d_out]
  std::vector<std::vector<double>> weights;   // [l]: dims[l+1] x dims[l], row-major
  std::vector<std::vector<double>> biases;    // [l]: dims[l+1]

  static DenseNetParams zeros(const std::vector<int>& dims);
  // Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], weights and biases.
  static DenseNetParams random_init(const std::vector<int>& dims, Rng& rng);

  bool same_shape(const DenseNetParams& other) const;
  friend bool operator==(const DenseNetParams&, const DenseNetParams&) = default;
};

// Derivatives carried in the same shape as the parameters they refer to.
using GradientBundle = DenseNetParams;

// Network input layout: node one-hot (initial, terminal, gateways,
// satellites), then the request-flag pair (value, defined), then t/T.
// The action vocabulary is fixed: HOLD, DELIVER, TO_GW(g)..., TO_SAT(s)...
struct EncodingDims {
  int gateways = 0;
  int satellites = 0;
  int horizon = 1;

  int input_size() const { return gateways + satellites + 5; }
  int action_vocab() const { return 2 + gateways + satellites; }

  friend bool operator==(const EncodingDims&, const EncodingDims&) = default;
};

int action_index(const ActionToken& a, const EncodingDims& dims);
ActionToken action_from_index(int idx, const EncodingDims& dims);
std::vector<std::uint8_t> action_mask(std::span<const ActionToken> legal,
                                      const EncodingDims& dims);

std::vector<double> encode_state(const LocalState& state, int t,
                                 const EncodingDims& dims);

// Masked softmax over the policy logits; masked entries get probability 0
// exactly. Throws when every entry is masked.
std::vector<double> policy_forward(const DenseNetParams& net,
                                   std::span<const double> encoding,
                                   std::span<const std::uint8_t> mask);

double value_forward(const DenseNetParams& net,
                     std::span<const double> encoding);

// d log pi(action | encoding) / d params, via backprop through the masked
// softmax. The action must be unmasked.
GradientBundle logprob_gradient(const DenseNetParams& net,
                                std::span<const double> encoding,
                                std::span<const std::uint8_t> mask, int action);

GradientBundle value_gradient(const DenseNetParams& net,
                              std::span<const double> encoding);

// Accumulating forms used by the training loops: acc += scale * gradient.
// acc must be zeros(net.layer_dims) or a prior accumulation of the same shape.
void add_scaled_logprob_gradient(const DenseNetParams& net,
                                 std::span<const double> encoding,
                                 std::span<const std::uint8_t> mask, int action,
                                 double scale, GradientBundle& acc);
void add_scaled_value_gradient(const DenseNetParams& net,
                               std::span<const double> encoding, double scale,
                               GradientBundle& acc);

// params + direction * step * grad, elementwise; direction is +1 or -1.
DenseNetParams apply_update(const DenseNetParams& params,
                            const GradientBundle& grad, double step,
                            int direction);

double max_abs_value(const GradientBundle& g);
double sum_abs_value(const GradientBundle& g);
long parameter_count(const DenseNetParams& p);

// Text format: 'NET v1 <n_dims> <dims...>', then per layer the weight rows
// and one bias line. Values round-trip exactly (17 significant digits).
std::string save_net(const DenseNetParams& net);
DenseNetParams load_net(std::istream& in);
DenseNetParams load_net_text(const std::string& text);
void save_net_file(const DenseNetParams& net, const std::string& path);
DenseNetParams load_net_file(const std::string& path);

}  // namespace csn
