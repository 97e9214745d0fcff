#include "csn/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace csn {

namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2)
    throw std::invalid_argument("net: need at least input and output dims");
  for (int d : dims)
    if (d <= 0) throw std::invalid_argument("net: nonpositive layer dim");
}

}  // namespace

DenseNetParams DenseNetParams::zeros(const std::vector<int>& dims) {
  check_dims(dims);
  DenseNetParams p;
  p.layer_dims = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    p.weights.emplace_back(static_cast<std::size_t>(dims[l + 1]) * dims[l], 0.0);
    p.biases.emplace_back(dims[l + 1], 0.0);
  }
  return p;
}

DenseNetParams DenseNetParams::random_init(const std::vector<int>& dims,
                                           Rng& rng) {
  DenseNetParams p = zeros(dims);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (double& w : p.weights[l]) w = (2.0 * rng.uniform_real() - 1.0) * bound;
    for (double& b : p.biases[l]) b = (2.0 * rng.uniform_real() - 1.0) * bound;
  }
  return p;
}

bool DenseNetParams::same_shape(const DenseNetParams& other) const {
  return layer_dims == other.layer_dims;
}

int action_index(const ActionToken& a, const EncodingDims& dims) {
  switch (a.verb) {
    case Verb::kHold: return 0;
    case Verb::kDeliver: return 1;
    case Verb::kToGateway:
      if (a.target < 0 || a.target >= dims.gateways)
        throw std::out_of_range("action gateway index out of range");
      return 2 + a.target;
    case Verb::kToSatellite:
      if (a.target < 0 || a.target >= dims.satellites)
        throw std::out_of_range("action satellite index out of range");
      return 2 + dims.gateways + a.target;
  }
  throw std::logic_error("unreachable");
}

ActionToken action_from_index(int idx, const EncodingDims& dims) {
  if (idx == 0) return ActionToken::hold();
  if (idx == 1) return ActionToken::deliver();
  if (idx < 2 + dims.gateways) return ActionToken::to_gateway(idx - 2);
  if (idx < dims.action_vocab())
    return ActionToken::to_satellite(idx - 2 - dims.gateways);
  throw std::out_of_range("action index out of range");
}

std::vector<std::uint8_t> action_mask(std::span<const ActionToken> legal,
                                      const EncodingDims& dims) {
  std::vector<std::uint8_t> mask(dims.action_vocab(), 0);
  for (const ActionToken& a : legal) mask[action_index(a, dims)] = 1;
  return mask;
}

std::vector<double> encode_state(const LocalState& state, int t,
                                 const EncodingDims& dims) {
  std::vector<double> enc(dims.input_size(), 0.0);
  switch (state.location.kind) {
    case NodeKind::kInitial: enc[0] = 1.0; break;
    case NodeKind::kTerminal: enc[1] = 1.0; break;
    case NodeKind::kGateway: enc[2 + state.location.index] = 1.0; break;
    case NodeKind::kSatellite:
      enc[2 + dims.gateways + state.location.index] = 1.0;
      break;
    case NodeKind::kUserCluster:
      throw std::invalid_argument("cannot encode a user-cluster location");
  }
  const int base = 2 + dims.gateways + dims.satellites;
  if (state.flag != ReqFlag::kUndefined) {
    enc[base] = state.flag == ReqFlag::kYes ? 1.0 : 0.0;
    enc[base + 1] = 1.0;
  }
  enc[base + 2] = static_cast<double>(t) / dims.horizon;
  return enc;
}

namespace {

struct ForwardPass {
  // activations[0] is the input; activations.back() is the linear output.
  std::vector<std::vector<double>> activations;
};

ForwardPass run_forward(const DenseNetParams& net,
                        std::span<const double> encoding) {
  const auto& dims = net.layer_dims;
  if (static_cast<int>(encoding.size()) != dims.front())
    throw std::invalid_argument("forward: encoding size " +
                                std::to_string(encoding.size()) +
                                " != input dim " + std::to_string(dims.front()));
  ForwardPass fp;
  fp.activations.reserve(dims.size());
  fp.activations.emplace_back(encoding.begin(), encoding.end());
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::vector<double>& in = fp.activations.back();
    std::vector<double> out(dims[l + 1]);
    const double* w = net.weights[l].data();
    for (int row = 0; row < dims[l + 1]; ++row) {
      double acc = net.biases[l][row];
      const double* wr = w + static_cast<std::size_t>(row) * dims[l];
      for (int col = 0; col < dims[l]; ++col) acc += wr[col] * in[col];
      out[row] = acc;
    }
    if (l + 2 < dims.size())  // hidden layers only
      for (double& v : out) v = std::tanh(v);
    fp.activations.push_back(std::move(out));
  }
  return fp;
}

// Backpropagates d(output) into acc, scaled; reuses the forward activations.
void backprop_into(const DenseNetParams& net, const ForwardPass& fp,
                   std::vector<double> delta, double scale,
                   GradientBundle& acc) {
  const auto& dims = net.layer_dims;
  for (int l = static_cast<int>(net.weights.size()) - 1; l >= 0; --l) {
    const std::vector<double>& in = fp.activations[l];
    double* gw = acc.weights[l].data();
    for (int row = 0; row < dims[l + 1]; ++row) {
      const double d = delta[row] * scale;
      acc.biases[l][row] += d;
      double* gr = gw + static_cast<std::size_t>(row) * dims[l];
      for (int col = 0; col < dims[l]; ++col) gr[col] += d * in[col];
    }
    if (l == 0) break;
    std::vector<double> prev(dims[l], 0.0);
    const double* w = net.weights[l].data();
    for (int row = 0; row < dims[l + 1]; ++row) {
      const double d = delta[row];
      const double* wr = w + static_cast<std::size_t>(row) * dims[l];
      for (int col = 0; col < dims[l]; ++col) prev[col] += d * wr[col];
    }
    // tanh' = 1 - tanh^2, using the stored activation of layer l.
    const std::vector<double>& act = fp.activations[l];
    for (int col = 0; col < dims[l]; ++col)
      prev[col] *= 1.0 - act[col] * act[col];
    delta = std::move(prev);
  }
}

std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size())
    throw std::invalid_argument("mask size != action vocabulary size");
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) peak = std::max(peak, logits[i]);
  if (peak == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("policy: all actions masked");
  std::vector<double> probs(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    probs[i] = std::exp(logits[i] - peak);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

}  // namespace

std::vector<double> policy_forward(const DenseNetParams& net,
                                   std::span<const double> encoding,
                                   std::span<const std::uint8_t> mask) {
  const ForwardPass fp = run_forward(net, encoding);
  return masked_softmax(fp.activations.back(), mask);
}

double value_forward(const DenseNetParams& net,
                     std::span<const double> encoding) {
  if (net.layer_dims.back() != 1)
    throw std::invalid_argument("value net must have a single output");
  return run_forward(net, encoding).activations.back()[0];
}

void add_scaled_logprob_gradient(const DenseNetParams& net,
                                 std::span<const double> encoding,
                                 std::span<const std::uint8_t> mask, int action,
                                 double scale, GradientBundle& acc) {
  if (action < 0 || action >= static_cast<int>(mask.size()) || !mask[action])
    throw std::invalid_argument("logprob gradient: action is masked");
  const ForwardPass fp = run_forward(net, encoding);
  const std::vector<double> probs =
      masked_softmax(fp.activations.back(), mask);
  std::vector<double> delta(probs.size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (mask[i]) delta[i] = (static_cast<int>(i) == action ? 1.0 : 0.0) - probs[i];
  backprop_into(net, fp, std::move(delta), scale, acc);
}

void add_scaled_value_gradient(const DenseNetParams& net,
                               std::span<const double> encoding, double scale,
                               GradientBundle& acc) {
  if (net.layer_dims.back() != 1)
    throw std::invalid_argument("value net must have a single output");
  const ForwardPass fp = run_forward(net, encoding);
  backprop_into(net, fp, {1.0}, scale, acc);
}

GradientBundle logprob_gradient(const DenseNetParams& net,
                                std::span<const double> encoding,
                                std::span<const std::uint8_t> mask,
                                int action) {
  GradientBundle acc = DenseNetParams::zeros(net.layer_dims);
  add_scaled_logprob_gradient(net, encoding, mask, action, 1.0, acc);
  return acc;
}

GradientBundle value_gradient(const DenseNetParams& net,
                              std::span<const double> encoding) {
  GradientBundle acc = DenseNetParams::zeros(net.layer_dims);
  add_scaled_value_gradient(net, encoding, 1.0, acc);
  return acc;
}

DenseNetParams apply_update(const DenseNetParams& params,
                            const GradientBundle& grad, double step,
                            int direction) {
  if (!params.same_shape(grad))
    throw std::invalid_argument("apply_update: shape mismatch");
  if (direction != 1 && direction != -1)
    throw std::invalid_argument("apply_update: direction must be +1 or -1");
  DenseNetParams out = params;
  const double factor = step * direction;
  for (std::size_t l = 0; l < out.weights.size(); ++l) {
    for (std::size_t i = 0; i < out.weights[l].size(); ++i)
      out.weights[l][i] += factor * grad.weights[l][i];
    for (std::size_t i = 0; i < out.biases[l].size(); ++i)
      out.biases[l][i] += factor * grad.biases[l][i];
  }
  return out;
}

double max_abs_value(const GradientBundle& g) {
  double m = 0.0;
  for (const auto& w : g.weights)
    for (double v : w) m = std::max(m, std::abs(v));
  for (const auto& b : g.biases)
    for (double v : b) m = std::max(m, std::abs(v));
  return m;
}

double sum_abs_value(const GradientBundle& g) {
  double total = 0.0;
  for (const auto& w : g.weights)
    for (double v : w) total += std::abs(v);
  for (const auto& b : g.biases)
    for (double v : b) total += std::abs(v);
  return total;
}

long parameter_count(const DenseNetParams& p) {
  long n = 0;
  for (const auto& w : p.weights) n += static_cast<long>(w.size());
  for (const auto& b : p.biases) n += static_cast<long>(b.size());
  return n;
}

namespace {

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string save_net(const DenseNetParams& net) {
  std::ostringstream out;
  out << "NET v1 " << net.layer_dims.size();
  for (int d : net.layer_dims) out << ' ' << d;
  out << '\n';
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const int rows = net.layer_dims[l + 1];
    const int cols = net.layer_dims[l];
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (c) out << ' ';
        out << format_value(net.weights[l][static_cast<std::size_t>(r) * cols + c]);
      }
      out << '\n';
    }
    for (int r = 0; r < rows; ++r) {
      if (r) out << ' ';
      out << format_value(net.biases[l][r]);
    }
    out << '\n';
  }
  return out.str();
}

DenseNetParams load_net(std::istream& in) {
  std::string magic, version;
  std::size_t n_dims = 0;
  if (!(in >> magic >> version >> n_dims) || magic != "NET" || version != "v1")
    throw std::runtime_error("net load: expected 'NET v1 <n_dims> <dims...>'");
  if (n_dims < 2 || n_dims > 64)
    throw std::runtime_error("net load: implausible layer count");
  std::vector<int> dims(n_dims);
  for (std::size_t i = 0; i < n_dims; ++i)
    if (!(in >> dims[i]) || dims[i] <= 0)
      throw std::runtime_error("net load: bad layer dimension");
  DenseNetParams net = DenseNetParams::zeros(dims);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    for (double& v : net.weights[l])
      if (!(in >> v)) throw std::runtime_error("net load: truncated weights");
    for (double& v : net.biases[l])
      if (!(in >> v)) throw std::runtime_error("net load: truncated biases");
  }
  double extra;
  if (in >> extra) throw std::runtime_error("net load: trailing values");
  return net;
}

DenseNetParams load_net_text(const std::string& text) {
  std::istringstream in(text);
  return load_net(in);
}

void save_net_file(const DenseNetParams& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("net save: cannot open " + path);
  out << save_net(net);
}

DenseNetParams load_net_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("net load: cannot open " + path);
  return load_net(in);
}

}  // namespace csn
