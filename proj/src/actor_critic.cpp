#include "csn/actor_critic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace csn {

std::vector<FileNets> make_file_nets(int files, const EncodingDims& dims,
                                     std::span<const int> hidden, Rng& rng) {
  std::vector<int> policy_dims{dims.input_size()};
  policy_dims.insert(policy_dims.end(), hidden.begin(), hidden.end());
  policy_dims.push_back(dims.action_vocab());
  std::vector<int> value_dims{dims.input_size()};
  value_dims.insert(value_dims.end(), hidden.begin(), hidden.end());
  value_dims.push_back(1);

  std::vector<FileNets> nets;
  nets.reserve(files);
  for (int f = 0; f < files; ++f) {
    FileNets n;
    n.policy = DenseNetParams::random_init(policy_dims, rng);
    n.value = DenseNetParams::random_init(value_dims, rng);
    nets.push_back(std::move(n));
  }
  return nets;
}

namespace {

EncodingDims dims_of(const Environment& env) {
  return EncodingDims{env.graph().gateways(), env.graph().satellites(),
                      env.horizon()};
}

int pick_action(const std::vector<double>& probs, ActionSelect select,
                Rng& rng) {
  if (select == ActionSelect::kSample) return rng.categorical(probs);
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace

EpisodeTrajectory rollout(const Environment& env,
                          std::span<const FileNets> nets, Rng& rng,
                          ActionSelect select) {
  const int n = env.files();
  if (static_cast<int>(nets.size()) != n)
    throw std::invalid_argument("rollout: one net pair per file required");
  const EncodingDims dims = dims_of(env);

  EpisodeTrajectory traj;
  traj.horizon = env.horizon();
  traj.dims = dims;
  traj.per_file.assign(n, {});
  for (auto& seq : traj.per_file) seq.reserve(traj.horizon);
  traj.joint_rewards.assign(traj.horizon, 0.0);

  JointState state = env.reset();
  std::vector<ActionToken> proposed(n);
  for (int t = 0; t < traj.horizon; ++t) {
    for (int f = 0; f < n; ++f) {
      StepSample sample;
      sample.state = state.locals[f];
      sample.encoding = encode_state(state.locals[f], t, dims);
      const auto legal = env.legal_actions(state, f);
      sample.mask = action_mask(legal, dims);
      if (legal.empty()) {  // terminal: placeholder hold, no learning signal
        proposed[f] = ActionToken::hold();
        sample.update_actor = false;
      } else if (legal.size() == 1) {  // forced: bypass sampling
        proposed[f] = legal.front();
        sample.update_actor = false;
      } else {
        const auto probs =
            policy_forward(nets[f].policy, sample.encoding, sample.mask);
        proposed[f] = action_from_index(pick_action(probs, select, rng), dims);
        sample.update_actor = true;
      }
      traj.per_file[f].push_back(std::move(sample));
    }
    const StepOutcome outcome = env.advance(state, proposed, rng);
    for (int f = 0; f < n; ++f) {
      StepSample& sample = traj.per_file[f][t];
      sample.action = action_index(outcome.admitted[f], dims);
      sample.reward = outcome.rewards[f];
      traj.joint_rewards[t] += outcome.rewards[f];
    }
    traj.total_hits += outcome.hits;
    state = outcome.next;
  }
  traj.final_states = state.locals;
  traj.final_encodings.reserve(n);
  for (int f = 0; f < n; ++f)
    traj.final_encodings.push_back(
        encode_state(state.locals[f], traj.horizon, dims));
  return traj;
}

double state_value(const DenseNetParams& value_net, const LocalState& state,
                   std::span<const double> encoding) {
  if (state.at_terminal()) return 0.0;
  return value_forward(value_net, encoding);
}

std::vector<double> joint_td_errors(std::span<const FileNets> nets,
                                    const EpisodeTrajectory& traj,
                                    double gamma) {
  const int n = static_cast<int>(traj.per_file.size());
  const int horizon = traj.horizon;
  // Summed local values at t = 0..T (T uses the post-episode states).
  std::vector<double> summed(horizon + 1, 0.0);
  for (int f = 0; f < n; ++f) {
    for (int t = 0; t < horizon; ++t) {
      const StepSample& s = traj.per_file[f][t];
      summed[t] += state_value(nets[f].value, s.state, s.encoding);
    }
    summed[horizon] += state_value(nets[f].value, traj.final_states[f],
                                   traj.final_encodings[f]);
  }
  std::vector<double> td(horizon);
  for (int t = 0; t < horizon; ++t)
    td[t] = traj.joint_rewards[t] + gamma * summed[t + 1] - summed[t];
  return td;
}

std::vector<double> local_td_errors(const FileNets& net,
                                    const EpisodeTrajectory& traj, int file,
                                    double gamma) {
  const int horizon = traj.horizon;
  std::vector<double> values(horizon + 1);
  for (int t = 0; t < horizon; ++t) {
    const StepSample& s = traj.per_file[file][t];
    values[t] = state_value(net.value, s.state, s.encoding);
  }
  values[horizon] = state_value(net.value, traj.final_states[file],
                                traj.final_encodings[file]);
  std::vector<double> td(horizon);
  for (int t = 0; t < horizon; ++t)
    td[t] = traj.per_file[file][t].reward + gamma * values[t + 1] - values[t];
  return td;
}

DenseNetParams critic_step(const DenseNetParams& value_net,
                           const EpisodeTrajectory& traj, int file,
                           std::span<const double> td, double step) {
  GradientBundle acc = DenseNetParams::zeros(value_net.layer_dims);
  for (int t = 0; t < traj.horizon; ++t) {
    const StepSample& s = traj.per_file[file][t];
    if (s.state.at_terminal()) continue;  // pinned zero value, zero gradient
    if (td[t] == 0.0) continue;
    add_scaled_value_gradient(value_net, s.encoding, td[t], acc);
  }
  return apply_update(value_net, acc, 2.0 * step, +1);
}

DenseNetParams actor_step(const DenseNetParams& policy_net,
                          const EpisodeTrajectory& traj, int file,
                          std::span<const double> td, double step) {
  GradientBundle acc = DenseNetParams::zeros(policy_net.layer_dims);
  for (int t = 0; t < traj.horizon; ++t) {
    const StepSample& s = traj.per_file[file][t];
    if (!s.update_actor) continue;
    if (td[t] == 0.0) continue;
    add_scaled_logprob_gradient(policy_net, s.encoding, s.mask, s.action,
                                td[t], acc);
  }
  return apply_update(policy_net, acc, step, +1);
}

namespace {

enum class Advantage { kJoint, kLocal };

TrainResult train_loop(const Environment& env, const TrainConfig& config,
                       std::span<const FileNets> initials, Advantage mode) {
  const int n = env.files();
  if (static_cast<int>(initials.size()) != n)
    throw std::invalid_argument("train: one net pair per file required");

  TrainResult result;
  result.nets.assign(initials.begin(), initials.end());
  result.report.epoch_hits.reserve(config.epochs);
  result.report.mean_abs_td.reserve(config.epochs);

  Rng rng(derive_seed(config.seed, "rollout"));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const EpisodeTrajectory traj = rollout(env, result.nets, rng);
    std::vector<double> shared_td;
    if (mode == Advantage::kJoint)
      shared_td = joint_td_errors(result.nets, traj, config.gamma);

    double abs_td = 0.0;
    std::vector<FileNets> updated = result.nets;
    for (int f = 0; f < n; ++f) {
      std::vector<double> local;
      if (mode == Advantage::kLocal)
        local = local_td_errors(result.nets[f], traj, f, config.gamma);
      const std::vector<double>& td =
          mode == Advantage::kJoint ? shared_td : local;
      updated[f].value =
          critic_step(result.nets[f].value, traj, f, td, config.critic_step);
      updated[f].policy =
          actor_step(result.nets[f].policy, traj, f, td, config.actor_step);
      for (double a : td) abs_td += std::abs(a);
    }
    result.nets = std::move(updated);
    result.report.epoch_hits.push_back(traj.total_hits);
    result.report.mean_abs_td.push_back(
        abs_td / std::max(1.0, static_cast<double>(traj.horizon) * n));
    result.report.wall_ms.push_back(
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - started)
            .count());
  }
  result.report.convergence_epoch =
      convergence_epoch(std::span<const long>(result.report.epoch_hits),
                        config.convergence_window, config.convergence_tol);
  return result;
}

}  // namespace

TrainResult train_vdac(const Environment& env, const TrainConfig& config,
                       std::span<const FileNets> initials) {
  return train_loop(env, config, initials, Advantage::kJoint);
}

TrainResult train_iac(const Environment& env, const TrainConfig& config,
                      std::span<const FileNets> initials) {
  return train_loop(env, config, initials, Advantage::kLocal);
}

EvalStats evaluate(const Environment& env, std::span<const FileNets> nets,
                   int episodes, Rng& rng, ActionSelect select) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  std::vector<double> hits;
  hits.reserve(episodes);
  for (int e = 0; e < episodes; ++e)
    hits.push_back(static_cast<double>(rollout(env, nets, rng, select).total_hits));
  EvalStats stats;
  for (double h : hits) stats.mean += h;
  stats.mean /= episodes;
  if (episodes > 1) {
    double ss = 0.0;
    for (double h : hits) ss += (h - stats.mean) * (h - stats.mean);
    stats.stddev = std::sqrt(ss / (episodes - 1));
  }
  return stats;
}

namespace {

template <typename T>
int convergence_epoch_impl(std::span<const T> hits, int window, double tol) {
  const int n = static_cast<int>(hits.size());
  if (window < 1) throw std::invalid_argument("convergence: window must be >= 1");
  if (n < 2 * window) return n;

  std::vector<double> trailing(n, 0.0);
  double acc = 0.0;
  for (int e = 0; e < n; ++e) {
    acc += static_cast<double>(hits[e]);
    if (e >= window) acc -= static_cast<double>(hits[e - window]);
    if (e >= window - 1) trailing[e] = acc / window;
  }
  int last_improving = -1;
  for (int e = 2 * window - 1; e < n; ++e) {
    const double before = trailing[e - window];
    if (trailing[e] - before > tol * std::max(1.0, before)) last_improving = e;
  }
  if (last_improving < 0) return 2 * window;  // flat from the start
  return std::min(n, last_improving + 2);     // first epoch past the last gain
}

}  // namespace

int convergence_epoch(std::span<const long> hits, int window, double tol) {
  return convergence_epoch_impl(hits, window, tol);
}

int convergence_epoch(std::span<const double> hits, int window, double tol) {
  return convergence_epoch_impl(hits, window, tol);
}

}  // namespace csn
