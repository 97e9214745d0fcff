#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "csn/mdp_env.hpp"
#include "csn/neural_net.hpp"

namespace csn {

// One policy net and one value net per file.
struct FileNets {
  DenseNetParams policy;
  DenseNetParams value;

  friend bool operator==(const FileNets&, const FileNets&) = default;
};

std::vector<FileNets> make_file_nets(int files, const EncodingDims& dims,
                                     std::span<const int> hidden, Rng& rng);

struct TrainConfig {
  double gamma = 0.99;
  double actor_step = 1e-3;
  double critic_step = 1e-3;
  int epochs = 300;
  std::uint64_t seed = 0;
  // Convergence report: trailing-window mean hits, relative tolerance.
  int convergence_window = 50;
  double convergence_tol = 0.01;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainReport {
  std::vector<long> epoch_hits;
  std::vector<double> mean_abs_td;
  std::vector<double> wall_ms;  // per-epoch wall time
  int convergence_epoch = 0;  // epochs until the trailing mean stops improving
};

enum class ActionSelect : std::uint8_t { kSample, kGreedy };

// One (file, slot) sample. `update_actor` is false for forced steps
// (singleton menus, terminal files): their log-probability is constant,
// so they contribute no policy gradient.
struct StepSample {
  LocalState state;
  std::vector<double> encoding;
  std::vector<std::uint8_t> mask;
  int action = 0;  // admitted action, vocabulary index
  bool update_actor = false;
  double reward = 0.0;
};

struct EpisodeTrajectory {
  int horizon = 0;
  EncodingDims dims;
  std::vector<std::vector<StepSample>> per_file;  // [f][t]
  std::vector<LocalState> final_states;           // post-episode locals
  std::vector<std::vector<double>> final_encodings;
  std::vector<double> joint_rewards;  // R(t) = sum_f R^f(t)
  long total_hits = 0;
};

// Samples one episode: per slot, each live file draws from its masked policy
// (forced states bypass sampling), conflicts are resolved, the environment
// steps. Records the admitted actions, not the proposals.
EpisodeTrajectory rollout(const Environment& env,
                          std::span<const FileNets> nets, Rng& rng,
                          ActionSelect select = ActionSelect::kSample);

// Local value with the terminal state pinned to zero.
double state_value(const DenseNetParams& value_net, const LocalState& state,
                   std::span<const double> encoding);

// Joint TD errors A(t) = R(t) + gamma * sum_f V_f(t+1) - sum_f V_f(t),
// bootstrapping the post-episode state (terminal files contribute zero).
std::vector<double> joint_td_errors(std::span<const FileNets> nets,
                                    const EpisodeTrajectory& traj,
                                    double gamma);

// Per-file TD errors from the file's own rewards and value net only.
std::vector<double> local_td_errors(const FileNets& net,
                                    const EpisodeTrajectory& traj, int file,
                                    double gamma);

// value <- value + 2 * step * sum_t td[t] * dV(sigma_f(t))/dpsi, gradients at
// the pre-update parameters; the bootstrap target carries no gradient.
DenseNetParams critic_step(const DenseNetParams& value_net,
                           const EpisodeTrajectory& traj, int file,
                           std::span<const double> td, double step);

// policy <- policy + step * sum_t td[t] * dlog pi(a_f(t)|sigma_f(t))/dtheta.
DenseNetParams actor_step(const DenseNetParams& policy_net,
                          const EpisodeTrajectory& traj, int file,
                          std::span<const double> td, double step);

struct TrainResult {
  std::vector<FileNets> nets;
  TrainReport report;
};

// One epoch = rollout, shared TD errors, then per-file critic and actor
// updates from the frozen pre-epoch parameters.
TrainResult train_vdac(const Environment& env, const TrainConfig& config,
                       std::span<const FileNets> initials);

// Same loop with each file's local TD errors in place of the joint ones.
TrainResult train_iac(const Environment& env, const TrainConfig& config,
                      std::span<const FileNets> initials);

struct EvalStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

EvalStats evaluate(const Environment& env, std::span<const FileNets> nets,
                   int episodes, Rng& rng,
                   ActionSelect select = ActionSelect::kSample);

// First epoch count from which the trailing-window mean never again improves
// by more than tol (relative, floored at one hit). Returns at least
// 2 * window when the curve is long enough, else the curve length.
int convergence_epoch(std::span<const long> hits, int window, double tol);
int convergence_epoch(std::span<const double> hits, int window, double tol);

}  // namespace csn
