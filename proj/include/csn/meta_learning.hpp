#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csn/actor_critic.hpp"

namespace csn {

struct MetaConfig {
  int samples_per_epoch = 8;  // realizations drawn per meta epoch
  int meta_epochs = 300;
  double gamma = 0.99;
  double inner_actor_step = 1e-3;
  double inner_critic_step = 1e-3;
  double outer_actor_step = 1e-3;
  double outer_critic_step = 1e-3;
  bool inner_adaptation = true;  // off: reduces to joint multi-sample training
  std::uint64_t seed = 0;
  int convergence_window = 50;
  double convergence_tol = 0.01;

  friend bool operator==(const MetaConfig&, const MetaConfig&) = default;
};

struct MetaInitials {
  std::vector<FileNets> nets;
  std::string label;
  int epochs_trained = 0;
  int warm_start_index = -1;  // candidate the training started from, -1 = random
};

struct InnerAdaptResult {
  std::vector<FileNets> adapted;
  EpisodeTrajectory pre_adapt;   // rolled with the initials
  EpisodeTrajectory post_adapt;  // rolled with the adapted parameters
};

// Shared experiment fixtures; the request realization varies per sample.
struct EnvInputs {
  const ContactGraph* graph = nullptr;
  int files = 0;
  int capacity = 1;
  EvictionRule rule = EvictionRule::kCapacityBound;

  Environment make_env(const RequestMatrix& requests) const {
    return Environment(*graph, requests, capacity, rule);
  }
};

// Rolls one episode with the initials, applies exactly one critic and one
// actor step per file (joint TD errors at the initials), then rolls a second
// episode with the adapted parameters.
InnerAdaptResult inner_adapt(const Environment& env,
                             std::span<const FileNets> initials,
                             const MetaConfig& config, Rng& rng);

// Outer update over a batch of inner adaptations: gradients of the adapted
// networks on their post-adaptation trajectories, applied to the initials
// (first-order approximation). TD errors use the adapted value parameters.
// Returns the updated initials; mean_abs_update gets the mean absolute
// parameter change when non-null.
std::vector<FileNets> meta_step(std::span<const FileNets> initials,
                                std::span<const InnerAdaptResult> batch,
                                const MetaConfig& config,
                                double* mean_abs_update = nullptr);

struct MetaReport {
  std::vector<double> mean_post_hits;   // per meta epoch
  std::vector<double> mean_abs_update;  // per meta epoch
  int convergence_epoch = 0;
};

struct MetaTrainResult {
  MetaInitials initials;
  MetaReport report;
};

MetaTrainResult meta_train(const EnvInputs& inputs,
                           const RequestDistribution& dist,
                           const MetaConfig& config, MetaInitials start);

// Distance of one candidate initial to the optimum under a new distribution,
// estimated from per-sample one-step adaptations:
//   policy term  sum_j sum_t A * pi_adapted(admitted action)
//   value term   sum_j sum_t (R^f - V_adapted)^2   (nonnegative)
struct CandidateDistance {
  std::vector<double> d_policy;  // per file
  std::vector<double> d_value;   // per file
  double policy_total = 0.0;
  double value_total = 0.0;
  double total = 0.0;
};

CandidateDistance initial_distance(const EnvInputs& inputs,
                                   const MetaInitials& candidate,
                                   std::span<const RequestMatrix> samples,
                                   const MetaConfig& config, Rng& rng);

// Argmin with lowest-index tie break.
int select_candidate(std::span<const double> totals);

struct DistanceTable {
  std::vector<CandidateDistance> rows;  // one per prior candidate
  int selected = -1;
};

struct PretrainResult {
  std::vector<MetaInitials> initials;        // one per distribution
  std::vector<MetaReport> reports;           // one per distribution
  std::vector<DistanceTable> distance_tables;  // for k >= 1 (empty for k = 0)
};

// Sequential meta training across distributions; each run after the first
// starts from the prior initial with the smallest estimated distance.
PretrainResult pretrain_sequence(const EnvInputs& inputs,
                                 std::span<const RequestDistribution> dists,
                                 const MetaConfig& config,
                                 std::span<const int> hidden_dims);

}  // namespace csn
