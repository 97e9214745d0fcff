#include "csn/meta_learning.hpp"

#include <cmath>
#include <stdexcept>

namespace csn {

InnerAdaptResult inner_adapt(const Environment& env,
                             std::span<const FileNets> initials,
                             const MetaConfig& config, Rng& rng) {
  InnerAdaptResult result;
  result.pre_adapt = rollout(env, initials, rng);
  if (!config.inner_adaptation) {
    result.adapted.assign(initials.begin(), initials.end());
    result.post_adapt = result.pre_adapt;
    return result;
  }
  const std::vector<double> td =
      joint_td_errors(initials, result.pre_adapt, config.gamma);
  result.adapted.reserve(initials.size());
  for (std::size_t f = 0; f < initials.size(); ++f) {
    FileNets adapted;
    adapted.value = critic_step(initials[f].value, result.pre_adapt,
                                static_cast<int>(f), td,
                                config.inner_critic_step);
    adapted.policy = actor_step(initials[f].policy, result.pre_adapt,
                                static_cast<int>(f), td,
                                config.inner_actor_step);
    result.adapted.push_back(std::move(adapted));
  }
  result.post_adapt = rollout(env, result.adapted, rng);
  return result;
}

std::vector<FileNets> meta_step(std::span<const FileNets> initials,
                                std::span<const InnerAdaptResult> batch,
                                const MetaConfig& config,
                                double* mean_abs_update) {
  if (batch.empty()) throw std::invalid_argument("meta_step: empty batch");
  const int n = static_cast<int>(initials.size());

  std::vector<GradientBundle> policy_acc, value_acc;
  policy_acc.reserve(n);
  value_acc.reserve(n);
  for (int f = 0; f < n; ++f) {
    policy_acc.push_back(DenseNetParams::zeros(initials[f].policy.layer_dims));
    value_acc.push_back(DenseNetParams::zeros(initials[f].value.layer_dims));
  }

  for (const InnerAdaptResult& item : batch) {
    if (static_cast<int>(item.adapted.size()) != n)
      throw std::invalid_argument("meta_step: batch shape mismatch");
    const std::vector<double> td =
        joint_td_errors(item.adapted, item.post_adapt, config.gamma);
    for (int f = 0; f < n; ++f) {
      for (int t = 0; t < item.post_adapt.horizon; ++t) {
        if (td[t] == 0.0) continue;
        const StepSample& s = item.post_adapt.per_file[f][t];
        if (!s.state.at_terminal())
          add_scaled_value_gradient(item.adapted[f].value, s.encoding, td[t],
                                    value_acc[f]);
        if (s.update_actor)
          add_scaled_logprob_gradient(item.adapted[f].policy, s.encoding,
                                      s.mask, s.action, td[t], policy_acc[f]);
      }
    }
  }

  std::vector<FileNets> updated;
  updated.reserve(n);
  double abs_change = 0.0;
  long change_count = 0;
  for (int f = 0; f < n; ++f) {
    FileNets nets;
    nets.policy = apply_update(initials[f].policy, policy_acc[f],
                               config.outer_actor_step, +1);
    nets.value = apply_update(initials[f].value, value_acc[f],
                              2.0 * config.outer_critic_step, +1);
    abs_change += config.outer_actor_step * sum_abs_value(policy_acc[f]);
    abs_change += 2.0 * config.outer_critic_step * sum_abs_value(value_acc[f]);
    change_count +=
        parameter_count(nets.policy) + parameter_count(nets.value);
    updated.push_back(std::move(nets));
  }
  if (mean_abs_update)
    *mean_abs_update = change_count ? abs_change / change_count : 0.0;
  return updated;
}

MetaTrainResult meta_train(const EnvInputs& inputs,
                           const RequestDistribution& dist,
                           const MetaConfig& config, MetaInitials start) {
  if (config.samples_per_epoch < 1 || config.meta_epochs < 0)
    throw std::invalid_argument("meta_train: bad sample or epoch count");
  dist.check();

  MetaTrainResult result;
  result.initials = std::move(start);
  auto& nets = result.initials.nets;

  for (int epoch = 0; epoch < config.meta_epochs; ++epoch) {
    std::vector<InnerAdaptResult> batch;
    batch.reserve(config.samples_per_epoch);
    double hits = 0.0;
    for (int j = 0; j < config.samples_per_epoch; ++j) {
      const std::uint64_t sample_index =
          static_cast<std::uint64_t>(epoch) * config.samples_per_epoch + j;
      Rng req_rng(derive_seed(config.seed, "meta-requests", sample_index));
      const RequestMatrix requests = sample_request_matrix(
          dist, inputs.files, inputs.graph->horizon(), req_rng);
      const Environment env = inputs.make_env(requests);
      Rng roll_rng(derive_seed(config.seed, "meta-inner", sample_index));
      batch.push_back(inner_adapt(env, nets, config, roll_rng));
      hits += static_cast<double>(batch.back().post_adapt.total_hits);
    }
    double abs_update = 0.0;
    nets = meta_step(nets, batch, config, &abs_update);
    result.report.mean_post_hits.push_back(hits / config.samples_per_epoch);
    result.report.mean_abs_update.push_back(abs_update);
  }
  result.report.convergence_epoch = convergence_epoch(
      std::span<const double>(result.report.mean_post_hits),
      config.convergence_window, config.convergence_tol);
  result.initials.label = dist.label;
  result.initials.epochs_trained = config.meta_epochs;
  return result;
}

CandidateDistance initial_distance(const EnvInputs& inputs,
                                   const MetaInitials& candidate,
                                   std::span<const RequestMatrix> samples,
                                   const MetaConfig& config, Rng& rng) {
  if (samples.empty())
    throw std::invalid_argument("initial_distance: need at least one sample");
  const int n = static_cast<int>(candidate.nets.size());
  CandidateDistance dist;
  dist.d_policy.assign(n, 0.0);
  dist.d_value.assign(n, 0.0);

  for (const RequestMatrix& requests : samples) {
    const Environment env = inputs.make_env(requests);
    Rng sample_rng(derive_seed(rng.next_u64(), "distance-sample"));
    const InnerAdaptResult item =
        inner_adapt(env, candidate.nets, config, sample_rng);
    const std::vector<double> td =
        joint_td_errors(item.adapted, item.post_adapt, config.gamma);
    for (int f = 0; f < n; ++f) {
      for (int t = 0; t < item.post_adapt.horizon; ++t) {
        const StepSample& s = item.post_adapt.per_file[f][t];
        double prob = 0.0;
        if (!s.state.at_terminal()) {
          const auto probs =
              policy_forward(item.adapted[f].policy, s.encoding, s.mask);
          prob = probs[s.action];
        }
        dist.d_policy[f] += td[t] * prob;
        const double value = state_value(item.adapted[f].value, s.state,
                                         s.encoding);
        dist.d_value[f] += (s.reward - value) * (s.reward - value);
      }
    }
  }
  for (int f = 0; f < n; ++f) {
    dist.policy_total += dist.d_policy[f];
    dist.value_total += dist.d_value[f];
  }
  dist.total = dist.policy_total + dist.value_total;
  return dist;
}

int select_candidate(std::span<const double> totals) {
  if (totals.empty())
    throw std::invalid_argument("select_candidate: no candidates");
  int best = 0;
  for (int i = 1; i < static_cast<int>(totals.size()); ++i)
    if (totals[i] < totals[best]) best = i;
  return best;
}

PretrainResult pretrain_sequence(const EnvInputs& inputs,
                                 std::span<const RequestDistribution> dists,
                                 const MetaConfig& config,
                                 std::span<const int> hidden_dims) {
  if (dists.empty())
    throw std::invalid_argument("pretrain_sequence: need at least one distribution");
  const EncodingDims enc_dims{inputs.graph->gateways(),
                              inputs.graph->satellites(),
                              inputs.graph->horizon()};

  PretrainResult result;
  for (int k = 0; k < static_cast<int>(dists.size()); ++k) {
    MetaConfig run_config = config;
    run_config.seed = derive_seed(config.seed, "pretrain-run", k);

    MetaInitials start;
    start.label = dists[k].label;
    if (k == 0) {
      Rng init_rng(derive_seed(config.seed, "pretrain-init", 0));
      start.nets =
          make_file_nets(inputs.files, enc_dims, hidden_dims, init_rng);
      start.warm_start_index = -1;
      result.distance_tables.emplace_back();
    } else {
      // Shared sample draws: every candidate is scored on the same
      // realizations of the new distribution.
      std::vector<RequestMatrix> samples;
      samples.reserve(config.samples_per_epoch);
      for (int j = 0; j < config.samples_per_epoch; ++j) {
        Rng req_rng(derive_seed(config.seed, "pretrain-requests",
                                static_cast<std::uint64_t>(k) * 10007 + j));
        samples.push_back(sample_request_matrix(
            dists[k], inputs.files, inputs.graph->horizon(), req_rng));
      }
      DistanceTable table;
      std::vector<double> totals;
      for (int cand = 0; cand < k; ++cand) {
        Rng cand_rng(derive_seed(config.seed, "pretrain-distance", k));
        table.rows.push_back(initial_distance(inputs, result.initials[cand],
                                              samples, config, cand_rng));
        totals.push_back(table.rows.back().total);
      }
      table.selected = select_candidate(totals);
      start.nets = result.initials[table.selected].nets;
      start.warm_start_index = table.selected;
      result.distance_tables.push_back(std::move(table));
    }

    const int warm_from = start.warm_start_index;
    MetaTrainResult trained =
        meta_train(inputs, dists[k], run_config, std::move(start));
    trained.initials.warm_start_index = warm_from;
    result.initials.push_back(std::move(trained.initials));
    result.reports.push_back(std::move(trained.report));
  }
  return result;
}

}  // namespace csn
