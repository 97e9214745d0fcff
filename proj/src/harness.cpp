#include "csn/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "csn/csv.hpp"

namespace csn {

namespace fs = std::filesystem;

int worker_count() {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (const char* cap = std::getenv("ORBIT_PRESTORE_WORKERS")) {
    const int limit = std::atoi(cap);
    if (limit >= 1 && limit < workers) workers = limit;
  }
  return workers;
}

namespace {

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
}

// Ordered fan-out: fn(i) results land at index i regardless of scheduling.
void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

void write_manifest(const std::string& out_dir, RunManifest manifest) {
  manifest.artifacts.push_back("manifest.json");
  nlohmann::json doc;
  doc["command"] = manifest.command;
  doc["config_hash"] = manifest.config_hash;
  doc["tool_version"] = manifest.tool_version;
  nlohmann::json seeds = nlohmann::json::object();
  for (const auto& [name, value] : manifest.seeds) seeds[name] = value;
  doc["seeds"] = seeds;
  doc["artifacts"] = manifest.artifacts;
  write_text_file((fs::path(out_dir) / "manifest.json").string(),
                  doc.dump(2) + "\n");
}

void save_checkpoint(const std::string& dir, std::span<const FileNets> nets) {
  fs::create_directories(dir);
  char name[64];
  for (std::size_t f = 0; f < nets.size(); ++f) {
    std::snprintf(name, sizeof(name), "policy_f%03zu.net", f);
    save_net_file(nets[f].policy, (fs::path(dir) / name).string());
    std::snprintf(name, sizeof(name), "value_f%03zu.net", f);
    save_net_file(nets[f].value, (fs::path(dir) / name).string());
  }
}

std::vector<FileNets> load_checkpoint(const std::string& dir) {
  std::vector<FileNets> nets;
  char name[64];
  for (std::size_t f = 0;; ++f) {
    std::snprintf(name, sizeof(name), "policy_f%03zu.net", f);
    const fs::path policy = fs::path(dir) / name;
    std::snprintf(name, sizeof(name), "value_f%03zu.net", f);
    const fs::path value = fs::path(dir) / name;
    if (!fs::exists(policy)) break;
    FileNets n;
    n.policy = load_net_file(policy.string());
    n.value = load_net_file(value.string());
    nets.push_back(std::move(n));
  }
  if (nets.empty())
    throw std::runtime_error("checkpoint load: no parameter files in " + dir);
  return nets;
}

std::string train_metrics_csv(const TrainReport& report, bool timings) {
  std::string out = "epoch,hits,mean_abs_td,wall_ms\n";
  for (std::size_t e = 0; e < report.epoch_hits.size(); ++e) {
    const double ms = timings && e < report.wall_ms.size() ? report.wall_ms[e]
                                                           : 0.0;
    out += join_csv({std::to_string(e + 1),
                     std::to_string(report.epoch_hits[e]),
                     format_double(report.mean_abs_td[e]), format_double(ms)});
  }
  return out;
}

std::string meta_metrics_csv(const MetaReport& report) {
  std::string out = "meta_epoch,mean_post_adapt_hits,mean_abs_outer_update\n";
  for (std::size_t e = 0; e < report.mean_post_hits.size(); ++e) {
    out += join_csv({std::to_string(e + 1),
                     format_double(report.mean_post_hits[e]),
                     format_double(report.mean_abs_update[e])});
  }
  return out;
}

std::string distance_report_csv(const DistanceTable& table) {
  std::string out = "candidate,d_theta_total,d_psi_total,D\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const CandidateDistance& row = table.rows[i];
    out += join_csv({std::to_string(i + 1), format_double(row.policy_total),
                     format_double(row.value_total), format_double(row.total)});
  }
  return out;
}

namespace {

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Central difference of fn over every component of a copy of `net`.
double fd_max_rel_error(const DenseNetParams& net, const GradientBundle& grad,
                        const std::function<double(const DenseNetParams&)>& fn,
                        double eps) {
  double worst = 0.0;
  DenseNetParams probe = net;
  auto check = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + eps;
    const double hi = fn(probe);
    slot = saved - eps;
    const double lo = fn(probe);
    slot = saved;
    worst = std::max(worst, rel_error(analytic, (hi - lo) / (2.0 * eps)));
  };
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (std::size_t i = 0; i < probe.weights[l].size(); ++i)
      check(probe.weights[l][i], grad.weights[l][i]);
    for (std::size_t i = 0; i < probe.biases[l].size(); ++i)
      check(probe.biases[l][i], grad.biases[l][i]);
  }
  return worst;
}

}  // namespace

double gradient_check(const EncodingDims& dims, std::span<const int> hidden,
                      int cases, std::uint64_t seed) {
  constexpr double kEps = 1e-5;
  Rng rng(derive_seed(seed, "grad-check"));
  std::vector<int> policy_dims{dims.input_size()};
  policy_dims.insert(policy_dims.end(), hidden.begin(), hidden.end());
  policy_dims.push_back(dims.action_vocab());
  std::vector<int> value_dims{dims.input_size()};
  value_dims.insert(value_dims.end(), hidden.begin(), hidden.end());
  value_dims.push_back(1);

  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    // Random live state: initial, a gateway, or a satellite with a flag.
    LocalState state;
    const int which = static_cast<int>(rng.uniform_int(3));
    if (which == 0) {
      state = {NodeRef::initial(), ReqFlag::kUndefined};
    } else if (which == 1) {
      state = {NodeRef::gateway(static_cast<int>(rng.uniform_int(dims.gateways))),
               ReqFlag::kUndefined};
    } else {
      state = {
          NodeRef::satellite(static_cast<int>(rng.uniform_int(dims.satellites))),
          rng.uniform_int(2) ? ReqFlag::kYes : ReqFlag::kNo};
    }
    const int t = static_cast<int>(rng.uniform_int(dims.horizon + 1));
    const std::vector<double> enc = encode_state(state, t, dims);

    std::vector<std::uint8_t> mask(dims.action_vocab(), 0);
    int unmasked = 0;
    for (auto& m : mask)
      if (rng.uniform_int(2)) {
        m = 1;
        ++unmasked;
      }
    if (unmasked == 0) {
      mask[rng.uniform_int(mask.size())] = 1;
      unmasked = 1;
    }
    int action = static_cast<int>(rng.uniform_int(unmasked));
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) continue;
      if (action == 0) {
        action = static_cast<int>(i);
        break;
      }
      --action;
    }

    const DenseNetParams policy = DenseNetParams::random_init(policy_dims, rng);
    const GradientBundle pol_grad = logprob_gradient(policy, enc, mask, action);
    worst = std::max(
        worst, fd_max_rel_error(policy, pol_grad,
                                [&](const DenseNetParams& p) {
                                  return std::log(
                                      policy_forward(p, enc, mask)[action]);
                                },
                                kEps));

    const DenseNetParams value = DenseNetParams::random_init(value_dims, rng);
    const GradientBundle val_grad = value_gradient(value, enc);
    worst = std::max(worst,
                     fd_max_rel_error(value, val_grad,
                                      [&](const DenseNetParams& p) {
                                        return value_forward(p, enc);
                                      },
                                      kEps));
  }
  return worst;
}

StudyKind parse_study(const std::string& name) {
  if (name == "vd-vs-iac") return StudyKind::kVdVsIac;
  if (name == "meta-vs-random") return StudyKind::kMetaVsRandom;
  if (name == "pretrain-vs-cold") return StudyKind::kPretrainVsCold;
  throw std::runtime_error("unknown study '" + name + "'");
}

std::string to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::kVdVsIac: return "vd-vs-iac";
    case StudyKind::kMetaVsRandom: return "meta-vs-random";
    case StudyKind::kPretrainVsCold: return "pretrain-vs-cold";
  }
  return "?";
}

PairedSummaryRow summarize(const PairedSamples& samples) {
  PairedSummaryRow row;
  row.metric = samples.metric;
  row.arm_a = samples.arm_a;
  row.arm_b = samples.arm_b;
  row.n = static_cast<int>(samples.a.size());
  if (row.n == 0) return row;

  auto mean = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    return m / v.size();
  };
  auto stddev = [](const std::vector<double>& v, double m) {
    if (v.size() < 2) return 0.0;
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / (v.size() - 1));
  };
  row.mean_a = mean(samples.a);
  row.mean_b = mean(samples.b);
  row.std_a = stddev(samples.a, row.mean_a);
  row.std_b = stddev(samples.b, row.mean_b);
  row.rel_diff = row.mean_b != 0.0 ? (row.mean_a - row.mean_b) / row.mean_b : 0.0;

  std::vector<double> diff(samples.a.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = samples.a[i] - samples.b[i];
  const double mean_d = mean(diff);
  const double sd_d = stddev(diff, mean_d);
  if (row.n >= 2) {
    if (sd_d < 1e-12)
      row.t_stat = mean_d == 0.0 ? 0.0 : (mean_d > 0 ? 1e9 : -1e9);
    else
      row.t_stat = mean_d / (sd_d / std::sqrt(static_cast<double>(row.n)));
  }
  return row;
}

std::string raw_csv(std::span<const PairedSamples> metrics) {
  std::string out = "seed,metric,arm,value\n";
  for (const PairedSamples& m : metrics) {
    for (std::size_t i = 0; i < m.seeds.size(); ++i) {
      out += join_csv({std::to_string(m.seeds[i]), m.metric, m.arm_a,
                       format_double(m.a[i])});
      out += join_csv({std::to_string(m.seeds[i]), m.metric, m.arm_b,
                       format_double(m.b[i])});
    }
  }
  return out;
}

std::string summary_csv(std::span<const PairedSamples> metrics) {
  std::string out =
      "metric,arm_a,arm_b,n,mean_a,std_a,mean_b,std_b,rel_diff,t_stat\n";
  for (const PairedSamples& m : metrics) {
    const PairedSummaryRow row = summarize(m);
    out += join_csv({row.metric, row.arm_a, row.arm_b, std::to_string(row.n),
                     format_double(row.mean_a), format_double(row.std_a),
                     format_double(row.mean_b), format_double(row.std_b),
                     format_double(row.rel_diff), format_double(row.t_stat)});
  }
  return out;
}

std::vector<PairedSamples> parse_raw_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "seed,metric,arm,value")
    throw std::runtime_error("raw csv: bad header");
  std::vector<PairedSamples> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string seed, metric, arm, value;
    if (!std::getline(ls, seed, ',') || !std::getline(ls, metric, ',') ||
        !std::getline(ls, arm, ',') || !std::getline(ls, value))
      throw std::runtime_error("raw csv: bad row '" + line + "'");
    PairedSamples* bucket = nullptr;
    for (auto& m : out)
      if (m.metric == metric) bucket = &m;
    if (!bucket) {
      out.push_back({metric, arm, "", {}, {}, {}});
      bucket = &out.back();
    }
    if (bucket->arm_b.empty() && arm != bucket->arm_a) bucket->arm_b = arm;
    const double v = std::stod(value);
    if (arm == bucket->arm_a) {
      bucket->seeds.push_back(std::stoull(seed));
      bucket->a.push_back(v);
    } else if (arm == bucket->arm_b) {
      bucket->b.push_back(v);
    } else {
      throw std::runtime_error("raw csv: more than two arms for " + metric);
    }
  }
  return out;
}

double final_hits(const TrainReport& report, int window) {
  const int n = static_cast<int>(report.epoch_hits.size());
  if (n == 0) return 0.0;
  const int take = std::min(window, n);
  double total = 0.0;
  for (int e = n - take; e < n; ++e) total += report.epoch_hits[e];
  return total / take;
}

namespace {

ContactGraph study_graph(const ExperimentConfig& config,
                         std::uint64_t master_seed) {
  ConstellationSpec spec = config.constellation;
  spec.seed = derive_seed(master_seed, "graph");
  return generate_constellation(spec);
}

StudyResult study_vd_vs_iac(const ExperimentConfig& config, int seeds,
                            std::uint64_t master_seed,
                            const ContactGraph& graph) {
  const RequestDistribution& dist = config.distributions.at(0);
  const EncodingDims dims = config.encoding_dims();

  PairedSamples hits{"final_hits", "vdac", "iac", {}, {}, {}};
  hits.seeds.resize(seeds);
  hits.a.resize(seeds);
  hits.b.resize(seeds);

  parallel_for(seeds, [&](int i) {
    const std::uint64_t run_seed = derive_seed(master_seed, "compare-run", i);
    Rng req_rng(derive_seed(run_seed, "requests"));
    const RequestMatrix requests =
        sample_request_matrix(dist, config.files, graph.horizon(), req_rng);
    const Environment env(graph, requests, config.capacity, config.eviction);
    Rng init_rng(derive_seed(run_seed, "init"));
    const std::vector<FileNets> initials =
        make_file_nets(config.files, dims, config.hidden_dims, init_rng);
    TrainConfig tc = config.train;
    tc.seed = run_seed;
    const TrainResult vd = train_vdac(env, tc, initials);
    const TrainResult ia = train_iac(env, tc, initials);
    hits.seeds[i] = run_seed;
    hits.a[i] = final_hits(vd.report, tc.convergence_window);
    hits.b[i] = final_hits(ia.report, tc.convergence_window);
  });
  return StudyResult{{hits}};
}

StudyResult study_meta_vs_random(const ExperimentConfig& config, int seeds,
                                 std::uint64_t master_seed,
                                 const ContactGraph& graph) {
  const RequestDistribution& dist = config.distributions.at(0);
  const EncodingDims dims = config.encoding_dims();
  const EnvInputs inputs{&graph, config.files, config.capacity,
                         config.eviction};

  MetaConfig mc = config.meta;
  mc.seed = derive_seed(master_seed, "meta");
  Rng meta_init_rng(derive_seed(master_seed, "meta-init"));
  MetaInitials start;
  start.nets = make_file_nets(config.files, dims, config.hidden_dims,
                              meta_init_rng);
  const MetaTrainResult meta = meta_train(inputs, dist, mc, std::move(start));

  PairedSamples conv{"convergence_epochs", "meta", "random", {}, {}, {}};
  PairedSamples hits{"final_hits", "meta", "random", {}, {}, {}};
  for (PairedSamples* m : {&conv, &hits}) {
    m->seeds.resize(seeds);
    m->a.resize(seeds);
    m->b.resize(seeds);
  }

  parallel_for(seeds, [&](int i) {
    const std::uint64_t run_seed = derive_seed(master_seed, "draw", i);
    Rng req_rng(derive_seed(run_seed, "requests"));
    const RequestMatrix requests =
        sample_request_matrix(dist, config.files, graph.horizon(), req_rng);
    const Environment env(graph, requests, config.capacity, config.eviction);
    TrainConfig tc = config.train;
    tc.seed = run_seed;
    const TrainResult warm = train_vdac(env, tc, meta.initials.nets);
    Rng init_rng(derive_seed(run_seed, "init"));
    const std::vector<FileNets> cold_init =
        make_file_nets(config.files, dims, config.hidden_dims, init_rng);
    const TrainResult cold = train_vdac(env, tc, cold_init);
    conv.seeds[i] = hits.seeds[i] = run_seed;
    conv.a[i] = warm.report.convergence_epoch;
    conv.b[i] = cold.report.convergence_epoch;
    hits.a[i] = final_hits(warm.report, tc.convergence_window);
    hits.b[i] = final_hits(cold.report, tc.convergence_window);
  });
  return StudyResult{{conv, hits}};
}

StudyResult study_pretrain_vs_cold(const ExperimentConfig& config, int seeds,
                                   std::uint64_t master_seed,
                                   const ContactGraph& graph) {
  if (config.distributions.size() < 3)
    throw std::runtime_error(
        "pretrain-vs-cold study needs three request distributions "
        "(requests.means, means_2, means_3)");
  const EncodingDims dims = config.encoding_dims();
  const EnvInputs inputs{&graph, config.files, config.capacity,
                         config.eviction};
  const std::vector<RequestDistribution> dists(config.distributions.begin(),
                                               config.distributions.begin() + 3);

  PairedSamples conv{"meta_convergence_epochs", "pretrained", "cold", {}, {}, {}};
  PairedSamples pick{"selected_candidate", "pretrained", "near_duplicate", {}, {}, {}};
  for (PairedSamples* m : {&conv, &pick}) {
    m->seeds.resize(seeds);
    m->a.resize(seeds);
    m->b.resize(seeds);
  }

  parallel_for(seeds, [&](int i) {
    const std::uint64_t run_seed = derive_seed(master_seed, "pretrain-trial", i);
    MetaConfig mc = config.meta;
    mc.seed = run_seed;
    const PretrainResult pre =
        pretrain_sequence(inputs, dists, mc, config.hidden_dims);

    MetaConfig cold_mc = config.meta;
    cold_mc.seed = derive_seed(run_seed, "cold");
    Rng cold_init_rng(derive_seed(run_seed, "cold-init"));
    MetaInitials cold_start;
    cold_start.nets =
        make_file_nets(config.files, dims, config.hidden_dims, cold_init_rng);
    const MetaTrainResult cold =
        meta_train(inputs, dists[2], cold_mc, std::move(cold_start));

    conv.seeds[i] = pick.seeds[i] = run_seed;
    conv.a[i] = pre.reports[2].convergence_epoch;
    conv.b[i] = cold.report.convergence_epoch;
    pick.a[i] = pre.distance_tables[2].selected;
    pick.b[i] = 0;  // the near-duplicate of p3 is candidate 1 (index 0)
  });
  return StudyResult{{conv, pick}};
}

}  // namespace

StudyResult run_study(StudyKind kind, const ExperimentConfig& config,
                      int seeds, std::uint64_t master_seed,
                      const std::string& out_dir,
                      std::vector<std::string>* artifacts) {
  if (seeds < 1) throw std::runtime_error("compare: need at least one seed");
  const ContactGraph graph = study_graph(config, master_seed);

  StudyResult result;
  switch (kind) {
    case StudyKind::kVdVsIac:
      result = study_vd_vs_iac(config, seeds, master_seed, graph);
      break;
    case StudyKind::kMetaVsRandom:
      result = study_meta_vs_random(config, seeds, master_seed, graph);
      break;
    case StudyKind::kPretrainVsCold:
      result = study_pretrain_vs_cold(config, seeds, master_seed, graph);
      break;
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "raw.csv").string(),
                    raw_csv(result.metrics));
    write_text_file((fs::path(out_dir) / "summary.csv").string(),
                    summary_csv(result.metrics));
    if (artifacts) {
      artifacts->push_back("raw.csv");
      artifacts->push_back("summary.csv");
    }
  }
  return result;
}

}  // namespace csn
