// Command-line front end: scenario generation, training, meta training,
// pre-training, evaluation and paired comparison studies. Every command is a
// pure function of (config, seed) and records a manifest of what it wrote.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "csn/csv.hpp"
#include "csn/harness.hpp"

namespace fs = std::filesystem;
using namespace csn;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset = "desk";
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::optional<int> epochs;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "config file (key = value)");
  cmd->add_option("--preset", opts.preset, "preset name: paper, desk, tiny")
      ->check(CLI::IsMember(preset_names()));
  cmd->add_option("--seed", opts.seed, "master seed (splits into sub-streams)");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--epochs", opts.epochs, "override the epoch count");
}

ExperimentConfig resolve_config(const CommonOptions& opts) {
  ExperimentConfig config = preset_config(opts.preset);
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in)
      throw std::runtime_error("cannot open config file " + opts.config_path);
    config = load_config(in, config);
  }
  if (opts.epochs) {
    config.train.epochs = *opts.epochs;
    config.meta.meta_epochs = *opts.epochs;
    config.check();
  }
  return config;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

ContactGraph make_graph(const ExperimentConfig& config, std::uint64_t seed,
                        const std::string& graph_path) {
  if (!graph_path.empty()) return load_graph_file(graph_path);
  ConstellationSpec spec = config.constellation;
  spec.seed = derive_seed(seed, "graph");
  return generate_constellation(spec);
}

RequestMatrix make_requests(const ExperimentConfig& config,
                            const ContactGraph& graph, std::uint64_t seed,
                            const std::string& requests_path,
                            int dist_index = 0) {
  if (!requests_path.empty()) {
    std::ifstream in(requests_path);
    if (!in) throw std::runtime_error("cannot open " + requests_path);
    return load_requests(in);
  }
  Rng rng(derive_seed(seed, "requests"));
  return sample_request_matrix(config.distributions.at(dist_index),
                               config.files, graph.horizon(), rng);
}

std::vector<FileNets> make_initials(const ExperimentConfig& config,
                                    std::uint64_t seed) {
  Rng rng(derive_seed(seed, "init"));
  return make_file_nets(config.files, config.encoding_dims(),
                        config.hidden_dims, rng);
}

RunManifest base_manifest(const std::string& command,
                          const ExperimentConfig& config,
                          const CommonOptions& opts) {
  RunManifest m;
  m.command = command;
  m.config_hash = config_hash(config);
  m.seeds = {{"master", opts.seed},
             {"graph", derive_seed(opts.seed, "graph")},
             {"requests", derive_seed(opts.seed, "requests")},
             {"init", derive_seed(opts.seed, "init")},
             {"rollout", derive_seed(opts.seed, "rollout")}};
  return m;
}

int cmd_gen_graph(const CommonOptions& opts) {
  const ExperimentConfig config = resolve_config(opts);
  const ContactGraph graph = make_graph(config, opts.seed, "");
  fs::create_directories(opts.out_dir);
  write_file(fs::path(opts.out_dir) / "graph.csn", save_graph(graph));
  RunManifest manifest = base_manifest("gen-graph", config, opts);
  manifest.artifacts = {"graph.csn"};
  write_manifest(opts.out_dir, manifest);
  std::cout << "graph: " << graph.satellites() << " satellites, "
            << graph.edges().size() << " edges over " << graph.horizon()
            << " slots -> " << opts.out_dir << "/graph.csn\n";
  return 0;
}

int cmd_gen_requests(const CommonOptions& opts) {
  const ExperimentConfig config = resolve_config(opts);
  const ContactGraph graph = make_graph(config, opts.seed, "");
  const RequestMatrix requests = make_requests(config, graph, opts.seed, "");
  fs::create_directories(opts.out_dir);
  write_file(fs::path(opts.out_dir) / "requests.req", save_requests(requests));
  write_file(fs::path(opts.out_dir) / "distribution.dist",
             save_distribution(config.distributions.at(0)));
  RunManifest manifest = base_manifest("gen-requests", config, opts);
  manifest.artifacts = {"requests.req", "distribution.dist"};
  write_manifest(opts.out_dir, manifest);
  std::cout << "requests: " << requests.users() << " clusters x "
            << requests.files() << " files x " << requests.horizon()
            << " slots -> " << opts.out_dir << "/requests.req\n";
  return 0;
}

int cmd_train(const CommonOptions& opts, const std::string& algo,
              const std::string& graph_path, const std::string& requests_path,
              bool timings) {
  const ExperimentConfig config = resolve_config(opts);
  const ContactGraph graph = make_graph(config, opts.seed, graph_path);
  const RequestMatrix requests =
      make_requests(config, graph, opts.seed, requests_path);
  const Environment env(graph, requests, config.capacity, config.eviction);
  const std::vector<FileNets> initials = make_initials(config, opts.seed);

  TrainConfig tc = config.train;
  tc.seed = opts.seed;
  const TrainResult result = algo == "vdac" ? train_vdac(env, tc, initials)
                                            : train_iac(env, tc, initials);

  fs::create_directories(opts.out_dir);
  write_file(fs::path(opts.out_dir) / "metrics.csv",
             train_metrics_csv(result.report, timings));
  save_checkpoint((fs::path(opts.out_dir) / "checkpoint").string(),
                  result.nets);
  RunManifest manifest = base_manifest("train " + algo, config, opts);
  manifest.artifacts = {"metrics.csv"};
  for (std::size_t f = 0; f < result.nets.size(); ++f) {
    char name[64];
    std::snprintf(name, sizeof(name), "checkpoint/policy_f%03zu.net", f);
    manifest.artifacts.push_back(name);
    std::snprintf(name, sizeof(name), "checkpoint/value_f%03zu.net", f);
    manifest.artifacts.push_back(name);
  }
  write_manifest(opts.out_dir, manifest);
  std::cout << algo << ": " << result.report.epoch_hits.size()
            << " epochs, final hits "
            << format_double(final_hits(result.report, tc.convergence_window))
            << ", convergence epoch " << result.report.convergence_epoch
            << '\n';
  return 0;
}

int cmd_meta_train(const CommonOptions& opts) {
  const ExperimentConfig config = resolve_config(opts);
  const ContactGraph graph = make_graph(config, opts.seed, "");
  const EnvInputs inputs{&graph, config.files, config.capacity,
                         config.eviction};
  MetaConfig mc = config.meta;
  mc.seed = opts.seed;
  MetaInitials start;
  start.nets = make_initials(config, opts.seed);
  const MetaTrainResult result =
      meta_train(inputs, config.distributions.at(0), mc, std::move(start));

  fs::create_directories(opts.out_dir);
  write_file(fs::path(opts.out_dir) / "meta_metrics.csv",
             meta_metrics_csv(result.report));
  const std::string label =
      result.initials.label.empty() ? std::string("p1") : result.initials.label;
  save_checkpoint((fs::path(opts.out_dir) / ("initials_" + label)).string(),
                  result.initials.nets);
  RunManifest manifest = base_manifest("meta-train", config, opts);
  manifest.artifacts = {"meta_metrics.csv"};
  for (std::size_t f = 0; f < result.initials.nets.size(); ++f) {
    char name[96];
    std::snprintf(name, sizeof(name), "initials_%s/policy_f%03zu.net",
                  label.c_str(), f);
    manifest.artifacts.push_back(name);
    std::snprintf(name, sizeof(name), "initials_%s/value_f%03zu.net",
                  label.c_str(), f);
    manifest.artifacts.push_back(name);
  }
  write_manifest(opts.out_dir, manifest);
  std::cout << "meta-train: " << result.report.mean_post_hits.size()
            << " meta epochs, convergence epoch "
            << result.report.convergence_epoch << '\n';
  return 0;
}

int cmd_pretrain(const CommonOptions& opts) {
  const ExperimentConfig config = resolve_config(opts);
  const ContactGraph graph = make_graph(config, opts.seed, "");
  const EnvInputs inputs{&graph, config.files, config.capacity,
                         config.eviction};
  MetaConfig mc = config.meta;
  mc.seed = opts.seed;
  const PretrainResult result =
      pretrain_sequence(inputs, config.distributions, mc, config.hidden_dims);

  fs::create_directories(opts.out_dir);
  RunManifest manifest = base_manifest("pretrain", config, opts);
  for (std::size_t k = 0; k < result.initials.size(); ++k) {
    const std::string label = result.initials[k].label;
    save_checkpoint((fs::path(opts.out_dir) / ("initials_" + label)).string(),
                    result.initials[k].nets);
    for (std::size_t f = 0; f < result.initials[k].nets.size(); ++f) {
      char name[96];
      std::snprintf(name, sizeof(name), "initials_%s/policy_f%03zu.net",
                    label.c_str(), f);
      manifest.artifacts.push_back(name);
      std::snprintf(name, sizeof(name), "initials_%s/value_f%03zu.net",
                    label.c_str(), f);
      manifest.artifacts.push_back(name);
    }
    const std::string metrics_name = "meta_metrics_" + label + ".csv";
    write_file(fs::path(opts.out_dir) / metrics_name,
               meta_metrics_csv(result.reports[k]));
    manifest.artifacts.push_back(metrics_name);
    if (k >= 1) {
      const std::string report_name = "distance_" + label + ".csv";
      write_file(fs::path(opts.out_dir) / report_name,
                 distance_report_csv(result.distance_tables[k]));
      manifest.artifacts.push_back(report_name);
    }
  }
  write_manifest(opts.out_dir, manifest);
  for (std::size_t k = 1; k < result.initials.size(); ++k)
    std::cout << "pretrain " << result.initials[k].label
              << ": warm started from candidate "
              << result.distance_tables[k].selected + 1 << '\n';
  return 0;
}

int cmd_eval(const CommonOptions& opts, const std::string& checkpoint,
             int episodes, bool greedy) {
  const ExperimentConfig config = resolve_config(opts);
  const ContactGraph graph = make_graph(config, opts.seed, "");
  const RequestMatrix requests = make_requests(config, graph, opts.seed, "");
  const Environment env(graph, requests, config.capacity, config.eviction);
  const std::vector<FileNets> nets = load_checkpoint(checkpoint);
  Rng rng(derive_seed(opts.seed, "eval"));
  const EvalStats stats =
      evaluate(env, nets, episodes, rng,
               greedy ? ActionSelect::kGreedy : ActionSelect::kSample);

  fs::create_directories(opts.out_dir);
  std::string csv = "episodes,mean_hits,std_hits\n";
  csv += join_csv({std::to_string(episodes), format_double(stats.mean),
                   format_double(stats.stddev)});
  write_file(fs::path(opts.out_dir) / "eval.csv", csv);
  RunManifest manifest = base_manifest("eval", config, opts);
  manifest.seeds.emplace_back("eval", derive_seed(opts.seed, "eval"));
  manifest.artifacts = {"eval.csv"};
  write_manifest(opts.out_dir, manifest);
  std::cout << "eval: mean hits " << format_double(stats.mean) << " +- "
            << format_double(stats.stddev) << " over " << episodes
            << " episodes\n";
  return 0;
}

int cmd_grad_check(const CommonOptions& opts, int cases) {
  const ExperimentConfig config = resolve_config(opts);
  const std::vector<int> check_hidden{16, 16};
  const double worst =
      gradient_check(config.encoding_dims(), check_hidden, cases, opts.seed);
  fs::create_directories(opts.out_dir);
  std::string csv = "cases,max_rel_error\n";
  csv += join_csv({std::to_string(cases), format_double(worst)});
  write_file(fs::path(opts.out_dir) / "grad_check.csv", csv);
  RunManifest manifest = base_manifest("grad-check", config, opts);
  manifest.artifacts = {"grad_check.csv"};
  write_manifest(opts.out_dir, manifest);
  std::cout << "grad-check: max relative error " << format_double(worst)
            << " over " << cases << " cases\n";
  return worst < 1e-4 ? 0 : 1;
}

int cmd_compare(const CommonOptions& opts, const std::string& study,
                int seeds) {
  const ExperimentConfig config = resolve_config(opts);
  RunManifest manifest = base_manifest("compare " + study, config, opts);
  const StudyResult result = run_study(parse_study(study), config, seeds,
                                       opts.seed, opts.out_dir,
                                       &manifest.artifacts);
  write_manifest(opts.out_dir, manifest);
  for (const PairedSamples& m : result.metrics) {
    const PairedSummaryRow row = summarize(m);
    std::cout << study << ' ' << row.metric << ": " << row.arm_a << " mean "
              << format_double(row.mean_a) << ", " << row.arm_b << " mean "
              << format_double(row.mean_b) << ", rel diff "
              << format_double(row.rel_diff) << ", paired t "
              << format_double(row.t_stat) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Content pre-storing and routing simulator for cube-satellite "
               "constellations"};
  app.require_subcommand(1);

  CommonOptions opts;

  auto* gen_graph = app.add_subcommand("gen-graph", "generate a contact plan");
  add_common(gen_graph, opts);

  auto* gen_requests =
      app.add_subcommand("gen-requests", "sample a request realization");
  add_common(gen_requests, opts);

  std::string algo = "vdac";
  std::string graph_path, requests_path;
  bool timings = false;
  auto* train = app.add_subcommand("train", "train routing policies");
  add_common(train, opts);
  train->add_option("--algo", algo, "vdac or iac")
      ->check(CLI::IsMember({"vdac", "iac"}));
  train->add_option("--graph", graph_path, "load the contact plan from a file");
  train->add_option("--requests", requests_path,
                    "load the request realization from a file");
  train->add_flag("--timings", timings,
                  "record wall times in metrics.csv (breaks byte-for-byte "
                  "reproducibility)");

  auto* meta = app.add_subcommand("meta-train", "meta-train learning initials");
  add_common(meta, opts);

  auto* pretrain = app.add_subcommand(
      "pretrain", "sequential meta training across the configured "
                  "distributions with warm-start selection");
  add_common(pretrain, opts);

  std::string checkpoint = "out/checkpoint";
  int episodes = 100;
  bool greedy = false;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, opts);
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory");
  eval->add_option("--episodes", episodes, "episodes to average")
      ->check(CLI::PositiveNumber);
  eval->add_flag("--greedy", greedy, "argmax actions instead of sampling");

  int cases = 120;
  auto* grad = app.add_subcommand("grad-check",
                                  "finite-difference probe of the gradients");
  add_common(grad, opts);
  grad->add_option("--cases", cases, "random cases")->check(CLI::PositiveNumber);

  std::string study = "vd-vs-iac";
  int seeds = 20;
  auto* compare = app.add_subcommand("compare", "paired study over seeds");
  add_common(compare, opts);
  compare->add_option("--study", study,
                      "vd-vs-iac, meta-vs-random or pretrain-vs-cold")
      ->check(CLI::IsMember({"vd-vs-iac", "meta-vs-random", "pretrain-vs-cold"}));
  compare->add_option("--seeds", seeds, "paired runs")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_graph->parsed()) return cmd_gen_graph(opts);
    if (gen_requests->parsed()) return cmd_gen_requests(opts);
    if (train->parsed())
      return cmd_train(opts, algo, graph_path, requests_path, timings);
    if (meta->parsed()) return cmd_meta_train(opts);
    if (pretrain->parsed()) return cmd_pretrain(opts);
    if (eval->parsed()) return cmd_eval(opts, checkpoint, episodes, greedy);
    if (grad->parsed()) return cmd_grad_check(opts, cases);
    if (compare->parsed()) return cmd_compare(opts, study, seeds);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
