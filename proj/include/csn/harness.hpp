#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csn/config.hpp"
#include "csn/meta_learning.hpp"

namespace csn {

inline constexpr const char* kToolVersion = "orbit-prestore 1.0.0";

// Parallel fan-out width: hardware concurrency, capped by the
// ORBIT_PRESTORE_WORKERS environment variable when set.
int worker_count();

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::vector<std::string> artifacts;  // relative to the output directory
  std::string tool_version = kToolVersion;
};

// Writes <out_dir>/manifest.json (listed among the artifacts itself).
void write_manifest(const std::string& out_dir, RunManifest manifest);

// Checkpoint layout: one parameter file per (file index, net role).
void save_checkpoint(const std::string& dir, std::span<const FileNets> nets);
std::vector<FileNets> load_checkpoint(const std::string& dir);

// Metrics writers. Epoch wall times are written only when timings is true;
// otherwise the column holds zeros so reruns stay byte-identical.
std::string train_metrics_csv(const TrainReport& report, bool timings);
std::string meta_metrics_csv(const MetaReport& report);
std::string distance_report_csv(const DistanceTable& table);

// Central-difference probe of the analytic gradients; uses forward passes
// only. Returns the maximum relative error over `cases` random
// (params, encoding, mask, action) draws.
double gradient_check(const EncodingDims& dims, std::span<const int> hidden,
                      int cases, std::uint64_t seed);

enum class StudyKind : std::uint8_t { kVdVsIac, kMetaVsRandom, kPretrainVsCold };
StudyKind parse_study(const std::string& name);
std::string to_string(StudyKind kind);

// Paired per-seed observations for one metric.
struct PairedSamples {
  std::string metric;
  std::string arm_a, arm_b;
  std::vector<std::uint64_t> seeds;
  std::vector<double> a, b;
};

struct PairedSummaryRow {
  std::string metric, arm_a, arm_b;
  int n = 0;
  double mean_a = 0, std_a = 0, mean_b = 0, std_b = 0;
  double rel_diff = 0;  // (mean_a - mean_b) / mean_b
  double t_stat = 0;    // paired t statistic on a - b
};

PairedSummaryRow summarize(const PairedSamples& samples);

std::string raw_csv(std::span<const PairedSamples> metrics);
std::string summary_csv(std::span<const PairedSamples> metrics);
// Rebuilds PairedSamples from raw.csv text (for recomputation checks).
std::vector<PairedSamples> parse_raw_csv(const std::string& text);

struct StudyResult {
  std::vector<PairedSamples> metrics;
};

// Runs one paired study; writes raw.csv and summary.csv under out_dir when
// out_dir is nonempty. Runs fan out across worker threads; aggregation is
// ordered by run index, so results do not depend on scheduling.
StudyResult run_study(StudyKind kind, const ExperimentConfig& config,
                      int seeds, std::uint64_t master_seed,
                      const std::string& out_dir,
                      std::vector<std::string>* artifacts = nullptr);

// Mean episode hits over the trailing window of a finished training run.
double final_hits(const TrainReport& report, int window);

}  // namespace csn
