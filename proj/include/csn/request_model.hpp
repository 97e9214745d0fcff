#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "csn/rng.hpp"

namespace csn {

// Per-slot request counts follow a Poisson distribution truncated and
// renormalized over {0..max_per_slot}; the means vector is the only
// distributional knob.
struct RequestDistribution {
  std::vector<double> means;  // one entry per user cluster
  int max_per_slot = 0;       // equals the file count
  std::string label;

  void check() const;  // throws on negative means / bad sizes

  friend bool operator==(const RequestDistribution&,
                         const RequestDistribution&) = default;
};

// Binary request tensor x[u][f][t].
class RequestMatrix {
 public:
  RequestMatrix() = default;
  RequestMatrix(int users, int files, int horizon);

  int users() const { return users_; }
  int files() const { return files_; }
  int horizon() const { return horizon_; }

  bool at(int u, int f, int t) const { return bits_[offset(u, f, t)] != 0; }
  void set(int u, int f, int t, bool v) { bits_[offset(u, f, t)] = v ? 1 : 0; }

  friend bool operator==(const RequestMatrix&, const RequestMatrix&) = default;

 private:
  std::size_t offset(int u, int f, int t) const;

  int users_ = 0, files_ = 0, horizon_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Draws k in {0..max} with probability proportional to e^-mean mean^k / k!.
int truncated_poisson_sample(double mean, int max, Rng& rng);

// For each (u, t) draws a request count from the truncated Poisson and marks
// that many distinct files, chosen uniformly without replacement.
RequestMatrix sample_request_matrix(const RequestDistribution& dist, int files,
                                    int horizon, Rng& rng);

// Wire formats.
//   Requests:     'REQ v1 N_U N_F T' header, then '<t> <u> <f>' per 1-entry.
//   Distribution: 'DIST v1' header, then 'mean <u> <value>' lines.
std::string save_requests(const RequestMatrix& m);
RequestMatrix load_requests(std::istream& in);
RequestMatrix load_requests_text(const std::string& text);

std::string save_distribution(const RequestDistribution& d);
RequestDistribution load_distribution(std::istream& in);
RequestDistribution load_distribution_text(const std::string& text);

}  // namespace csn
