#include "csn/request_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace csn {

void RequestDistribution::check() const {
  if (max_per_slot < 0)
    throw std::invalid_argument("request distribution: max_per_slot < 0");
  for (std::size_t u = 0; u < means.size(); ++u) {
    if (!(means[u] >= 0.0))
      throw std::invalid_argument("request distribution: mean for user " +
                                  std::to_string(u) + " must be >= 0");
  }
}

RequestMatrix::RequestMatrix(int users, int files, int horizon)
    : users_(users), files_(files), horizon_(horizon) {
  if (users < 0 || files < 0 || horizon < 0)
    throw std::invalid_argument("request matrix: negative dimension");
  bits_.assign(static_cast<std::size_t>(users) * files * horizon, 0);
}

std::size_t RequestMatrix::offset(int u, int f, int t) const {
  if (u < 0 || u >= users_ || f < 0 || f >= files_ || t < 0 || t >= horizon_)
    throw std::out_of_range("request matrix index (" + std::to_string(u) +
                            ", " + std::to_string(f) + ", " +
                            std::to_string(t) + ")");
  return (static_cast<std::size_t>(u) * files_ + f) * horizon_ + t;
}

int truncated_poisson_sample(double mean, int max, Rng& rng) {
  if (!(mean >= 0.0))
    throw std::invalid_argument("truncated poisson: mean must be >= 0");
  if (max < 0) throw std::invalid_argument("truncated poisson: max must be >= 0");
  if (mean == 0.0 || max == 0) return 0;

  // Log-space weights keep large means out of under/overflow territory.
  std::vector<double> w(max + 1);
  double peak = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= max; ++k) {
    w[k] = -mean + k * std::log(mean) - std::lgamma(k + 1.0);
    peak = std::max(peak, w[k]);
  }
  double total = 0.0;
  for (int k = 0; k <= max; ++k) {
    w[k] = std::exp(w[k] - peak);
    total += w[k];
  }
  for (int k = 0; k <= max; ++k) w[k] /= total;
  return rng.categorical(w);
}

RequestMatrix sample_request_matrix(const RequestDistribution& dist, int files,
                                    int horizon, Rng& rng) {
  dist.check();
  const int users = static_cast<int>(dist.means.size());
  RequestMatrix m(users, files, horizon);
  std::vector<int> pool(files);
  for (int t = 0; t < horizon; ++t) {
    for (int u = 0; u < users; ++u) {
      const int count = truncated_poisson_sample(dist.means[u], files, rng);
      // Partial Fisher-Yates: first `count` entries are a uniform
      // without-replacement draw.
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < count; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(files - i));
        std::swap(pool[i], pool[j]);
        m.set(u, pool[i], t, true);
      }
    }
  }
  return m;
}

std::string save_requests(const RequestMatrix& m) {
  std::ostringstream out;
  out << "REQ v1 " << m.users() << ' ' << m.files() << ' ' << m.horizon()
      << '\n';
  for (int t = 0; t < m.horizon(); ++t)
    for (int u = 0; u < m.users(); ++u)
      for (int f = 0; f < m.files(); ++f)
        if (m.at(u, f, t)) out << t << ' ' << u << ' ' << f << '\n';
  return out.str();
}

namespace {

[[noreturn]] void parse_fail(const char* what, int line_no,
                             const std::string& detail) {
  throw std::runtime_error(std::string(what) + ": line " +
                           std::to_string(line_no) + ": " + detail);
}

}  // namespace

RequestMatrix load_requests(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool have_header = false;
  RequestMatrix m;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (!have_header) {
      std::string magic, version;
      int users = 0, files = 0, horizon = 0;
      if (!(ls >> magic >> version >> users >> files >> horizon) ||
          magic != "REQ" || version != "v1")
        parse_fail("requests load", line_no, "expected 'REQ v1 N_U N_F T'");
      m = RequestMatrix(users, files, horizon);
      have_header = true;
      continue;
    }
    int t = 0, u = 0, f = 0;
    if (!(ls >> t >> u >> f))
      parse_fail("requests load", line_no, "expected '<t> <u> <f>'");
    try {
      if (m.at(u, f, t))
        parse_fail("requests load", line_no, "duplicate entry");
      m.set(u, f, t, true);
    } catch (const std::out_of_range& e) {
      parse_fail("requests load", line_no, e.what());
    }
  }
  if (!have_header)
    throw std::runtime_error("requests load: missing 'REQ v1' header");
  return m;
}

RequestMatrix load_requests_text(const std::string& text) {
  std::istringstream in(text);
  return load_requests(in);
}

std::string save_distribution(const RequestDistribution& d) {
  std::ostringstream out;
  out << "DIST v1\n";
  out.precision(17);
  for (std::size_t u = 0; u < d.means.size(); ++u)
    out << "mean " << u << ' ' << d.means[u] << '\n';
  return out.str();
}

RequestDistribution load_distribution(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool have_header = false;
  std::vector<std::pair<int, double>> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (!have_header) {
      std::string magic, version;
      if (!(ls >> magic >> version) || magic != "DIST" || version != "v1")
        parse_fail("distribution load", line_no, "expected 'DIST v1'");
      have_header = true;
      continue;
    }
    std::string key;
    int u = 0;
    double value = 0.0;
    if (!(ls >> key >> u >> value) || key != "mean")
      parse_fail("distribution load", line_no, "expected 'mean <u> <value>'");
    if (u < 0) parse_fail("distribution load", line_no, "negative user index");
    if (!(value >= 0.0))
      parse_fail("distribution load", line_no, "mean must be >= 0");
    entries.emplace_back(u, value);
  }
  if (!have_header)
    throw std::runtime_error("distribution load: missing 'DIST v1' header");

  RequestDistribution d;
  d.means.assign(entries.size(), -1.0);
  for (const auto& [u, value] : entries) {
    if (u >= static_cast<int>(entries.size()) || d.means[u] >= 0.0)
      throw std::runtime_error(
          "distribution load: user indices must cover 0.." +
          std::to_string(entries.size() - 1) + " exactly once (user " +
          std::to_string(u) + ")");
    d.means[u] = value;
  }
  return d;
}

RequestDistribution load_distribution_text(const std::string& text) {
  std::istringstream in(text);
  return load_distribution(in);
}

}  // namespace csn
