#include "csn/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "csn/csv.hpp"
#include "csn/rng.hpp"

namespace csn {

namespace {

[[noreturn]] void key_fail(const std::string& key, const std::string& why) {
  throw std::runtime_error("config: key '" + key + "': " + why);
}

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) key_fail(key, why);
}

}  // namespace

void ExperimentConfig::check() const {
  require(constellation.satellites > 0, "constellation.satellites", "must be > 0");
  require(constellation.gateways > 0, "constellation.gateways", "must be > 0");
  require(constellation.user_clusters > 0, "constellation.user_clusters",
          "must be > 0");
  require(constellation.horizon >= 0, "constellation.horizon", "must be >= 0");
  require(constellation.orbits > 0, "constellation.orbits", "must be > 0");
  require(constellation.satellites % constellation.orbits == 0,
          "constellation.orbits", "must divide constellation.satellites");
  require(constellation.slots_per_revolution > 0,
          "constellation.slots_per_revolution", "must be > 0");
  require(constellation.ss_neighbor_span >= 0,
          "constellation.ss_neighbor_span", "must be >= 0");
  require(files >= 1, "requests.files", "must be >= 1");
  require(!distributions.empty(), "requests.means", "at least one required");
  for (std::size_t k = 0; k < distributions.size(); ++k) {
    const std::string key =
        k == 0 ? "requests.means" : "requests.means_" + std::to_string(k + 1);
    require(static_cast<int>(distributions[k].means.size()) ==
                constellation.user_clusters,
            key, "needs one mean per user cluster");
    for (double m : distributions[k].means)
      require(m >= 0.0, key, "means must be >= 0");
    require(distributions[k].max_per_slot == files, key,
            "max_per_slot must equal requests.files");
  }
  require(capacity >= 1, "storage.capacity", "must be >= 1");
  for (int h : hidden_dims)
    require(h > 0, "nets.hidden", "layer sizes must be > 0");
  require(train.gamma > 0.0 && train.gamma <= 1.0, "train.gamma",
          "must be in (0, 1]");
  require(train.actor_step > 0.0, "train.actor_step", "must be > 0");
  require(train.critic_step > 0.0, "train.critic_step", "must be > 0");
  require(train.epochs >= 0, "train.epochs", "must be >= 0");
  require(train.convergence_window >= 1, "train.window", "must be >= 1");
  require(train.convergence_tol >= 0.0, "train.tol", "must be >= 0");
  require(meta.samples_per_epoch >= 1, "meta.samples", "must be >= 1");
  require(meta.meta_epochs >= 0, "meta.epochs", "must be >= 0");
  require(meta.gamma > 0.0 && meta.gamma <= 1.0, "meta.gamma",
          "must be in (0, 1]");
  require(meta.inner_actor_step > 0.0, "meta.inner_actor_step", "must be > 0");
  require(meta.inner_critic_step > 0.0, "meta.inner_critic_step",
          "must be > 0");
  require(meta.outer_actor_step > 0.0, "meta.outer_actor_step", "must be > 0");
  require(meta.outer_critic_step > 0.0, "meta.outer_critic_step",
          "must be > 0");
  require(meta.convergence_window >= 1, "meta.window", "must be >= 1");
  require(meta.convergence_tol >= 0.0, "meta.tol", "must be >= 0");
}

namespace {

RequestDistribution make_distribution(std::vector<double> means, int files,
                                      int index) {
  RequestDistribution d;
  d.means = std::move(means);
  d.max_per_slot = files;
  d.label = "p" + std::to_string(index + 1);
  return d;
}

void relabel(ExperimentConfig& c) {
  for (std::size_t k = 0; k < c.distributions.size(); ++k) {
    c.distributions[k].max_per_slot = c.files;
    c.distributions[k].label = "p" + std::to_string(k + 1);
  }
}

}  // namespace

std::vector<std::string> preset_names() { return {"paper", "desk", "tiny"}; }

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset_name = name;
  if (name == "paper") {
    c.constellation = {12, 5, 20, 100, 4, 24, 1, 0};
    c.files = 15;
    std::vector<double> means(20, 1.0);
    for (int u = 10; u < 20; ++u) means[u] = 2.0;
    c.distributions = {make_distribution(means, c.files, 0)};
    c.capacity = 5;
    c.hidden_dims = {100, 100};
    c.train.epochs = 1000;
    c.meta.meta_epochs = 300;
    c.meta.samples_per_epoch = 8;
  } else if (name == "desk") {
    c.constellation = {6, 3, 6, 30, 2, 12, 1, 0};
    c.files = 8;
    c.distributions = {
        make_distribution({0.5, 0.5, 0.5, 2.5, 2.5, 2.5}, c.files, 0),
        make_distribution({2.5, 2.5, 2.5, 0.5, 0.5, 0.5}, c.files, 1),
        make_distribution({0.6, 0.6, 0.6, 2.6, 2.6, 2.6}, c.files, 2)};
    c.capacity = 3;
    c.hidden_dims = {64, 64};
    c.train.gamma = 0.9;
    c.train.actor_step = 4e-3;
    c.train.critic_step = 8e-3;
    c.train.epochs = 2000;
    c.train.convergence_window = 200;
    c.train.convergence_tol = 0.02;
    c.meta.gamma = 0.9;
    c.meta.inner_actor_step = 4e-3;
    c.meta.inner_critic_step = 8e-3;
    c.meta.outer_actor_step = 4e-3;
    c.meta.outer_critic_step = 8e-3;
    c.meta.meta_epochs = 300;
    c.meta.samples_per_epoch = 8;
    c.meta.convergence_window = 50;
    c.meta.convergence_tol = 0.02;
  } else if (name == "tiny") {
    c.constellation = {2, 1, 2, 4, 1, 4, 1, 0};
    c.files = 2;
    c.distributions = {make_distribution({2.0, 2.0}, c.files, 0)};
    c.capacity = 1;
    c.hidden_dims = {32, 32};
    c.train.gamma = 0.9;
    c.train.actor_step = 0.01;
    c.train.critic_step = 0.02;
    c.train.epochs = 1000;
    c.train.convergence_window = 20;
    c.meta.gamma = 0.9;
    c.meta.inner_actor_step = 0.01;
    c.meta.inner_critic_step = 0.02;
    c.meta.outer_actor_step = 0.01;
    c.meta.outer_critic_step = 0.02;
    c.meta.meta_epochs = 50;
    c.meta.samples_per_epoch = 4;
    c.meta.convergence_window = 10;
  } else {
    throw std::runtime_error("config: unknown preset '" + name + "'");
  }
  c.check();
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void line_fail(int line_no, const std::string& what) {
  throw std::runtime_error("config: line " + std::to_string(line_no) + ": " +
                           what);
}

long parse_long(const std::string& v, const std::string& key, int line_no) {
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    line_fail(line_no, "key '" + key + "': expected integer, got '" + v + "'");
  }
}

double parse_real(const std::string& v, const std::string& key, int line_no) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(out)) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    line_fail(line_no, "key '" + key + "': expected number, got '" + v + "'");
  }
}

bool parse_flag(const std::string& v, const std::string& key, int line_no) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  line_fail(line_no, "key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> parse_real_list(const std::string& v,
                                    const std::string& key, int line_no) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_real(trim(item), key, line_no));
  if (out.empty()) line_fail(line_no, "key '" + key + "': empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key,
                                int line_no) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<int>(parse_long(trim(item), key, line_no)));
  if (out.empty()) line_fail(line_no, "key '" + key + "': empty list");
  return out;
}

}  // namespace

ExperimentConfig load_config(std::istream& in, const ExperimentConfig& base) {
  ExperimentConfig c = base;
  std::string section;
  std::string line;
  int line_no = 0;
  bool seen_section = false;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    if (text.front() == '[') {
      if (text.back() != ']') line_fail(line_no, "unterminated section header");
      section = trim(text.substr(1, text.size() - 2));
      seen_section = true;
      static const std::vector<std::string> known{
          "constellation", "requests", "storage", "nets", "train", "meta"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        line_fail(line_no, "unknown section '" + section + "'");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) line_fail(line_no, "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) line_fail(line_no, "empty key");

    if (!seen_section) {
      if (key == "preset") {
        c = preset_config(value);  // file-specified base; later keys override
        continue;
      }
      line_fail(line_no, "unknown top-level key '" + key + "'");
    }

    const std::string qual = section + "." + key;
    if (section == "constellation") {
      if (key == "satellites")
        c.constellation.satellites = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "gateways")
        c.constellation.gateways = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "user_clusters")
        c.constellation.user_clusters = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "horizon")
        c.constellation.horizon = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "orbits")
        c.constellation.orbits = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "slots_per_revolution")
        c.constellation.slots_per_revolution = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "ss_neighbor_span")
        c.constellation.ss_neighbor_span = static_cast<int>(parse_long(value, qual, line_no));
      else
        line_fail(line_no, "unknown key '" + qual + "'");
    } else if (section == "requests") {
      if (key == "files") {
        c.files = static_cast<int>(parse_long(value, qual, line_no));
      } else if (key == "means") {
        if (c.distributions.empty()) c.distributions.resize(1);
        c.distributions[0].means = parse_real_list(value, qual, line_no);
      } else if (key.rfind("means_", 0) == 0) {
        const long idx = parse_long(key.substr(6), qual, line_no);
        if (idx < 2 || idx > 16)
          line_fail(line_no, "key '" + qual + "': index must be in 2..16");
        if (static_cast<std::size_t>(idx) > c.distributions.size())
          c.distributions.resize(idx);
        c.distributions[idx - 1].means = parse_real_list(value, qual, line_no);
      } else {
        line_fail(line_no, "unknown key '" + qual + "'");
      }
    } else if (section == "storage") {
      if (key == "capacity")
        c.capacity = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "eviction") {
        if (value == "capacity-bound")
          c.eviction = EvictionRule::kCapacityBound;
        else if (value == "reaches-capacity")
          c.eviction = EvictionRule::kReachesCapacity;
        else
          line_fail(line_no, "key '" + qual +
                                 "': expected capacity-bound or "
                                 "reaches-capacity");
      } else
        line_fail(line_no, "unknown key '" + qual + "'");
    } else if (section == "nets") {
      if (key == "hidden")
        c.hidden_dims = parse_int_list(value, qual, line_no);
      else
        line_fail(line_no, "unknown key '" + qual + "'");
    } else if (section == "train") {
      if (key == "gamma")
        c.train.gamma = parse_real(value, qual, line_no);
      else if (key == "actor_step")
        c.train.actor_step = parse_real(value, qual, line_no);
      else if (key == "critic_step")
        c.train.critic_step = parse_real(value, qual, line_no);
      else if (key == "epochs")
        c.train.epochs = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "window")
        c.train.convergence_window = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "tol")
        c.train.convergence_tol = parse_real(value, qual, line_no);
      else
        line_fail(line_no, "unknown key '" + qual + "'");
    } else if (section == "meta") {
      if (key == "samples")
        c.meta.samples_per_epoch = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "epochs")
        c.meta.meta_epochs = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "gamma")
        c.meta.gamma = parse_real(value, qual, line_no);
      else if (key == "inner_actor_step")
        c.meta.inner_actor_step = parse_real(value, qual, line_no);
      else if (key == "inner_critic_step")
        c.meta.inner_critic_step = parse_real(value, qual, line_no);
      else if (key == "outer_actor_step")
        c.meta.outer_actor_step = parse_real(value, qual, line_no);
      else if (key == "outer_critic_step")
        c.meta.outer_critic_step = parse_real(value, qual, line_no);
      else if (key == "inner_adaptation")
        c.meta.inner_adaptation = parse_flag(value, qual, line_no);
      else if (key == "window")
        c.meta.convergence_window = static_cast<int>(parse_long(value, qual, line_no));
      else if (key == "tol")
        c.meta.convergence_tol = parse_real(value, qual, line_no);
      else
        line_fail(line_no, "unknown key '" + qual + "'");
    }
  }
  relabel(c);
  c.check();
  return c;
}

ExperimentConfig load_config_text(const std::string& text,
                                  const ExperimentConfig& base) {
  std::istringstream in(text);
  return load_config(in, base);
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  if (!c.preset_name.empty()) out << "preset = " << c.preset_name << "\n\n";
  out << "[constellation]\n";
  out << "satellites = " << c.constellation.satellites << '\n';
  out << "gateways = " << c.constellation.gateways << '\n';
  out << "user_clusters = " << c.constellation.user_clusters << '\n';
  out << "horizon = " << c.constellation.horizon << '\n';
  out << "orbits = " << c.constellation.orbits << '\n';
  out << "slots_per_revolution = " << c.constellation.slots_per_revolution << '\n';
  out << "ss_neighbor_span = " << c.constellation.ss_neighbor_span << '\n';
  out << "\n[requests]\n";
  out << "files = " << c.files << '\n';
  for (std::size_t k = 0; k < c.distributions.size(); ++k) {
    out << (k == 0 ? "means" : "means_" + std::to_string(k + 1)) << " = ";
    for (std::size_t u = 0; u < c.distributions[k].means.size(); ++u) {
      if (u) out << ',';
      out << format_double(c.distributions[k].means[u]);
    }
    out << '\n';
  }
  out << "\n[storage]\n";
  out << "capacity = " << c.capacity << '\n';
  out << "eviction = "
      << (c.eviction == EvictionRule::kCapacityBound ? "capacity-bound"
                                                     : "reaches-capacity")
      << '\n';
  out << "\n[nets]\n";
  out << "hidden = ";
  for (std::size_t i = 0; i < c.hidden_dims.size(); ++i) {
    if (i) out << ',';
    out << c.hidden_dims[i];
  }
  out << '\n';
  out << "\n[train]\n";
  out << "gamma = " << format_double(c.train.gamma) << '\n';
  out << "actor_step = " << format_double(c.train.actor_step) << '\n';
  out << "critic_step = " << format_double(c.train.critic_step) << '\n';
  out << "epochs = " << c.train.epochs << '\n';
  out << "window = " << c.train.convergence_window << '\n';
  out << "tol = " << format_double(c.train.convergence_tol) << '\n';
  out << "\n[meta]\n";
  out << "samples = " << c.meta.samples_per_epoch << '\n';
  out << "epochs = " << c.meta.meta_epochs << '\n';
  out << "gamma = " << format_double(c.meta.gamma) << '\n';
  out << "inner_actor_step = " << format_double(c.meta.inner_actor_step) << '\n';
  out << "inner_critic_step = " << format_double(c.meta.inner_critic_step) << '\n';
  out << "outer_actor_step = " << format_double(c.meta.outer_actor_step) << '\n';
  out << "outer_critic_step = " << format_double(c.meta.outer_critic_step) << '\n';
  out << "inner_adaptation = " << (c.meta.inner_adaptation ? "true" : "false")
      << '\n';
  out << "window = " << c.meta.convergence_window << '\n';
  out << "tol = " << format_double(c.meta.convergence_tol) << '\n';
  return out.str();
}

std::string config_hash(const ExperimentConfig& c) {
  const std::uint64_t h = fnv1a64(serialize_config(c));
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace csn
