#include "csn/contact_graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "csn/rng.hpp"

namespace csn {

std::string to_string(const NodeRef& n) {
  switch (n.kind) {
    case NodeKind::kGateway: return "gateway " + std::to_string(n.index);
    case NodeKind::kSatellite: return "satellite " + std::to_string(n.index);
    case NodeKind::kUserCluster: return "user_cluster " + std::to_string(n.index);
    case NodeKind::kInitial: return "initial";
    case NodeKind::kTerminal: return "terminal";
  }
  return "?";
}

std::string to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::kGatewayHold: return "G_hold";
    case EdgeKind::kSatelliteHold: return "S_hold";
    case EdgeKind::kGatewaySat: return "GS";
    case EdgeKind::kSatSat: return "SS";
    case EdgeKind::kSatUser: return "SU";
  }
  return "?";
}

namespace {

auto edge_key(const ContactEdge& e) {
  return std::make_tuple(e.slot, static_cast<int>(e.kind),
                         static_cast<int>(e.src.kind), e.src.index,
                         static_cast<int>(e.dst.kind), e.dst.index);
}

}  // namespace

ContactGraph::ContactGraph(int horizon, int gateways, int satellites,
                           int user_clusters)
    : horizon_(horizon),
      gateways_(gateways),
      satellites_(satellites),
      user_clusters_(user_clusters) {}

void ContactGraph::add_edge(const ContactEdge& e) {
  edges_.push_back(e);
  indexed_ = false;
}

void ContactGraph::finalize() {
  std::sort(edges_.begin(), edges_.end(),
            [](const ContactEdge& a, const ContactEdge& b) {
              return edge_key(a) < edge_key(b);
            });
  indexed_ = false;
  if (!validate().empty()) return;

  const std::size_t cells = static_cast<std::size_t>(horizon_) * satellites_;
  gs_gateway_.assign(cells, -1);
  su_user_.assign(cells, -1);
  ss_out_.assign(cells, {});
  for (const ContactEdge& e : edges_) {
    const std::size_t base = static_cast<std::size_t>(e.slot) * satellites_;
    switch (e.kind) {
      case EdgeKind::kGatewaySat:
        gs_gateway_[base + e.dst.index] = e.src.index;
        break;
      case EdgeKind::kSatUser:
        su_user_[base + e.src.index] = e.dst.index;
        break;
      case EdgeKind::kSatSat:
        ss_out_[base + e.src.index].push_back(e.dst.index);
        break;
      default:
        break;
    }
  }
  for (auto& nbrs : ss_out_) std::sort(nbrs.begin(), nbrs.end());
  indexed_ = true;
}

std::vector<Violation> ContactGraph::validate() const {
  std::vector<Violation> out;
  auto flag = [&out](int slot, std::string msg) {
    out.push_back({slot, std::move(msg)});
  };

  if (horizon_ < 0 || gateways_ < 0 || satellites_ < 0 || user_clusters_ < 0)
    flag(-1, "negative node count or horizon in header");

  auto index_ok = [this](const NodeRef& n) {
    switch (n.kind) {
      case NodeKind::kGateway: return n.index >= 0 && n.index < gateways_;
      case NodeKind::kSatellite: return n.index >= 0 && n.index < satellites_;
      case NodeKind::kUserCluster:
        return n.index >= 0 && n.index < user_clusters_;
      default: return true;
    }
  };

  // Per-edge checks.
  for (const ContactEdge& e : edges_) {
    if (e.slot < 0 || e.slot >= horizon_) {
      flag(e.slot, "edge slot out of range [0, " + std::to_string(horizon_) +
                       "): " + to_string(e.src) + " -> " + to_string(e.dst));
      continue;
    }
    if (!index_ok(e.src) || !index_ok(e.dst)) {
      flag(e.slot, "node index out of range on edge " + to_string(e.src) +
                       " -> " + to_string(e.dst));
      continue;
    }
    const NodeKind sk = e.src.kind;
    const NodeKind dk = e.dst.kind;
    bool shape_ok = false;
    switch (e.kind) {
      case EdgeKind::kGatewayHold:
      case EdgeKind::kSatelliteHold:
        flag(e.slot, "explicit hold edge stored for " + to_string(e.src) +
                         " (hold edges are implicit)");
        continue;
      case EdgeKind::kGatewaySat:
        shape_ok = sk == NodeKind::kGateway && dk == NodeKind::kSatellite;
        break;
      case EdgeKind::kSatSat:
        shape_ok = sk == NodeKind::kSatellite && dk == NodeKind::kSatellite &&
                   e.src.index != e.dst.index;
        break;
      case EdgeKind::kSatUser:
        shape_ok = sk == NodeKind::kSatellite && dk == NodeKind::kUserCluster;
        break;
    }
    if (!shape_ok) {
      flag(e.slot, "edge class " + to_string(e.kind) +
                       " inconsistent with endpoints " + to_string(e.src) +
                       " -> " + to_string(e.dst));
    }
  }

  // Duplicates (over the canonical key, independent of stored order).
  {
    std::vector<ContactEdge> sorted = edges_;
    std::sort(sorted.begin(), sorted.end(),
              [](const ContactEdge& a, const ContactEdge& b) {
                return edge_key(a) < edge_key(b);
              });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i] == sorted[i - 1]) {
        flag(sorted[i].slot, "duplicate edge " + to_string(sorted[i].src) +
                                 " -> " + to_string(sorted[i].dst));
      }
    }
  }

  // Seamless coverage: per slot, exactly one GS into and one SU out of every
  // satellite.
  if (horizon_ >= 0 && satellites_ >= 0) {
    std::vector<int> gs_in(satellites_), su_out(satellites_);
    for (int t = 0; t < horizon_; ++t) {
      std::fill(gs_in.begin(), gs_in.end(), 0);
      std::fill(su_out.begin(), su_out.end(), 0);
      for (const ContactEdge& e : edges_) {
        if (e.slot != t) continue;
        if (e.kind == EdgeKind::kGatewaySat &&
            e.dst.kind == NodeKind::kSatellite && index_ok(e.dst))
          ++gs_in[e.dst.index];
        if (e.kind == EdgeKind::kSatUser &&
            e.src.kind == NodeKind::kSatellite && index_ok(e.src))
          ++su_out[e.src.index];
      }
      for (int s = 0; s < satellites_; ++s) {
        if (gs_in[s] != 1)
          flag(t, "satellite " + std::to_string(s) + " has " +
                      std::to_string(gs_in[s]) +
                      " incoming GS edges (seamless coverage requires "
                      "exactly 1)");
        if (su_out[s] != 1)
          flag(t, "satellite " + std::to_string(s) + " has " +
                      std::to_string(su_out[s]) +
                      " outgoing SU edges (seamless coverage requires "
                      "exactly 1)");
      }
    }
  }
  return out;
}

std::vector<ContactEdge> ContactGraph::out_edges(const NodeRef& node,
                                                 int t) const {
  check_slot(t);
  std::vector<ContactEdge> out;
  if (node.kind == NodeKind::kGateway) {
    out.push_back({t, node, node, EdgeKind::kGatewayHold});
  } else if (node.kind == NodeKind::kSatellite) {
    out.push_back({t, node, node, EdgeKind::kSatelliteHold});
  } else {
    return out;  // user clusters, initial and terminal never transmit
  }
  for (const ContactEdge& e : edges_) {
    if (e.slot == t && e.src == node) out.push_back(e);
  }
  std::sort(out.begin(), out.end(),
            [](const ContactEdge& a, const ContactEdge& b) {
              return std::make_tuple(static_cast<int>(a.kind), a.dst.index) <
                     std::make_tuple(static_cast<int>(b.kind), b.dst.index);
            });
  return out;
}

void ContactGraph::check_slot(int t) const {
  if (t < 0 || t >= horizon_)
    throw std::out_of_range("slot " + std::to_string(t) +
                            " out of range [0, " + std::to_string(horizon_) +
                            ")");
}

int ContactGraph::gateway_into(int satellite, int t) const {
  check_slot(t);
  if (!indexed_) throw std::logic_error("graph not finalized/valid");
  return gs_gateway_[static_cast<std::size_t>(t) * satellites_ + satellite];
}

int ContactGraph::user_of(int satellite, int t) const {
  check_slot(t);
  if (!indexed_) throw std::logic_error("graph not finalized/valid");
  return su_user_[static_cast<std::size_t>(t) * satellites_ + satellite];
}

const std::vector<int>& ContactGraph::ss_neighbors(int satellite, int t) const {
  check_slot(t);
  if (!indexed_) throw std::logic_error("graph not finalized/valid");
  return ss_out_[static_cast<std::size_t>(t) * satellites_ + satellite];
}

bool operator==(const ContactGraph& a, const ContactGraph& b) {
  auto canonical = [](const ContactGraph& g) {
    std::vector<ContactEdge> e = g.edges_;
    std::sort(e.begin(), e.end(), [](const ContactEdge& x, const ContactEdge& y) {
      return edge_key(x) < edge_key(y);
    });
    return e;
  };
  return a.horizon_ == b.horizon_ && a.gateways_ == b.gateways_ &&
         a.satellites_ == b.satellites_ &&
         a.user_clusters_ == b.user_clusters_ && canonical(a) == canonical(b);
}

ContactGraph generate_constellation(const ConstellationSpec& spec) {
  if (spec.satellites <= 0 || spec.gateways <= 0 || spec.user_clusters <= 0 ||
      spec.horizon < 0 || spec.orbits <= 0 || spec.slots_per_revolution <= 0)
    throw std::invalid_argument(
        "constellation spec: all counts must be positive");
  if (spec.satellites % spec.orbits != 0)
    throw std::invalid_argument(
        "constellation spec: satellites (" + std::to_string(spec.satellites) +
        ") must be divisible by orbits (" + std::to_string(spec.orbits) + ")");
  if (spec.ss_neighbor_span < 0)
    throw std::invalid_argument(
        "constellation spec: ss_neighbor_span must be >= 0");

  const int n_s = spec.satellites;
  const int per_ring = n_s / spec.orbits;
  const int step = std::max(1, spec.slots_per_revolution / n_s);

  Rng rng(derive_seed(spec.seed, "constellation"));
  const int phase = static_cast<int>(rng.uniform_int(n_s));
  std::vector<int> gw_perm(spec.gateways);
  std::iota(gw_perm.begin(), gw_perm.end(), 0);
  for (int i = spec.gateways - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(i + 1));
    std::swap(gw_perm[i], gw_perm[j]);
  }

  // Interleaved circular position: neighbors on the circle alternate rings.
  auto circle_pos = [&](int s) {
    const int ring = s / per_ring;
    const int pos = s % per_ring;
    return pos * spec.orbits + ring;
  };

  ContactGraph g(spec.horizon, spec.gateways, n_s, spec.user_clusters);
  for (int t = 0; t < spec.horizon; ++t) {
    const int shift = t / step;
    std::vector<int> angle(n_s);
    for (int s = 0; s < n_s; ++s)
      angle[s] = (circle_pos(s) + shift + phase) % n_s;
    for (int s = 0; s < n_s; ++s) {
      const int gw = gw_perm[angle[s] % spec.gateways];
      g.add_edge({t, NodeRef::gateway(gw), NodeRef::satellite(s),
                  EdgeKind::kGatewaySat});
      const int user = angle[s] % spec.user_clusters;
      g.add_edge({t, NodeRef::satellite(s), NodeRef::user_cluster(user),
                  EdgeKind::kSatUser});
      for (int s2 = 0; s2 < n_s; ++s2) {
        if (s2 == s) continue;
        const int diff = std::abs(angle[s] - angle[s2]);
        const int dist = std::min(diff, n_s - diff);
        if (dist <= spec.ss_neighbor_span)
          g.add_edge({t, NodeRef::satellite(s), NodeRef::satellite(s2),
                      EdgeKind::kSatSat});
      }
    }
  }
  g.finalize();
  return g;
}

namespace {

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
  throw std::runtime_error("graph load: line " + std::to_string(line_no) +
                           ": " + what);
}

int parse_int(const std::string& tok, int line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    parse_fail(line_no, std::string("bad ") + what + " '" + tok + "'");
  }
}

}  // namespace

ContactGraph load_graph(std::istream& in) {
  std::string line;
  int line_no = 0;
  ContactGraph g;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    if (!have_header) {
      if (tok.size() != 6 || tok[0] != "CSN" || tok[1] != "v1")
        parse_fail(line_no, "expected header 'CSN v1 T N_G N_S N_U'");
      const int horizon = parse_int(tok[2], line_no, "horizon");
      const int n_g = parse_int(tok[3], line_no, "gateway count");
      const int n_s = parse_int(tok[4], line_no, "satellite count");
      const int n_u = parse_int(tok[5], line_no, "user cluster count");
      if (horizon < 0 || n_g < 0 || n_s < 0 || n_u < 0)
        parse_fail(line_no, "negative count in header");
      g = ContactGraph(horizon, n_g, n_s, n_u);
      have_header = true;
      continue;
    }

    if (tok.size() != 4)
      parse_fail(line_no, "expected '<t> <kind> <src> <dst>'");
    const int t = parse_int(tok[0], line_no, "slot");
    const int src = parse_int(tok[2], line_no, "source index");
    const int dst = parse_int(tok[3], line_no, "destination index");
    if (t < 0 || t >= g.horizon())
      parse_fail(line_no, "slot " + std::to_string(t) + " out of range [0, " +
                              std::to_string(g.horizon()) + ")");
    ContactEdge e;
    e.slot = t;
    if (tok[1] == "GS") {
      e.kind = EdgeKind::kGatewaySat;
      e.src = NodeRef::gateway(src);
      e.dst = NodeRef::satellite(dst);
      if (src >= g.gateways()) parse_fail(line_no, "gateway index out of range");
      if (dst >= g.satellites())
        parse_fail(line_no, "satellite index out of range");
    } else if (tok[1] == "SS") {
      e.kind = EdgeKind::kSatSat;
      e.src = NodeRef::satellite(src);
      e.dst = NodeRef::satellite(dst);
      if (src >= g.satellites() || dst >= g.satellites())
        parse_fail(line_no, "satellite index out of range");
      if (src == dst) parse_fail(line_no, "SS edge with identical endpoints");
    } else if (tok[1] == "SU") {
      e.kind = EdgeKind::kSatUser;
      e.src = NodeRef::satellite(src);
      e.dst = NodeRef::user_cluster(dst);
      if (src >= g.satellites())
        parse_fail(line_no, "satellite index out of range");
      if (dst >= g.user_clusters())
        parse_fail(line_no, "user cluster index out of range");
    } else {
      parse_fail(line_no, "unknown edge kind '" + tok[1] + "'");
    }
    if (src < 0 || dst < 0) parse_fail(line_no, "negative node index");
    for (const ContactEdge& prev : g.edges())
      if (prev == e)
        parse_fail(line_no, "duplicate edge " + to_string(e.src) + " -> " +
                                to_string(e.dst));
    g.add_edge(e);
  }
  if (!have_header)
    throw std::runtime_error("graph load: missing 'CSN v1' header");

  const auto violations = g.validate();
  if (!violations.empty()) {
    throw std::runtime_error(
        "graph load: invariant violation (slot " +
        std::to_string(violations.front().slot) + "): " +
        violations.front().message +
        (violations.size() > 1
             ? " (+" + std::to_string(violations.size() - 1) + " more)"
             : ""));
  }
  g.finalize();
  return g;
}

ContactGraph load_graph_text(const std::string& text) {
  std::istringstream in(text);
  return load_graph(in);
}

ContactGraph load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("graph load: cannot open " + path);
  return load_graph(in);
}

std::string save_graph(const ContactGraph& g) {
  std::vector<ContactEdge> edges = g.edges();
  std::sort(edges.begin(), edges.end(),
            [](const ContactEdge& a, const ContactEdge& b) {
              return edge_key(a) < edge_key(b);
            });
  std::ostringstream out;
  out << "CSN v1 " << g.horizon() << ' ' << g.gateways() << ' '
      << g.satellites() << ' ' << g.user_clusters() << '\n';
  for (const ContactEdge& e : edges) {
    const char* kind = e.kind == EdgeKind::kGatewaySat ? "GS"
                       : e.kind == EdgeKind::kSatSat   ? "SS"
                                                       : "SU";
    out << e.slot << ' ' << kind << ' ' << e.src.index << ' ' << e.dst.index
        << '\n';
  }
  return out.str();
}

void save_graph_file(const ContactGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("graph save: cannot open " + path);
  out << save_graph(g);
}

}  // namespace csn
