#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace csn {

enum class NodeKind : std::uint8_t {
  kGateway,
  kSatellite,
  kUserCluster,
  kInitial,
  kTerminal,
};

struct NodeRef {
  NodeKind kind = NodeKind::kInitial;
  int index = -1;  // 0-based within kind; -1 for initial/terminal

  static NodeRef gateway(int i) { return {NodeKind::kGateway, i}; }
  static NodeRef satellite(int i) { return {NodeKind::kSatellite, i}; }
  static NodeRef user_cluster(int i) { return {NodeKind::kUserCluster, i}; }
  static NodeRef initial() { return {NodeKind::kInitial, -1}; }
  static NodeRef terminal() { return {NodeKind::kTerminal, -1}; }

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

std::string to_string(const NodeRef& n);

enum class EdgeKind : std::uint8_t {
  kGatewayHold,    // g -> g, implicit
  kSatelliteHold,  // s -> s, implicit
  kGatewaySat,     // g -> s uplink
  kSatSat,         // s -> s' inter-satellite link
  kSatUser,        // s -> u downlink association
};

std::string to_string(EdgeKind k);

struct ContactEdge {
  int slot = 0;
  NodeRef src;
  NodeRef dst;
  EdgeKind kind = EdgeKind::kGatewaySat;

  friend bool operator==(const ContactEdge&, const ContactEdge&) = default;
};

struct Violation {
  int slot = -1;  // -1 when not slot-specific
  std::string message;
};

// Synthetic rotating-ring constellation. Satellites sit on `orbits` interleaved
// rings; the ground mapping (gateway uplinks and user-cluster downlinks)
// advances by one satellite every slots_per_revolution / satellites slots.
struct ConstellationSpec {
  int satellites = 12;
  int gateways = 5;
  int user_clusters = 20;
  int horizon = 100;
  int orbits = 4;
  int slots_per_revolution = 24;
  int ss_neighbor_span = 1;  // ring-index radius for inter-satellite edges
  std::uint64_t seed = 0;

  friend bool operator==(const ConstellationSpec&,
                         const ConstellationSpec&) = default;
};

// Time-unrolled contact plan. Holds the explicit transmission edges
// (GS, SS, SU) per slot; hold edges are implicit and synthesized by
// out_edges(). Immutable after finalize(); safe for concurrent reads.
class ContactGraph {
 public:
  ContactGraph() = default;
  ContactGraph(int horizon, int gateways, int satellites, int user_clusters);

  int horizon() const { return horizon_; }
  int gateways() const { return gateways_; }
  int satellites() const { return satellites_; }
  int user_clusters() const { return user_clusters_; }

  // Appends without checking; call finalize() before lookups.
  void add_edge(const ContactEdge& e);

  // Sorts edges into canonical order and, when the graph is valid, builds
  // the per-slot lookup tables used by the environment.
  void finalize();

  const std::vector<ContactEdge>& edges() const { return edges_; }

  // Every invariant violation, with slot and node named; empty iff valid.
  std::vector<Violation> validate() const;
  bool valid() const { return validate().empty(); }

  // All edges with src = node at slot t, ordered by (kind, dst index).
  // Includes the implicit hold edge for gateways and satellites.
  std::vector<ContactEdge> out_edges(const NodeRef& node, int t) const;

  // Fast lookups; require finalize() on a valid graph.
  int gateway_into(int satellite, int t) const;
  int user_of(int satellite, int t) const;
  const std::vector<int>& ss_neighbors(int satellite, int t) const;
  bool indexed() const { return indexed_; }

  friend bool operator==(const ContactGraph& a, const ContactGraph& b);

 private:
  void check_slot(int t) const;

  int horizon_ = 0;
  int gateways_ = 0;
  int satellites_ = 0;
  int user_clusters_ = 0;
  std::vector<ContactEdge> edges_;

  bool indexed_ = false;
  std::vector<int> gs_gateway_;             // [t * N_S + s] -> gateway index
  std::vector<int> su_user_;                // [t * N_S + s] -> user index
  std::vector<std::vector<int>> ss_out_;    // [t * N_S + s] -> sorted neighbors
};

ContactGraph generate_constellation(const ConstellationSpec& spec);

// Line-oriented wire format:
//   CSN v1 T N_G N_S N_U
//   <t> <kind in {GS,SS,SU}> <src_index> <dst_index>
// Lines beginning '#' are comments. Hold edges are implicit.
ContactGraph load_graph(std::istream& in);
ContactGraph load_graph_text(const std::string& text);
ContactGraph load_graph_file(const std::string& path);
std::string save_graph(const ContactGraph& g);
void save_graph_file(const ContactGraph& g, const std::string& path);

}  // namespace csn
