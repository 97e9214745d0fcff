#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "csn/contact_graph.hpp"
#include "csn/request_model.hpp"
#include "csn/rng.hpp"

namespace csn {

enum class ReqFlag : std::uint8_t { kUndefined, kNo, kYes };

// Location plus the request flag of the downlink user currently associated
// with the file's satellite. The flag is defined iff the file sits on a
// satellite.
struct LocalState {
  NodeRef location = NodeRef::initial();
  ReqFlag flag = ReqFlag::kUndefined;

  bool at_terminal() const { return location.kind == NodeKind::kTerminal; }
  friend bool operator==(const LocalState&, const LocalState&) = default;
};

// Per-satellite store bookkeeping: when each file arrived (its "age") and how
// many files each satellite holds. A file is stored on at most one satellite.
class StorageLedger {
 public:
  static constexpr int kNotStored = -1;

  StorageLedger() = default;
  StorageLedger(int satellites, int files, int capacity);

  int capacity() const { return capacity_; }
  int occupancy(int s) const { return occupancy_[s]; }
  int stored_since(int s, int f) const { return stored_since_[cell(s, f)]; }
  bool stored(int s, int f) const { return stored_since(s, f) != kNotStored; }

  void record_arrival(int s, int f, int slot);
  void record_departure(int s, int f);
  // The stored file with minimum arrival slot; ties break to the lowest file
  // index. Requires occupancy(s) > 0.
  int oldest_file(int s) const;

  friend bool operator==(const StorageLedger&, const StorageLedger&) = default;

 private:
  std::size_t cell(int s, int f) const {
    return static_cast<std::size_t>(s) * files_ + f;
  }
  int satellites_ = 0, files_ = 0, capacity_ = 0;
  std::vector<int> stored_since_;
  std::vector<int> occupancy_;
};

enum class Verb : std::uint8_t { kHold, kDeliver, kToGateway, kToSatellite };

struct ActionToken {
  Verb verb = Verb::kHold;
  int target = -1;  // gateway or satellite index for kToGateway/kToSatellite

  static ActionToken hold() { return {Verb::kHold, -1}; }
  static ActionToken deliver() { return {Verb::kDeliver, -1}; }
  static ActionToken to_gateway(int g) { return {Verb::kToGateway, g}; }
  static ActionToken to_satellite(int s) { return {Verb::kToSatellite, s}; }

  friend bool operator==(const ActionToken&, const ActionToken&) = default;
};

std::string to_string(const ActionToken& a);

struct JointState {
  std::vector<LocalState> locals;  // one per file
  StorageLedger ledger;
  int t = 0;

  friend bool operator==(const JointState&, const JointState&) = default;
};

struct Demotion {
  int file;
  ActionToken proposed;
  ActionToken admitted;
};

struct StepOutcome {
  JointState next;
  std::vector<int> rewards;  // 0/1 per file
  int hits = 0;              // == sum of rewards
  std::vector<ActionToken> admitted;
  std::vector<Demotion> demotions;  // filled by advance()
};

// The store-capacity trigger. kCapacityBound evicts only when an arrival
// would push occupancy past capacity (post-step occupancy <= capacity).
// kReachesCapacity evicts as soon as occupancy reaches capacity, which caps
// stored files at capacity - 1.
enum class EvictionRule : std::uint8_t { kCapacityBound, kReachesCapacity };

// Dec-MDP environment over a contact plan and one request realization.
// State transitions are strictly sequential within an episode; distinct
// JointState values may advance concurrently. All randomness flows through
// the caller's Rng.
class Environment {
 public:
  Environment(const ContactGraph& graph, const RequestMatrix& requests,
              int capacity, EvictionRule rule = EvictionRule::kCapacityBound);

  const ContactGraph& graph() const { return *graph_; }
  const RequestMatrix& requests() const { return *requests_; }
  int files() const { return requests_->files(); }
  int horizon() const { return graph_->horizon(); }
  int capacity() const { return capacity_; }
  EvictionRule eviction_rule() const { return rule_; }

  JointState reset() const;

  // The action menu of file f at the current state. Terminal files get an
  // empty menu. A satellite file whose flag is set is forced: menu = {DELIVER}.
  std::vector<ActionToken> legal_actions(const JointState& state, int f) const;

  // True iff the two grounded transmissions share a gateway or satellite as
  // transmitter or receiver. Holds and initial-state picks never conflict.
  bool in_conflict(const JointState& state, int f, const ActionToken& a,
                   int f2, const ActionToken& a2) const;

  // Conflict resolution. Deliveries are admitted first; when several files on
  // one satellite propose delivery one is kept (uniform, satellites scanned in
  // ascending index) and the rest hold. Remaining files are scanned in
  // ascending index and demoted to hold on conflict with anything admitted.
  std::vector<ActionToken> resolve(const JointState& state,
                                   const std::vector<ActionToken>& proposed,
                                   Rng& rng) const;

  // Applies one slot of transitions; `admitted` must be legal and pairwise
  // conflict-free (resolve output always is).
  StepOutcome step(const JointState& state,
                   const std::vector<ActionToken>& admitted) const;

  // resolve + step; also fills StepOutcome::demotions.
  StepOutcome advance(const JointState& state,
                      const std::vector<ActionToken>& proposed, Rng& rng) const;

 private:
  struct Grounded {
    bool transmission = false;
    // Gateway/satellite endpoints, encoded as g:index or s:index + 1000000.
    int node_a = -1, node_b = -1;
  };
  Grounded ground(const JointState& state, int f, const ActionToken& a) const;
  void check_legal(const JointState& state, int f, const ActionToken& a,
                   bool admitted) const;
  ReqFlag flag_for(int f, int satellite, int t) const;

  const ContactGraph* graph_;
  const RequestMatrix* requests_;
  int capacity_;
  EvictionRule rule_;
};

long episode_hits(std::span<const StepOutcome> outcomes);

// Debug/trace export: t,file,loc_kind,loc_idx,flag,proposed,admitted,reward.
void write_trace_csv(std::ostream& out, const JointState& start,
                     std::span<const std::vector<ActionToken>> proposals,
                     std::span<const StepOutcome> outcomes);

}  // namespace csn
