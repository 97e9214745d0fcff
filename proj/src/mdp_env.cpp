#include "csn/mdp_env.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <stdexcept>

namespace csn {

StorageLedger::StorageLedger(int satellites, int files, int capacity)
    : satellites_(satellites), files_(files), capacity_(capacity) {
  if (capacity < 1)
    throw std::invalid_argument("storage ledger: capacity must be >= 1");
  stored_since_.assign(static_cast<std::size_t>(satellites) * files,
                       kNotStored);
  occupancy_.assign(satellites, 0);
}

void StorageLedger::record_arrival(int s, int f, int slot) {
  if (stored(s, f)) throw std::logic_error("ledger: file already stored here");
  stored_since_[cell(s, f)] = slot;
  ++occupancy_[s];
}

void StorageLedger::record_departure(int s, int f) {
  if (!stored(s, f)) throw std::logic_error("ledger: file not stored here");
  stored_since_[cell(s, f)] = kNotStored;
  --occupancy_[s];
}

int StorageLedger::oldest_file(int s) const {
  int best = -1;
  int best_slot = 0;
  for (int f = 0; f < files_; ++f) {
    const int since = stored_since(s, f);
    if (since == kNotStored) continue;
    if (best == -1 || since < best_slot) {
      best = f;
      best_slot = since;
    }
  }
  if (best == -1) throw std::logic_error("ledger: no file stored");
  return best;
}

std::string to_string(const ActionToken& a) {
  switch (a.verb) {
    case Verb::kHold: return "HOLD";
    case Verb::kDeliver: return "DELIVER";
    case Verb::kToGateway: return "TO_GW(" + std::to_string(a.target) + ")";
    case Verb::kToSatellite: return "TO_SAT(" + std::to_string(a.target) + ")";
  }
  return "?";
}

Environment::Environment(const ContactGraph& graph,
                         const RequestMatrix& requests, int capacity,
                         EvictionRule rule)
    : graph_(&graph), requests_(&requests), capacity_(capacity), rule_(rule) {
  if (capacity < 1)
    throw std::invalid_argument("environment: capacity must be >= 1");
  if (!graph.indexed())
    throw std::invalid_argument("environment: graph must be finalized valid");
  if (requests.horizon() != graph.horizon() ||
      requests.users() != graph.user_clusters())
    throw std::invalid_argument(
        "environment: request matrix dimensions do not match the graph");
}

JointState Environment::reset() const {
  JointState s;
  s.locals.assign(files(), LocalState{NodeRef::initial(), ReqFlag::kUndefined});
  s.ledger = StorageLedger(graph_->satellites(), files(), capacity_);
  s.t = 0;
  return s;
}

ReqFlag Environment::flag_for(int f, int satellite, int t) const {
  if (t >= horizon()) return ReqFlag::kNo;  // no requests beyond the horizon
  const int user = graph_->user_of(satellite, t);
  return requests_->at(user, f, t) ? ReqFlag::kYes : ReqFlag::kNo;
}

std::vector<ActionToken> Environment::legal_actions(const JointState& state,
                                                    int f) const {
  const LocalState& local = state.locals.at(f);
  std::vector<ActionToken> out;
  switch (local.location.kind) {
    case NodeKind::kInitial:
      out.push_back(ActionToken::hold());
      for (int g = 0; g < graph_->gateways(); ++g)
        out.push_back(ActionToken::to_gateway(g));
      break;
    case NodeKind::kGateway: {
      out.push_back(ActionToken::hold());
      // Uplink opportunities: satellites whose GS edge comes from this
      // gateway at the current slot.
      for (int s = 0; s < graph_->satellites(); ++s)
        if (graph_->gateway_into(s, state.t) == local.location.index)
          out.push_back(ActionToken::to_satellite(s));
      break;
    }
    case NodeKind::kSatellite:
      if (local.flag == ReqFlag::kYes) {
        out.push_back(ActionToken::deliver());
      } else {
        out.push_back(ActionToken::hold());
        for (int s2 : graph_->ss_neighbors(local.location.index, state.t))
          out.push_back(ActionToken::to_satellite(s2));
      }
      break;
    case NodeKind::kTerminal:
      break;  // no actions; the state stays terminal
    case NodeKind::kUserCluster:
      throw std::logic_error("file located at a user cluster");
  }
  return out;
}

void Environment::check_legal(const JointState& state, int f,
                              const ActionToken& a, bool admitted) const {
  // HOLD is always applicable in an admitted set: the resolver imposes it on
  // demoted files (including forced-delivery losers), and it is the no-op
  // placeholder for terminal files.
  if (a == ActionToken::hold() && (admitted || state.locals.at(f).at_terminal()))
    return;
  if (state.locals.at(f).at_terminal())
    throw std::invalid_argument("file " + std::to_string(f) +
                                " is terminal; only HOLD placeholder allowed");
  const auto legal = legal_actions(state, f);
  if (std::find(legal.begin(), legal.end(), a) == legal.end())
    throw std::invalid_argument("action " + to_string(a) +
                                " illegal for file " + std::to_string(f) +
                                " at " + to_string(state.locals[f].location) +
                                " (slot " + std::to_string(state.t) + ")");
}

Environment::Grounded Environment::ground(const JointState& state, int f,
                                          const ActionToken& a) const {
  constexpr int kSatTag = 1000000;
  const LocalState& local = state.locals.at(f);
  Grounded g;
  switch (a.verb) {
    case Verb::kHold:
    case Verb::kToGateway:
      return g;  // holds and initial-state picks never contend
    case Verb::kDeliver:
      g.transmission = true;
      g.node_a = kSatTag + local.location.index;
      g.node_b = -1;  // the user endpoint is not a contention point
      return g;
    case Verb::kToSatellite:
      g.transmission = true;
      g.node_b = kSatTag + a.target;
      g.node_a = local.location.kind == NodeKind::kGateway
                     ? local.location.index
                     : kSatTag + local.location.index;
      return g;
  }
  return g;
}

bool Environment::in_conflict(const JointState& state, int f,
                              const ActionToken& a, int f2,
                              const ActionToken& a2) const {
  if (f == f2) return false;
  const Grounded ga = ground(state, f, a);
  const Grounded gb = ground(state, f2, a2);
  if (!ga.transmission || !gb.transmission) return false;
  for (int x : {ga.node_a, ga.node_b}) {
    if (x < 0) continue;
    if (x == gb.node_a || x == gb.node_b) return true;
  }
  return false;
}

std::vector<ActionToken> Environment::resolve(
    const JointState& state, const std::vector<ActionToken>& proposed,
    Rng& rng) const {
  const int n = files();
  if (static_cast<int>(proposed.size()) != n)
    throw std::invalid_argument("resolve: proposal count != file count");
  for (int f = 0; f < n; ++f) check_legal(state, f, proposed[f], false);

  std::vector<ActionToken> admitted = proposed;
  std::vector<char> settled(n, 0);

  // Phase 1: deliveries first. One per satellite; surplus proposals hold.
  std::map<int, std::vector<int>> deliver_by_sat;  // ordered by satellite
  for (int f = 0; f < n; ++f) {
    if (proposed[f].verb == Verb::kDeliver)
      deliver_by_sat[state.locals[f].location.index].push_back(f);
  }
  for (auto& [sat, candidates] : deliver_by_sat) {
    int keep = candidates.front();
    if (candidates.size() > 1)
      keep = candidates[rng.uniform_int(candidates.size())];
    for (int f : candidates) {
      if (f != keep) admitted[f] = ActionToken::hold();
      settled[f] = 1;
    }
  }

  // Phase 2: remaining files in ascending index; on conflict with anything
  // already admitted, the file stays where it is.
  for (int f = 0; f < n; ++f) {
    if (settled[f]) continue;
    bool clash = false;
    for (int f2 = 0; f2 < n && !clash; ++f2) {
      if (f2 == f || !settled[f2]) continue;
      clash = in_conflict(state, f, admitted[f], f2, admitted[f2]);
    }
    if (clash) admitted[f] = ActionToken::hold();
    settled[f] = 1;
  }
  return admitted;
}

StepOutcome Environment::step(const JointState& state,
                              const std::vector<ActionToken>& admitted) const {
  const int n = files();
  if (static_cast<int>(admitted.size()) != n)
    throw std::invalid_argument("step: action count != file count");
  if (state.t >= horizon())
    throw std::invalid_argument("step: episode horizon exhausted");
  for (int f = 0; f < n; ++f) check_legal(state, f, admitted[f], true);
  for (int f = 0; f < n; ++f)
    for (int f2 = f + 1; f2 < n; ++f2)
      if (in_conflict(state, f, admitted[f], f2, admitted[f2]))
        throw std::invalid_argument("step: admitted actions for files " +
                                    std::to_string(f) + " and " +
                                    std::to_string(f2) + " are in conflict");

  StepOutcome out;
  out.next = state;
  out.next.t = state.t + 1;
  out.rewards.assign(n, 0);
  out.admitted = admitted;
  const int arrival_slot = state.t + 1;

  auto evict_if_needed = [&](int sat) {
    const int threshold =
        rule_ == EvictionRule::kCapacityBound ? capacity_ + 1 : capacity_;
    if (out.next.ledger.occupancy(sat) < threshold) return;
    const int victim = out.next.ledger.oldest_file(sat);
    out.next.ledger.record_departure(sat, victim);
    out.next.locals[victim] = {NodeRef::terminal(), ReqFlag::kUndefined};
  };

  for (int f = 0; f < n; ++f) {
    const LocalState& local = state.locals[f];
    const ActionToken& a = admitted[f];
    switch (a.verb) {
      case Verb::kHold:
        break;  // location unchanged (and no-op for evicted/terminal files)
      case Verb::kDeliver:
        out.rewards[f] = 1;  // file stays stored on its satellite
        break;
      case Verb::kToGateway:
        out.next.locals[f] = {NodeRef::gateway(a.target), ReqFlag::kUndefined};
        break;
      case Verb::kToSatellite: {
        if (local.location.kind == NodeKind::kSatellite)
          out.next.ledger.record_departure(local.location.index, f);
        out.next.locals[f] = {NodeRef::satellite(a.target), ReqFlag::kUndefined};
        out.next.ledger.record_arrival(a.target, f, arrival_slot);
        evict_if_needed(a.target);
        break;
      }
    }
  }

  // Refresh request flags from the next slot's downlink associations.
  for (int f = 0; f < n; ++f) {
    LocalState& local = out.next.locals[f];
    if (local.location.kind == NodeKind::kSatellite)
      local.flag = flag_for(f, local.location.index, out.next.t);
  }

  for (int f = 0; f < n; ++f) out.hits += out.rewards[f];
  return out;
}

StepOutcome Environment::advance(const JointState& state,
                                 const std::vector<ActionToken>& proposed,
                                 Rng& rng) const {
  const std::vector<ActionToken> admitted = resolve(state, proposed, rng);
  StepOutcome out = step(state, admitted);
  for (int f = 0; f < files(); ++f)
    if (!(admitted[f] == proposed[f]))
      out.demotions.push_back({f, proposed[f], admitted[f]});
  return out;
}

long episode_hits(std::span<const StepOutcome> outcomes) {
  long total = 0;
  for (const StepOutcome& o : outcomes) total += o.hits;
  return total;
}

void write_trace_csv(std::ostream& out, const JointState& start,
                     std::span<const std::vector<ActionToken>> proposals,
                     std::span<const StepOutcome> outcomes) {
  out << "t,file,loc_kind,loc_idx,flag,proposed,admitted,reward\n";
  const JointState* state = &start;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    for (std::size_t f = 0; f < state->locals.size(); ++f) {
      const LocalState& local = state->locals[f];
      const char* kind = local.location.kind == NodeKind::kInitial  ? "I"
                         : local.location.kind == NodeKind::kTerminal ? "T"
                         : local.location.kind == NodeKind::kGateway  ? "G"
                                                                      : "S";
      const char* flag = local.flag == ReqFlag::kUndefined ? "-"
                         : local.flag == ReqFlag::kYes     ? "1"
                                                           : "0";
      out << state->t << ',' << f << ',' << kind << ',' << local.location.index
          << ',' << flag << ',' << to_string(proposals[i][f]) << ','
          << to_string(outcomes[i].admitted[f]) << ','
          << outcomes[i].rewards[f] << '\n';
    }
    state = &outcomes[i].next;
  }
}

}  // namespace csn
