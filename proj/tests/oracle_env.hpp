#pragma once

// Independent brute-force model of the routing process, kept deliberately
// separate from the production environment: conflicts are decided by literal
// case tables over the state/action pairs, transitions follow the per-action
// bullet rules one at a time, and states are plain maps. Used as the
// equivalence and optimality oracle on tiny instances.

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "csn/contact_graph.hpp"
#include "csn/mdp_env.hpp"
#include "csn/request_model.hpp"
#include "csn/rng.hpp"

namespace oracle {

enum class Op { kStayInitial, kPick, kStayGateway, kUplink, kDeliver, kStaySat, kMove, kNone };

struct Act {
  Op op = Op::kNone;
  int target = -1;  // gateway for kPick, satellite for kUplink/kMove

  friend bool operator==(const Act&, const Act&) = default;
};

struct FileState {
  char where = 'I';  // 'I', 'G', 'S', 'T'
  int idx = -1;
  int flag = -1;  // -1 undefined, else 0/1

  friend bool operator==(const FileState&, const FileState&) = default;
  friend auto operator<=>(const FileState&, const FileState&) = default;
};

struct State {
  std::vector<FileState> files;
  std::map<std::pair<int, int>, int> stored;  // (sat, file) -> arrival slot
  int t = 0;

  friend bool operator==(const State&, const State&) = default;

  std::string key() const {
    std::ostringstream out;
    out << t << '|';
    for (const FileState& f : files)
      out << f.where << f.idx << ',' << f.flag << ';';
    for (const auto& [cell, slot] : stored)
      out << cell.first << ':' << cell.second << '=' << slot << ' ';
    return out.str();
  }
};

struct Model {
  const csn::ContactGraph* graph;
  const csn::RequestMatrix* requests;
  int capacity;
  bool evict_at_capacity;  // true: discard as soon as occupancy == capacity

  State reset(int files) const {
    State s;
    s.files.assign(files, FileState{});
    return s;
  }

  int occupancy(const State& s, int sat) const {
    int n = 0;
    for (const auto& [cell, slot] : s.stored)
      if (cell.first == sat) ++n;
    return n;
  }

  int flag_at(int f, int sat, int t) const {
    if (t >= graph->horizon()) return 0;
    return requests->at(graph->user_of(sat, t), f, t) ? 1 : 0;
  }

  std::vector<Act> legal(const State& s, int f) const {
    const FileState& fs = s.files[f];
    std::vector<Act> out;
    if (fs.where == 'I') {
      out.push_back({Op::kStayInitial, -1});
      for (int g = 0; g < graph->gateways(); ++g) out.push_back({Op::kPick, g});
    } else if (fs.where == 'G') {
      out.push_back({Op::kStayGateway, -1});
      for (int sat = 0; sat < graph->satellites(); ++sat)
        if (graph->gateway_into(sat, s.t) == fs.idx)
          out.push_back({Op::kUplink, sat});
    } else if (fs.where == 'S') {
      if (fs.flag == 1) {
        out.push_back({Op::kDeliver, -1});
      } else {
        out.push_back({Op::kStaySat, -1});
        for (int nbr : graph->ss_neighbors(fs.idx, s.t))
          out.push_back({Op::kMove, nbr});
      }
    }
    return out;  // terminal: empty
  }

  // Literal transcription of the three conflict case tables. `a` belongs to
  // the file in state `fa`, `b` to the file in state `fb`.
  bool conflict(const FileState& fa, const Act& a, const FileState& fb,
                const Act& b) const {
    // The uplink case: f at a gateway g sends to satellite s.
    if (fa.where == 'G' && a.op == Op::kUplink) {
      const int g = fa.idx, s = a.target;
      if (fb.where == 'G' && b.op == Op::kUplink && fb.idx == g) return true;
      if (fb.where == 'G' && b.op == Op::kUplink && b.target == s) return true;
      if (fb.where == 'S' && b.op == Op::kMove && b.target == s) return true;
      if (fb.where == 'S' && b.op == Op::kMove && fb.idx == s) return true;
      if (fb.where == 'S' && b.op == Op::kDeliver && fb.idx == s) return true;
      return false;
    }
    // The delivery case: f at [s, 1] sends to its user cluster.
    if (fa.where == 'S' && a.op == Op::kDeliver) {
      const int s = fa.idx;
      if (fb.where == 'G' && b.op == Op::kUplink && b.target == s) return true;
      if (fb.where == 'S' && b.op == Op::kMove && b.target == s) return true;
      if (fb.where == 'S' && b.op == Op::kMove && fb.idx == s) return true;
      if (fb.where == 'S' && b.op == Op::kDeliver && fb.idx == s) return true;
      return false;
    }
    // The neighbor-move case: f at [s, 0] sends to s'.
    if (fa.where == 'S' && a.op == Op::kMove) {
      const int s = fa.idx, s2 = a.target;
      if (fb.where == 'G' && b.op == Op::kUplink &&
          (b.target == s || b.target == s2))
        return true;
      if (fb.where == 'S' && b.op == Op::kMove &&
          (b.target == s || b.target == s2 || fb.idx == s || fb.idx == s2))
        return true;
      if (fb.where == 'S' && b.op == Op::kDeliver &&
          (fb.idx == s || fb.idx == s2))
        return true;
      return false;
    }
    return false;  // stays, picks and terminal placeholders never conflict
  }

  // Two-phase resolution: deliveries first with a uniform pick per satellite
  // (satellites ascending), then the remaining files by index.
  std::vector<Act> resolve(const State& s, std::vector<Act> proposed,
                           csn::Rng& rng) const {
    const int n = static_cast<int>(proposed.size());
    std::vector<char> settled(n, 0);
    std::map<int, std::vector<int>> deliveries;
    for (int f = 0; f < n; ++f)
      if (proposed[f].op == Op::kDeliver)
        deliveries[s.files[f].idx].push_back(f);
    for (auto& [sat, group] : deliveries) {
      int keep = group.front();
      if (group.size() > 1) keep = group[rng.uniform_int(group.size())];
      for (int f : group) {
        if (f != keep) proposed[f] = {Op::kStaySat, -1};
        settled[f] = 1;
      }
    }
    for (int f = 0; f < n; ++f) {
      if (settled[f]) continue;
      bool clash = false;
      for (int f2 = 0; f2 < n && !clash; ++f2)
        if (f2 != f && settled[f2])
          clash = conflict(s.files[f], proposed[f], s.files[f2], proposed[f2]);
      if (clash) {
        proposed[f] =
            s.files[f].where == 'G' ? Act{Op::kStayGateway, -1} : Act{Op::kStaySat, -1};
      }
      settled[f] = 1;
    }
    return proposed;
  }

  void evict_check(State& s, int sat) const {
    const int occ = occupancy(s, sat);
    if (evict_at_capacity ? occ < capacity : occ <= capacity) return;
    int victim = -1, oldest = 0;
    for (const auto& [cell, slot] : s.stored) {
      if (cell.first != sat) continue;
      if (victim == -1 || slot < oldest ||
          (slot == oldest && cell.second < victim)) {
        victim = cell.second;
        oldest = slot;
      }
    }
    s.stored.erase({sat, victim});
    s.files[victim] = {'T', -1, -1};
  }

  State transition(const State& s, const std::vector<Act>& admitted,
                   std::vector<int>* rewards) const {
    State next = s;
    next.t = s.t + 1;
    if (rewards) rewards->assign(s.files.size(), 0);
    for (std::size_t f = 0; f < s.files.size(); ++f) {
      const FileState& fs = s.files[f];
      const Act& a = admitted[f];
      switch (a.op) {
        case Op::kStayInitial:
        case Op::kStayGateway:
        case Op::kStaySat:
        case Op::kNone:
          break;
        case Op::kPick:
          next.files[f] = {'G', a.target, -1};
          break;
        case Op::kUplink:
          next.stored[{a.target, static_cast<int>(f)}] = s.t + 1;
          next.files[f] = {'S', a.target, -1};
          evict_check(next, a.target);
          break;
        case Op::kDeliver:
          if (rewards) (*rewards)[f] = 1;
          break;
        case Op::kMove:
          next.stored.erase({fs.idx, static_cast<int>(f)});
          next.stored[{a.target, static_cast<int>(f)}] = s.t + 1;
          next.files[f] = {'S', a.target, -1};
          evict_check(next, a.target);
          break;
      }
    }
    for (std::size_t f = 0; f < next.files.size(); ++f) {
      FileState& fs = next.files[f];
      if (fs.where == 'S') fs.flag = flag_at(static_cast<int>(f), fs.idx, next.t);
    }
    return next;
  }

  // Exhaustive optimum: the best total reward over all resolvable joint
  // proposals, memoized on the serialized state.
  long best_hits(const State& s, std::map<std::string, long>& memo) const {
    if (s.t >= graph->horizon()) return 0;
    const std::string key = s.key();
    if (const auto it = memo.find(key); it != memo.end()) return it->second;

    const int n = static_cast<int>(s.files.size());
    std::vector<std::vector<Act>> menus(n);
    for (int f = 0; f < n; ++f) {
      menus[f] = legal(s, f);
      if (menus[f].empty()) menus[f].push_back({Op::kNone, -1});
    }
    long best = 0;
    std::vector<Act> joint(n);
    csn::Rng tie_rng(0);  // tie choice does not change the resulting state
    const std::function<void(int)> expand = [&](int f) {
      if (f == n) {
        const std::vector<Act> admitted = resolve(s, joint, tie_rng);
        std::vector<int> rewards;
        const State next = transition(s, admitted, &rewards);
        long total = best_hits(next, memo);
        for (int r : rewards) total += r;
        best = std::max(best, total);
        return;
      }
      for (const Act& a : menus[f]) {
        joint[f] = a;
        expand(f + 1);
      }
    };
    expand(0);
    memo[key] = best;
    return best;
  }
};

// Bridges between the production state and the oracle state.
inline State from_env(const csn::JointState& js, int satellites) {
  State s;
  s.t = js.t;
  for (const csn::LocalState& local : js.locals) {
    FileState fs;
    switch (local.location.kind) {
      case csn::NodeKind::kInitial: fs = {'I', -1, -1}; break;
      case csn::NodeKind::kTerminal: fs = {'T', -1, -1}; break;
      case csn::NodeKind::kGateway: fs = {'G', local.location.index, -1}; break;
      case csn::NodeKind::kSatellite:
        fs = {'S', local.location.index,
              local.flag == csn::ReqFlag::kYes ? 1 : 0};
        break;
      default: break;
    }
    s.files.push_back(fs);
  }
  for (int sat = 0; sat < satellites; ++sat)
    for (std::size_t f = 0; f < js.locals.size(); ++f)
      if (js.ledger.stored(sat, static_cast<int>(f)))
        s.stored[{sat, static_cast<int>(f)}] =
            js.ledger.stored_since(sat, static_cast<int>(f));
  return s;
}

inline Act from_token(const csn::ActionToken& token, const csn::LocalState& at) {
  using csn::Verb;
  switch (token.verb) {
    case Verb::kDeliver: return {Op::kDeliver, -1};
    case Verb::kToGateway: return {Op::kPick, token.target};
    case Verb::kToSatellite: return {Op::kUplink, token.target};  // see below
    case Verb::kHold:
      if (at.location.kind == csn::NodeKind::kInitial) return {Op::kStayInitial, -1};
      if (at.location.kind == csn::NodeKind::kGateway) return {Op::kStayGateway, -1};
      if (at.location.kind == csn::NodeKind::kSatellite) return {Op::kStaySat, -1};
      return {Op::kNone, -1};
  }
  return {Op::kNone, -1};
}

inline Act from_token_located(const csn::ActionToken& token,
                              const csn::LocalState& at) {
  Act a = from_token(token, at);
  if (token.verb == csn::Verb::kToSatellite &&
      at.location.kind == csn::NodeKind::kSatellite)
    a.op = Op::kMove;
  return a;
}

}  // namespace oracle
