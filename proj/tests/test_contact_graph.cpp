#include <doctest.h>

#include <set>
#include <stdexcept>
#include <tuple>

#include "csn/contact_graph.hpp"
#include "csn/rng.hpp"

using namespace csn;

namespace {

ConstellationSpec tiny_spec() {
  ConstellationSpec spec;
  spec.satellites = 1;
  spec.gateways = 1;
  spec.user_clusters = 1;
  spec.horizon = 2;
  spec.orbits = 1;
  spec.slots_per_revolution = 4;
  spec.ss_neighbor_span = 0;
  return spec;
}

ConstellationSpec paper_scale_spec() {
  ConstellationSpec spec;
  spec.satellites = 12;
  spec.gateways = 5;
  spec.user_clusters = 20;
  spec.horizon = 100;
  spec.orbits = 4;
  spec.slots_per_revolution = 24;
  spec.ss_neighbor_span = 1;
  spec.seed = 42;
  return spec;
}

}  // namespace

TEST_CASE("single-satellite spec forces one GS and one SU per slot") {
  const ContactGraph g = generate_constellation(tiny_spec());
  for (int t = 0; t < 2; ++t) {
    int gs = 0, su = 0, ss = 0;
    for (const ContactEdge& e : g.edges()) {
      if (e.slot != t) continue;
      if (e.kind == EdgeKind::kGatewaySat) ++gs;
      if (e.kind == EdgeKind::kSatUser) ++su;
      if (e.kind == EdgeKind::kSatSat) ++ss;
    }
    CHECK(gs == 1);
    CHECK(su == 1);
    CHECK(ss == 0);
  }
}

TEST_CASE("paper-scale constellation validates clean") {
  const ContactGraph g = generate_constellation(paper_scale_spec());
  CHECK(g.validate().empty());
  CHECK(g.satellites() == 12);
  CHECK(g.horizon() == 100);
}

TEST_CASE("zero neighbor span means no inter-satellite edges") {
  ConstellationSpec spec = paper_scale_spec();
  spec.ss_neighbor_span = 0;
  const ContactGraph g = generate_constellation(spec);
  for (const ContactEdge& e : g.edges()) CHECK(e.kind != EdgeKind::kSatSat);
}

TEST_CASE("invalid specs are rejected with a message") {
  ConstellationSpec spec = paper_scale_spec();
  spec.orbits = 5;  // 12 % 5 != 0
  CHECK_THROWS_WITH_AS(generate_constellation(spec),
                       doctest::Contains("divisible"), std::invalid_argument);
  spec = paper_scale_spec();
  spec.gateways = 0;
  CHECK_THROWS_AS(generate_constellation(spec), std::invalid_argument);
}

TEST_CASE("generated SS opportunities are symmetric per slot") {
  const ContactGraph g = generate_constellation(paper_scale_spec());
  std::set<std::tuple<int, int, int>> ss;
  for (const ContactEdge& e : g.edges())
    if (e.kind == EdgeKind::kSatSat)
      ss.insert({e.slot, e.src.index, e.dst.index});
  for (const auto& [t, a, b] : ss) CHECK(ss.count({t, b, a}) == 1);
  CHECK(!ss.empty());
}

TEST_CASE("save then load reproduces the graph exactly") {
  const ContactGraph g = generate_constellation(paper_scale_spec());
  const ContactGraph loaded = load_graph_text(save_graph(g));
  CHECK(loaded == g);
  CHECK(save_graph(loaded) == save_graph(g));
}

TEST_CASE("determinism: same spec gives byte-identical files, seeds differ") {
  const std::string a = save_graph(generate_constellation(paper_scale_spec()));
  const std::string b = save_graph(generate_constellation(paper_scale_spec()));
  CHECK(a == b);
  ConstellationSpec other = paper_scale_spec();
  other.seed = 43;
  CHECK(save_graph(generate_constellation(other)) != a);
}

TEST_CASE("header-only document with T=0 loads as an empty valid graph") {
  const ContactGraph g = load_graph_text("CSN v1 0 2 3 4\n");
  CHECK(g.horizon() == 0);
  CHECK(g.edges().empty());
  CHECK(g.validate().empty());
}

TEST_CASE("loader reports the line of a malformed edge") {
  CHECK_THROWS_WITH_AS(
      load_graph_text("CSN v1 2 1 1 1\n0 GS 0 0\n0 XX 0 0\n"),
      doctest::Contains("line 3"), std::runtime_error);
  CHECK_THROWS_WITH_AS(load_graph_text("CSN v1 2 1 1 1\n0 GS 0 9\n"),
                       doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      load_graph_text("CSN v1 2 1 1 1\n0 GS 0 0\n0 GS 0 0\n"),
      doctest::Contains("duplicate"), std::runtime_error);
}

TEST_CASE("loader names the violated coverage invariant and slot") {
  // Satellite 0 has no SU edge at slot 1.
  const std::string doc =
      "CSN v1 2 1 1 1\n"
      "0 GS 0 0\n0 SU 0 0\n"
      "1 GS 0 0\n";
  CHECK_THROWS_WITH_AS(load_graph_text(doc), doctest::Contains("slot 1"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(load_graph_text(doc), doctest::Contains("SU"),
                       std::runtime_error);
}

TEST_CASE("validate lists constructed violations") {
  ContactGraph g(1, 2, 2, 2);
  // Two GS edges into satellite 0, none into satellite 1, plus a
  // gateway-to-gateway edge.
  g.add_edge({0, NodeRef::gateway(0), NodeRef::satellite(0), EdgeKind::kGatewaySat});
  g.add_edge({0, NodeRef::gateway(1), NodeRef::satellite(0), EdgeKind::kGatewaySat});
  g.add_edge({0, NodeRef::satellite(0), NodeRef::user_cluster(0), EdgeKind::kSatUser});
  g.add_edge({0, NodeRef::satellite(1), NodeRef::user_cluster(1), EdgeKind::kSatUser});
  g.add_edge({0, NodeRef::gateway(0), NodeRef::gateway(1), EdgeKind::kGatewaySat});
  g.finalize();

  const auto violations = g.validate();
  int two_gs = 0, no_gs = 0, bad_pair = 0;
  for (const Violation& v : violations) {
    if (v.message.find("satellite 0 has") != std::string::npos &&
        v.message.find("incoming") != std::string::npos)
      ++two_gs;
    if (v.message.find("satellite 1 has 0 incoming") != std::string::npos)
      ++no_gs;
    if (v.message.find("inconsistent") != std::string::npos) ++bad_pair;
  }
  CHECK(two_gs == 1);
  CHECK(no_gs == 1);
  CHECK(bad_pair == 1);
}

TEST_CASE("out_edges ordering and contents") {
  const ContactGraph g = generate_constellation(paper_scale_spec());
  SUBCASE("gateway lists its hold edge first") {
    const auto edges = g.out_edges(NodeRef::gateway(0), 3);
    REQUIRE(!edges.empty());
    CHECK(edges.front().kind == EdgeKind::kGatewayHold);
    for (std::size_t i = 1; i < edges.size(); ++i)
      CHECK(edges[i].kind == EdgeKind::kGatewaySat);
  }
  SUBCASE("satellite has exactly one SU edge per slot") {
    for (int t = 0; t < g.horizon(); t += 17) {
      const auto edges = g.out_edges(NodeRef::satellite(5), t);
      int su = 0;
      for (const auto& e : edges)
        if (e.kind == EdgeKind::kSatUser) ++su;
      CHECK(su == 1);
    }
  }
  SUBCASE("user clusters never transmit") {
    CHECK(g.out_edges(NodeRef::user_cluster(0), 0).empty());
  }
  SUBCASE("slot out of range throws") {
    CHECK_THROWS_AS(g.out_edges(NodeRef::gateway(0), 100), std::out_of_range);
  }
}

TEST_CASE("random specs always generate seamless coverage") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    ConstellationSpec spec;
    spec.orbits = 1 + static_cast<int>(rng.uniform_int(4));
    spec.satellites = spec.orbits * (1 + static_cast<int>(rng.uniform_int(5)));
    spec.gateways = 1 + static_cast<int>(rng.uniform_int(6));
    spec.user_clusters = 1 + static_cast<int>(rng.uniform_int(24));
    spec.horizon = 1 + static_cast<int>(rng.uniform_int(40));
    spec.slots_per_revolution = 1 + static_cast<int>(rng.uniform_int(48));
    spec.ss_neighbor_span = static_cast<int>(rng.uniform_int(4));
    spec.seed = rng.next_u64();
    const ContactGraph g = generate_constellation(spec);
    CAPTURE(spec.satellites);
    CHECK(g.validate().empty());
  }
}
