#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "otss/errors.hpp"
#include "otss/flexgrid.hpp"

using namespace otss;

namespace {

GridConfig grid(double slot_hz) {
  GridConfig g;
  g.slot_width_hz = slot_hz;
  return g;
}

TrafficRequest request(RequestId id, NodeId s, NodeId d, double bw = 500e3) {
  TrafficRequest r;
  r.id = id;
  r.src = s;
  r.dst = d;
  r.bandwidth_bps = bw;
  r.latency_bound_s = 10e-3;
  r.holding_time_s = 1.0;
  return r;
}

// Spectrum bits must match the live lightpaths exactly; residuals must add up.
void check_consistent(const VirtualTopology& vtopo, const SpectrumState& spectrum) {
  std::size_t claimed = 0;
  for (const auto& [id, lp] : vtopo.lightpaths()) {
    CHECK_FALSE(lp.carried.empty());
    double carried_bw = 0.0;
    for (RequestId r : lp.carried) carried_bw += vtopo.route_of(r)->bandwidth_bps;
    CHECK(carried_bw + lp.residual_bps == lp.capacity_bps);
    CHECK(lp.residual_bps >= 0.0);
    for (LinkId l : lp.route.links) CHECK(spectrum.owner(l, lp.slot_index) == id);
    claimed += lp.route.hops();
  }
  CHECK(spectrum.occupied() == claimed);
  for (const auto& [rid, route] : vtopo.routes()) {
    for (LightpathId h : route.hops) {
      REQUIRE(vtopo.find(h));
      CHECK(vtopo.at(h).carried.contains(rid));
    }
  }
}

}  // namespace

TEST_CASE("GridConfig") {
  CHECK(grid(50e9).slots_per_link() == 1);
  CHECK(grid(25e9).slots_per_link() == 2);
  CHECK(grid(12.5e9).slots_per_link() == 4);
  CHECK(grid(6.25e9).slots_per_link() == 8);
  CHECK(grid(6.25e9).lightpath_capacity_bps() == 6.25e9);
  CHECK_THROWS_AS(grid(40e9).validate(), ValidationError);
  CHECK_THROWS_AS(grid(100e9).validate(), ValidationError);
}

TEST_CASE("establish_lightpath: first fit on empty spectrum") {
  const auto t = load_topology("nodes 3\n0 1 100\n1 2 100\n0 2 300\n");
  const auto g = grid(6.25e9);
  const RouteTable routes(t, 5);
  SpectrumState spectrum(t.link_count(), g.slots_per_link());
  VirtualTopology vtopo;
  const auto* lp = establish_lightpath(0, 2, routes, spectrum, vtopo, g);
  REQUIRE(lp);
  CHECK(lp->route.nodes == std::vector<NodeId>{0, 1, 2});
  CHECK(lp->slot_index == 0);
  CHECK(lp->capacity_bps == 6.25e9);
  CHECK(spectrum.occupied() == 2);
}

TEST_CASE("establish_lightpath: saturated bridge is infeasible") {
  // Link 1-2 is a bridge; every 0->3 route crosses it.
  const auto t = load_topology("nodes 4\n0 1 100\n0 2 200\n1 2 50\n2 3 100\n");
  const auto g = grid(50e9);
  const RouteTable routes(t, 5);
  SpectrumState spectrum(t.link_count(), g.slots_per_link());
  VirtualTopology vtopo;
  REQUIRE(establish_lightpath(2, 3, routes, spectrum, vtopo, g));
  CHECK(establish_lightpath(0, 3, routes, spectrum, vtopo, g) == nullptr);
}

TEST_CASE("establish_lightpath: ring with random occupancy matches exhaustive search") {
  const auto t = load_topology("nodes 4\n0 1 100\n1 2 120\n2 3 90\n3 0 110\n");
  const auto g = grid(12.5e9);
  const RouteTable routes(t, 5);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    SpectrumState spectrum(t.link_count(), g.slots_per_link());
    for (LinkId l = 0; l < t.link_count(); ++l) {
      for (int s = 0; s < g.slots_per_link(); ++s) {
        if (std::bernoulli_distribution(0.45)(rng)) spectrum.claim(t.make_path({l}), s, 999);
      }
    }
    const NodeId src = std::uniform_int_distribution<NodeId>(0, 3)(rng);
    const NodeId dst = (src + std::uniform_int_distribution<NodeId>(1, 3)(rng)) % 4;

    std::optional<std::pair<std::size_t, int>> expected;
    const auto candidates = routes.paths(src, dst);
    for (std::size_t r = 0; r < candidates.size() && !expected; ++r) {
      for (int s = 0; s < g.slots_per_link() && !expected; ++s) {
        bool free = true;
        for (LinkId l : candidates[r].links) free = free && spectrum.is_free(l, s);
        if (free) expected = {r, s};
      }
    }

    VirtualTopology vtopo;
    const auto* lp = establish_lightpath(src, dst, routes, spectrum, vtopo, g);
    REQUIRE((lp != nullptr) == expected.has_value());
    if (lp) {
      CHECK(lp->route == candidates[expected->first]);
      CHECK(lp->slot_index == expected->second);
    }
  }
}

TEST_CASE("flexgrid_latency") {
  const auto t = load_topology("nodes 4\n0 1 400\n1 2 200\n2 3 200\n");
  const auto g = grid(6.25e9);
  const auto p01 = t.make_path({*t.find_link(0, 1)});
  const auto p12 = t.make_path({*t.find_link(1, 2)});
  const auto p23 = t.make_path({*t.find_link(2, 3)});
  const std::vector<const PathSpec*> one{&p01};
  CHECK(flexgrid_latency(one, g) == doctest::Approx(2.0e-3));
  const std::vector<const PathSpec*> two{&p12, &p23};
  CHECK(flexgrid_latency(two, g) == doctest::Approx(7.0e-3));

  const auto s = load_topology("nodes 4\n0 1 100\n1 2 100\n2 3 100\n");
  const auto a = s.make_path({*s.find_link(0, 1)});
  const auto b = s.make_path({*s.find_link(1, 2)});
  const auto c = s.make_path({*s.find_link(2, 3)});
  const std::vector<const PathSpec*> three{&a, &b, &c};
  CHECK(flexgrid_latency(three, g) == doctest::Approx(11.5e-3));

  CHECK_THROWS_AS(flexgrid_latency({}, g), std::invalid_argument);
  const std::vector<const PathSpec*> broken{&a, &c};
  CHECK_THROWS_AS(flexgrid_latency(broken, g), std::invalid_argument);
}

TEST_CASE("min_thv_route: direct cases") {
  const auto t = load_topology("nodes 3\n0 1 200\n1 2 200\n0 2 400\n");
  const auto g = grid(6.25e9);
  const RouteTable routes(t, 5);
  SpectrumState spectrum(t.link_count(), g.slots_per_link());
  VirtualTopology vtopo;

  const auto first = min_thv_route(request(1, 0, 2), vtopo, spectrum, routes, g);
  REQUIRE(first.admitted());
  CHECK(first->hops.size() == 1);
  CHECK(first->grooming_nodes == 0);
  CHECK(vtopo.lightpaths().size() == 1);

  // A live direct lightpath with spare capacity is reused.
  const auto second = min_thv_route(request(2, 0, 2), vtopo, spectrum, routes, g);
  REQUIRE(second.admitted());
  CHECK(second->hops == first->hops);
  CHECK(second->latency_s == doctest::Approx(vtopo.at(first->hops[0]).route.total_delay_s));
  CHECK(vtopo.lightpaths().size() == 1);
  CHECK(vtopo.at(first->hops[0]).residual_bps == 6.25e9 - 1e6);
  check_consistent(vtopo, spectrum);
}

TEST_CASE("min_thv_route: grooms over two lightpaths when the spectrum is full") {
  // Path graph A=0, B=1, C=2 with one slot per link.
  const auto t = load_topology("nodes 3\n0 1 200\n1 2 200\n");
  const auto g = grid(50e9);
  const RouteTable routes(t, 5);
  SpectrumState spectrum(t.link_count(), g.slots_per_link());
  VirtualTopology vtopo;
  REQUIRE(min_thv_route(request(1, 0, 1), vtopo, spectrum, routes, g));
  REQUIRE(min_thv_route(request(2, 1, 2), vtopo, spectrum, routes, g));

  const auto groomed = min_thv_route(request(3, 0, 2), vtopo, spectrum, routes, g);
  REQUIRE(groomed.admitted());
  CHECK(groomed->hops.size() == 2);
  CHECK(groomed->grooming_nodes == 1);
  CHECK(groomed->latency_s == doctest::Approx(1e-3 + 1e-3 + 5e-3));
  check_consistent(vtopo, spectrum);

  SUBCASE("reverse direction uses its own fibres") {
    const auto reverse = min_thv_route(request(4, 2, 0), vtopo, spectrum, routes, g);
    REQUIRE(reverse.admitted());
    CHECK(reverse->grooming_nodes == 0);
  }
  SUBCASE("demand above lightpath capacity is a resource block") {
    const auto fat = min_thv_route(request(5, 0, 2, 60e9), vtopo, spectrum, routes, g);
    CHECK(fat.reason() == BlockReason::resource);
  }
}

TEST_CASE("min_thv_route: groomed route over the bound is a latency block") {
  const auto t = load_topology("nodes 3\n0 1 700\n1 2 700\n");  // 3.5 ms each
  const auto g = grid(50e9);
  const RouteTable routes(t, 5);
  SpectrumState spectrum(t.link_count(), g.slots_per_link());
  VirtualTopology vtopo;
  REQUIRE(min_thv_route(request(1, 0, 1), vtopo, spectrum, routes, g));
  REQUIRE(min_thv_route(request(2, 1, 2), vtopo, spectrum, routes, g));
  const auto blocked = min_thv_route(request(3, 0, 2), vtopo, spectrum, routes, g);
  CHECK(blocked.reason() == BlockReason::latency);
  check_consistent(vtopo, spectrum);
}

TEST_CASE("min_thv_route: capacity limits reuse") {
  const auto t = load_topology("nodes 2\n0 1 100\n");
  const auto g = grid(25e9);  // two slots of 25 Gb/s
  const RouteTable routes(t, 5);
  SpectrumState spectrum(t.link_count(), g.slots_per_link());
  VirtualTopology vtopo;
  REQUIRE(min_thv_route(request(1, 0, 1, 20e9), vtopo, spectrum, routes, g));
  REQUIRE(min_thv_route(request(2, 0, 1, 20e9), vtopo, spectrum, routes, g));
  CHECK(vtopo.lightpaths().size() == 2);
  CHECK(min_thv_route(request(3, 0, 1, 20e9), vtopo, spectrum, routes, g).reason() == BlockReason::resource);
  CHECK(min_thv_route(request(4, 0, 1, 30e9), vtopo, spectrum, routes, g).reason() == BlockReason::resource);
  REQUIRE(min_thv_route(request(5, 0, 1, 5e9), vtopo, spectrum, routes, g));
  check_consistent(vtopo, spectrum);
}

TEST_CASE("release_flexgrid") {
  const auto t = load_topology("nodes 2\n0 1 100\n");
  const auto g = grid(6.25e9);
  const RouteTable routes(t, 5);
  SpectrumState spectrum(t.link_count(), g.slots_per_link());
  VirtualTopology vtopo;
  const auto a = min_thv_route(request(1, 0, 1), vtopo, spectrum, routes, g);
  const auto b = min_thv_route(request(2, 0, 1), vtopo, spectrum, routes, g);
  REQUIRE(a.admitted());
  REQUIRE(b.admitted());
  const LightpathId lp = a->hops[0];
  const double residual = vtopo.at(lp).residual_bps;

  release_flexgrid(1, vtopo, spectrum);
  REQUIRE(vtopo.find(lp));
  CHECK(vtopo.at(lp).residual_bps == residual + 500e3);

  release_flexgrid(2, vtopo, spectrum);
  CHECK(vtopo.lightpaths().empty());
  CHECK(spectrum.occupied() == 0);
  CHECK_THROWS_AS(release_flexgrid(2, vtopo, spectrum), std::out_of_range);
}

TEST_CASE("min_thv_route/release_flexgrid: random sequence matches a replay oracle") {
  std::mt19937_64 rng(11);
  const auto t = load_topology_file(OTSS_DATA_DIR "/ieee14.topo");
  const auto g = grid(12.5e9);
  const RouteTable routes(t, 5);
  SpectrumState spectrum(t.link_count(), g.slots_per_link());
  VirtualTopology vtopo;

  // Replay oracle: (link, slot) claims rebuilt from the lightpaths each admission created.
  std::map<LightpathId, std::set<std::pair<LinkId, int>>> lp_claims;
  std::map<LightpathId, std::set<RequestId>> lp_users;
  std::set<RequestId> live;

  for (RequestId id = 0; id < 1500; ++id) {
    if (!live.empty() && std::bernoulli_distribution(0.45)(rng)) {
      auto it = live.begin();
      std::advance(it, std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng));
      const RequestId gone = *it;
      for (const auto& hop : vtopo.route_of(gone)->hops) {
        lp_users[hop].erase(gone);
        if (lp_users[hop].empty()) {
          lp_claims.erase(hop);
          lp_users.erase(hop);
        }
      }
      release_flexgrid(gone, vtopo, spectrum);
      live.erase(it);
    } else {
      const NodeId s = std::uniform_int_distribution<NodeId>(0, 13)(rng);
      NodeId d = std::uniform_int_distribution<NodeId>(0, 12)(rng);
      if (d >= s) ++d;
      const auto result = min_thv_route(request(id, s, d, 2e9), vtopo, spectrum, routes, g);
      if (result.admitted()) {
        CHECK(result->latency_s <= 10e-3);
        live.insert(id);
        for (LightpathId hop : result->hops) {
          if (!lp_claims.contains(hop)) {
            const auto& lp = vtopo.at(hop);
            for (LinkId l : lp.route.links) lp_claims[hop].emplace(l, lp.slot_index);
          }
          lp_users[hop].insert(id);
        }
      }
    }

    std::set<std::tuple<LinkId, int, LightpathId>> expected;
    for (const auto& [lp, claims] : lp_claims) {
      for (const auto& [l, s] : claims) expected.emplace(l, s, lp);
    }
    std::set<std::tuple<LinkId, int, LightpathId>> actual;
    for (LinkId l = 0; l < t.link_count(); ++l) {
      for (int s = 0; s < g.slots_per_link(); ++s) {
        if (!spectrum.is_free(l, s)) actual.emplace(l, s, spectrum.owner(l, s));
      }
    }
    REQUIRE(actual == expected);
  }
  check_consistent(vtopo, spectrum);
}

TEST_CASE("min_thv_route: grooming-node count is minimal on small random instances") {
  std::mt19937_64 rng(5);
  int groomed = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const int n = std::uniform_int_distribution<int>(3, 6)(rng);
    const auto t = testing::random_topology(rng, n, 2, {150, 300, 450, 600, 900});
    const auto g = grid(std::bernoulli_distribution(0.5)(rng) ? 50e9 : 25e9);
    const RouteTable routes(t, 3);
    SpectrumState spectrum(t.link_count(), g.slots_per_link());
    VirtualTopology vtopo;

    RequestId id = 0;
    for (int warm = 0; warm < 12 && vtopo.lightpaths().size() < 6; ++warm) {
      const NodeId s = std::uniform_int_distribution<NodeId>(0, n - 1)(rng);
      NodeId d = std::uniform_int_distribution<NodeId>(0, n - 2)(rng);
      if (d >= s) ++d;
      (void)min_thv_route(request(id++, s, d, 10e9), vtopo, spectrum, routes, g);
    }
    const NodeId s = std::uniform_int_distribution<NodeId>(0, n - 1)(rng);
    NodeId d = std::uniform_int_distribution<NodeId>(0, n - 2)(rng);
    if (d >= s) ++d;
    const auto probe = request(id, s, d, 10e9);
    const auto expected = testing::min_hops_exhaustive(probe, vtopo, spectrum, routes, g);
    const auto got = min_thv_route(probe, vtopo, spectrum, routes, g);
    REQUIRE(got.admitted() == expected.has_value());
    if (got) {
      CHECK(got->hops.size() == *expected);
      CHECK(got->latency_s <= 10e-3);
      groomed += got->grooming_nodes > 0;
    }
    check_consistent(vtopo, spectrum);
  }
  CHECK(groomed > 0);
}
