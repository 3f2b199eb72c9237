#pragma once

// Brute-force reference implementations used only by tests. They share no
// code path with the library algorithms they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "otss/flexgrid.hpp"
#include "otss/otss_core.hpp"
#include "otss/topology.hpp"

namespace otss::testing {

/// Every simple path src -> dst by depth-first search, sorted by
/// (length, hops, link ids).
inline std::vector<std::vector<LinkId>> all_simple_paths(const Topology& topo, NodeId src, NodeId dst) {
  std::vector<std::vector<LinkId>> out;
  std::vector<LinkId> links;
  std::vector<bool> on_path(static_cast<std::size_t>(topo.node_count()), false);
  std::function<void(NodeId)> dfs = [&](NodeId n) {
    if (n == dst) {
      out.push_back(links);
      return;
    }
    on_path[n] = true;
    for (const auto& l : topo.links()) {
      if (l.tail != n || on_path[l.head]) continue;
      links.push_back(l.id);
      dfs(l.head);
      links.pop_back();
    }
    on_path[n] = false;
  };
  dfs(src);
  auto length = [&](const std::vector<LinkId>& p) {
    std::int64_t mm = 0;
    for (LinkId id : p) mm += topo.link(id).length_mm;
    return mm;
  };
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    const auto la = length(a);
    const auto lb = length(b);
    if (la != lb) return la < lb;
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return out;
}

/// Random connected graph: a random spanning tree plus extra edges. Lengths
/// are drawn from a small set so equal-length paths are common.
inline Topology random_topology(std::mt19937_64& rng, int nodes, int extra_edges,
                                std::vector<double> lengths = {100, 150, 200, 250, 300}) {
  std::vector<FiberEdge> edges;
  auto pick_len = [&] { return lengths[std::uniform_int_distribution<std::size_t>(0, lengths.size() - 1)(rng)]; };
  for (NodeId v = 1; v < nodes; ++v) {
    edges.push_back({std::uniform_int_distribution<NodeId>(0, v - 1)(rng), v, pick_len()});
  }
  for (int i = 0; i < extra_edges; ++i) {
    const NodeId u = std::uniform_int_distribution<NodeId>(0, nodes - 1)(rng);
    const NodeId v = std::uniform_int_distribution<NodeId>(0, nodes - 1)(rng);
    if (u == v) continue;
    const bool dup = std::any_of(edges.begin(), edges.end(), [&](const FiberEdge& e) {
      return (e.u == u && e.v == v) || (e.u == v && e.v == u);
    });
    if (!dup) edges.push_back({u, v, pick_len()});
  }
  return Topology::from_edges(nodes, edges);
}

/// Whether two one-slice windows starting at a and b overlap on a circle of
/// length `frame`, by unrolling b one frame either way.
inline bool windows_overlap(Ticks a, Ticks b, Ticks slice, Ticks frame) {
  for (Ticks shift : {-frame, Ticks{0}, frame}) {
    const Ticks lo = std::max(a, b + shift);
    const Ticks hi = std::min(a + slice, b + shift + slice);
    if (lo < hi) return true;
  }
  return false;
}

/// First-fit offset by trying every offset against every reservation.
inline std::optional<int> brute_force_offset(const PathSpec& path, const CalendarSet& calendars,
                                             const OtssConfig& config) {
  const Ticks frame = config.frame_ticks();
  const Ticks slice = config.slice_ticks();
  for (int s = 0; s < config.slices_per_frame(); ++s) {
    bool ok = true;
    for (std::size_t i = 0; i < path.hops() && ok; ++i) {
      const Ticks start = ((s * slice + to_ticks(path.cumulative_delay_s[i])) % frame + frame) % frame;
      for (const auto& [id, w] : calendars.at(path.links[i]).reservations()) {
        if (windows_overlap(start, w.start, slice, frame)) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return s;
  }
  return std::nullopt;
}

/// Erlang-B by direct summation in log space.
inline double erlang_b_direct(double load, int servers) {
  if (load == 0.0) return servers == 0 ? 1.0 : 0.0;
  double denom = 0.0;
  const double top = servers * std::log(load) - std::lgamma(servers + 1.0);
  for (int i = 0; i <= servers; ++i) denom += std::exp(i * std::log(load) - std::lgamma(i + 1.0) - top);
  return 1.0 / denom;
}

/// Minimum virtual-hop count over every accommodation reachable through the
/// candidate nodes (request endpoints plus live lightpath endpoints), trying
/// every parallel lightpath and every new-lightpath placement order on a
/// private copy of the spectrum. nullopt when nothing fits the bound.
inline std::optional<std::size_t> min_hops_exhaustive(const TrafficRequest& request, const VirtualTopology& vtopo,
                                                      const SpectrumState& spectrum, const RouteTable& routes,
                                                      const GridConfig& grid) {
  std::vector<NodeId> nodes{request.src, request.dst};
  for (const auto& [id, lp] : vtopo.lightpaths()) {
    nodes.push_back(lp.src());
    nodes.push_back(lp.dst());
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  std::optional<std::size_t> best;
  std::vector<NodeId> seq{request.src};
  std::vector<const PathSpec*> hop_routes;
  SpectrumState scratch = spectrum;

  std::function<void()> dfs = [&] {
    const NodeId u = seq.back();
    if (u == request.dst) {
      double latency = 0.0;
      for (const auto* r : hop_routes) latency += r->total_delay_s;
      latency += grid.grooming_delay_s * static_cast<double>(hop_routes.size() - 1);
      if (latency <= request.latency_bound_s && (!best || hop_routes.size() < *best)) best = hop_routes.size();
      return;
    }
    for (NodeId v : nodes) {
      if (std::find(seq.begin(), seq.end(), v) != seq.end()) continue;
      seq.push_back(v);
      for (const auto& [id, lp] : vtopo.lightpaths()) {
        if (lp.src() != u || lp.dst() != v || lp.residual_bps < request.bandwidth_bps) continue;
        hop_routes.push_back(&lp.route);
        dfs();
        hop_routes.pop_back();
      }
      if (grid.lightpath_capacity_bps() >= request.bandwidth_bps) {
        for (const auto& route : routes.paths(u, v)) {
          std::optional<int> slot;
          for (int s = 0; s < scratch.slots_per_link() && !slot; ++s) {
            if (std::all_of(route.links.begin(), route.links.end(),
                            [&](LinkId l) { return scratch.is_free(l, s); })) {
              slot = s;
            }
          }
          if (!slot) continue;
          // First route in table order with a continuous free slot, as provisioned.
          scratch.claim(route, *slot, -7);
          hop_routes.push_back(&route);
          dfs();
          hop_routes.pop_back();
          scratch.clear(route, *slot, -7);
          break;
        }
      }
      seq.pop_back();
    }
  };
  dfs();
  return best;
}

}  // namespace otss::testing
