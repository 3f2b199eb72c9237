#include "otss/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "otss/errors.hpp"

namespace otss {

namespace {

std::int64_t km_to_mm(double km) { return std::llround(km * 1e6); }

struct PathKey {
  std::int64_t length_mm;
  std::size_t hops;
  const std::vector<LinkId>* links;
};

bool key_less(const PathKey& a, const PathKey& b) {
  if (a.length_mm != b.length_mm) return a.length_mm < b.length_mm;
  if (a.hops != b.hops) return a.hops < b.hops;
  return *a.links < *b.links;
}

// Best path from src to dst under path_precedes, avoiding banned nodes and
// links. Labels carry the whole link sequence; the order is compatible with
// extension by one link, so label-setting search is exact.
std::optional<std::vector<LinkId>> constrained_shortest(const Topology& topo, NodeId src, NodeId dst,
                                                        const std::vector<bool>& banned_node,
                                                        const std::vector<bool>& banned_link) {
  struct Label {
    std::int64_t length_mm = 0;
    std::vector<LinkId> links;
    bool reached = false;
    bool settled = false;
  };
  std::vector<Label> label(static_cast<std::size_t>(topo.node_count()));
  label[src].reached = true;

  for (;;) {
    NodeId best = -1;
    for (NodeId n = 0; n < topo.node_count(); ++n) {
      const auto& l = label[n];
      if (!l.reached || l.settled) continue;
      if (best < 0 || key_less({l.length_mm, l.links.size(), &l.links},
                               {label[best].length_mm, label[best].links.size(), &label[best].links})) {
        best = n;
      }
    }
    if (best < 0) return std::nullopt;
    if (best == dst) return label[best].links;
    label[best].settled = true;

    for (LinkId id : topo.outgoing(best)) {
      if (banned_link[id]) continue;
      const auto& link = topo.link(id);
      if (banned_node[link.head] || label[link.head].settled) continue;
      std::vector<LinkId> links = label[best].links;
      links.push_back(id);
      const std::int64_t length = label[best].length_mm + link.length_mm;
      auto& target = label[link.head];
      if (!target.reached ||
          key_less({length, links.size(), &links}, {target.length_mm, target.links.size(), &target.links})) {
        target.reached = true;
        target.length_mm = length;
        target.links = std::move(links);
      }
    }
  }
}

}  // namespace

bool path_precedes(const PathSpec& a, const PathSpec& b) {
  return key_less({a.length_mm, a.hops(), &a.links}, {b.length_mm, b.hops(), &b.links});
}

Topology Topology::from_edges(int node_count, std::span<const FiberEdge> edges, double speed_km_per_ms) {
  if (node_count < 2) throw ValidationError("topology needs at least 2 nodes");
  if (!(speed_km_per_ms > 0.0) || !std::isfinite(speed_km_per_ms)) {
    throw ValidationError("propagation speed must be positive");
  }

  Topology topo;
  topo.node_count_ = node_count;
  topo.speed_km_per_ms_ = speed_km_per_ms;
  topo.adjacency_.resize(static_cast<std::size_t>(node_count));

  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& e : edges) {
    const std::string where = "edge " + std::to_string(e.u) + "-" + std::to_string(e.v);
    if (e.u < 0 || e.u >= node_count || e.v < 0 || e.v >= node_count) {
      throw ValidationError(where + ": node out of range");
    }
    if (e.u == e.v) throw ValidationError(where + ": self-loop");
    if (!(e.length_km > 0.0) || !std::isfinite(e.length_km)) {
      throw ValidationError(where + ": length must be positive");
    }
    const std::int64_t mm = km_to_mm(e.length_km);
    if (mm <= 0) throw ValidationError(where + ": length below 1 mm");
    if (!seen.emplace(std::min(e.u, e.v), std::max(e.u, e.v)).second) {
      throw ValidationError(where + ": duplicate edge");
    }

    topo.edges_.push_back(e);
    for (auto [tail, head] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
      const auto id = static_cast<LinkId>(topo.links_.size());
      topo.links_.push_back({id, tail, head, e.length_km, mm});
      topo.adjacency_[tail].push_back(id);
    }
  }

  std::vector<bool> visited(static_cast<std::size_t>(node_count), false);
  std::vector<NodeId> stack{0};
  visited[0] = true;
  int reached = 1;
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    for (LinkId id : topo.adjacency_[n]) {
      const NodeId h = topo.links_[id].head;
      if (!visited[h]) {
        visited[h] = true;
        ++reached;
        stack.push_back(h);
      }
    }
  }
  if (reached != node_count) throw ValidationError("topology is not connected");
  return topo;
}

std::span<const LinkId> Topology::outgoing(NodeId node) const {
  return adjacency_.at(static_cast<std::size_t>(node));
}

std::optional<LinkId> Topology::find_link(NodeId tail, NodeId head) const {
  if (tail < 0 || tail >= node_count_) return std::nullopt;
  for (LinkId id : adjacency_[tail]) {
    if (links_[id].head == head) return id;
  }
  return std::nullopt;
}

double Topology::delay_s(std::int64_t length_mm) const {
  // mm / (km/ms * 1e6 mm/km) gives ms.
  return static_cast<double>(length_mm) / (speed_km_per_ms_ * 1e9);
}

PathSpec Topology::make_path(std::vector<LinkId> links) const {
  PathSpec path;
  if (links.empty()) throw std::invalid_argument("path has no links");
  std::vector<bool> on_path(static_cast<std::size_t>(node_count_), false);
  std::int64_t cumulative = 0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (links[i] < 0 || links[i] >= link_count()) throw std::invalid_argument("unknown link id");
    const auto& l = links_[links[i]];
    if (i == 0) {
      path.nodes.push_back(l.tail);
      on_path[l.tail] = true;
    } else if (l.tail != path.nodes.back()) {
      throw std::invalid_argument("links are not contiguous");
    }
    if (on_path[l.head]) throw std::invalid_argument("path repeats a node");
    on_path[l.head] = true;
    path.nodes.push_back(l.head);
    path.cumulative_delay_s.push_back(delay_s(cumulative));
    cumulative += l.length_mm;
  }
  path.links = std::move(links);
  path.length_mm = cumulative;
  path.total_delay_s = delay_s(cumulative);
  return path;
}

Topology load_topology(std::string_view text, double speed_km_per_ms) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  std::optional<int> node_count;
  std::vector<FiberEdge> edges;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    if (!node_count) {
      std::string keyword;
      int n = 0;
      std::string trailing;
      if (!(fields >> keyword >> n) || keyword != "nodes" || (fields >> trailing)) {
        throw ParseError(line_no, "expected 'nodes N'");
      }
      if (n < 2) throw ValidationError("nodes must be at least 2");
      node_count = n;
      continue;
    }

    FiberEdge e;
    std::string trailing;
    if (!(fields >> e.u >> e.v >> e.length_km) || (fields >> trailing)) {
      throw ParseError(line_no, "expected 'u v length_km'");
    }
    edges.push_back(e);
  }
  if (!node_count) throw ParseError(line_no, "missing 'nodes N' line");
  return Topology::from_edges(*node_count, edges, speed_km_per_ms);
}

Topology load_topology_file(const std::filesystem::path& path, double speed_km_per_ms) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read topology file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_topology(buffer.str(), speed_km_per_ms);
}

double propagation_delay(const Topology& topology, std::span<const LinkId> links) {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const auto& l = topology.link(links[i]);
    if (i > 0 && topology.link(links[i - 1]).head != l.tail) {
      throw std::invalid_argument("links are not contiguous");
    }
    total += l.length_mm;
  }
  return topology.delay_s(total);
}

std::vector<PathSpec> k_shortest_paths(const Topology& topology, NodeId src, NodeId dst, int k) {
  if (src == dst) throw std::invalid_argument("k_shortest_paths: src == dst");
  if (k < 1) throw std::invalid_argument("k_shortest_paths: k must be >= 1");
  const auto n = static_cast<std::size_t>(topology.node_count());
  const auto m = static_cast<std::size_t>(topology.link_count());

  std::vector<PathSpec> accepted;
  auto first = constrained_shortest(topology, src, dst, std::vector<bool>(n, false), std::vector<bool>(m, false));
  if (!first) return accepted;
  accepted.push_back(topology.make_path(std::move(*first)));

  auto order = [](const PathSpec& a, const PathSpec& b) { return path_precedes(a, b); };
  std::set<PathSpec, decltype(order)> candidates(order);

  while (static_cast<int>(accepted.size()) < k) {
    const PathSpec& last = accepted.back();
    for (std::size_t i = 0; i < last.hops(); ++i) {
      const NodeId spur = last.nodes[i];
      std::vector<bool> banned_node(n, false);
      std::vector<bool> banned_link(m, false);
      for (std::size_t j = 0; j < i; ++j) banned_node[last.nodes[j]] = true;
      for (const auto& p : accepted) {
        if (p.hops() > i && std::equal(last.links.begin(), last.links.begin() + static_cast<std::ptrdiff_t>(i),
                                       p.links.begin())) {
          banned_link[p.links[i]] = true;
        }
      }
      auto spur_links = constrained_shortest(topology, spur, dst, banned_node, banned_link);
      if (!spur_links) continue;
      std::vector<LinkId> links(last.links.begin(), last.links.begin() + static_cast<std::ptrdiff_t>(i));
      links.insert(links.end(), spur_links->begin(), spur_links->end());
      candidates.insert(topology.make_path(std::move(links)));
    }
    // Candidates already accepted cannot reappear: their deviation edge is banned.
    if (candidates.empty()) break;
    accepted.push_back(*candidates.begin());
    candidates.erase(candidates.begin());
  }
  return accepted;
}

RouteTable::RouteTable(const Topology& topology, int k) : topology_(&topology), k_(k) {
  if (k < 1) throw std::invalid_argument("RouteTable: k must be >= 1");
  const int n = topology.node_count();
  table_.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (NodeId s = 0; s < n; ++s) {
    for (NodeId d = 0; d < n; ++d) {
      if (s != d) table_[static_cast<std::size_t>(s) * n + d] = k_shortest_paths(topology, s, d, k);
    }
  }
}

std::span<const PathSpec> RouteTable::paths(NodeId src, NodeId dst) const {
  const auto n = static_cast<std::size_t>(topology_->node_count());
  return table_.at(static_cast<std::size_t>(src) * n + static_cast<std::size_t>(dst));
}

}  // namespace otss
