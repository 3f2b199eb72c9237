#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace otss {

using NodeId = std::int32_t;
using LinkId = std::int32_t;

inline constexpr double kDefaultSpeedKmPerMs = 200.0;

/// Directed fiber. Lengths are also kept as integer millimetres so that path
/// comparisons (and therefore K-shortest-path tie-breaks) are exact.
struct FiberLink {
  LinkId id = 0;
  NodeId tail = 0;
  NodeId head = 0;
  double length_km = 0.0;
  std::int64_t length_mm = 0;
};

/// Undirected edge as it appears in a topology file.
struct FiberEdge {
  NodeId u = 0;
  NodeId v = 0;
  double length_km = 0.0;
};

/// A simple path over directed links.
///
/// `cumulative_delay_s[i]` is the propagation delay from the path source to
/// the tail of `links[i]`; it is the shift applied to a time slice on that
/// link.
struct PathSpec {
  std::vector<LinkId> links;
  std::vector<NodeId> nodes;  // links.size() + 1 entries
  std::vector<double> cumulative_delay_s;
  double total_delay_s = 0.0;
  std::int64_t length_mm = 0;

  std::size_t hops() const noexcept { return links.size(); }
  NodeId source() const { return nodes.front(); }
  NodeId destination() const { return nodes.back(); }

  bool operator==(const PathSpec&) const = default;
};

/// Ordering used everywhere paths are ranked: ascending length, then fewer
/// hops, then lexicographically smaller link-id sequence.
bool path_precedes(const PathSpec& a, const PathSpec& b);

class Topology {
 public:
  /// Builds and validates a topology. Edge i becomes directed links 2i (u->v)
  /// and 2i+1 (v->u). Throws ValidationError.
  static Topology from_edges(int node_count, std::span<const FiberEdge> edges,
                             double speed_km_per_ms = kDefaultSpeedKmPerMs);

  int node_count() const noexcept { return node_count_; }
  int link_count() const noexcept { return static_cast<int>(links_.size()); }
  const std::vector<FiberLink>& links() const noexcept { return links_; }
  const FiberLink& link(LinkId id) const { return links_.at(static_cast<std::size_t>(id)); }
  std::span<const LinkId> outgoing(NodeId node) const;
  std::optional<LinkId> find_link(NodeId tail, NodeId head) const;
  const std::vector<FiberEdge>& edges() const noexcept { return edges_; }

  double speed_km_per_ms() const noexcept { return speed_km_per_ms_; }
  double delay_s(std::int64_t length_mm) const;
  double link_delay_s(LinkId id) const { return delay_s(link(id).length_mm); }

  /// Builds a PathSpec from a contiguous, node-simple link sequence.
  /// Throws std::invalid_argument otherwise.
  PathSpec make_path(std::vector<LinkId> links) const;

 private:
  Topology() = default;

  int node_count_ = 0;
  double speed_km_per_ms_ = kDefaultSpeedKmPerMs;
  std::vector<FiberEdge> edges_;
  std::vector<FiberLink> links_;
  std::vector<std::vector<LinkId>> adjacency_;
};

/// Parses the edge-list format:
///   # comment
///   nodes N
///   u v length_km
/// Throws ParseError on malformed lines and ValidationError on bad graphs.
Topology load_topology(std::string_view text, double speed_km_per_ms = kDefaultSpeedKmPerMs);
Topology load_topology_file(const std::filesystem::path& path,
                            double speed_km_per_ms = kDefaultSpeedKmPerMs);

/// Sum of link delays over a contiguous walk, in seconds.
/// Throws std::invalid_argument if the walk is not contiguous.
double propagation_delay(const Topology& topology, std::span<const LinkId> links);

/// Up to k loopless paths from src to dst in `path_precedes` order (Yen).
/// Returns an empty vector when dst is unreachable.
std::vector<PathSpec> k_shortest_paths(const Topology& topology, NodeId src, NodeId dst, int k);

/// Precomputed k_shortest_paths for every ordered node pair.
class RouteTable {
 public:
  RouteTable(const Topology& topology, int k);

  int k() const noexcept { return k_; }
  const Topology& topology() const noexcept { return *topology_; }
  std::span<const PathSpec> paths(NodeId src, NodeId dst) const;

 private:
  const Topology* topology_;
  int k_;
  std::vector<std::vector<PathSpec>> table_;
};

}  // namespace otss
