#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "otss/admission.hpp"
#include "otss/topology.hpp"
#include "otss/traffic.hpp"

namespace otss {

using LightpathId = std::int64_t;

struct GridConfig {
  double total_bandwidth_hz = 50e9;
  double slot_width_hz = 6.25e9;
  double spectral_efficiency_bps_per_hz = 1.0;
  double grooming_delay_s = 5e-3;

  int slots_per_link() const;
  double lightpath_capacity_bps() const { return slot_width_hz * spectral_efficiency_bps_per_hz; }
  /// Throws ValidationError unless the slot width divides the total band.
  void validate() const;

  bool operator==(const GridConfig&) const = default;
};

/// One grid slot end to end over a physical route.
struct Lightpath {
  LightpathId id = 0;
  PathSpec route;
  int slot_index = 0;
  double capacity_bps = 0.0;
  double residual_bps = 0.0;
  std::set<RequestId> carried;

  NodeId src() const { return route.source(); }
  NodeId dst() const { return route.destination(); }
};

/// Per-link slot ownership. A slot is occupied iff exactly one lightpath owns it.
class SpectrumState {
 public:
  static constexpr LightpathId kFree = -1;

  SpectrumState(int link_count, int slots_per_link);

  int link_count() const noexcept { return link_count_; }
  int slots_per_link() const noexcept { return slots_; }
  bool is_free(LinkId link, int slot) const { return owner_[index(link, slot)] == kFree; }
  LightpathId owner(LinkId link, int slot) const { return owner_[index(link, slot)]; }
  /// Lowest slot free on every link of `route` (spectrum continuity).
  std::optional<int> first_free_slot(const PathSpec& route) const;
  /// Throws std::logic_error if any (link, slot) is already owned.
  void claim(const PathSpec& route, int slot, LightpathId owner);
  /// Throws std::logic_error if `owner` does not hold every (link, slot).
  void clear(const PathSpec& route, int slot, LightpathId owner);
  std::size_t occupied() const;

 private:
  std::size_t index(LinkId link, int slot) const {
    return static_cast<std::size_t>(link) * static_cast<std::size_t>(slots_) + static_cast<std::size_t>(slot);
  }

  int link_count_;
  int slots_;
  std::vector<LightpathId> owner_;
};

/// Virtual-topology route of one groomed request.
struct GroomedRoute {
  RequestId request_id = 0;
  std::vector<LightpathId> hops;
  int grooming_nodes = 0;
  double latency_s = 0.0;
  double bandwidth_bps = 0.0;
};

class VirtualTopology {
 public:
  const std::map<LightpathId, Lightpath>& lightpaths() const noexcept { return lightpaths_; }
  const Lightpath* find(LightpathId id) const;
  Lightpath& at(LightpathId id) { return lightpaths_.at(id); }
  const Lightpath& at(LightpathId id) const { return lightpaths_.at(id); }
  /// Live lightpaths from src to dst, ascending id.
  std::span<const LightpathId> between(NodeId src, NodeId dst) const;
  /// Sorted distinct endpoints of live lightpaths.
  std::vector<NodeId> endpoints() const;

  LightpathId add(PathSpec route, int slot, double capacity_bps);
  void remove(LightpathId id);

  const std::map<RequestId, GroomedRoute>& routes() const noexcept { return routes_; }
  const GroomedRoute* route_of(RequestId id) const;
  void add_route(GroomedRoute route);
  GroomedRoute take_route(RequestId id);

 private:
  LightpathId next_id_ = 0;
  std::map<LightpathId, Lightpath> lightpaths_;
  std::map<std::pair<NodeId, NodeId>, std::vector<LightpathId>> index_;
  std::map<RequestId, GroomedRoute> routes_;
};

struct LightpathPlan {
  const PathSpec* route = nullptr;
  int slot = 0;
};

/// First (route, slot) in route-table order with the slot free on every
/// route link. Does not modify the spectrum.
std::optional<LightpathPlan> plan_lightpath(NodeId src, NodeId dst, const RouteTable& routes,
                                            const SpectrumState& spectrum);

/// Commits plan_lightpath's choice and registers the new, empty lightpath.
/// Returns nullptr when no route has a continuous free slot.
const Lightpath* establish_lightpath(NodeId src, NodeId dst, const RouteTable& routes, SpectrumState& spectrum,
                                     VirtualTopology& vtopo, const GridConfig& grid);

/// Propagation over every hop plus one grooming delay per intermediate
/// virtual node. Throws std::invalid_argument for an empty or broken chain.
double flexgrid_latency(std::span<const PathSpec* const> hop_routes, const GridConfig& grid);

/// MinTHV grooming: fewest virtual hops, then fewest new lightpaths, then
/// least propagation. Intermediate nodes are drawn from the request endpoints
/// and the endpoints of live lightpaths. Everything is committed atomically.
Admission<GroomedRoute> min_thv_route(const TrafficRequest& request, VirtualTopology& vtopo,
                                      SpectrumState& spectrum, const RouteTable& routes, const GridConfig& grid);

/// Returns the request's bandwidth to each hop and tears down lightpaths
/// that become idle. Throws std::out_of_range for an unknown request.
void release_flexgrid(RequestId id, VirtualTopology& vtopo, SpectrumState& spectrum);

}  // namespace otss
