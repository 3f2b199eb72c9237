#include "otss/flexgrid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

#include "otss/errors.hpp"

namespace otss {

int GridConfig::slots_per_link() const {
  return static_cast<int>(std::llround(total_bandwidth_hz / slot_width_hz));
}

void GridConfig::validate() const {
  if (!(total_bandwidth_hz > 0.0) || !(slot_width_hz > 0.0)) {
    throw ValidationError("grid bandwidth and slot width must be positive");
  }
  const double ratio = total_bandwidth_hz / slot_width_hz;
  if (ratio < 1.0 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw ValidationError("grid slot width must divide the reserved band");
  }
  if (!(spectral_efficiency_bps_per_hz > 0.0)) throw ValidationError("grid spectral efficiency must be positive");
  if (!(grooming_delay_s >= 0.0)) throw ValidationError("grooming delay must be non-negative");
}

SpectrumState::SpectrumState(int link_count, int slots_per_link)
    : link_count_(link_count),
      slots_(slots_per_link),
      owner_(static_cast<std::size_t>(link_count) * static_cast<std::size_t>(slots_per_link), kFree) {
  if (link_count < 0 || slots_per_link < 1) throw std::invalid_argument("bad spectrum dimensions");
}

std::optional<int> SpectrumState::first_free_slot(const PathSpec& route) const {
  for (int slot = 0; slot < slots_; ++slot) {
    const bool free = std::all_of(route.links.begin(), route.links.end(),
                                  [&](LinkId l) { return owner_[index(l, slot)] == kFree; });
    if (free) return slot;
  }
  return std::nullopt;
}

void SpectrumState::claim(const PathSpec& route, int slot, LightpathId owner) {
  for (LinkId l : route.links) {
    if (owner_[index(l, slot)] != kFree) {
      throw std::logic_error("slot " + std::to_string(slot) + " on link " + std::to_string(l) + " is taken");
    }
  }
  for (LinkId l : route.links) owner_[index(l, slot)] = owner;
}

void SpectrumState::clear(const PathSpec& route, int slot, LightpathId owner) {
  for (LinkId l : route.links) {
    if (owner_[index(l, slot)] != owner) {
      throw std::logic_error("lightpath " + std::to_string(owner) + " does not own link " + std::to_string(l));
    }
  }
  for (LinkId l : route.links) owner_[index(l, slot)] = kFree;
}

std::size_t SpectrumState::occupied() const {
  return static_cast<std::size_t>(std::count_if(owner_.begin(), owner_.end(), [](LightpathId o) { return o != kFree; }));
}

const Lightpath* VirtualTopology::find(LightpathId id) const {
  const auto it = lightpaths_.find(id);
  return it == lightpaths_.end() ? nullptr : &it->second;
}

std::span<const LightpathId> VirtualTopology::between(NodeId src, NodeId dst) const {
  const auto it = index_.find({src, dst});
  if (it == index_.end()) return {};
  return it->second;
}

std::vector<NodeId> VirtualTopology::endpoints() const {
  std::vector<NodeId> out;
  for (const auto& [key, ids] : index_) {
    out.push_back(key.first);
    out.push_back(key.second);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

LightpathId VirtualTopology::add(PathSpec route, int slot, double capacity_bps) {
  const LightpathId id = next_id_++;
  const std::pair key{route.source(), route.destination()};
  lightpaths_.emplace(id, Lightpath{id, std::move(route), slot, capacity_bps, capacity_bps, {}});
  index_[key].push_back(id);
  return id;
}

void VirtualTopology::remove(LightpathId id) {
  const auto it = lightpaths_.find(id);
  if (it == lightpaths_.end()) throw std::out_of_range("unknown lightpath " + std::to_string(id));
  const auto key = std::pair{it->second.src(), it->second.dst()};
  auto& ids = index_[key];
  ids.erase(std::find(ids.begin(), ids.end(), id));
  if (ids.empty()) index_.erase(key);
  lightpaths_.erase(it);
}

const GroomedRoute* VirtualTopology::route_of(RequestId id) const {
  const auto it = routes_.find(id);
  return it == routes_.end() ? nullptr : &it->second;
}

void VirtualTopology::add_route(GroomedRoute route) {
  const RequestId id = route.request_id;
  if (!routes_.emplace(id, std::move(route)).second) {
    throw std::logic_error("request " + std::to_string(id) + " is already routed");
  }
}

GroomedRoute VirtualTopology::take_route(RequestId id) {
  const auto it = routes_.find(id);
  if (it == routes_.end()) throw std::out_of_range("request " + std::to_string(id) + " is not carried");
  GroomedRoute route = std::move(it->second);
  routes_.erase(it);
  return route;
}

std::optional<LightpathPlan> plan_lightpath(NodeId src, NodeId dst, const RouteTable& routes,
                                            const SpectrumState& spectrum) {
  for (const auto& route : routes.paths(src, dst)) {
    if (auto slot = spectrum.first_free_slot(route)) return LightpathPlan{&route, *slot};
  }
  return std::nullopt;
}

const Lightpath* establish_lightpath(NodeId src, NodeId dst, const RouteTable& routes, SpectrumState& spectrum,
                                     VirtualTopology& vtopo, const GridConfig& grid) {
  if (src == dst) throw std::invalid_argument("establish_lightpath: src == dst");
  const auto plan = plan_lightpath(src, dst, routes, spectrum);
  if (!plan) return nullptr;
  const LightpathId id = vtopo.add(*plan->route, plan->slot, grid.lightpath_capacity_bps());
  spectrum.claim(*plan->route, plan->slot, id);
  return vtopo.find(id);
}

double flexgrid_latency(std::span<const PathSpec* const> hop_routes, const GridConfig& grid) {
  if (hop_routes.empty()) throw std::invalid_argument("flexgrid_latency: no hops");
  double total = 0.0;
  for (std::size_t i = 0; i < hop_routes.size(); ++i) {
    if (i > 0 && hop_routes[i - 1]->destination() != hop_routes[i]->source()) {
      throw std::invalid_argument("flexgrid_latency: hops are not contiguous");
    }
    total += hop_routes[i]->total_delay_s;
  }
  return total + grid.grooming_delay_s * static_cast<double>(hop_routes.size() - 1);
}

namespace {

constexpr LightpathId kTrialOwner = -2;

// One way through the auxiliary graph: node sequence plus, per hop, either an
// existing lightpath or a lightpath still to be established.
struct Candidate {
  std::vector<NodeId> nodes;
  std::vector<LightpathId> existing;  // SpectrumState::kFree marks a new lightpath
  int new_count = 0;
  std::int64_t length_mm = 0;  // exact for existing hops, a lower bound for new ones

  auto order_key() const { return std::tie(length_mm, nodes, existing); }
};

class MinThvSearch {
 public:
  MinThvSearch(const TrafficRequest& request, VirtualTopology& vtopo, SpectrumState& spectrum,
               const RouteTable& routes, const GridConfig& grid)
      : request_(request), vtopo_(vtopo), spectrum_(spectrum), routes_(routes), grid_(grid) {
    nodes_ = vtopo.endpoints();
    nodes_.push_back(request.src);
    nodes_.push_back(request.dst);
    std::sort(nodes_.begin(), nodes_.end());
    nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
  }

  Admission<GroomedRoute> run() {
    const auto max_hops = nodes_.size() - 1;
    for (std::size_t hops = 1; hops <= max_hops; ++hops) {
      if (grid_.grooming_delay_s * static_cast<double>(hops - 1) > request_.latency_bound_s) break;
      std::vector<Candidate> found;
      Candidate partial;
      partial.nodes.push_back(request_.src);
      enumerate(hops, partial, found);
      if (found.empty()) continue;

      std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.new_count, a.length_mm, a.nodes, a.existing) <
               std::tie(b.new_count, b.length_mm, b.nodes, b.existing);
      });
      for (std::size_t i = 0; i < found.size();) {
        std::size_t j = i;
        while (j < found.size() && found[j].new_count == found[i].new_count) ++j;
        if (auto admitted = best_of_group(std::span(found).subspan(i, j - i))) return std::move(*admitted);
        i = j;
      }
    }
    if (joint_failure_) return Admission<GroomedRoute>::block(BlockReason::resource);
    return Admission<GroomedRoute>::block(reachable() ? BlockReason::latency : BlockReason::resource);
  }

 private:
  struct Trial {
    std::int64_t length_mm = 0;
    std::vector<LightpathPlan> plans;  // one per new hop, in hop order
    double latency_s = 0.0;
  };

  std::optional<LightpathId> best_existing(NodeId u, NodeId v) {
    const auto key = std::pair{u, v};
    if (auto it = existing_memo_.find(key); it != existing_memo_.end()) return it->second;
    std::optional<LightpathId> best;
    for (LightpathId id : vtopo_.between(u, v)) {
      const auto& lp = vtopo_.at(id);
      if (lp.residual_bps < request_.bandwidth_bps) continue;
      if (!best || lp.route.length_mm < vtopo_.at(*best).route.length_mm) best = id;
    }
    existing_memo_.emplace(key, best);
    return best;
  }

  // Feasibility of a single new lightpath against the current spectrum.
  std::optional<LightpathPlan> solo_plan(NodeId u, NodeId v) {
    const auto key = std::pair{u, v};
    if (auto it = plan_memo_.find(key); it != plan_memo_.end()) return it->second;
    std::optional<LightpathPlan> plan;
    if (grid_.lightpath_capacity_bps() >= request_.bandwidth_bps) plan = plan_lightpath(u, v, routes_, spectrum_);
    plan_memo_.emplace(key, plan);
    return plan;
  }

  double delay_s(std::int64_t mm) const { return routes_.topology().delay_s(mm); }

  void enumerate(std::size_t hops, Candidate& partial, std::vector<Candidate>& out) {
    const NodeId u = partial.nodes.back();
    const bool last = partial.existing.size() + 1 == hops;
    const double grooming = grid_.grooming_delay_s * static_cast<double>(hops - 1);
    for (NodeId v : nodes_) {
      if (last ? v != request_.dst : (v == request_.dst || std::count(partial.nodes.begin(), partial.nodes.end(), v))) {
        continue;
      }
      auto extend = [&](LightpathId existing, std::int64_t mm) {
        if (grooming + delay_s(partial.length_mm + mm) > request_.latency_bound_s) return;
        partial.nodes.push_back(v);
        partial.existing.push_back(existing);
        partial.length_mm += mm;
        partial.new_count += existing == SpectrumState::kFree;
        if (last) {
          out.push_back(partial);
        } else {
          enumerate(hops, partial, out);
        }
        partial.new_count -= existing == SpectrumState::kFree;
        partial.length_mm -= mm;
        partial.existing.pop_back();
        partial.nodes.pop_back();
      };
      if (auto id = best_existing(u, v)) extend(*id, vtopo_.at(*id).route.length_mm);
      if (auto plan = solo_plan(u, v)) extend(SpectrumState::kFree, plan->route->length_mm);
    }
  }

  // Establishes the candidate's new lightpaths one after another on the live
  // spectrum, then rolls them back.
  std::optional<Trial> trial(const Candidate& c) {
    Trial t;
    std::vector<const PathSpec*> hop_routes;
    bool ok = true;
    for (std::size_t i = 0; i < c.existing.size() && ok; ++i) {
      if (c.existing[i] != SpectrumState::kFree) {
        const auto& lp = vtopo_.at(c.existing[i]);
        hop_routes.push_back(&lp.route);
        t.length_mm += lp.route.length_mm;
        continue;
      }
      const auto plan = plan_lightpath(c.nodes[i], c.nodes[i + 1], routes_, spectrum_);
      if (!plan) {
        ok = false;
        break;
      }
      spectrum_.claim(*plan->route, plan->slot, kTrialOwner);
      t.plans.push_back(*plan);
      hop_routes.push_back(plan->route);
      t.length_mm += plan->route->length_mm;
    }
    for (const auto& p : t.plans) spectrum_.clear(*p.route, p.slot, kTrialOwner);
    if (!ok) return std::nullopt;
    t.latency_s = flexgrid_latency(hop_routes, grid_);
    return t;
  }

  std::optional<Admission<GroomedRoute>> best_of_group(std::span<const Candidate> group) {
    const Candidate* best = nullptr;
    Trial best_trial;
    for (const auto& c : group) {
      auto t = trial(c);
      if (!t) {
        joint_failure_ = true;
        continue;
      }
      if (t->latency_s > request_.latency_bound_s) continue;
      if (!best || std::tie(t->length_mm, c.nodes, c.existing) <
                       std::tie(best_trial.length_mm, best->nodes, best->existing)) {
        best = &c;
        best_trial = std::move(*t);
      }
    }
    if (!best) return std::nullopt;
    return Admission<GroomedRoute>::accept(commit(*best, best_trial));
  }

  GroomedRoute commit(const Candidate& c, const Trial& t) {
    GroomedRoute route;
    route.request_id = request_.id;
    route.bandwidth_bps = request_.bandwidth_bps;
    route.grooming_nodes = static_cast<int>(c.existing.size()) - 1;
    route.latency_s = t.latency_s;
    auto plan = t.plans.begin();
    for (LightpathId id : c.existing) {
      if (id == SpectrumState::kFree) {
        id = vtopo_.add(*plan->route, plan->slot, grid_.lightpath_capacity_bps());
        spectrum_.claim(*plan->route, plan->slot, id);
        ++plan;
      }
      auto& lp = vtopo_.at(id);
      lp.residual_bps -= request_.bandwidth_bps;
      lp.carried.insert(request_.id);
      route.hops.push_back(id);
    }
    vtopo_.add_route(route);
    return route;
  }

  // Whether any auxiliary-graph route exists, ignoring the latency bound.
  bool reachable() {
    std::vector<NodeId> frontier{request_.src};
    std::set<NodeId> seen{request_.src};
    while (!frontier.empty()) {
      const NodeId u = frontier.back();
      frontier.pop_back();
      for (NodeId v : nodes_) {
        if (seen.contains(v)) continue;
        if (!best_existing(u, v) && !solo_plan(u, v)) continue;
        if (v == request_.dst) return true;
        seen.insert(v);
        frontier.push_back(v);
      }
    }
    return false;
  }

  const TrafficRequest& request_;
  VirtualTopology& vtopo_;
  SpectrumState& spectrum_;
  const RouteTable& routes_;
  const GridConfig& grid_;
  std::vector<NodeId> nodes_;
  std::map<std::pair<NodeId, NodeId>, std::optional<LightpathId>> existing_memo_;
  std::map<std::pair<NodeId, NodeId>, std::optional<LightpathPlan>> plan_memo_;
  bool joint_failure_ = false;
};

}  // namespace

Admission<GroomedRoute> min_thv_route(const TrafficRequest& request, VirtualTopology& vtopo,
                                      SpectrumState& spectrum, const RouteTable& routes, const GridConfig& grid) {
  if (request.src == request.dst) throw std::invalid_argument("min_thv_route: src == dst");
  return MinThvSearch(request, vtopo, spectrum, routes, grid).run();
}

void release_flexgrid(RequestId id, VirtualTopology& vtopo, SpectrumState& spectrum) {
  const GroomedRoute route = vtopo.take_route(id);
  for (LightpathId lp_id : route.hops) {
    auto& lp = vtopo.at(lp_id);
    lp.carried.erase(id);
    lp.residual_bps += route.bandwidth_bps;
    if (lp.carried.empty()) {
      spectrum.clear(lp.route, lp.slot_index, lp.id);
      vtopo.remove(lp_id);
    }
  }
}

}  // namespace otss
