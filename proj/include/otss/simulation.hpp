#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "otss/flexgrid.hpp"
#include "otss/otss_core.hpp"
#include "otss/topology.hpp"
#include "otss/traffic.hpp"

namespace otss {

struct OtssFixed {
  bool operator==(const OtssFixed&) const = default;
};
struct OtssAlternate {
  int k = 5;
  bool operator==(const OtssAlternate&) const = default;
};
struct FlexiGrid {
  double slot_width_hz = 6.25e9;
  bool operator==(const FlexiGrid&) const = default;
};
using Scheme = std::variant<OtssFixed, OtssAlternate, FlexiGrid>;

/// "otss-fr", "otss-ar-k5", "flexgrid-6.25ghz".
std::string scheme_label(const Scheme& scheme);
/// Inverse of scheme_label. Throws std::invalid_argument.
Scheme parse_scheme_label(std::string_view label);

struct SimConfig {
  OtssConfig otss;
  GridConfig grid;  // slot width is taken from the FlexiGrid scheme
  int flexgrid_k = 5;
  std::size_t warmup_count = 0;
};

struct Metrics {
  std::string scheme;
  double load_erlangs = 0.0;
  std::uint64_t offered = 0;
  std::uint64_t admitted = 0;
  std::uint64_t blocked_latency = 0;
  std::uint64_t blocked_resource = 0;
  double latency_sum_s = 0.0;  // expected latency, summed over admitted
  double latency_max_s = 0.0;  // worst-case latency, max over admitted
  double max_admitted_bound_s = 0.0;

  std::uint64_t blocked() const { return blocked_latency + blocked_resource; }
  double blocking_probability() const {
    return offered == 0 ? 0.0 : static_cast<double>(blocked()) / static_cast<double>(offered);
  }
  double average_latency_s() const {
    return admitted == 0 ? 0.0 : latency_sum_s / static_cast<double>(admitted);
  }
  bool operator==(const Metrics&) const = default;
};

struct Arrival {
  const TrafficRequest* request = nullptr;
};
struct Departure {
  RequestId request_id = 0;
};

struct Event {
  double time_s = 0.0;
  std::uint64_t sequence = 0;
  std::variant<Arrival, Departure> kind;
};

/// Pops events by time; at equal times departures precede arrivals, then
/// lower sequence numbers go first.
class EventQueue {
 public:
  void push(double time_s, std::variant<Arrival, Departure> kind);
  const Event& top() const { return heap_.top(); }
  Event pop();
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_sequence_ = 0;
};

/// One simulation run over mutable network state. Not thread-safe; distinct
/// instances are independent.
class Simulator {
 public:
  using Observer = std::function<void(const Simulator&, const Event&)>;

  Simulator(const Topology& topology, Scheme scheme, SimConfig config);

  /// Runs the workload to completion (all departures processed). Throws
  /// std::invalid_argument if arrivals are not in time order.
  Metrics run(std::span<const TrafficRequest> workload, const Observer& observer = {});

  const Scheme& scheme() const noexcept { return scheme_; }
  double now() const noexcept { return now_; }
  const Metrics& metrics() const noexcept { return metrics_; }

  bool is_otss() const { return !std::holds_alternative<FlexiGrid>(scheme_); }
  const CalendarSet& calendars() const { return *calendars_; }
  const std::map<RequestId, OtssConnection>& otss_connections() const { return otss_live_; }
  const SpectrumState& spectrum() const { return *spectrum_; }
  const VirtualTopology& virtual_topology() const { return vtopo_; }
  const GridConfig& grid() const { return grid_; }
  const OtssConfig& otss_config() const { return config_.otss; }

 private:
  void arrive(const TrafficRequest& request, bool counted);
  void depart(RequestId id);

  const Topology& topology_;
  Scheme scheme_;
  SimConfig config_;
  GridConfig grid_;
  RouteTable routes_;
  std::optional<CalendarSet> calendars_;
  std::map<RequestId, OtssConnection> otss_live_;
  std::optional<SpectrumState> spectrum_;
  VirtualTopology vtopo_;
  EventQueue queue_;
  Metrics metrics_;
  double now_ = 0.0;
};

Metrics run_simulation(const Topology& topology, const Scheme& scheme, std::span<const TrafficRequest> workload,
                       const SimConfig& config);

/// Erlang-B loss probability B(E, c) by the stable recurrence.
double erlang_b(double load_erlangs, int servers);

/// Runs of one (scheme, load) pooled across seeds.
struct AggregateMetrics {
  Metrics pooled;
  std::size_t runs = 0;
  double blocking_mean = 0.0;
  double blocking_std = 0.0;  // sample standard deviation across runs
  double avg_latency_mean_s = 0.0;
  double avg_latency_std_s = 0.0;

  /// Standard error of blocking_mean.
  double blocking_sem() const;
};

/// Throws std::invalid_argument for an empty input or mixed (scheme, load).
AggregateMetrics merge_metrics(std::span<const Metrics> runs);

}  // namespace otss
