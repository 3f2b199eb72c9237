#include "otss/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace otss {

std::string scheme_label(const Scheme& scheme) {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, OtssFixed>) {
          return "otss-fr";
        } else if constexpr (std::is_same_v<S, OtssAlternate>) {
          return "otss-ar-k" + std::to_string(s.k);
        } else {
          char buf[64];
          std::snprintf(buf, sizeof buf, "flexgrid-%.10gghz", s.slot_width_hz / 1e9);
          return buf;
        }
      },
      scheme);
}

Scheme parse_scheme_label(std::string_view label) {
  const std::string text(label);
  if (text == "otss-fr") return OtssFixed{};
  constexpr std::string_view ar = "otss-ar-k";
  if (text.starts_with(ar)) {
    const std::string digits = text.substr(ar.size());
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != digits.size() || k < 1) throw std::invalid_argument("bad scheme '" + text + "'");
    return OtssAlternate{k};
  }
  constexpr std::string_view fg = "flexgrid-";
  if (text.starts_with(fg) && text.ends_with("ghz")) {
    const std::string number = text.substr(fg.size(), text.size() - fg.size() - 3);
    std::size_t used = 0;
    double ghz = 0.0;
    try {
      ghz = std::stod(number, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != number.size() || !(ghz > 0.0)) throw std::invalid_argument("bad scheme '" + text + "'");
    return FlexiGrid{ghz * 1e9};
  }
  throw std::invalid_argument("unknown scheme '" + text + "'");
}

bool EventQueue::Later::operator()(const Event& a, const Event& b) const {
  if (a.time_s != b.time_s) return a.time_s > b.time_s;
  const bool a_departs = std::holds_alternative<Departure>(a.kind);
  const bool b_departs = std::holds_alternative<Departure>(b.kind);
  if (a_departs != b_departs) return b_departs;
  return a.sequence > b.sequence;
}

void EventQueue::push(double time_s, std::variant<Arrival, Departure> kind) {
  heap_.push(Event{time_s, next_sequence_++, kind});
}

Event EventQueue::pop() {
  Event e = heap_.top();
  heap_.pop();
  return e;
}

namespace {

int route_depth(const Scheme& scheme, const SimConfig& config) {
  if (const auto* ar = std::get_if<OtssAlternate>(&scheme)) return ar->k;
  if (std::holds_alternative<FlexiGrid>(scheme)) return config.flexgrid_k;
  return 1;
}

}  // namespace

Simulator::Simulator(const Topology& topology, Scheme scheme, SimConfig config)
    : topology_(topology),
      scheme_(scheme),
      config_(config),
      grid_(config.grid),
      routes_(topology, route_depth(scheme, config)) {
  metrics_.scheme = scheme_label(scheme_);
  if (const auto* fg = std::get_if<FlexiGrid>(&scheme_)) {
    grid_.slot_width_hz = fg->slot_width_hz;
    grid_.validate();
    spectrum_.emplace(topology.link_count(), grid_.slots_per_link());
  } else {
    config_.otss.validate();
    calendars_.emplace(topology, config_.otss);
  }
}

void Simulator::arrive(const TrafficRequest& request, bool counted) {
  bool admitted = false;
  BlockReason reason = BlockReason::none;
  double expected = 0.0;
  double worst = 0.0;

  if (is_otss()) {
    RoutingMode mode = FixedRouting{};
    if (const auto* ar = std::get_if<OtssAlternate>(&scheme_)) mode = AlternateRouting{ar->k};
    auto result = admit_otss(request, routes_, *calendars_, config_.otss, mode);
    admitted = result.admitted();
    reason = result.reason();
    if (admitted) {
      expected = result->expected_latency_s;
      worst = result->worst_case_latency_s;
      otss_live_.emplace(request.id, std::move(result.value()));
    }
  } else {
    auto result = min_thv_route(request, vtopo_, *spectrum_, routes_, grid_);
    admitted = result.admitted();
    reason = result.reason();
    if (admitted) expected = worst = result->latency_s;
  }

  if (admitted) queue_.push(request.arrival_time_s + request.holding_time_s, Departure{request.id});
  if (!counted) return;
  ++metrics_.offered;
  if (admitted) {
    ++metrics_.admitted;
    metrics_.latency_sum_s += expected;
    metrics_.latency_max_s = std::max(metrics_.latency_max_s, worst);
    metrics_.max_admitted_bound_s = std::max(metrics_.max_admitted_bound_s, request.latency_bound_s);
  } else if (reason == BlockReason::latency) {
    ++metrics_.blocked_latency;
  } else {
    ++metrics_.blocked_resource;
  }
}

void Simulator::depart(RequestId id) {
  if (is_otss()) {
    const auto it = otss_live_.find(id);
    release(it->second, *calendars_);
    otss_live_.erase(it);
  } else {
    release_flexgrid(id, vtopo_, *spectrum_);
  }
}

Metrics Simulator::run(std::span<const TrafficRequest> workload, const Observer& observer) {
  for (std::size_t i = 1; i < workload.size(); ++i) {
    if (workload[i].arrival_time_s < workload[i - 1].arrival_time_s) {
      throw std::invalid_argument("workload is not sorted by arrival time");
    }
  }
  std::size_t next = 0;
  if (!workload.empty()) queue_.push(workload[0].arrival_time_s, Arrival{&workload[0]});

  while (!queue_.empty()) {
    const Event event = queue_.pop();
    now_ = event.time_s;
    if (const auto* a = std::get_if<Arrival>(&event.kind)) {
      ++next;
      if (next < workload.size()) queue_.push(workload[next].arrival_time_s, Arrival{&workload[next]});
      arrive(*a->request, next > config_.warmup_count);
    } else {
      depart(std::get<Departure>(event.kind).request_id);
    }
    if (observer) observer(*this, event);
  }
  return metrics_;
}

Metrics run_simulation(const Topology& topology, const Scheme& scheme, std::span<const TrafficRequest> workload,
                       const SimConfig& config) {
  return Simulator(topology, scheme, config).run(workload);
}

double erlang_b(double load_erlangs, int servers) {
  if (load_erlangs < 0.0 || servers < 0) throw std::invalid_argument("erlang_b: negative argument");
  double b = 1.0;
  for (int c = 1; c <= servers; ++c) b = load_erlangs * b / (c + load_erlangs * b);
  return b;
}

double AggregateMetrics::blocking_sem() const {
  return runs == 0 ? 0.0 : blocking_std / std::sqrt(static_cast<double>(runs));
}

AggregateMetrics merge_metrics(std::span<const Metrics> runs) {
  if (runs.empty()) throw std::invalid_argument("merge_metrics: no runs");
  AggregateMetrics agg;
  agg.runs = runs.size();
  agg.pooled.scheme = runs.front().scheme;
  agg.pooled.load_erlangs = runs.front().load_erlangs;
  for (const auto& m : runs) {
    if (m.scheme != agg.pooled.scheme || m.load_erlangs != agg.pooled.load_erlangs) {
      throw std::invalid_argument("merge_metrics: runs differ in scheme or load");
    }
    agg.pooled.offered += m.offered;
    agg.pooled.admitted += m.admitted;
    agg.pooled.blocked_latency += m.blocked_latency;
    agg.pooled.blocked_resource += m.blocked_resource;
    agg.pooled.latency_sum_s += m.latency_sum_s;
    agg.pooled.latency_max_s = std::max(agg.pooled.latency_max_s, m.latency_max_s);
    agg.pooled.max_admitted_bound_s = std::max(agg.pooled.max_admitted_bound_s, m.max_admitted_bound_s);
  }

  const auto n = static_cast<double>(runs.size());
  // Blocking is pooled over totals; exact integers keep identical runs at zero spread.
  agg.blocking_mean = agg.pooled.blocking_probability();
  // Running mean, so identical inputs reproduce their value exactly.
  double k = 0.0;
  for (const auto& m : runs) agg.avg_latency_mean_s += (m.average_latency_s() - agg.avg_latency_mean_s) / ++k;
  if (runs.size() > 1) {
    double var_b = 0.0;
    double var_l = 0.0;
    for (const auto& m : runs) {
      var_b += std::pow(m.blocking_probability() - agg.blocking_mean, 2);
      var_l += std::pow(m.average_latency_s() - agg.avg_latency_mean_s, 2);
    }
    agg.blocking_std = std::sqrt(var_b / (n - 1));
    agg.avg_latency_std_s = std::sqrt(var_l / (n - 1));
  }
  return agg;
}

}  // namespace otss
