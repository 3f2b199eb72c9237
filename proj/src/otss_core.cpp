#include "otss/otss_core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "otss/errors.hpp"

namespace otss {

namespace {

Ticks floor_mod(Ticks a, Ticks m) {
  const Ticks r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

const char* to_string(BlockReason reason) {
  switch (reason) {
    case BlockReason::none: return "none";
    case BlockReason::latency: return "latency";
    case BlockReason::resource: return "resource";
  }
  return "?";
}

Ticks to_ticks(double seconds) { return std::llround(seconds * kTicksPerSecond); }
double to_seconds(Ticks ticks) { return static_cast<double>(ticks) / kTicksPerSecond; }

void OtssConfig::validate() const {
  if (!(frame_s > 0.0) || !(slice_s > 0.0)) throw ValidationError("otss frame and slice must be positive");
  if (frame_s > 1.0) throw ValidationError("otss frame must not exceed 1 s");
  const Ticks frame = frame_ticks();
  const Ticks slice = slice_ticks();
  if (slice <= 0 || slice > frame || frame % slice != 0) {
    throw ValidationError("otss frame is not an integer multiple of the slice");
  }
  if (!(reserved_bandwidth_hz > 0.0)) throw ValidationError("otss reserved bandwidth must be positive");
  if (!(spectral_efficiency_bps_per_hz > 0.0)) throw ValidationError("otss spectral efficiency must be positive");
}

SliceWindow window_on_link(Ticks t0, Ticks cumulative_delay, const OtssConfig& config) {
  const Ticks frame = config.frame_ticks();
  const Ticks slice = config.slice_ticks();
  const Ticks start = floor_mod(t0 + cumulative_delay, frame);
  return {start, slice, start + slice > frame};
}

SliceWindow window_on_link(double t0_s, double cumulative_delay_s, const OtssConfig& config) {
  return window_on_link(to_ticks(t0_s), to_ticks(cumulative_delay_s), config);
}

LinkCalendar::LinkCalendar(LinkId link, Ticks frame, Ticks slice) : link_(link), frame_(frame), slice_(slice) {}

bool LinkCalendar::is_free(Ticks start) const {
  if (by_start_.empty()) return true;
  auto collides = [&](Ticks other) {
    const Ticks d = floor_mod(start - other, frame_);
    return d < slice_ || frame_ - d < slice_;
  };
  auto succ = by_start_.lower_bound(start);
  const Ticks next = succ == by_start_.end() ? by_start_.begin()->first : succ->first;
  const Ticks prev = succ == by_start_.begin() ? by_start_.rbegin()->first : std::prev(succ)->first;
  return !collides(next) && !collides(prev);
}

void LinkCalendar::reserve(RequestId id, const SliceWindow& window) {
  if (by_id_.contains(id)) {
    throw std::logic_error("link " + std::to_string(link_) + " already holds request " + std::to_string(id));
  }
  if (window.duration != slice_ || window.start < 0 || window.start >= frame_) {
    throw std::logic_error("window does not fit the frame");
  }
  if (!is_free(window.start)) {
    throw std::logic_error("window collides on link " + std::to_string(link_));
  }
  by_id_.emplace(id, window);
  by_start_.emplace(window.start, id);
}

void LinkCalendar::remove(RequestId id) {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw std::out_of_range("link " + std::to_string(link_) + " holds no request " + std::to_string(id));
  }
  by_start_.erase(it->second.start);
  by_id_.erase(it);
}

void LinkCalendar::mark_blocked_offsets(Ticks cumulative_delay, std::vector<char>& blocked) const {
  const auto slices = static_cast<Ticks>(blocked.size());
  for (const auto& [start, id] : by_start_) {
    // Offset s collides iff s*slice lies strictly within one slice of x on the circle.
    const Ticks x = floor_mod(start - cumulative_delay, frame_);
    const Ticks q = x / slice_;
    blocked[static_cast<std::size_t>(q)] = 1;
    if (x % slice_ != 0) blocked[static_cast<std::size_t>((q + 1) % slices)] = 1;
  }
}

CalendarSet::CalendarSet(const Topology& topology, const OtssConfig& config) {
  calendars_.reserve(static_cast<std::size_t>(topology.link_count()));
  for (LinkId id = 0; id < topology.link_count(); ++id) {
    calendars_.emplace_back(id, config.frame_ticks(), config.slice_ticks());
  }
}

bool CalendarSet::empty() const {
  for (const auto& c : calendars_) {
    if (!c.empty()) return false;
  }
  return true;
}

std::size_t CalendarSet::reservation_count() const {
  std::size_t n = 0;
  for (const auto& c : calendars_) n += c.size();
  return n;
}

std::optional<OtssConnection> allocate(RequestId id, const PathSpec& path, CalendarSet& calendars,
                                       const OtssConfig& config) {
  const int slices = config.slices_per_frame();
  const Ticks slice = config.slice_ticks();
  std::vector<Ticks> shift(path.hops());
  std::vector<char> blocked(static_cast<std::size_t>(slices), 0);
  for (std::size_t i = 0; i < path.hops(); ++i) {
    shift[i] = to_ticks(path.cumulative_delay_s[i]);
    calendars.at(path.links[i]).mark_blocked_offsets(shift[i], blocked);
  }

  int chosen = 0;
  while (chosen < slices && blocked[static_cast<std::size_t>(chosen)]) ++chosen;
  if (chosen == slices) return std::nullopt;

  OtssConnection conn;
  conn.request_id = id;
  conn.path = path;
  conn.source_offset = chosen * slice;
  conn.windows.reserve(path.hops());
  for (std::size_t i = 0; i < path.hops(); ++i) {
    conn.windows.push_back(window_on_link(conn.source_offset, shift[i], config));
  }
  for (std::size_t i = 0; i < path.hops(); ++i) {
    calendars.at(path.links[i]).reserve(id, conn.windows[i]);
  }
  const auto latency = otss_latency(path, config);
  conn.worst_case_latency_s = latency.worst_case_s;
  conn.expected_latency_s = latency.expected_s;
  return conn;
}

void release(const OtssConnection& connection, CalendarSet& calendars) {
  for (LinkId link : connection.path.links) {
    if (!calendars.at(link).holds(connection.request_id)) {
      throw std::out_of_range("request " + std::to_string(connection.request_id) + " is not committed");
    }
  }
  for (LinkId link : connection.path.links) calendars.at(link).remove(connection.request_id);
}

OtssLatency otss_latency(const PathSpec& path, const OtssConfig& config) {
  return {config.frame_s + path.total_delay_s, (config.frame_s + config.slice_s) / 2.0 + path.total_delay_s};
}

Admission<OtssConnection> admit_otss(const TrafficRequest& request, const RouteTable& routes,
                                     CalendarSet& calendars, const OtssConfig& config, const RoutingMode& mode) {
  const auto candidates = routes.paths(request.src, request.dst);
  std::size_t limit = 1;
  if (const auto* ar = std::get_if<AlternateRouting>(&mode)) {
    if (ar->k < 1 || ar->k > routes.k()) throw std::invalid_argument("alternate routing k exceeds route table");
    limit = static_cast<std::size_t>(ar->k);
  }
  limit = std::min(limit, candidates.size());

  bool within_bound = false;
  for (std::size_t i = 0; i < limit; ++i) {
    if (otss_latency(candidates[i], config).worst_case_s > request.latency_bound_s) continue;
    within_bound = true;
    if (auto conn = allocate(request.id, candidates[i], calendars, config)) {
      return Admission<OtssConnection>::accept(std::move(*conn));
    }
  }
  return Admission<OtssConnection>::block(within_bound || limit == 0 ? BlockReason::resource
                                                                     : BlockReason::latency);
}

}  // namespace otss
