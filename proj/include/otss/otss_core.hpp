#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "otss/admission.hpp"
#include "otss/topology.hpp"
#include "otss/traffic.hpp"

namespace otss {

/// Time on the OTSS frame, in femtoseconds. Integer ticks make window
/// disjointness exact; rounding a real delay to ticks costs at most 0.5 fs.
using Ticks = std::int64_t;
inline constexpr double kTicksPerSecond = 1e15;

Ticks to_ticks(double seconds);
double to_seconds(Ticks ticks);

struct OtssConfig {
  double frame_s = 1e-3;
  double slice_s = 1e-5;
  double reserved_bandwidth_hz = 50e9;
  double spectral_efficiency_bps_per_hz = 1.0;

  Ticks frame_ticks() const { return to_ticks(frame_s); }
  Ticks slice_ticks() const { return to_ticks(slice_s); }
  int slices_per_frame() const { return static_cast<int>(frame_ticks() / slice_ticks()); }
  /// Average rate one slice per frame delivers.
  double slice_capacity_bps() const {
    return reserved_bandwidth_hz * spectral_efficiency_bps_per_hz * slice_s / frame_s;
  }
  /// Throws ValidationError (frame must be an integer multiple of slice, ...).
  void validate() const;

  bool operator==(const OtssConfig&) const = default;
};

/// One slice-long window on a link, placed modulo the frame.
struct SliceWindow {
  Ticks start = 0;     // in [0, frame)
  Ticks duration = 0;  // one slice
  bool wraps = false;  // start + duration > frame

  double start_s() const { return to_seconds(start); }
  double duration_s() const { return to_seconds(duration); }

  bool operator==(const SliceWindow&) const = default;
};

/// Window on a link whose tail is `cumulative_delay` after the source, for a
/// connection transmitting at frame offset `t0`.
SliceWindow window_on_link(Ticks t0, Ticks cumulative_delay, const OtssConfig& config);
SliceWindow window_on_link(double t0_s, double cumulative_delay_s, const OtssConfig& config);

/// Reservations of one directed link. Windows are pairwise disjoint modulo
/// the frame; since all windows are one slice long, two windows collide iff
/// their starts are less than a slice apart on the circle.
class LinkCalendar {
 public:
  LinkCalendar(LinkId link, Ticks frame, Ticks slice);

  LinkId link() const noexcept { return link_; }
  bool is_free(Ticks start) const;
  /// Throws std::logic_error on a collision or a duplicate id.
  void reserve(RequestId id, const SliceWindow& window);
  /// Throws std::out_of_range for an unknown id.
  void remove(RequestId id);
  bool holds(RequestId id) const { return by_id_.contains(id); }

  /// Sets blocked[s] for every source offset s*slice whose window, shifted by
  /// `cumulative_delay`, would collide with a reservation here.
  void mark_blocked_offsets(Ticks cumulative_delay, std::vector<char>& blocked) const;

  const std::map<RequestId, SliceWindow>& reservations() const noexcept { return by_id_; }
  std::size_t size() const noexcept { return by_id_.size(); }
  bool empty() const noexcept { return by_id_.empty(); }

 private:
  LinkId link_;
  Ticks frame_;
  Ticks slice_;
  std::map<RequestId, SliceWindow> by_id_;
  std::map<Ticks, RequestId> by_start_;
};

class CalendarSet {
 public:
  CalendarSet(const Topology& topology, const OtssConfig& config);

  LinkCalendar& at(LinkId link) { return calendars_.at(static_cast<std::size_t>(link)); }
  const LinkCalendar& at(LinkId link) const { return calendars_.at(static_cast<std::size_t>(link)); }
  const std::vector<LinkCalendar>& all() const noexcept { return calendars_; }
  bool empty() const;
  std::size_t reservation_count() const;

 private:
  std::vector<LinkCalendar> calendars_;
};

struct OtssConnection {
  RequestId request_id = 0;
  PathSpec path;
  Ticks source_offset = 0;  // t0, a multiple of the slice
  std::vector<SliceWindow> windows;  // parallel to path.links
  double worst_case_latency_s = 0.0;
  double expected_latency_s = 0.0;

  double source_offset_s() const { return to_seconds(source_offset); }
};

/// First-fit over source offsets 0, slice, 2*slice, ...: the smallest offset
/// whose shifted windows are free on every path link. Commits all windows on
/// success; leaves the calendars untouched on failure.
std::optional<OtssConnection> allocate(RequestId id, const PathSpec& path, CalendarSet& calendars,
                                       const OtssConfig& config);

/// Removes every window of `connection`. Throws std::out_of_range (and
/// changes nothing) if the connection is not committed.
void release(const OtssConnection& connection, CalendarSet& calendars);

struct OtssLatency {
  double worst_case_s = 0.0;
  double expected_s = 0.0;
};

/// Worst case waits a full frame minus one slice, then serialises one slice;
/// expected assumes a uniform arrival phase. Both add path propagation.
OtssLatency otss_latency(const PathSpec& path, const OtssConfig& config);

struct FixedRouting {
  bool operator==(const FixedRouting&) const = default;
};
struct AlternateRouting {
  int k = 5;
  bool operator==(const AlternateRouting&) const = default;
};
using RoutingMode = std::variant<FixedRouting, AlternateRouting>;

/// Admission over the shortest route (FR) or the first k routes (AR). Routes
/// whose worst-case latency exceeds the request bound are skipped.
Admission<OtssConnection> admit_otss(const TrafficRequest& request, const RouteTable& routes,
                                     CalendarSet& calendars, const OtssConfig& config, const RoutingMode& mode);

}  // namespace otss
