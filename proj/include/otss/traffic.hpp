#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "otss/topology.hpp"

namespace otss {

using RequestId = std::int64_t;

struct TrafficClass {
  std::string name;
  double bandwidth_bps = 0.0;
  double latency_bound_s = 0.0;

  bool operator==(const TrafficClass&) const = default;
};

/// Smart-grid application classes. Bounds use the upper end of each range;
/// teleprotection uses 10 ms.
std::span<const TrafficClass> standard_traffic_classes();
std::optional<TrafficClass> find_traffic_class(std::string_view name);

struct RandomUniform {
  bool operator==(const RandomUniform&) const = default;
};
struct HubSpoke {
  NodeId hub = 0;
  bool operator==(const HubSpoke&) const = default;
};
struct PeerToPeer {
  bool operator==(const PeerToPeer&) const = default;
};
using Paradigm = std::variant<RandomUniform, HubSpoke, PeerToPeer>;

struct TrafficRequest {
  RequestId id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  double bandwidth_bps = 0.0;
  double latency_bound_s = 0.0;
  double arrival_time_s = 0.0;
  double holding_time_s = 0.0;
  std::string class_name;

  bool operator==(const TrafficRequest&) const = default;
};

struct WorkloadConfig {
  double load_erlangs = 10.0;
  double mean_holding_s = 100.0;
  std::size_t request_count = 100000;
  std::size_t warmup_count = 10000;
  TrafficClass traffic_class;
  Paradigm paradigm = RandomUniform{};
  std::uint64_t seed = 1;

  double arrival_rate() const { return load_erlangs / mean_holding_s; }
  /// Throws ValidationError.
  void validate(const Topology& topology) const;
};

/// Independent random substreams derived from one workload seed. Each stream
/// is an mt19937_64 seeded with splitmix64(seed ^ tag); the variates below are
/// computed by hand so sequences are identical across standard libraries.
enum class Substream : std::uint64_t {
  arrivals = 0x61727269766c73ULL,
  holding = 0x686f6c64696e67ULL,
  pairs = 0x7061697273ULL,
};

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, Substream stream);

  std::uint64_t next() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  double exponential(double mean) { return -mean * std::log(uniform_open()); }
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

std::pair<NodeId, NodeId> sample_pair(const Topology& topology, const Paradigm& paradigm, RandomStream& rng);

std::vector<TrafficRequest> generate_workload(const Topology& topology, const WorkloadConfig& config);

}  // namespace otss
