#include "otss/traffic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <string>

#include "otss/errors.hpp"

namespace otss {

namespace {

const std::array<TrafficClass, 5> kStandardClasses{{
    {"Teleprotection", 500e3, 10e-3},
    {"LoadShedding", 500e3, 10e-3},
    {"SCADA", 800e3, 200e-3},
    {"SmartMetering", 500e3, 1.0},
    // 200-1000 Mb/s in practice; the low end keeps a request inside one time slice.
    {"FileTransfer", 200e6, 1.0},
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::span<const TrafficClass> standard_traffic_classes() { return kStandardClasses; }

std::optional<TrafficClass> find_traffic_class(std::string_view name) {
  for (const auto& c : kStandardClasses) {
    if (iequals(c.name, name)) return c;
  }
  return std::nullopt;
}

void WorkloadConfig::validate(const Topology& topology) const {
  if (!(load_erlangs > 0.0)) throw ValidationError("load_erlangs must be positive");
  if (!(mean_holding_s > 0.0)) throw ValidationError("mean_holding_s must be positive");
  if (request_count == 0) throw ValidationError("request_count must be positive");
  if (warmup_count >= request_count) throw ValidationError("warmup_count must be below request_count");
  if (!(traffic_class.bandwidth_bps > 0.0)) throw ValidationError("class bandwidth must be positive");
  if (!(traffic_class.latency_bound_s > 0.0)) throw ValidationError("class latency bound must be positive");
  if (const auto* hs = std::get_if<HubSpoke>(&paradigm)) {
    if (hs->hub < 0 || hs->hub >= topology.node_count()) {
      throw ValidationError("hub node " + std::to_string(hs->hub) + " is not in the topology");
    }
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, Substream stream)
    : engine_(splitmix64(seed ^ static_cast<std::uint64_t>(stream))) {}

double RandomStream::uniform_open() {
  // 53 random bits, centred in their cell: never 0, never 1.
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = next();
    if (x >= threshold) return x % n;
  }
}

std::pair<NodeId, NodeId> sample_pair(const Topology& topology, const Paradigm& paradigm, RandomStream& rng) {
  const auto n = static_cast<std::uint64_t>(topology.node_count());
  return std::visit(
      [&](const auto& p) -> std::pair<NodeId, NodeId> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, RandomUniform>) {
          const auto src = static_cast<NodeId>(rng.below(n));
          auto dst = static_cast<NodeId>(rng.below(n - 1));
          if (dst >= src) ++dst;
          return {src, dst};
        } else if constexpr (std::is_same_v<P, HubSpoke>) {
          auto other = static_cast<NodeId>(rng.below(n - 1));
          if (other >= p.hub) ++other;
          if (rng.below(2) == 0) return {other, p.hub};
          return {p.hub, other};
        } else {
          // Directed links enumerate the ordered adjacent pairs exactly once.
          const auto& link = topology.link(static_cast<LinkId>(rng.below(static_cast<std::uint64_t>(topology.link_count()))));
          return {link.tail, link.head};
        }
      },
      paradigm);
}

std::vector<TrafficRequest> generate_workload(const Topology& topology, const WorkloadConfig& config) {
  config.validate(topology);
  RandomStream arrivals(config.seed, Substream::arrivals);
  RandomStream holding(config.seed, Substream::holding);
  RandomStream pairs(config.seed, Substream::pairs);
  const double mean_gap = 1.0 / config.arrival_rate();

  std::vector<TrafficRequest> out;
  out.reserve(config.request_count);
  double clock = 0.0;
  for (std::size_t i = 0; i < config.request_count; ++i) {
    double next = clock + arrivals.exponential(mean_gap);
    // A gap below the clock's ulp would repeat a timestamp.
    if (next <= clock) next = std::nextafter(clock, INFINITY);
    clock = next;
    const auto [src, dst] = sample_pair(topology, config.paradigm, pairs);
    out.push_back({static_cast<RequestId>(i), src, dst, config.traffic_class.bandwidth_bps,
                   config.traffic_class.latency_bound_s, clock, holding.exponential(config.mean_holding_s),
                   config.traffic_class.name});
  }
  return out;
}

}  // namespace otss
