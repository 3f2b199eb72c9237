#include "otss/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "otss/errors.hpp"

namespace otss {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string fmt_double(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// Shortest %g form that reads back to the same double.
std::string exact(double v) {
  for (int digits = 15; digits < 17; ++digits) {
    const auto text = fmt_double(v, digits);
    if (std::strtod(text.c_str(), nullptr) == v) return text;
  }
  return fmt_double(v, 17);
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& text, F convert) {
  std::vector<T> out;
  if (trim(text).empty()) throw ConfigError(key, "list must not be empty");
  for (const auto& item : split(text, ',')) {
    if (item.empty()) throw ConfigError(key, "empty list item");
    out.push_back(convert(key, item));
  }
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += format(items[i]);
  }
  return out;
}

std::string paradigm_name(const Paradigm& p) {
  if (std::holds_alternative<HubSpoke>(p)) return "hub-spoke";
  if (std::holds_alternative<PeerToPeer>(p)) return "peer-to-peer";
  return "random";
}

void check_grid(const std::string& key, GridConfig grid) {
  try {
    grid.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(key, e.what());
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "topology.path",          "topology.speed_km_per_ms",       "experiment.schemes",
      "experiment.loads_erlangs", "experiment.seeds",             "experiment.workers",
      "routing.k",              "workload.class",                 "workload.bandwidth_bps",
      "workload.latency_bound_s", "workload.paradigm",            "workload.hub",
      "workload.request_count", "workload.warmup_count",          "workload.mean_holding_s",
      "otss.frame_s",           "otss.slice_s",                   "otss.reserved_bandwidth_hz",
      "otss.spectral_efficiency_bps_per_hz", "grid.total_bandwidth_hz", "grid.slot_width_hz",
      "grid.spectral_efficiency_bps_per_hz", "grid.grooming_delay_s", "output.path",
  };
  return keys;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, std::string> values;
  {
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string body = trim(line);
      if (body.empty() || body.front() == '#') continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
      const std::string key = trim(std::string_view(body).substr(0, eq));
      const std::string value = trim(std::string_view(body).substr(eq + 1));
      if (!known_keys().contains(key)) throw ConfigError(key, "unknown key");
      if (!values.emplace(key, value).second) throw ConfigError(key, "duplicate key");
    }
  }
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
  };
  auto number = [&](const std::string& key, double& target) {
    if (auto v = get(key)) target = to_double(key, *v);
  };
  auto positive = [&](const std::string& key, double value) {
    if (!(value > 0.0)) throw ConfigError(key, "must be positive");
  };

  ExperimentConfig c;
  if (auto v = get("topology.path")) {
    if (v->empty()) throw ConfigError("topology.path", "must not be empty");
    c.topology_path = *v;
  }
  number("topology.speed_km_per_ms", c.speed_km_per_ms);
  positive("topology.speed_km_per_ms", c.speed_km_per_ms);

  if (auto v = get("routing.k")) {
    const auto k = to_unsigned("routing.k", *v);
    if (k < 1 || k > 64) throw ConfigError("routing.k", "must be in [1, 64]");
    c.k = static_cast<int>(k);
  }

  // Traffic class: a named preset supplies defaults; explicit keys override.
  auto& cls = c.workload.traffic_class;
  if (auto v = get("workload.class")) {
    if (v->empty()) throw ConfigError("workload.class", "must not be empty");
    if (auto preset = find_traffic_class(*v)) {
      cls = *preset;
    } else if (!get("workload.bandwidth_bps") || !get("workload.latency_bound_s")) {
      throw ConfigError("workload.class",
                        "unknown class '" + *v + "' needs workload.bandwidth_bps and workload.latency_bound_s");
    } else {
      cls.name = *v;
    }
  }
  number("workload.bandwidth_bps", cls.bandwidth_bps);
  positive("workload.bandwidth_bps", cls.bandwidth_bps);
  number("workload.latency_bound_s", cls.latency_bound_s);
  positive("workload.latency_bound_s", cls.latency_bound_s);

  if (auto v = get("workload.paradigm")) {
    if (*v == "random") {
      c.workload.paradigm = RandomUniform{};
    } else if (*v == "hub-spoke") {
      c.workload.paradigm = HubSpoke{};
    } else if (*v == "peer-to-peer") {
      c.workload.paradigm = PeerToPeer{};
    } else {
      throw ConfigError("workload.paradigm", "expected random, hub-spoke or peer-to-peer");
    }
  }
  if (auto v = get("workload.hub")) {
    auto* hs = std::get_if<HubSpoke>(&c.workload.paradigm);
    if (!hs) throw ConfigError("workload.hub", "only valid with workload.paradigm = hub-spoke");
    hs->hub = static_cast<NodeId>(to_unsigned("workload.hub", *v));
  }
  if (auto v = get("workload.request_count")) c.workload.request_count = to_unsigned("workload.request_count", *v);
  if (auto v = get("workload.warmup_count")) c.workload.warmup_count = to_unsigned("workload.warmup_count", *v);
  if (c.workload.request_count == 0) throw ConfigError("workload.request_count", "must be positive");
  if (c.workload.warmup_count >= c.workload.request_count) {
    throw ConfigError("workload.warmup_count", "must be below workload.request_count");
  }
  number("workload.mean_holding_s", c.workload.mean_holding_s);
  positive("workload.mean_holding_s", c.workload.mean_holding_s);

  number("otss.frame_s", c.otss.frame_s);
  positive("otss.frame_s", c.otss.frame_s);
  if (c.otss.frame_s > 1.0) throw ConfigError("otss.frame_s", "must not exceed 1 s");
  number("otss.slice_s", c.otss.slice_s);
  positive("otss.slice_s", c.otss.slice_s);
  {
    const Ticks frame = c.otss.frame_ticks();
    const Ticks slice = c.otss.slice_ticks();
    if (slice <= 0 || slice > frame || frame % slice != 0) {
      throw ConfigError("otss.slice_s", "otss.frame_s is not an integer multiple of the slice");
    }
  }
  number("otss.reserved_bandwidth_hz", c.otss.reserved_bandwidth_hz);
  positive("otss.reserved_bandwidth_hz", c.otss.reserved_bandwidth_hz);
  number("otss.spectral_efficiency_bps_per_hz", c.otss.spectral_efficiency_bps_per_hz);
  positive("otss.spectral_efficiency_bps_per_hz", c.otss.spectral_efficiency_bps_per_hz);

  number("grid.total_bandwidth_hz", c.grid.total_bandwidth_hz);
  positive("grid.total_bandwidth_hz", c.grid.total_bandwidth_hz);
  number("grid.slot_width_hz", c.grid.slot_width_hz);
  positive("grid.slot_width_hz", c.grid.slot_width_hz);
  check_grid("grid.slot_width_hz", c.grid);
  number("grid.spectral_efficiency_bps_per_hz", c.grid.spectral_efficiency_bps_per_hz);
  positive("grid.spectral_efficiency_bps_per_hz", c.grid.spectral_efficiency_bps_per_hz);
  number("grid.grooming_delay_s", c.grid.grooming_delay_s);
  if (!(c.grid.grooming_delay_s >= 0.0)) throw ConfigError("grid.grooming_delay_s", "must be non-negative");

  if (auto v = get("experiment.schemes")) {
    c.schemes = to_list<Scheme>("experiment.schemes", *v, [&](const std::string& key, const std::string& token) -> Scheme {
      if (token == "otss-ar") return OtssAlternate{c.k};
      if (token == "flexgrid") return FlexiGrid{c.grid.slot_width_hz};
      try {
        return parse_scheme_label(token);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    });
  }
  for (const auto& s : c.schemes) {
    if (const auto* fg = std::get_if<FlexiGrid>(&s)) {
      GridConfig g = c.grid;
      g.slot_width_hz = fg->slot_width_hz;
      check_grid("experiment.schemes", g);
    }
    if (const auto* ar = std::get_if<OtssAlternate>(&s); ar && (ar->k < 1 || ar->k > 64)) {
      throw ConfigError("experiment.schemes", "alternate-routing k must be in [1, 64]");
    }
  }
  if (auto v = get("experiment.loads_erlangs")) {
    c.loads_erlangs = to_list<double>("experiment.loads_erlangs", *v, to_double);
  }
  for (double load : c.loads_erlangs) positive("experiment.loads_erlangs", load);
  if (auto v = get("experiment.seeds")) c.seeds = to_list<std::uint64_t>("experiment.seeds", *v, to_unsigned);
  if (auto v = get("experiment.workers")) {
    const auto w = to_unsigned("experiment.workers", *v);
    if (w > 1024) throw ConfigError("experiment.workers", "must be at most 1024");
    c.workers = static_cast<unsigned>(w);
  }
  if (auto v = get("output.path")) {
    if (v->empty()) throw ConfigError("output.path", "must not be empty");
    c.output_path = *v;
  }
  return c;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "topology.path = " << c.topology_path << '\n'
      << "topology.speed_km_per_ms = " << exact(c.speed_km_per_ms) << '\n'
      << "experiment.schemes = " << join(c.schemes, [](const Scheme& s) { return scheme_label(s); }) << '\n'
      << "experiment.loads_erlangs = " << join(c.loads_erlangs, exact) << '\n'
      << "experiment.seeds = " << join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }) << '\n'
      << "experiment.workers = " << c.workers << '\n'
      << "routing.k = " << c.k << '\n'
      << "workload.class = " << c.workload.traffic_class.name << '\n'
      << "workload.bandwidth_bps = " << exact(c.workload.traffic_class.bandwidth_bps) << '\n'
      << "workload.latency_bound_s = " << exact(c.workload.traffic_class.latency_bound_s) << '\n'
      << "workload.paradigm = " << paradigm_name(c.workload.paradigm) << '\n';
  if (const auto* hs = std::get_if<HubSpoke>(&c.workload.paradigm)) out << "workload.hub = " << hs->hub << '\n';
  out << "workload.request_count = " << c.workload.request_count << '\n'
      << "workload.warmup_count = " << c.workload.warmup_count << '\n'
      << "workload.mean_holding_s = " << exact(c.workload.mean_holding_s) << '\n'
      << "otss.frame_s = " << exact(c.otss.frame_s) << '\n'
      << "otss.slice_s = " << exact(c.otss.slice_s) << '\n'
      << "otss.reserved_bandwidth_hz = " << exact(c.otss.reserved_bandwidth_hz) << '\n'
      << "otss.spectral_efficiency_bps_per_hz = " << exact(c.otss.spectral_efficiency_bps_per_hz) << '\n'
      << "grid.total_bandwidth_hz = " << exact(c.grid.total_bandwidth_hz) << '\n'
      << "grid.slot_width_hz = " << exact(c.grid.slot_width_hz) << '\n'
      << "grid.spectral_efficiency_bps_per_hz = " << exact(c.grid.spectral_efficiency_bps_per_hz) << '\n'
      << "grid.grooming_delay_s = " << exact(c.grid.grooming_delay_s) << '\n'
      << "output.path = " << c.output_path << '\n';
  return out.str();
}

void validate_against(const ExperimentConfig& config, const Topology& topology) {
  if (const auto* hs = std::get_if<HubSpoke>(&config.workload.paradigm)) {
    if (hs->hub < 0 || hs->hub >= topology.node_count()) {
      throw ConfigError("workload.hub", "node " + std::to_string(hs->hub) + " is not in the topology");
    }
  }
}

ResultRow make_row(const AggregateMetrics& a) {
  ResultRow row;
  row.scheme = a.pooled.scheme;
  row.load_erlangs = a.pooled.load_erlangs;
  row.seeds = a.runs;
  row.offered = a.pooled.offered;
  row.admitted = a.pooled.admitted;
  row.blocking_mean = a.blocking_mean;
  row.blocking_std = a.blocking_std;
  const auto blocked = a.pooled.blocked();
  row.blocked_latency_share =
      blocked == 0 ? 0.0 : static_cast<double>(a.pooled.blocked_latency) / static_cast<double>(blocked);
  row.avg_latency_ms_mean = a.avg_latency_mean_s * 1e3;
  row.avg_latency_ms_std = a.avg_latency_std_s * 1e3;
  row.max_latency_ms = a.pooled.latency_max_s * 1e3;
  return row;
}

std::string csv_header() {
  return "scheme,load_erlangs,seeds,offered,admitted,blocking_mean,blocking_std,blocked_latency_share,"
         "avg_latency_ms_mean,avg_latency_ms_std,max_latency_ms";
}

std::string format_csv_row(const ResultRow& r) {
  std::string out = r.scheme;
  out += ',' + fmt_double(r.load_erlangs, 9);
  out += ',' + std::to_string(r.seeds);
  out += ',' + std::to_string(r.offered);
  out += ',' + std::to_string(r.admitted);
  for (double v : {r.blocking_mean, r.blocking_std, r.blocked_latency_share, r.avg_latency_ms_mean,
                   r.avg_latency_ms_std, r.max_latency_ms}) {
    out += ',' + fmt_double(v, 9);
  }
  return out;
}

ResultRow parse_csv_row(std::string_view line) {
  const auto fields = split(line, ',');
  if (fields.size() != 11) throw std::invalid_argument("csv row needs 11 fields");
  try {
    ResultRow r;
    r.scheme = fields[0];
    r.load_erlangs = to_double("load_erlangs", fields[1]);
    r.seeds = to_unsigned("seeds", fields[2]);
    r.offered = to_unsigned("offered", fields[3]);
    r.admitted = to_unsigned("admitted", fields[4]);
    r.blocking_mean = to_double("blocking_mean", fields[5]);
    r.blocking_std = to_double("blocking_std", fields[6]);
    r.blocked_latency_share = to_double("blocked_latency_share", fields[7]);
    r.avg_latency_ms_mean = to_double("avg_latency_ms_mean", fields[8]);
    r.avg_latency_ms_std = to_double("avg_latency_ms_std", fields[9]);
    r.max_latency_ms = to_double("max_latency_ms", fields[10]);
    return r;
  } catch (const ConfigError& e) {
    throw std::invalid_argument(std::string("csv: ") + e.what());
  }
}

std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string out = csv_header() + '\n';
  for (const auto& r : rows) out += format_csv_row(r) + '\n';
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const Topology& topology) {
  validate_against(config, topology);
  if (config.schemes.empty() || config.loads_erlangs.empty() || config.seeds.empty()) {
    throw ConfigError("experiment", "schemes, loads and seeds must be non-empty");
  }
  std::vector<double> loads = config.loads_erlangs;
  std::sort(loads.begin(), loads.end());
  loads.erase(std::unique(loads.begin(), loads.end()), loads.end());

  SimConfig sim;
  sim.otss = config.otss;
  sim.grid = config.grid;
  sim.flexgrid_k = config.k;
  sim.warmup_count = config.workload.warmup_count;

  ExperimentResult result;
  for (const auto& scheme : config.schemes) {
    for (double load : loads) {
      for (std::uint64_t seed : config.seeds) result.runs.push_back({scheme_label(scheme), load, seed, {}});
    }
  }

  auto run_one = [&](std::size_t index) {
    auto& record = result.runs[index];
    const auto& scheme = config.schemes[index / (loads.size() * config.seeds.size())];
    WorkloadConfig wc;
    wc.load_erlangs = record.load_erlangs;
    wc.mean_holding_s = config.workload.mean_holding_s;
    wc.request_count = config.workload.request_count;
    wc.warmup_count = config.workload.warmup_count;
    wc.traffic_class = config.workload.traffic_class;
    wc.paradigm = config.workload.paradigm;
    wc.seed = record.seed;
    const auto workload = generate_workload(topology, wc);
    record.metrics = run_simulation(topology, scheme, workload, sim);
    record.metrics.load_erlangs = record.load_erlangs;
  };

  unsigned workers = config.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.workers;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(result.runs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < result.runs.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < result.runs.size(); i = next++) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  const std::size_t per_row = config.seeds.size();
  for (std::size_t i = 0; i < result.runs.size(); i += per_row) {
    std::vector<Metrics> group;
    for (std::size_t j = i; j < i + per_row; ++j) group.push_back(result.runs[j].metrics);
    result.rows.push_back(make_row(merge_metrics(group)));
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto topology = load_topology_file(config.topology_path, config.speed_km_per_ms);
  auto result = run_experiment(config, topology);

  const auto parent = std::filesystem::path(config.output_path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream csv(config.output_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + config.output_path);
  csv << format_csv(result.rows);
  std::ofstream manifest(config.output_path + ".manifest.json", std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot write manifest for " + config.output_path);
  manifest << manifest_json(config, result) << '\n';
  if (!csv || !manifest) throw std::runtime_error("write failed for " + config.output_path);
  return result;
}

std::string manifest_json(const ExperimentConfig& config, const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["tool"] = "otss_sim";
  j["version"] = kVersion;
  j["config"] = render_config(config);
  auto& runs = j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : result.runs) {
    runs.push_back({{"scheme", r.scheme},
                    {"load_erlangs", r.load_erlangs},
                    {"seed", r.seed},
                    {"offered", r.metrics.offered},
                    {"admitted", r.metrics.admitted},
                    {"blocked_latency", r.metrics.blocked_latency},
                    {"blocked_resource", r.metrics.blocked_resource}});
  }
  return j.dump(2);
}

std::string summarize(const std::vector<ResultRow>& rows, double latency_bound_s) {
  std::vector<const ResultRow*> ordered;
  std::vector<std::string> scheme_order;
  for (const auto& r : rows) {
    if (std::find(scheme_order.begin(), scheme_order.end(), r.scheme) == scheme_order.end()) {
      scheme_order.push_back(r.scheme);
    }
  }
  for (const auto& s : scheme_order) {
    std::vector<const ResultRow*> group;
    for (const auto& r : rows) {
      if (r.scheme == s) group.push_back(&r);
    }
    std::stable_sort(group.begin(), group.end(),
                     [](const ResultRow* a, const ResultRow* b) { return a->load_erlangs < b->load_erlangs; });
    ordered.insert(ordered.end(), group.begin(), group.end());
  }

  std::size_t width = 6;
  for (const auto* r : ordered) width = std::max(width, r->scheme.size());

  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %8s %10s %10s %9s %10s %10s  %s\n", static_cast<int>(width), "scheme",
                "load(E)", "blocking", "+/-", "lat.share", "avg(ms)", "max(ms)", "");
  out << buf;
  for (const auto* r : ordered) {
    const bool violated = r->max_latency_ms > latency_bound_s * 1e3;
    std::snprintf(buf, sizeof buf, "%-*s %8.1f %10.6f %10.6f %9.3f %10.4f %10.4f  %s\n", static_cast<int>(width),
                  r->scheme.c_str(), r->load_erlangs, r->blocking_mean, r->blocking_std, r->blocked_latency_share,
                  r->avg_latency_ms_mean, r->max_latency_ms, violated ? "! exceeds latency bound" : "");
    out << buf;
  }
  return out.str();
}

}  // namespace otss
