#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "otss/flexgrid.hpp"
#include "otss/otss_core.hpp"
#include "otss/simulation.hpp"
#include "otss/traffic.hpp"

namespace otss {

inline constexpr const char* kVersion = "0.3.0";

struct WorkloadTemplate {
  TrafficClass traffic_class{"Teleprotection", 500e3, 10e-3};
  Paradigm paradigm = RandomUniform{};
  std::size_t request_count = 100000;
  std::size_t warmup_count = 10000;
  double mean_holding_s = 100.0;

  bool operator==(const WorkloadTemplate&) const = default;
};

struct ExperimentConfig {
  std::string topology_path = "data/ieee14.topo";
  double speed_km_per_ms = kDefaultSpeedKmPerMs;
  std::vector<Scheme> schemes{OtssFixed{},          OtssAlternate{5},       FlexiGrid{50e9},
                              FlexiGrid{25e9},      FlexiGrid{12.5e9},      FlexiGrid{6.25e9}};
  std::vector<double> loads_erlangs{10, 20, 30, 40, 50, 60, 70, 80};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  unsigned workers = 1;  // 0 = one per hardware thread
  int k = 5;             // route candidates for flexi-grid lightpaths
  WorkloadTemplate workload;
  OtssConfig otss;
  GridConfig grid;  // slot_width_hz backs the bare "flexgrid" scheme token
  std::string output_path = "results.csv";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses "dotted.key = value" lines ('#' starts a comment). Omitted keys
/// keep their defaults. Throws ConfigError naming the offending key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config_file(const std::filesystem::path& path);
/// Emits every key; parse_config(render_config(c)) == c.
std::string render_config(const ExperimentConfig& config);
/// Constraint checks that need the topology (hub node range).
void validate_against(const ExperimentConfig& config, const Topology& topology);

struct ResultRow {
  std::string scheme;
  double load_erlangs = 0.0;
  std::size_t seeds = 0;
  std::uint64_t offered = 0;
  std::uint64_t admitted = 0;
  double blocking_mean = 0.0;
  double blocking_std = 0.0;
  double blocked_latency_share = 0.0;
  double avg_latency_ms_mean = 0.0;
  double avg_latency_ms_std = 0.0;
  double max_latency_ms = 0.0;

  bool operator==(const ResultRow&) const = default;
};

ResultRow make_row(const AggregateMetrics& aggregate);

std::string csv_header();
/// Nine significant digits, '.' decimal separator, no trailing newline.
std::string format_csv_row(const ResultRow& row);
/// Throws std::invalid_argument.
ResultRow parse_csv_row(std::string_view line);
std::string format_csv(const std::vector<ResultRow>& rows);

struct RunRecord {
  std::string scheme;
  double load_erlangs = 0.0;
  std::uint64_t seed = 0;
  Metrics metrics;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // scheme order of the config, loads ascending
  std::vector<RunRecord> runs;
};

/// Runs every (scheme, load, seed) combination and aggregates per (scheme, load).
ExperimentResult run_experiment(const ExperimentConfig& config, const Topology& topology);

/// run_experiment plus the CSV at config.output_path and a JSON manifest
/// beside it (<output>.manifest.json).
ExperimentResult run_experiment(const ExperimentConfig& config);

std::string manifest_json(const ExperimentConfig& config, const ExperimentResult& result);

/// Aligned text table grouped by scheme; rows whose maximum latency exceeds
/// `latency_bound_s` are flagged.
std::string summarize(const std::vector<ResultRow>& rows, double latency_bound_s);

}  // namespace otss
