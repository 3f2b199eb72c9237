// Command-line front end: run sweeps, validate inputs, print Erlang-B tables.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "otss/errors.hpp"
#include "otss/experiment.hpp"
#include "otss/simulation.hpp"
#include "otss/topology.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string config_path;
  std::string topology_path;
  std::string out_path;
  std::optional<std::uint64_t> seed_override;
  std::string scheme_filter;
};

otss::ExperimentConfig resolve(const CommonOptions& opts) {
  otss::ExperimentConfig config = opts.config_path.empty() ? otss::ExperimentConfig{}
                                                           : otss::load_config_file(opts.config_path);
  if (!opts.topology_path.empty()) config.topology_path = opts.topology_path;
  if (!opts.out_path.empty()) config.output_path = opts.out_path;
  if (opts.seed_override) config.seeds = {*opts.seed_override};
  if (!opts.scheme_filter.empty()) {
    std::erase_if(config.schemes, [&](const otss::Scheme& s) {
      return otss::scheme_label(s).find(opts.scheme_filter) == std::string::npos;
    });
    if (config.schemes.empty()) throw otss::ConfigError("--scheme-filter", "matches no scheme");
  }
  return config;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Experiment config (key = value lines)");
  cmd->add_option("--topology", opts.topology_path, "Topology edge-list file (overrides topology.path)");
  cmd->add_option("--out", opts.out_path, "CSV output path (overrides output.path)");
  cmd->add_option("--seed-override", opts.seed_override, "Run a single seed instead of experiment.seeds");
  cmd->add_option("--scheme-filter", opts.scheme_filter, "Keep only schemes whose label contains this text");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OTSS vs flexi-grid latency-bounded traffic simulator"};
  app.set_version_flag("--version", otss::kVersion);
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "Run the full load/scheme/seed sweep and write CSV");
  add_common(run, run_opts);
  bool quiet = false;
  run->add_flag("-q,--quiet", quiet, "Do not print the summary table");

  CommonOptions validate_opts;
  auto* validate = app.add_subcommand("validate", "Check the config and topology, print the resolved config");
  add_common(validate, validate_opts);

  double load = 0.0;
  int servers = 0;
  auto* oracle = app.add_subcommand("oracle", "Print Erlang-B blocking B(E, c)");
  oracle->add_option("-E,--load", load, "Offered load in Erlangs")->required()->check(CLI::NonNegativeNumber);
  oracle->add_option("-c,--servers", servers, "Number of servers")->required()->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  if (oracle->parsed()) {
    std::printf("%.9g\n", otss::erlang_b(load, servers));
    return 0;
  }

  CommonOptions& opts = run->parsed() ? run_opts : validate_opts;
  otss::ExperimentConfig config;
  std::optional<otss::Topology> topology;
  try {
    config = resolve(opts);
    topology = otss::load_topology_file(config.topology_path, config.speed_km_per_ms);
    otss::validate_against(config, *topology);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (validate->parsed()) {
    std::cout << otss::render_config(config);
    std::cout << "# topology: " << topology->node_count() << " nodes, " << topology->link_count()
              << " directed links\n";
    return 0;
  }

  try {
    const auto result = otss::run_experiment(config);
    if (!quiet) std::cout << otss::summarize(result.rows, config.workload.traffic_class.latency_bound_s);
    std::cerr << "wrote " << config.output_path << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
