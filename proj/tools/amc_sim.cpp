// amc_sim: run, compare and sweep link-adaptation episodes from a scenario file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "amc/config.hpp"
#include "amc/engine.hpp"
#include "amc/report.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr const char* kOutputEnv = "AMC_OUTPUT_DIR";

struct CommonOptions {
  std::string config;
  std::string out;
  int jobs = 0;
};

fs::path output_dir(const CommonOptions& opts) {
  fs::path dir = "amc_out";
  if (const char* env = std::getenv(kOutputEnv); env != nullptr && *env != '\0') dir = env;
  if (!opts.out.empty()) dir = opts.out;
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void set_jobs(int jobs) {
#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::istringstream in("[sweep]\nseeds = " + text + "\n");
  return amc::parse_scenario(in, "--seeds").sweep.seeds;
}

std::vector<amc::AgentKind> parse_agents(const std::vector<std::string>& names) {
  std::vector<amc::AgentKind> out;
  for (const auto& n : names) out.push_back(amc::parse_agent_kind(n));
  return out;
}

int cmd_run(const CommonOptions& opts, const std::string& agent_name, std::int64_t seed_override) {
  amc::ScenarioConfig config = amc::load_scenario(opts.config);
  const amc::AgentKind kind = amc::parse_agent_kind(agent_name);
  if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
  const fs::path dir = output_dir(opts);

  amc::EpisodeOptions eo;
  eo.keep_trace = true;
  const amc::EpisodeMetrics m = amc::run_episode(config, kind, config.seed, eo);

  std::ostringstream log;
  amc::write_tti_log(log, m);
  write_file(dir / "tti_log.csv", log.str());

  std::ostringstream summary;
  amc::write_summary_header(summary);
  amc::write_summary_row(summary, {config.label, kind, m.seed, m.mean_tput, m.bler, 0.0},
                         kind == amc::AgentKind::olla);
  write_file(dir / "summary.csv", summary.str());
  write_file(dir / "effective.cfg", amc::echo_scenario(config));

  std::cout << config.label << ' ' << amc::to_string(kind) << " seed=" << m.seed
            << " mean_tput=" << amc::format_real(m.mean_tput)
            << " (" << amc::format_real(amc::to_mbps(m.mean_tput)) << " Mbit/s)"
            << " bler=" << amc::format_real(m.bler) << " retrains=" << m.retrains
            << " divergences=" << m.divergences << '\n';
  return 0;
}

void print_gains(const amc::GainTable& table) {
  for (const auto& g : table.summary)
    std::cout << table.scenario << ' ' << amc::to_string(g.agent)
              << " mean_gain=" << amc::format_real(g.mean_gain) << " wins=" << g.wins << '/'
              << g.seeds << '\n';
}

int cmd_compare(const CommonOptions& opts, const std::string& seeds_text,
                const std::vector<std::string>& agent_names) {
  amc::ScenarioConfig config = amc::load_scenario(opts.config);
  if (!seeds_text.empty()) config.sweep.seeds = parse_seeds(seeds_text);
  if (!agent_names.empty()) config.sweep.agents = parse_agents(agent_names);
  const fs::path dir = output_dir(opts);
  set_jobs(opts.jobs);

  const amc::GainTable table = amc::compare(config, config.sweep.agents, config.sweep.seeds);
  std::ostringstream summary;
  amc::write_summary_header(summary);
  for (const auto& row : table.rows) amc::write_summary_row(summary, row);
  write_file(dir / "summary.csv", summary.str());
  write_file(dir / "effective.cfg", amc::echo_scenario(config));
  print_gains(table);
  return 0;
}

int cmd_sweep(const CommonOptions& opts, const std::string& seeds_text) {
  amc::ScenarioConfig config = amc::load_scenario(opts.config);
  if (!seeds_text.empty()) config.sweep.seeds = parse_seeds(seeds_text);
  const fs::path dir = output_dir(opts);
  set_jobs(opts.jobs);

  const auto rows = amc::sweep(config);
  std::ostringstream summary;
  amc::write_summary_header(summary);
  for (const auto& cell : rows)
    for (const auto& row : cell.table.rows) amc::write_summary_row(summary, row);
  write_file(dir / "summary.csv", summary.str());

  std::ostringstream matrix;
  amc::write_gain_matrix(matrix, rows, config.sweep.agents);
  write_file(dir / "gain_matrix.csv", matrix.str());
  write_file(dir / "effective.cfg", amc::echo_scenario(config));
  for (const auto& cell : rows) print_gains(cell.table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link-adaptation simulator: OLLA, online deep learning and Q-learning MCS selection"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opts.config, "Scenario config file")->required();
    sub->add_option("-o,--out", opts.out, std::string("Output directory (default $") + kOutputEnv + " or ./amc_out)");
  };

  std::string agent = "odl";
  std::int64_t seed = -1;
  auto* run = app.add_subcommand("run", "Run one episode and write its per-TTI log and summary");
  add_common(run);
  run->add_option("-a,--agent", agent, "olla | odl | qlearning");
  run->add_option("-s,--seed", seed, "Seed (default: scenario.seed)");

  std::string seeds;
  std::vector<std::string> agents;
  auto* cmp = app.add_subcommand("compare", "Paired comparison of agents against OLLA over seeds");
  add_common(cmp);
  cmp->add_option("--seeds", seeds, "Seed list, e.g. 1-10 or 1,4,7");
  cmp->add_option("--agents", agents, "Agents to compare")->delimiter(',');
  cmp->add_option("-j,--jobs", opts.jobs, "Worker threads");

  auto* swp = app.add_subcommand("sweep", "Speed x rank grid from the [sweep] section");
  add_common(swp);
  swp->add_option("--seeds", seeds, "Seed list override");
  swp->add_option("-j,--jobs", opts.jobs, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return cmd_run(opts, agent, seed);
    if (*cmp) return cmd_compare(opts, seeds, agents);
    if (*swp) return cmd_sweep(opts, seeds);
  } catch (const amc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const amc::DivergenceLimitExceeded& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
