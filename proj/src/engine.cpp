#include "amc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>
#include <sstream>

#include "amc/report.hpp"

namespace amc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  return splitmix64(master ^ fnv1a(label.data(), label.size()));
}

void ScenarioConfig::validate() const {
  channel.validate();
  cqi.validate();
  agent.validate();
  if (subsample_rate && !(*subsample_rate > 0.0 && *subsample_rate <= 1.0))
    throw std::invalid_argument("subsample rate must be in (0, 1]");
  if (episode_length <= static_cast<std::int64_t>(agent.buffer_capacity))
    throw std::invalid_argument("episode length must exceed the warm-up (buffer capacity)");
}

double ScenarioConfig::effective_subsample_rate() const {
  if (subsample_rate) return *subsample_rate;
  return channel.tti_s / channel.sounding_period_s;
}

AgentConfig ScenarioConfig::agent_config(AgentKind kind) const {
  AgentConfig out = agent;
  out.kind = kind;
  out.subsample_rate = effective_subsample_rate();
  return out;
}

EpisodeMetrics run_episode(const ScenarioConfig& config, AgentKind kind, std::uint64_t seed,
                           const EpisodeOptions& options) {
  config.validate();
  Channel channel(config.channel, derive_seed(seed, "channel"));
  std::mt19937_64 transmission(derive_seed(seed, "transmission"));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const std::string agent_label = "agent:" + std::string(to_string(kind));
  Agent agent(config.agent_config(kind), config.mcs, config.cqi, config.channel.rx_antennas,
              derive_seed(seed, agent_label));

  EpisodeMetrics m;
  m.scenario = config.label;
  m.agent = kind;
  m.seed = seed;
  m.length = config.episode_length;
  m.mcs_histogram.assign(static_cast<std::size_t>(config.mcs.size()), 0);
  if (options.keep_trace) m.records.reserve(static_cast<std::size_t>(config.episode_length));
  const double layers = static_cast<double>(config.channel.rank);
  std::uint64_t hash = kFnvOffset;

  for (std::int64_t t = 0; t < config.episode_length; ++t) {
    if (channel.sounding_due()) channel.sound();
    const Measurement meas = channel.measure(config.cqi);
    const int mcs = agent.select_mcs(meas);

    const double sinr = channel.true_effective_sinr_db();
    hash = fnv1a(&sinr, sizeof sinr, hash);
    const bool ack = uniform(transmission) < success_probability(config.mcs, mcs, sinr);
    const double tput = ack ? layers * config.mcs.se(mcs) : 0.0;

    m.tput_sum += tput;
    if (!ack) ++m.nacks;
    ++m.mcs_histogram[static_cast<std::size_t>(mcs - 1)];
    if (options.keep_trace) m.records.push_back({t, mcs, sinr, ack, tput});

    Sample sample{make_features(meas, mcs), ack, t};
    if (options.sample_log != nullptr) write_sample_row(*options.sample_log, sample);
    agent.observe(sample);
    if (agent.maybe_retrain() && agent.divergences() > config.max_divergences) {
      throw DivergenceLimitExceeded("agent " + std::string(to_string(kind)) + " diverged " +
                                    std::to_string(agent.divergences()) + " times (limit " +
                                    std::to_string(config.max_divergences) + ")");
    }
    channel.advance();
  }

  m.mean_tput = m.tput_sum / static_cast<double>(m.length);
  m.bler = static_cast<double>(m.nacks) / static_cast<double>(m.length);
  m.divergences = agent.divergences();
  m.retrains = agent.retrain_count();
  m.final_olla_offset = agent.olla().offset;
  m.channel_hash = hash;
  if (const MlpModel* model = agent.model()) {
    m.training_flops = model->flops().training;
    m.inference_flops = model->flops().inference;
  }
  return m;
}

double to_mbps(double mean_tput, double bandwidth_hz, double efficiency) {
  return mean_tput * bandwidth_hz * efficiency / 1e6;
}

const AgentGain& GainTable::gain_of(AgentKind kind) const {
  for (const auto& g : summary)
    if (g.agent == kind) return g;
  throw std::out_of_range("no gain entry for agent " + std::string(to_string(kind)));
}

namespace {

std::vector<AgentKind> with_baseline(std::span<const AgentKind> agents) {
  std::vector<AgentKind> out{AgentKind::olla};
  for (AgentKind a : agents)
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  return out;
}

GainTable assemble(const std::string& scenario, std::span<const AgentKind> kinds,
                   std::span<const std::uint64_t> seeds, std::vector<EpisodeMetrics> episodes) {
  GainTable table;
  table.scenario = scenario;
  const std::size_t n_agents = kinds.size();
  for (std::size_t a = 0; a < n_agents; ++a) table.summary.push_back({kinds[a], 0.0, 0, 0});
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const double baseline = episodes[s * n_agents].mean_tput;
    for (std::size_t a = 0; a < n_agents; ++a) {
      const EpisodeMetrics& e = episodes[s * n_agents + a];
      const double gain = (e.mean_tput - baseline) / baseline;
      table.rows.push_back({scenario, e.agent, e.seed, e.mean_tput, e.bler, gain});
      auto& g = table.summary[a];
      g.mean_gain += gain;
      if (e.mean_tput > baseline) ++g.wins;
      ++g.seeds;
    }
  }
  for (auto& g : table.summary) g.mean_gain /= static_cast<double>(std::max(1, g.seeds));
  table.episodes = std::move(episodes);
  return table;
}

}  // namespace

GainTable compare(const ScenarioConfig& config, std::span<const AgentKind> agents,
                  std::span<const std::uint64_t> seeds, Execution execution) {
  if (seeds.empty()) throw std::invalid_argument("compare needs at least one seed");
  const auto kinds = with_baseline(agents);
  std::vector<EpisodeJob> jobs;
  for (std::uint64_t seed : seeds)
    for (AgentKind k : kinds) jobs.push_back({&config, k, seed});
  return assemble(config.label, kinds, seeds, run_episodes(jobs, execution));
}

ScenarioConfig grid_cell(const ScenarioConfig& config, double speed_kmh, int rank) {
  ScenarioConfig cell = config;
  cell.channel.speed_kmh = speed_kmh;
  cell.channel.rank = rank;
  cell.label = "v" + format_exact(speed_kmh) + "_r" + std::to_string(rank);
  return cell;
}

std::vector<GainMatrixRow> sweep(const ScenarioConfig& config, Execution execution) {
  const auto& grid = config.sweep;
  if (grid.seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
  const auto kinds = with_baseline(grid.agents);
  std::vector<ScenarioConfig> cells;
  for (double v : grid.speeds_kmh)
    for (int r : grid.ranks) cells.push_back(grid_cell(config, v, r));
  for (const auto& c : cells) c.validate();

  // One flat job list so the worker pool sees the whole grid at once.
  std::vector<EpisodeJob> jobs;
  for (const auto& c : cells)
    for (std::uint64_t seed : grid.seeds)
      for (AgentKind k : kinds) jobs.push_back({&c, k, seed});
  auto episodes = run_episodes(jobs, execution);

  std::vector<GainMatrixRow> out;
  const std::size_t per_cell = grid.seeds.size() * kinds.size();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<EpisodeMetrics> slice(std::make_move_iterator(episodes.begin() + c * per_cell),
                                      std::make_move_iterator(episodes.begin() + (c + 1) * per_cell));
    out.push_back({cells[c].channel.speed_kmh, cells[c].channel.rank,
                   assemble(cells[c].label, kinds, grid.seeds, std::move(slice))});
  }
  return out;
}

void write_tti_log(std::ostream& os, const EpisodeMetrics& metrics, bool header) {
  if (header) os << "tti,agent,mcs,sinr_eff_db,ack,tput\n";
  const auto agent = to_string(metrics.agent);
  for (const auto& r : metrics.records)
    os << r.tti << ',' << agent << ',' << r.mcs << ',' << format_real(r.sinr_eff_db) << ','
       << (r.ack ? 1 : 0) << ',' << format_real(r.tput) << '\n';
}

void write_summary_header(std::ostream& os) {
  os << "scenario,agent,seed,mean_tput,bler,gain_vs_olla\n";
}

void write_summary_row(std::ostream& os, const GainRow& row, bool has_gain) {
  os << row.scenario << ',' << to_string(row.agent) << ',' << row.seed << ','
     << format_real(row.mean_tput) << ',' << format_real(row.bler) << ','
     << (has_gain ? format_real(row.gain_vs_olla) : std::string()) << '\n';
}

void write_gain_matrix(std::ostream& os, std::span<const GainMatrixRow> rows,
                       std::span<const AgentKind> agents) {
  const auto kinds = with_baseline(agents);
  os << "speed_kmh,rank,seeds";
  for (AgentKind k : kinds) os << ',' << to_string(k) << "_mean_gain," << to_string(k) << "_wins";
  os << '\n';
  for (const auto& row : rows) {
    const int seeds = row.table.summary.empty() ? 0 : row.table.summary.front().seeds;
    os << format_exact(row.speed_kmh) << ',' << row.rank << ',' << seeds;
    for (AgentKind k : kinds) {
      const auto& g = row.table.gain_of(k);
      os << ',' << format_real(g.mean_gain) << ',' << g.wins;
    }
    os << '\n';
  }
}

}  // namespace amc
