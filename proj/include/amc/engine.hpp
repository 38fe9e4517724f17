#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "amc/agents.hpp"
#include "amc/channel.hpp"
#include "amc/mcs_model.hpp"

namespace amc {

struct SweepGrid {
  std::vector<double> speeds_kmh = {3.0, 60.0};
  std::vector<int> ranks = {1, 2, 3};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<AgentKind> agents = {AgentKind::olla, AgentKind::odl, AgentKind::qlearning};
};

struct ScenarioConfig {
  ChannelConfig channel;
  McsTable mcs = McsTable::nr_default();
  CqiTable cqi;
  /// Hyperparameters shared by every agent; `agent.kind` is overridden per run.
  AgentConfig agent;
  /// Unset means tti / sounding period.
  std::optional<double> subsample_rate;
  std::int64_t episode_length = 200000;
  std::uint64_t seed = 1;
  std::string label = "default";
  int max_divergences = 1000;
  SweepGrid sweep;

  void validate() const;
  AgentConfig agent_config(AgentKind kind) const;
  double effective_subsample_rate() const;
};

/// Independent stream seed for `label` under `master` (splitmix64 of the
/// master seed mixed with an FNV-1a hash of the label).
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

struct TtiRecord {
  std::int64_t tti = 0;
  int mcs = 0;
  double sinr_eff_db = 0.0;
  bool ack = false;
  double tput = 0.0;

  bool operator==(const TtiRecord&) const = default;
};

struct EpisodeMetrics {
  std::string scenario;
  AgentKind agent = AgentKind::olla;
  std::uint64_t seed = 0;
  std::int64_t length = 0;
  std::vector<TtiRecord> records;  // filled only when tracing
  double tput_sum = 0.0;
  double mean_tput = 0.0;          // bit/s/Hz summed over layers
  std::int64_t nacks = 0;
  double bler = 0.0;
  std::vector<std::int64_t> mcs_histogram;
  int divergences = 0;
  int retrains = 0;
  double final_olla_offset = 0.0;
  std::uint64_t channel_hash = 0;
  std::uint64_t training_flops = 0;
  std::uint64_t inference_flops = 0;

  bool operator==(const EpisodeMetrics&) const = default;
};

class DivergenceLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpisodeOptions {
  bool keep_trace = false;
  /// When set, every transmitted sample is written here (sample-log CSV rows, no header).
  std::ostream* sample_log = nullptr;
};

/// One full-buffer episode: per TTI sound (if due), measure, select, draw the
/// ACK against the true effective SINR, account throughput, observe, retrain.
/// Channel and transmission draws depend only on the seed, never on the agent.
EpisodeMetrics run_episode(const ScenarioConfig& config, AgentKind kind, std::uint64_t seed,
                           const EpisodeOptions& options = {});

/// Mbit/s for a mean spectral efficiency over the 20 MHz carrier with 10% overhead.
double to_mbps(double mean_tput, double bandwidth_hz = 20e6, double efficiency = 0.9);

enum class Execution { serial, openmp };

struct EpisodeJob {
  const ScenarioConfig* config = nullptr;
  AgentKind kind = AgentKind::olla;
  std::uint64_t seed = 0;
};

/// Runs independent episodes. The serial path is the reference; the OpenMP
/// path must reproduce it exactly.
std::vector<EpisodeMetrics> run_episodes(std::span<const EpisodeJob> jobs, Execution execution);

struct GainRow {
  std::string scenario;
  AgentKind agent = AgentKind::olla;
  std::uint64_t seed = 0;
  double mean_tput = 0.0;
  double bler = 0.0;
  double gain_vs_olla = 0.0;
};

struct AgentGain {
  AgentKind agent = AgentKind::olla;
  double mean_gain = 0.0;
  int wins = 0;  // seeds with throughput above olla
  int seeds = 0;
};

struct GainTable {
  std::string scenario;
  std::vector<GainRow> rows;
  std::vector<AgentGain> summary;
  std::vector<EpisodeMetrics> episodes;

  const AgentGain& gain_of(AgentKind kind) const;
};

/// Paired comparison against OLLA: every agent in `agents` (OLLA is added if
/// missing) runs on every seed with shared channel and transmission streams.
GainTable compare(const ScenarioConfig& config, std::span<const AgentKind> agents,
                  std::span<const std::uint64_t> seeds, Execution execution = Execution::openmp);

struct GainMatrixRow {
  double speed_kmh = 0.0;
  int rank = 1;
  GainTable table;
};

/// Cross product speeds x ranks from `config.sweep`, each cell a paired compare().
std::vector<GainMatrixRow> sweep(const ScenarioConfig& config, Execution execution = Execution::openmp);

/// Scenario copy with the grid cell applied and labelled "v<speed>_r<rank>".
ScenarioConfig grid_cell(const ScenarioConfig& config, double speed_kmh, int rank);

// CSV writers. Schemas:
//   tti log:     tti,agent,mcs,sinr_eff_db,ack,tput
//   summary:     scenario,agent,seed,mean_tput,bler,gain_vs_olla
//   gain matrix: speed_kmh,rank,seeds,<agent>_mean_gain,<agent>_wins...
void write_tti_log(std::ostream& os, const EpisodeMetrics& metrics, bool header = true);
void write_summary_header(std::ostream& os);
void write_summary_row(std::ostream& os, const GainRow& row, bool has_gain = true);
void write_gain_matrix(std::ostream& os, std::span<const GainMatrixRow> rows,
                       std::span<const AgentKind> agents);

}  // namespace amc
