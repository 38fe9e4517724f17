#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "amc/buffer.hpp"
#include "amc/mcs_model.hpp"
#include "amc/measurement.hpp"
#include "amc/neural.hpp"
#include "amc/olla.hpp"

namespace amc {

enum class AgentKind { olla, odl, qlearning };
enum class Phase { warmup, online };

std::string_view to_string(AgentKind kind);
/// Accepts "olla", "odl", "qlearning" (also "ql").
AgentKind parse_agent_kind(std::string_view text);

struct AgentConfig {
  AgentKind kind = AgentKind::odl;
  int retrain_period = 50;
  std::size_t buffer_capacity = 2000;
  /// Train after every warm-up TTI instead of on the retraining schedule.
  bool train_every_warmup_tti = false;
  std::vector<int> hidden = {32, 16};
  FitConfig fit;
  double epsilon = 0.0;
  double subsample_rate = 0.2;
  OllaState olla;

  void validate() const;
};

/// argmax_m p[m] * se[m], smallest index on ties. Returns a 1-based mcs.
int select_by_expected_throughput(std::span<const double> ack_probability, std::span<const double> se);
/// argmax_m q[m], smallest index on ties. Returns a 1-based mcs.
int select_by_value(std::span<const double> q);

/// One link-adaptation policy with its own buffer, model and OLLA state.
///
/// Lifecycle: during warm-up every transmission is buffered and OLLA picks
/// the MCS; once the buffer has filled the learning agents switch to their
/// network and buffer new samples at the subsampling rate. Retraining runs
/// every `retrain_period` observed TTIs, warm-starting from the current
/// weights. The olla kind never leaves OLLA selection.
class Agent {
 public:
  Agent(const AgentConfig& config, const McsTable& mcs, const CqiTable& cqi, int rx_antennas,
        std::uint64_t seed);

  int select_mcs(const Measurement& meas);
  void observe(const Sample& sample);
  bool maybe_retrain();

  AgentKind kind() const { return config_.kind; }
  Phase phase() const { return phase_; }
  std::int64_t ttis_observed() const { return tti_; }
  const SampleBuffer& buffer() const { return buffer_; }
  const OllaState& olla() const { return olla_; }
  const MlpModel* model() const { return model_ ? &*model_ : nullptr; }
  LossKind loss_kind() const;

  int divergences() const { return divergences_; }
  int retrain_count() const { return retrains_; }
  const std::vector<double>& loss_history() const { return losses_; }
  /// Model plus buffer footprint in bytes.
  std::size_t memory_bytes() const;

 private:
  int select_online(const Measurement& meas);

  AgentConfig config_;
  McsTable mcs_;
  CqiTable cqi_;
  std::mt19937_64 rng_;
  OllaState olla_;
  SampleBuffer buffer_;
  std::optional<MlpModel> model_;
  Phase phase_ = Phase::warmup;
  std::int64_t tti_ = 0;
  int divergences_ = 0;
  int retrains_ = 0;
  std::vector<double> losses_;
  std::vector<double> scratch_;
};

}  // namespace amc
