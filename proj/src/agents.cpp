#include "amc/agents.hpp"

#include <stdexcept>
#include <string>

namespace amc {

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::olla: return "olla";
    case AgentKind::odl: return "odl";
    case AgentKind::qlearning: return "qlearning";
  }
  return "?";
}

AgentKind parse_agent_kind(std::string_view text) {
  if (text == "olla") return AgentKind::olla;
  if (text == "odl") return AgentKind::odl;
  if (text == "qlearning" || text == "ql") return AgentKind::qlearning;
  throw std::invalid_argument("unknown agent kind '" + std::string(text) + "'");
}

void AgentConfig::validate() const {
  if (retrain_period < 1) throw std::invalid_argument("agent: retrain period must be >= 1");
  if (buffer_capacity < 1) throw std::invalid_argument("agent: buffer capacity must be >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("agent: epsilon must be in [0, 1]");
  if (!(subsample_rate > 0.0 && subsample_rate <= 1.0))
    throw std::invalid_argument("agent: subsample rate must be in (0, 1]");
  if (fit.steps < 0 || fit.batch < 1) throw std::invalid_argument("agent: bad fit steps/batch");
  for (int h : hidden)
    if (h < 1) throw std::invalid_argument("agent: hidden widths must be positive");
  olla.validate();
}

int select_by_expected_throughput(std::span<const double> ack_probability, std::span<const double> se) {
  int best = 1;
  double best_value = ack_probability[0] * se[0];
  for (std::size_t m = 1; m < ack_probability.size(); ++m) {
    const double value = ack_probability[m] * se[m];
    if (value > best_value) {
      best_value = value;
      best = static_cast<int>(m) + 1;
    }
  }
  return best;
}

int select_by_value(std::span<const double> q) {
  int best = 1;
  for (std::size_t m = 1; m < q.size(); ++m)
    if (q[m] > q[static_cast<std::size_t>(best - 1)]) best = static_cast<int>(m) + 1;
  return best;
}

Agent::Agent(const AgentConfig& config, const McsTable& mcs, const CqiTable& cqi, int rx_antennas,
             std::uint64_t seed)
    : config_(config), mcs_(mcs), cqi_(cqi), rng_(seed), olla_(config.olla),
      buffer_(config.buffer_capacity) {
  config_.validate();
  if (config_.kind != AgentKind::olla) {
    std::vector<int> sizes{static_cast<int>(feature_count(rx_antennas))};
    sizes.insert(sizes.end(), config_.hidden.begin(), config_.hidden.end());
    sizes.push_back(1);
    const auto spec = config_.kind == AgentKind::odl ? ActivationSpec::classifier()
                                                     : ActivationSpec::regressor();
    model_.emplace(std::move(sizes), spec, rng_);
    scratch_.resize(static_cast<std::size_t>(mcs_.size()));
  }
}

LossKind Agent::loss_kind() const {
  return config_.kind == AgentKind::qlearning ? LossKind::mse : LossKind::logloss;
}

int Agent::select_mcs(const Measurement& meas) {
  if (config_.kind == AgentKind::olla || phase_ == Phase::warmup)
    return olla_select(olla_, meas.cqi, mcs_.size(), cqi_.count);
  if (config_.epsilon > 0.0 &&
      std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < config_.epsilon)
    return std::uniform_int_distribution<int>(1, mcs_.size())(rng_);
  try {
    return select_online(meas);
  } catch (const ModelDivergence&) {
    ++divergences_;
    return olla_select(olla_, meas.cqi, mcs_.size(), cqi_.count);
  }
}

int Agent::select_online(const Measurement& meas) {
  std::vector<double> prefix = make_features(meas, 0);
  prefix.pop_back();
  model_->predict_all_mcs(prefix, mcs_.size(), scratch_);
  if (config_.kind == AgentKind::odl) return select_by_expected_throughput(scratch_, mcs_.se_values());
  return select_by_value(scratch_);
}

void Agent::observe(const Sample& sample) {
  ++tti_;
  if (config_.kind == AgentKind::olla) {
    olla_update(olla_, sample.ack);
    return;
  }
  if (phase_ == Phase::warmup) {
    buffer_.push(sample);
    olla_update(olla_, sample.ack);
    if (buffer_.full()) phase_ = Phase::online;
    return;
  }
  buffer_.maybe_push(sample, config_.subsample_rate, rng_);
}

bool Agent::maybe_retrain() {
  if (!model_ || buffer_.empty()) return false;
  const bool scheduled = tti_ % config_.retrain_period == 0;
  const bool warmup_tick = phase_ == Phase::warmup && config_.train_every_warmup_tti;
  if (!scheduled && !warmup_tick) return false;
  FitReport report = fit(*model_, buffer_, loss_kind(), mcs_, config_.fit, rng_);
  divergences_ += report.divergences;
  losses_.insert(losses_.end(), report.losses.begin(), report.losses.end());
  ++retrains_;
  return true;
}

std::size_t Agent::memory_bytes() const {
  const std::size_t features = model_ ? model_->input_size() : buffer_.empty() ? 0 : buffer_[0].features.size();
  return SampleBuffer::capacity_bytes(buffer_.capacity(), features) + (model_ ? model_->memory_bytes() : 0);
}

}  // namespace amc
