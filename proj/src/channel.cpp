#include "amc/channel.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace amc {

void ChannelConfig::validate() const {
  if (rank < 1 || rx_antennas < rank || tx_antennas < rx_antennas)
    throw std::invalid_argument("channel: antennas must satisfy rank <= rx <= tx");
  if (!(tti_s > 0.0) || !(sounding_period_s > 0.0))
    throw std::invalid_argument("channel: periods must be positive");
  const double ratio = sounding_period_s / tti_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0)
    throw std::invalid_argument("channel: sounding period must be a multiple of the tti");
  if (speed_kmh < 0.0) throw std::invalid_argument("channel: speed must be non-negative");
  if (!(carrier_hz > 0.0)) throw std::invalid_argument("channel: carrier must be positive");
  if (sinr_std_db < 0.0) throw std::invalid_argument("channel: sinr std must be non-negative");
  if (noise_power < 0.0) throw std::invalid_argument("channel: noise power must be non-negative");
}

int ChannelConfig::sounding_period_ttis() const {
  return static_cast<int>(std::lround(sounding_period_s / tti_s));
}

double coherence_time_s(double speed_mps, double carrier_hz) {
  if (speed_mps <= 0.0) return std::numeric_limits<double>::infinity();
  const double doppler = speed_mps * carrier_hz / kSpeedOfLight;
  return 0.423 / doppler;
}

double ChannelConfig::correlation() const {
  const double v = speed_mps();
  if (v <= 0.0) return 1.0;
  return std::exp(-tti_s / coherence_time_s(v, carrier_hz));
}

double ChannelConfig::mimo_noise() const {
  if (noise_power > 0.0) return noise_power;
  return tx_antennas * std::pow(10.0, -mean_sinr_db / 10.0);
}

ComplexMatrix svd_precoder(const ComplexMatrix& h, int layers, bool* deficient) {
  if (layers < 1 || layers > std::min(h.rows(), h.cols()))
    throw std::invalid_argument("svd_precoder: rank exceeds matrix dimensions");
  Eigen::JacobiSVD<ComplexMatrix> svd(h, Eigen::ComputeFullV);
  if (deficient != nullptr) {
    const auto& sv = svd.singularValues();
    const double tol = std::max(h.rows(), h.cols()) * std::numeric_limits<double>::epsilon() *
                       (sv.size() > 0 ? sv(0) : 0.0);
    int nonzero = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > tol) ++nonzero;
    *deficient = nonzero < layers;
  }
  return svd.matrixV().leftCols(layers);
}

std::vector<double> post_detection_sinr_db(const ComplexMatrix& h, const ComplexMatrix& w,
                                           double noise) {
  if (h.cols() != w.rows()) throw std::invalid_argument("post_detection_sinr: shape mismatch");
  if (!(noise > 0.0)) throw std::invalid_argument("post_detection_sinr: noise must be positive");
  const ComplexMatrix a = h * w;
  const Eigen::Index layers = a.cols();
  ComplexMatrix normal = a.adjoint() * a / noise;
  normal += ComplexMatrix::Identity(layers, layers);
  const ComplexMatrix inv = normal.ldlt().solve(ComplexMatrix::Identity(layers, layers));
  std::vector<double> out(static_cast<std::size_t>(layers));
  for (Eigen::Index l = 0; l < layers; ++l) {
    const double sinr = 1.0 / inv(l, l).real() - 1.0;
    out[static_cast<std::size_t>(l)] = 10.0 * std::log10(sinr);
  }
  return out;
}

Channel::Channel(const ChannelConfig& config, std::uint64_t seed)
    : config_(config), rho_(config.correlation()), rng_(seed) {
  config_.validate();
  innovation_ = std::sqrt(std::max(0.0, 1.0 - rho_ * rho_));
  noise_ = config_.mimo_noise();
  const auto r = static_cast<std::size_t>(config_.rx_antennas);
  if (config_.mode == ChannelMode::gauss_markov) {
    sinr_db_.resize(r);
    for (auto& g : sinr_db_) g = config_.mean_sinr_db + config_.sinr_std_db * normal_(rng_);
  } else {
    h_.resize(config_.rx_antennas, config_.tx_antennas);
    const double scale = std::sqrt(0.5);
    for (Eigen::Index j = 0; j < h_.cols(); ++j)
      for (Eigen::Index i = 0; i < h_.rows(); ++i)
        h_(i, j) = {scale * normal_(rng_), scale * normal_(rng_)};
    refresh_antenna_sinr(h_, sinr_db_);
  }
}

void Channel::refresh_antenna_sinr(const ComplexMatrix& h, std::vector<double>& out) const {
  out.resize(static_cast<std::size_t>(h.rows()));
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    out[static_cast<std::size_t>(i)] = 10.0 * std::log10(h.row(i).squaredNorm() / noise_);
}

void Channel::advance() {
  if (config_.mode == ChannelMode::gauss_markov) {
    const double mu = config_.mean_sinr_db;
    const double sigma = config_.sinr_std_db;
    for (auto& g : sinr_db_) g = mu + rho_ * (g - mu) + innovation_ * sigma * normal_(rng_);
  } else {
    const double scale = innovation_ * std::sqrt(0.5);
    for (Eigen::Index j = 0; j < h_.cols(); ++j)
      for (Eigen::Index i = 0; i < h_.rows(); ++i) {
        const double re = normal_(rng_);
        const double im = normal_(rng_);
        h_(i, j) = rho_ * h_(i, j) + std::complex<double>(scale * re, scale * im);
      }
    refresh_antenna_sinr(h_, sinr_db_);
  }
  ++tti_;
}

bool Channel::sounding_due() const { return tti_ % config_.sounding_period_ttis() == 0; }

void Channel::sound() {
  if (!sounding_due()) throw std::logic_error("channel: sound() called off the sounding schedule");
  sounded_db_ = sinr_db_;
  if (config_.mode == ChannelMode::mimo) {
    sounded_h_ = h_;
    bool deficient = false;
    w_ = svd_precoder(sounded_h_, config_.rank, &deficient);
    if (deficient) ++rank_deficient_;
  }
  last_sounding_tti_ = tti_;
}

double Channel::true_effective_sinr_db() const {
  const int layers = config_.rank;
  if (config_.mode == ChannelMode::gauss_markov) {
    const double mean = std::accumulate(sinr_db_.begin(), sinr_db_.end(), 0.0) /
                        static_cast<double>(sinr_db_.size());
    return mean - 10.0 * std::log10(static_cast<double>(layers));
  }
  if (w_.size() == 0) throw std::logic_error("channel: no precoder before the first sounding");
  // Layers share the transmit power, so each sees noise scaled by L.
  const auto per_layer = post_detection_sinr_db(h_, w_, noise_ * layers);
  return std::accumulate(per_layer.begin(), per_layer.end(), 0.0) /
         static_cast<double>(per_layer.size());
}

Measurement Channel::measure(const CqiTable& cqi_table) const {
  if (last_sounding_tti_ < 0) throw std::logic_error("channel: measure() before any sounding");
  Measurement m;
  m.sounded_sinr_db = sounded_db_;
  const double mean = std::accumulate(sounded_db_.begin(), sounded_db_.end(), 0.0) /
                      static_cast<double>(sounded_db_.size());
  m.cqi = cqi_from_sinr(cqi_table, mean);
  m.age_ms = static_cast<double>(tti_ - last_sounding_tti_) * config_.tti_s * 1e3;
  m.rsrp_dbm = config_.tx_power_dbm - config_.pathloss_db;
  return m;
}

}  // namespace amc
