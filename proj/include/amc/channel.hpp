#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "amc/mcs_model.hpp"
#include "amc/measurement.hpp"

namespace amc {

enum class ChannelMode { gauss_markov, mimo };

struct ChannelConfig {
  ChannelMode mode = ChannelMode::gauss_markov;
  int tx_antennas = 64;
  int rx_antennas = 4;
  int rank = 1;
  double carrier_hz = 3.5e9;
  double speed_kmh = 3.0;
  double tti_s = 1e-3;
  double sounding_period_s = 5e-3;
  double mean_sinr_db = 12.0;
  double sinr_std_db = 8.0;
  /// Linear receiver noise for the MIMO mode. Zero means "derive from
  /// mean_sinr_db" so that the average per-antenna SNR equals the mean.
  double noise_power = 0.0;
  double tx_power_dbm = 40.0;
  double pathloss_db = 100.0;

  void validate() const;
  double speed_mps() const { return speed_kmh / 3.6; }
  int sounding_period_ttis() const;
  /// AR(1) coefficient exp(-tti/tau_c) with tau_c = 0.423 c / (v f_c); 1 at v = 0.
  double correlation() const;
  double mimo_noise() const;
};

inline constexpr double kSpeedOfLight = 299792458.0;

/// Coherence time 0.423 / f_d in seconds (infinite for v = 0).
double coherence_time_s(double speed_mps, double carrier_hz);

using ComplexMatrix = Eigen::MatrixXcd;

/// First L right singular vectors of H, descending singular value order.
/// Missing directions (rank-deficient H) come from the null-space completion
/// of the full V; `deficient` is set when that happens.
ComplexMatrix svd_precoder(const ComplexMatrix& h, int layers, bool* deficient = nullptr);

/// Per-layer linear-MMSE post-detection SINR in dB:
/// 1 / [(I + A^H A / noise)^-1]_ll - 1 with A = H W.
std::vector<double> post_detection_sinr_db(const ComplexMatrix& h, const ComplexMatrix& w,
                                           double noise);

/// Time-evolving channel with a sounded snapshot that only refreshes at
/// sounding instants. One instance per episode.
class Channel {
 public:
  Channel(const ChannelConfig& config, std::uint64_t seed);

  void advance();
  void sound();
  bool sounding_due() const;

  double true_effective_sinr_db() const;
  Measurement measure(const CqiTable& cqi_table) const;

  std::int64_t tti() const { return tti_; }
  std::int64_t last_sounding_tti() const { return last_sounding_tti_; }
  const ChannelConfig& config() const { return config_; }
  double correlation() const { return rho_; }

  std::span<const double> true_sinr_db() const { return sinr_db_; }
  std::span<const double> sounded_sinr_db() const { return sounded_db_; }
  const ComplexMatrix& h() const { return h_; }
  const ComplexMatrix& sounded_h() const { return sounded_h_; }
  const ComplexMatrix& precoder() const { return w_; }
  int rank_deficient_soundings() const { return rank_deficient_; }

 private:
  void refresh_antenna_sinr(const ComplexMatrix& h, std::vector<double>& out) const;

  ChannelConfig config_;
  double rho_;
  double innovation_;
  double noise_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};

  std::vector<double> sinr_db_;
  std::vector<double> sounded_db_;
  ComplexMatrix h_;
  ComplexMatrix sounded_h_;
  ComplexMatrix w_;

  std::int64_t tti_ = 0;
  std::int64_t last_sounding_tti_ = -1;
  int rank_deficient_ = 0;
};

}  // namespace amc
