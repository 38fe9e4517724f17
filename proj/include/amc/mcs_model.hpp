#pragma once

#include <span>
#include <vector>

namespace amc {

/// MCS table: spectral efficiency per index plus the logistic BLER curve
/// parameters. Indices are 1-based throughout (MCS 1..k).
class McsTable {
 public:
  McsTable(std::vector<double> se, std::vector<double> thresholds_db, double slope_per_db);

  /// 28-entry NR 64-QAM table with thresholds -6.5 + 0.75*(m-1) dB, slope 2/dB.
  static McsTable nr_default();

  /// Thresholds theta_m = first + spacing*(m-1).
  static std::vector<double> linear_thresholds(int count, double first_db, double spacing_db);

  int size() const { return static_cast<int>(se_.size()); }
  double se(int mcs) const;
  double threshold_db(int mcs) const;
  double slope() const { return slope_; }
  std::span<const double> se_values() const { return se_; }
  std::span<const double> thresholds_db() const { return thresholds_; }

 private:
  std::vector<double> se_;
  std::vector<double> thresholds_;
  double slope_;
};

/// Spectral efficiency lookup; throws std::out_of_range outside 1..k.
double se_of(const McsTable& table, int mcs);

/// Block error probability 1/(1+exp(s*(sinr - theta_mcs))).
double bler(const McsTable& table, int mcs, double sinr_eff_db);

/// 1 - bler, evaluated without cancellation.
double success_probability(const McsTable& table, int mcs, double sinr_eff_db);

/// argmax_m se[m]*(1 - bler(m)); smallest index on ties.
int oracle_mcs(const McsTable& table, double sinr_eff_db);

struct CqiTable {
  int count = 15;
  double floor_db = -8.0;
  double step_db = 2.0;

  void validate() const;
};

int cqi_from_sinr(const CqiTable& table, double sinr_meas_db);

/// Linear map of CQI 1..n onto the real MCS scale 1..k (not rounded).
double base_mcs_of_cqi(int cqi, int k, int n);

}  // namespace amc
