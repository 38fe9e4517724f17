#include "amc/mcs_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace amc {

namespace {

// NR PDSCH MCS index table 1 (64-QAM), spectral efficiency column. Index 17
// (2.5664) is dropped because it sits below index 16 and would break
// monotonicity.
constexpr double kNrSe[] = {0.2344, 0.3066, 0.3770, 0.4902, 0.6016, 0.7402, 0.8770,
                            1.0273, 1.1758, 1.3262, 1.3281, 1.4766, 1.6953, 1.9141,
                            2.1602, 2.4063, 2.5703, 2.7305, 3.0293, 3.3223, 3.6094,
                            3.9023, 4.2129, 4.5234, 4.8164, 5.1152, 5.3320, 5.5547};

}  // namespace

McsTable::McsTable(std::vector<double> se, std::vector<double> thresholds_db, double slope_per_db)
    : se_(std::move(se)), thresholds_(std::move(thresholds_db)), slope_(slope_per_db) {
  if (se_.size() < 2) throw std::invalid_argument("mcs table needs at least 2 entries");
  if (thresholds_.size() != se_.size())
    throw std::invalid_argument("mcs table: se and threshold counts differ");
  if (!(slope_ > 0.0)) throw std::invalid_argument("mcs table: bler slope must be positive");
  for (std::size_t i = 0; i < se_.size(); ++i) {
    if (!(se_[i] > 0.0)) throw std::invalid_argument("mcs table: se must be positive");
    if (i > 0 && !(se_[i] > se_[i - 1]))
      throw std::invalid_argument("mcs table: se must be strictly increasing");
    if (i > 0 && !(thresholds_[i] > thresholds_[i - 1]))
      throw std::invalid_argument("mcs table: thresholds must be strictly increasing");
  }
}

McsTable McsTable::nr_default() {
  std::vector<double> se(std::begin(kNrSe), std::end(kNrSe));
  const int k = static_cast<int>(se.size());
  return McsTable(std::move(se), linear_thresholds(k, -6.5, 0.75), 2.0);
}

std::vector<double> McsTable::linear_thresholds(int count, double first_db, double spacing_db) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) out[static_cast<std::size_t>(m)] = first_db + spacing_db * m;
  return out;
}

double McsTable::se(int mcs) const {
  if (mcs < 1 || mcs > size()) throw std::out_of_range("mcs index " + std::to_string(mcs));
  return se_[static_cast<std::size_t>(mcs - 1)];
}

double McsTable::threshold_db(int mcs) const {
  if (mcs < 1 || mcs > size()) throw std::out_of_range("mcs index " + std::to_string(mcs));
  return thresholds_[static_cast<std::size_t>(mcs - 1)];
}

double se_of(const McsTable& table, int mcs) { return table.se(mcs); }

double bler(const McsTable& table, int mcs, double sinr_eff_db) {
  return 1.0 / (1.0 + std::exp(table.slope() * (sinr_eff_db - table.threshold_db(mcs))));
}

double success_probability(const McsTable& table, int mcs, double sinr_eff_db) {
  return 1.0 / (1.0 + std::exp(-table.slope() * (sinr_eff_db - table.threshold_db(mcs))));
}

int oracle_mcs(const McsTable& table, double sinr_eff_db) {
  int best = 1;
  double best_value = -1.0;
  for (int m = 1; m <= table.size(); ++m) {
    const double value = table.se(m) * success_probability(table, m, sinr_eff_db);
    if (value > best_value) {
      best_value = value;
      best = m;
    }
  }
  return best;
}

void CqiTable::validate() const {
  if (count < 2) throw std::invalid_argument("cqi table needs at least 2 entries");
  if (!(step_db > 0.0)) throw std::invalid_argument("cqi step must be positive");
}

int cqi_from_sinr(const CqiTable& table, double sinr_meas_db) {
  const double idx = std::floor((sinr_meas_db - table.floor_db) / table.step_db) + 1.0;
  return static_cast<int>(std::clamp(idx, 1.0, static_cast<double>(table.count)));
}

double base_mcs_of_cqi(int cqi, int k, int n) {
  if (cqi < 1 || cqi > n) throw std::out_of_range("cqi index " + std::to_string(cqi));
  return 1.0 + (cqi - 1) * static_cast<double>(k - 1) / static_cast<double>(n - 1);
}

}  // namespace amc
