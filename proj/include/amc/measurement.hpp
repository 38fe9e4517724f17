#pragma once

#include <vector>

namespace amc {

/// What the base station knows at transmission time: the frozen sounded
/// per-antenna SINRs, the quantized CQI, the snapshot age and RSRP.
struct Measurement {
  std::vector<double> sounded_sinr_db;
  int cqi = 1;
  double age_ms = 0.0;
  double rsrp_dbm = 0.0;
};

}  // namespace amc
