#pragma once

namespace amc {

/// Outer-loop link adaptation: an additive offset (in MCS-index units) on
/// the CQI-derived MCS, nudged up on ACK and down on NACK so that the
/// long-run NACK rate settles at the target BLER.
struct OllaState {
  double offset = 0.0;
  double step = 0.1;
  double target_bler = 0.1;

  void validate() const;
};

/// clamp(round(base_mcs_of_cqi(cqi) + offset), 1, k)
int olla_select(const OllaState& state, int cqi, int k, int n);

/// ACK: offset += step. NACK: offset -= step * (1 - b) / b.
void olla_update(OllaState& state, bool ack);

}  // namespace amc
