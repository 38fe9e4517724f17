#include "amc/olla.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "amc/mcs_model.hpp"

namespace amc {

void OllaState::validate() const {
  if (!(step > 0.0)) throw std::invalid_argument("olla: step must be positive");
  if (!(target_bler > 0.0 && target_bler < 1.0))
    throw std::invalid_argument("olla: target bler must lie in (0, 1)");
}

int olla_select(const OllaState& state, int cqi, int k, int n) {
  const double raw = std::round(base_mcs_of_cqi(cqi, k, n) + state.offset);
  return static_cast<int>(std::clamp(raw, 1.0, static_cast<double>(k)));
}

void olla_update(OllaState& state, bool ack) {
  if (ack) {
    state.offset += state.step;
  } else {
    state.offset -= state.step * (1.0 - state.target_bler) / state.target_bler;
  }
}

}  // namespace amc
