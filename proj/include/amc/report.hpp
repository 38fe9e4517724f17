#pragma once

#include <string>

namespace amc {

/// Fixed six-decimal rendering used by every CSV writer.
std::string format_real(double value);

/// Shortest round-trippable rendering, used when echoing configs.
std::string format_exact(double value);

}  // namespace amc
