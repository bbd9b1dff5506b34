// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

#include "rangesim/types.hpp"

namespace rangesim {

/// Thresholds for the traffic heuristics. "Abnormal increase" means a
/// z-score of at least threshold_k over the trailing baseline windows, with
/// an absolute floor of min_count events.
struct DetectorConfig {
  double window_s = 10.0;
  std::size_t baseline_windows = 30;
  double threshold_k = 3.0;
  std::uint64_t min_count = 20;

  SimTime width() const {
    return SimTime(static_cast<std::int64_t>(std::llround(window_s * 1e6)));
  }

  /// Throws ContractError unless every field is positive.
  void check() const {
    if (!(window_s > 0) || width().count() <= 0) throw ContractError("window width must be positive");
    if (baseline_windows == 0) throw ContractError("baseline_windows must be positive");
    if (!(threshold_k > 0)) throw ContractError("threshold_k must be positive");
    if (min_count == 0) throw ContractError("min_count must be positive");
  }

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

}  // namespace rangesim
