#pragma once

#include <string>

#include "figsynth/chart_model.hpp"
#include "figsynth/rng.hpp"

namespace figsynth {

// Random ChartData that satisfies validate_chart_data for `type`. Values carry
// at most two decimals and six significant digits, so they survive
// canonical_json unchanged. Used by the offline mock backend and the fuzzers.
ChartData random_chart_data(ChartType type, Rng& rng, const std::string& topic);

// Random single-line visualization topic ("Coffee sales by region in 2019").
std::string random_topic(Rng& rng);

}  // namespace figsynth
