#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cht/rng.hpp"

namespace cht {

/// Draws `count` distinct indices, one at a time, each with probability
/// proportional to its weight among those not yet drawn (successive sampling).
///
/// Zero-weight items are only taken once every positive-weight item has been
/// drawn, uniformly at random among themselves. Returns indices sorted ascending.
/// Throws InvalidArgument if count > weights.size() or a weight is negative/non-finite.
std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights,
                                                             std::size_t count, Rng& rng);

/// Indices of the `count` largest scores; ties go to the lower index. Sorted ascending.
std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t count);

/// Indices of the `count` smallest scores; ties go to the lower index. Sorted ascending.
std::vector<std::size_t> bottom_k_indices(std::span<const double> scores, std::size_t count);

}  // namespace cht
