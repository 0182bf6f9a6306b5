#include "cht/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cht/error.hpp"

namespace cht {
namespace {

void check_count(std::size_t count, std::size_t available) {
  if (count > available) {
    throw InvalidArgument("cannot select " + std::to_string(count) + " of " +
                          std::to_string(available) + " candidates");
  }
}

std::vector<std::size_t> sorted_prefix(std::vector<std::size_t> order, std::size_t count) {
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights,
                                                             std::size_t count, Rng& rng) {
  check_count(count, weights.size());
  if (count == 0) return {};

  // Efraimidis-Spirakis: the `count` largest keys log(u)/w form a successive
  // weighted sample. Zero weights get key -inf and are ordered by a second draw.
  struct Key {
    double primary;
    double secondary;
  };
  std::vector<Key> keys(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("sampling weights must be finite and nonnegative");
    }
    const double u = rng.uniform_open();
    if (w > 0.0) {
      keys[i] = {std::log(u) / w, 0.0};
    } else {
      keys[i] = {-std::numeric_limits<double>::infinity(), u};
    }
  }

  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (keys[a].primary != keys[b].primary) return keys[a].primary > keys[b].primary;
    if (keys[a].secondary != keys[b].secondary) return keys[a].secondary > keys[b].secondary;
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count - 1),
                   order.end(), better);
  return sorted_prefix(std::move(order), count);
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t count) {
  check_count(count, scores.size());
  if (count == 0) return {};
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count - 1),
                   order.end(), [&](std::size_t a, std::size_t b) {
                     if (scores[a] != scores[b]) return scores[a] > scores[b];
                     return a < b;
                   });
  return sorted_prefix(std::move(order), count);
}

std::vector<std::size_t> bottom_k_indices(std::span<const double> scores, std::size_t count) {
  check_count(count, scores.size());
  if (count == 0) return {};
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count - 1),
                   order.end(), [&](std::size_t a, std::size_t b) {
                     if (scores[a] != scores[b]) return scores[a] < scores[b];
                     return a < b;
                   });
  return sorted_prefix(std::move(order), count);
}

}  // namespace cht
