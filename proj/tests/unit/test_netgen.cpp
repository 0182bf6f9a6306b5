#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cht/error.hpp"
#include "cht/netgen.hpp"
#include "cht/rng.hpp"
#include "oracles.hpp"

using namespace cht;

TEST_SUITE("netgen") {

TEST_CASE("link budget rounds and rejects empty layers") {
  CHECK(link_budget(10, 10, 0.05) == 5);
  CHECK(link_budget(10, 10, 1.0) == 100);
  CHECK(link_budget(3, 3, 0.25) == 2);
  CHECK_THROWS_AS(link_budget(10, 10, 0.0), InvalidArgument);
  CHECK_THROWS_AS(link_budget(10, 10, 1.5), InvalidArgument);
  CHECK_THROWS_AS(link_budget(10, 10, 0.001), InvalidArgument);
}

TEST_CASE("diagonal distance is circular") {
  CHECK(diagonal_distance(0, 0, 8, 8) == 0);
  CHECK(diagonal_distance(7, 0, 8, 8) == 1);
  CHECK(diagonal_distance(4, 0, 8, 8) == 4);
  // j = 2 of 4 outputs maps to input 4 of 8
  CHECK(diagonal_distance(4, 2, 8, 4) == 0);
  CHECK(diagonal_distance(0, 2, 8, 4) == 4);
}

TEST_CASE("ER has exactly the budget") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BipartiteMask m = gen_er(30, 17, 0.2, seed);
    CHECK(m.link_count() == link_budget(30, 17, 0.2));
  }
  CHECK(gen_er(30, 17, 0.2, 3) == gen_er(30, 17, 0.2, 3));
  CHECK_FALSE(gen_er(30, 17, 0.2, 3) == gen_er(30, 17, 0.2, 4));
}

TEST_CASE("BRF conserves the requested out-degrees") {
  for (DegreeMode mode : {DegreeMode::fixed, DegreeMode::uniform}) {
    for (double r : {0.0, 0.25, 0.5, 1.0}) {
      BrfParams p{r, mode, 0.1, 7, false};
      const auto deg = brf_output_degrees(40, 30, p);
      CHECK(std::accumulate(deg.begin(), deg.end(), std::size_t{0}) == link_budget(40, 30, 0.1));
      const BipartiteMask m = gen_brf(40, 30, p);
      CHECK(oracle::brute_degrees(m).cols == deg);
    }
  }
}

TEST_CASE("BRF fixed degrees spread the remainder over the first outputs") {
  const auto deg = brf_output_degrees(10, 4, {0.5, DegreeMode::fixed, 0.35, 0, false});
  CHECK(deg == std::vector<std::size_t>{4, 4, 3, 3});
}

TEST_CASE("BRF r = 0 is the BSW lattice") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const BipartiteMask brf = gen_brf(24, 36, {0.0, DegreeMode::fixed, 0.15, seed, false});
    const BipartiteMask bsw = gen_bsw(24, 36, {0.0, 0.15, seed + 100});
    CHECK(brf == bsw);
  }
}

TEST_CASE("BRF r = 0 links lie closest to the diagonal") {
  const BipartiteMask m = gen_brf(32, 32, {0.0, DegreeMode::fixed, 0.1, 0, false});
  for (std::size_t j = 0; j < 32; ++j) {
    std::size_t worst_in = 0;
    std::size_t best_out = 32;
    for (std::size_t i = 0; i < 32; ++i) {
      const std::size_t d = diagonal_distance(i, j, 32, 32);
      if (m.test(i, j)) worst_in = std::max(worst_in, d);
      else best_out = std::min(best_out, d);
    }
    CHECK(worst_in <= best_out);
  }
}

TEST_CASE("BRF randomness widens the receptive field") {
  auto mean_distance = [](const BipartiteMask& m) {
    double s = 0.0;
    for (const Link& l : m.links()) s += static_cast<double>(diagonal_distance(l.row, l.col, m.rows(), m.cols()));
    return s / static_cast<double>(m.link_count());
  };
  double previous = -1.0;
  for (double r : {0.0, 0.25, 0.5, 1.0}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      total += mean_distance(gen_brf(64, 64, {r, DegreeMode::fixed, 0.1, seed, false}));
    }
    CHECK(total > previous);
    previous = total;
  }
}

TEST_CASE("BRF rejects r outside [0, 1]") {
  CHECK_THROWS_AS(gen_brf(8, 8, {1.5, DegreeMode::fixed, 0.5, 0, false}), InvalidArgument);
}

TEST_CASE("BSW keeps the budget and rewires the requested share") {
  const BipartiteMask lattice = gen_bsw(40, 40, {0.0, 0.1, 0});
  for (double beta : {0.25, 0.5, 1.0}) {
    const BipartiteMask m = gen_bsw(40, 40, {beta, 0.1, 3});
    CHECK(m.link_count() == lattice.link_count());
    std::size_t moved = 0;
    for (const Link& l : lattice.links()) moved += m.test(l.row, l.col) ? 0 : 1;
    CHECK(moved <= static_cast<std::size_t>(std::llround(beta * 160.0)));
  }
}

TEST_CASE("BSF hits the budget and equal partition balances inputs") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const BipartiteMask m = gen_bsf(50, 40, {0.1, false, false, seed});
    CHECK(m.link_count() == link_budget(50, 40, 0.1));
    const BipartiteMask eq = gen_bsf(50, 40, {0.1, true, false, seed});
    CHECK(eq.link_count() == m.link_count());
    const auto d = oracle::brute_degrees(eq);
    const auto [lo, hi] = std::minmax_element(d.rows.begin(), d.rows.end());
    CHECK(*hi - *lo <= 1);
    CHECK(oracle::brute_degrees(m).cols == d.cols);
  }
}

TEST_CASE("BSF degrees are heavy tailed") {
  const BipartiteMask m = gen_bsf(200, 200, {0.05, false, false, 1});
  const auto d = oracle::brute_degrees(m);
  std::vector<std::size_t> all(d.rows);
  all.insert(all.end(), d.cols.begin(), d.cols.end());
  const double mean = static_cast<double>(m.link_count()) / 200.0;
  CHECK(static_cast<double>(*std::max_element(all.begin(), all.end())) > 3.0 * mean);
}

TEST_CASE("resort aligns hubs across layers") {
  MaskChain chain{{gen_bsf(20, 30, {0.2, false, false, 1}), gen_bsf(30, 10, {0.2, false, false, 2})}, {}};
  const auto before = degrees(chain.layers[1]).input_degrees;
  resort_hidden_neurons(chain);
  const auto in_deg = degrees(chain.layers[0]).output_degrees;
  auto after = degrees(chain.layers[1]).input_degrees;
  // The downstream rows are a permutation, ordered like the upstream in-degrees.
  auto sorted_before = before;
  auto sorted_after = after;
  std::sort(sorted_before.begin(), sorted_before.end());
  std::sort(sorted_after.begin(), sorted_after.end());
  CHECK(sorted_before == sorted_after);
  for (std::size_t a = 0; a < 30; ++a) {
    for (std::size_t b = 0; b < 30; ++b) {
      if (in_deg[a] > in_deg[b]) CHECK(after[a] >= after[b]);
    }
  }
}

TEST_CASE("CSTI keeps the most correlated entries") {
  Rng rng(4);
  Eigen::MatrixXd x(60, 6);
  for (Eigen::Index r = 0; r < 60; ++r) {
    const double z = rng.normal();
    x(r, 0) = z;
    x(r, 1) = z + 0.1 * rng.normal();
    x(r, 2) = rng.normal();
    x(r, 3) = -z + 0.5 * rng.normal();
    x(r, 4) = rng.normal();
    x(r, 5) = 1.0;  // constant
  }
  auto pearson = [&](Eigen::Index a, Eigen::Index b) {
    double ma = 0.0, mb = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      ma += x(r, a);
      mb += x(r, b);
    }
    ma /= static_cast<double>(x.rows());
    mb /= static_cast<double>(x.rows());
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      sab += (x(r, a) - ma) * (x(r, b) - mb);
      saa += (x(r, a) - ma) * (x(r, a) - ma);
      sbb += (x(r, b) - mb) * (x(r, b) - mb);
    }
    return (a == b || saa == 0.0 || sbb == 0.0) ? 0.0 : std::fabs(sab) / std::sqrt(saa * sbb);
  };
  const Eigen::MatrixXd corr = abs_feature_correlation(x);
  for (Eigen::Index a = 0; a < 6; ++a) {
    for (Eigen::Index b = 0; b < 6; ++b) CHECK(corr(a, b) == doctest::Approx(pearson(a, b)).epsilon(1e-12));
  }

  const std::size_t cols = 9;
  const BipartiteMask m = gen_csti(6, cols, {x, 0.2, 0});
  std::vector<std::size_t> order(6 * cols);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto score = [&](std::size_t k) { return pearson(static_cast<Eigen::Index>(k / cols), static_cast<Eigen::Index>((k % cols) % 6)); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) > score(b) + 1e-12; });
  const std::size_t budget = link_budget(6, cols, 0.2);
  CHECK(m.link_count() == budget);
  for (std::size_t t = 0; t < budget; ++t) CHECK(m.test(order[t] / cols, order[t] % cols));
  CHECK_THROWS_AS(gen_csti(5, cols, {x, 0.2, 0}), InvalidArgument);
}

}
