#include "cht/linkpred.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "cht/error.hpp"
#include "cht/netgen.hpp"

namespace cht {
namespace {

Eigen::MatrixXd to_dense(const BipartiteMask& mask) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mask.rows()),
                                            static_cast<Eigen::Index>(mask.cols()));
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    const auto row = mask.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j]) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    }
  }
  return a;
}

// e[i,j] = (common[i,j] + 1) / (max(deg[j] - common[i,j] - 1, 0) + 1) off the
// diagonal where common > 0, else 0.
Eigen::MatrixXd community_ratio(const Eigen::MatrixXd& common, const Eigen::VectorXd& deg) {
  const Eigen::Index n = common.rows();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = common(i, j);
      if (i == j || c <= 0.0) continue;
      const double ext = std::max(deg(j) - c - 1.0, 0.0);
      e(i, j) = (c + 1.0) / (ext + 1.0);
    }
  }
  return e;
}

struct Adjacency {
  std::vector<std::vector<std::uint32_t>> out;  // per input node: linked outputs
  std::vector<std::vector<std::uint32_t>> in;   // per output node: linked inputs
};

Adjacency adjacency(const BipartiteMask& mask) {
  Adjacency adj;
  adj.out.resize(mask.rows());
  adj.in.resize(mask.cols());
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    for (std::size_t j = 0; j < mask.cols(); ++j) {
      if (mask.test(i, j)) {
        adj.out[i].push_back(static_cast<std::uint32_t>(j));
        adj.in[j].push_back(static_cast<std::uint32_t>(i));
      }
    }
  }
  return adj;
}

// counts(i, j) = number of groups containing both i and j.
Eigen::MatrixXd common_neighbours(const std::vector<std::vector<std::uint32_t>>& groups,
                                  std::size_t nodes) {
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes),
                                                 static_cast<Eigen::Index>(nodes));
  // Lists are ascending: fill the upper triangle, then mirror it.
  for (const auto& g : groups) {
    for (std::size_t q = 0; q < g.size(); ++q) {
      double* column = counts.col(g[q]).data();
      for (std::size_t p = 0; p <= q; ++p) column[g[p]] += 1.0;
    }
  }
  const auto size = static_cast<Eigen::Index>(nodes);
  for (Eigen::Index j = 0; j < size; ++j) {
    for (Eigen::Index i = j + 1; i < size; ++i) counts(i, j) = counts(j, i);
  }
  return counts;
}

}  // namespace

std::string_view to_string(ChVariant variant) {
  return variant == ChVariant::l3n ? "ch2_l3n" : "ch3_l3p";
}

ChVariant parse_ch_variant(std::string_view name) {
  if (name == "l3n" || name == "ch2_l3n" || name == "ch2-l3n") return ChVariant::l3n;
  if (name == "l3p" || name == "ch3_l3p" || name == "ch3-l3p") return ChVariant::l3p;
  throw InvalidArgument("unknown link predictor '" + std::string(name) + "'");
}

ScoreMatrix ch2_l3n(const BipartiteMask& mask, const PredictOptions& options) {
  const std::size_t m = mask.rows();
  const std::size_t n = mask.cols();
  const std::size_t largest = std::max({m * m, n * n, m * n});
  if (largest > options.max_dense_entries) {
    throw InvalidArgument("ch2_l3n: layer " + std::to_string(m) + "x" + std::to_string(n) +
                          " exceeds the dense prediction limit");
  }

  const Eigen::MatrixXd a = to_dense(mask);
  const Eigen::VectorXd deg_u = a.rowwise().sum();
  const Eigen::VectorXd deg_v = a.colwise().sum().transpose();

  // Step 1: two-step paths within each side. A is 0/1, so A A^T and A^T A are
  // accumulated from adjacency lists instead of dense products.
  const Adjacency adj = adjacency(mask);
  const Eigen::MatrixXd uu = common_neighbours(adj.in, m);
  const Eigen::MatrixXd vv = common_neighbours(adj.out, n);

  // Step 2: per-neighbour community ratios.
  const Eigen::MatrixXd e_uu = community_ratio(uu, deg_u);
  const Eigen::MatrixXd e_vv = community_ratio(vv, deg_v);

  // Step 3: aggregate over both sides, keep non-links only.
  ScoreMatrix s = e_uu * a;
  s.noalias() += a * e_vv.transpose();
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      if (a(i, j) != 0.0) s(i, j) = 0.0;
    }
  }
  return s;
}

ScoreMatrix ch3_l3p(const BipartiteMask& mask) {
  const std::size_t m = mask.rows();
  const std::size_t n = mask.cols();
  const Adjacency adj = adjacency(mask);
  ScoreMatrix s = ScoreMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));

  struct Path {
    std::uint32_t v;
    std::uint32_t z1;  // output-side intermediate, linked to u
    std::uint32_t z2;  // input-side intermediate, linked to v
  };
  std::vector<Path> paths;
  std::vector<Path> grouped;
  std::vector<std::size_t> bucket(n + 1);
  // Paths through each intermediate for the current pair: equals its links
  // into the local community other than the seed link.
  std::vector<std::uint32_t> through_z1(n, 0);
  std::vector<std::uint32_t> through_z2(m, 0);

  for (std::size_t u = 0; u < m; ++u) {
    // Store every L3 path leaving u that ends on a non-link.
    paths.clear();
    for (std::uint32_t z1 : adj.out[u]) {
      for (std::uint32_t z2 : adj.in[z1]) {
        if (z2 == u) continue;
        for (std::uint32_t v : adj.out[z2]) {
          if (!mask.test(u, v)) paths.push_back({v, z1, z2});
        }
      }
    }
    if (paths.empty()) continue;

    // Group paths by their end node v.
    std::fill(bucket.begin(), bucket.end(), 0);
    for (const Path& p : paths) ++bucket[p.v + 1];
    for (std::size_t v = 0; v < n; ++v) bucket[v + 1] += bucket[v];
    grouped.resize(paths.size());
    {
      std::vector<std::size_t> cursor(bucket.begin(), bucket.end() - 1);
      for (const Path& p : paths) grouped[cursor[p.v]++] = p;
    }

    for (std::size_t v = 0; v < n; ++v) {
      const std::size_t begin = bucket[v];
      const std::size_t end = bucket[v + 1];
      if (begin == end) continue;
      for (std::size_t k = begin; k < end; ++k) {
        ++through_z1[grouped[k].z1];
        ++through_z2[grouped[k].z2];
      }
      double score = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const Path& p = grouped[k];
        // de* = (degree - internal links - seed link) + 1
        const auto de1 = static_cast<double>(adj.in[p.z1].size() - through_z1[p.z1]);
        const auto de2 = static_cast<double>(adj.out[p.z2].size() - through_z2[p.z2]);
        score += 1.0 / std::sqrt(de1 * de2);
      }
      for (std::size_t k = begin; k < end; ++k) {
        through_z1[grouped[k].z1] = 0;
        through_z2[grouped[k].z2] = 0;
      }
      s(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = score;
    }
  }
  return s;
}

ScoreMatrix predict(const BipartiteMask& mask, ChVariant variant, const PredictOptions& options) {
  return variant == ChVariant::l3n ? ch2_l3n(mask, options) : ch3_l3p(mask);
}

std::vector<BenchRow> bench_predict(const std::vector<std::size_t>& sizes,
                                    const std::vector<double>& densities,
                                    const std::vector<ChVariant>& variants, std::uint64_t seed,
                                    int repeats) {
  std::vector<BenchRow> rows;
  for (std::size_t size : sizes) {
    for (double density : densities) {
      const BipartiteMask mask = gen_er(size, size, density, seed);
      for (ChVariant variant : variants) {
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < std::max(repeats, 1); ++r) {
          const auto start = std::chrono::steady_clock::now();
          const ScoreMatrix s = predict(mask, variant);
          const auto stop = std::chrono::steady_clock::now();
          // Keep the result observable so the call cannot be elided.
          if (s.size() > 0 && !std::isfinite(s(0, 0))) throw Error("non-finite score");
          best = std::min(best, std::chrono::duration<double>(stop - start).count());
        }
        rows.push_back({variant, size, density, best});
      }
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "variant,size,density,seconds\n";
  for (const BenchRow& r : rows) {
    out << to_string(r.variant) << ',' << r.size << ',' << r.density << ',' << r.seconds << '\n';
  }
}

void write_scores_csv(std::ostream& out, const ScoreMatrix& scores) {
  const auto old_precision = out.precision(17);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (j > 0) out << ',';
      out << scores(i, j);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace cht
