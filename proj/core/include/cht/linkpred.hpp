#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cht/topology.hpp"

namespace cht {

/// Dense link scores over a layer (rows x cols). Predictors leave existing
/// links at 0 and only score non-links.
using ScoreMatrix = Eigen::MatrixXd;

enum class ChVariant { l3n, l3p };

std::string_view to_string(ChVariant variant);
ChVariant parse_ch_variant(std::string_view name);

struct PredictOptions {
  /// Refuse layers whose largest dense intermediate (max(m,n)^2 or m*n) exceeds this.
  std::size_t max_dense_entries = std::size_t{1} << 26;
};

/// Node-based CH (local-community) score on L3 paths, computed with dense products:
///
///   UU = A A^T, VV = A^T A
///   e_UU[i,j] = (UU[i,j] + 1) / (max(d_U[j] - UU[i,j] - 1, 0) + 1)   (i != j, UU[i,j] > 0)
///   e_VV[a,b] likewise with d_V
///   S = e_UU A + A e_VV^T, zeroed on existing links.
ScoreMatrix ch2_l3n(const BipartiteMask& mask, const PredictOptions& options = {});

/// Path-based CH (local-community) score: for every non-link (u, v), the sum over
/// L3 paths u-z1-z2-v of 1/sqrt(de*_z1 * de*_z2), where de* is one plus the
/// number of links of the intermediate node that leave the local community
/// (seeds plus all L3 intermediates of the pair).
ScoreMatrix ch3_l3p(const BipartiteMask& mask);

ScoreMatrix predict(const BipartiteMask& mask, ChVariant variant, const PredictOptions& options = {});

struct BenchRow {
  ChVariant variant = ChVariant::l3n;
  std::size_t size = 0;
  double density = 0.0;
  double seconds = 0.0;
};

/// One-shot prediction time on size x size ER masks for every (size, density).
std::vector<BenchRow> bench_predict(const std::vector<std::size_t>& sizes,
                                    const std::vector<double>& densities,
                                    const std::vector<ChVariant>& variants, std::uint64_t seed = 1,
                                    int repeats = 1);

/// Columns: variant,size,density,seconds
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

/// Row-major CSV, one line per input node.
void write_scores_csv(std::ostream& out, const ScoreMatrix& scores);

}  // namespace cht
