#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cht/topology.hpp"

namespace cht {

/// Number of links for a layer of the given shape and density: round(density*m*n).
/// Throws InvalidArgument if density is outside (0, 1] or floor(density*m*n) < 1.
std::size_t link_budget(std::size_t rows, std::size_t cols, double density);

/// Circular distance between input i and output j after mapping j onto input
/// coordinates with j' = round(j*rows/cols).
std::size_t diagonal_distance(std::size_t i, std::size_t j, std::size_t rows, std::size_t cols);

/// Erdos-Renyi: exactly link_budget() links, uniformly without replacement.
BipartiteMask gen_er(std::size_t rows, std::size_t cols, double density, std::uint64_t seed);

enum class DegreeMode { fixed, uniform };

struct BrfParams {
  double randomness = 0.0;  // r in [0, 1]
  DegreeMode degree_mode = DegreeMode::fixed;
  double target_density = 0.1;
  std::uint64_t seed = 0;
  /// Use the literal score d^((1-r)/r), which favours links far from the
  /// diagonal. The default weight (d+1)^(-(1-r)/r) favours links near it.
  bool literal_score = false;
};

/// Per-output degree sequence requested by gen_brf (sums to link_budget()).
std::vector<std::size_t> brf_output_degrees(std::size_t rows, std::size_t cols,
                                            const BrfParams& params);

/// Bipartite receptive field model. Output j receives exactly
/// brf_output_degrees()[j] links, chosen without replacement with weight
/// (d_ij + 1)^(-(1-r)/r); r = 0 takes the nearest inputs, r = 1 is uniform.
BipartiteMask gen_brf(std::size_t rows, std::size_t cols, const BrfParams& params);

struct BswParams {
  double beta = 0.0;  // rewiring fraction in [0, 1]
  double target_density = 0.1;
  std::uint64_t seed = 0;
};

/// Bipartite small world: ring lattice (each output joined to its nearest
/// inputs, same degree layout as BRF fixed mode) with a fraction beta of the
/// links moved to uniformly random empty positions.
BipartiteMask gen_bsw(std::size_t rows, std::size_t cols, const BswParams& params);

struct BsfParams {
  double target_density = 0.1;
  bool equal_partition = false;
  bool resort = false;  // honoured by gen_bsf_chain only
  std::uint64_t seed = 0;
};

/// Bipartite scale free: preferential attachment over rows+cols nodes with
/// randomly assigned sides; same-side links are moved to the opposite side.
/// With equal_partition, input degrees are equalised to floor/ceil of the mean
/// while output degrees are kept.
BipartiteMask gen_bsf(std::size_t rows, std::size_t cols, const BsfParams& params);

/// Permutes the hidden neurons between consecutive layers so that the k-th
/// highest in-degree neuron of layer l lines up with the k-th highest
/// out-degree row of layer l+1. Only rows of the downstream layer move.
void resort_hidden_neurons(MaskChain& chain);

struct CstiParams {
  Eigen::MatrixXd calibration;  // samples x rows
  double target_density = 0.1;
  std::uint64_t seed = 0;
};

/// |Pearson correlation| between features (columns). Zero-variance features
/// correlate 0 with everything; the diagonal is 0.
Eigen::MatrixXd abs_feature_correlation(const Eigen::MatrixXd& samples);

/// Correlated sparse topological initialisation: the feature correlation matrix
/// tiled/truncated to rows x cols, keeping the top link_budget() entries
/// (ties by row-major index).
BipartiteMask gen_csti(std::size_t rows, std::size_t cols, const CstiParams& params);

enum class TopologyKind { dense, er, brf, bsw, bsf, csti };

std::string_view to_string(TopologyKind kind);
TopologyKind parse_topology_kind(std::string_view name);

}  // namespace cht
