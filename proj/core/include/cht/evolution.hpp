#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cht/linkpred.hpp"
#include "cht/rng.hpp"
#include "cht/topology.hpp"

namespace cht {

enum class Softness { soft, deterministic };

/// Linear interpolation of the softness exponent delta over the training fraction.
struct DeltaSchedule {
  double start = 0.5;
  double end = 0.75;

  double at(double training_fraction) const;
};

/// Link importance
///   S_ij = ( |W_ij|/2 / (alpha + (1-alpha) sum_k |W_ik|)
///          + |W_ij|/2 / (alpha + (1-alpha) sum_k |W_kj|) ) ^ (delta / (1-delta)).
/// alpha = 1 is weight magnitude, alpha = 0 relative importance.
struct RemovalRule {
  double alpha = 1.0;
  DeltaSchedule delta;
  Softness softness = Softness::soft;
};

enum class RegrowthKind {
  ch2_l3n_soft,
  ch2_l3n_deterministic,
  ch3_l3p_soft,
  random,
  gradient,
  none,
};

std::string_view to_string(RegrowthKind kind);
RegrowthKind parse_regrowth_kind(std::string_view name);

struct RegrowthRule {
  RegrowthKind kind = RegrowthKind::ch2_l3n_soft;
  /// Soft kinds add epsilon_floor * max(max score, 1) to every candidate, so
  /// candidates without L3 paths stay reachable.
  double epsilon_floor = 1e-4;
};

struct EvolutionConfig {
  double zeta = 0.3;                 // fraction of links removed per step
  std::size_t update_interval = 1;   // optimizer steps between evolution steps
  RemovalRule removal;
  RegrowthRule regrowth;
  std::uint64_t seed = 0;
  double elm_threshold = 0.9;
  bool percolate = true;
  bool use_historical = true;

  void validate() const;
};

/// Weights, connectivity and memory of one layer.
///
/// Invariant: weights are exactly zero off the mask.
struct LayerState {
  Eigen::MatrixXd weights;
  BipartiteMask mask;
  Eigen::MatrixXd historical;             // weight of each position when last removed
  std::vector<std::uint8_t> has_history;  // row-major flags for `historical`
  BitField ever_active;

  LayerState() = default;
  LayerState(Eigen::MatrixXd w, BipartiteMask m);

  std::size_t rows() const { return mask.rows(); }
  std::size_t cols() const { return mask.cols(); }

  /// Fills the history of every position with `values` (used to freeze a layer's
  /// weights in toy studies: regrown links then take these values).
  void seed_history(const Eigen::MatrixXd& values);
};

struct StepContext {
  double density_target = 0.1;
  double training_fraction = 0.0;
  std::uint64_t step = 0;
  std::uint64_t layer = 0;
  /// Single-layer percolation: a side marked hidden treats its zero-degree
  /// nodes as inactive and never regrows onto them.
  bool inputs_hidden = false;
  bool outputs_hidden = false;
};

struct StepReport {
  std::uint64_t step = 0;
  std::uint64_t layer = 0;
  double density = 0.0;
  double elm_ratio = 0.0;  // NaN when nothing was regrown
  bool elm = false;        // elm_ratio >= threshold
  double itop_rate = 0.0;
  double anp = 1.0;
  std::size_t pruned = 0;
  std::size_t removed = 0;     // zeta removal
  std::size_t percolated = 0;  // links lost to percolation
  std::size_t regrown = 0;
  std::size_t shortfall = 0;
  LinkSet removed_links;  // pruned + removed + percolated
  LinkSet regrown_links;
};

/// Importance scores on existing links (0 elsewhere). A link whose row and
/// column sums of |W| are both zero scores 0.
ScoreMatrix removal_scores(const Eigen::MatrixXd& weights, const BipartiteMask& mask,
                           const RemovalRule& rule, double training_fraction);

enum class SelectMode { keep, grow };

/// Selects `count` of `candidates`. Soft: successive sampling proportional to
/// the scores (grow mode first adds the epsilon floor). Deterministic: the top
/// `count` scores, ties to the lower (row, col). Returns a sorted LinkSet.
LinkSet soft_select(const ScoreMatrix& scores, const LinkSet& candidates, std::size_t count,
                    SelectMode mode, Softness softness, double epsilon_floor, Rng& rng);

/// Zeroes weights off the mask. Throws InvalidArgument on shape mismatch.
Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& weights, const BipartiteMask& mask);

// Phases of one evolution step. evolve_step chains them for a single layer;
// the trainer interleaves them across layers with a network-wide percolation.

struct RemovalOutcome {
  std::size_t pruned = 0;
  std::size_t removed = 0;
  std::size_t regrow_quota = 0;
  LinkSet removed_links;
};

/// Prunes down to the target budget (lowest scores first), then removes a
/// fraction zeta of the remaining links by keep-sampling on removal scores.
RemovalOutcome remove_links(LayerState& state, const EvolutionConfig& config,
                            const StepContext& ctx, Rng& rng);

/// Replaces the layer's mask by `reduced` (a subset of it), storing the weights
/// of dropped links in history. Returns the dropped links.
LinkSet drop_links(LayerState& state, const BipartiteMask& reduced);

struct RegrowthOutcome {
  std::size_t regrown = 0;
  std::size_t shortfall = 0;
  LinkSet regrown_links;
};

/// Adds up to `quota` links among non-links whose endpoints are active.
/// `dense_grads` is required for RegrowthKind::gradient.
RegrowthOutcome regrow_links(LayerState& state, const EvolutionConfig& config, std::size_t quota,
                             const std::vector<bool>& inactive_rows,
                             const std::vector<bool>& inactive_cols,
                             const Eigen::MatrixXd* dense_grads, Rng& rng);

/// prune -> remove -> percolate -> regrow -> metrics on a single layer.
StepReport evolve_step(LayerState& state, const EvolutionConfig& config, const StepContext& ctx,
                       const Eigen::MatrixXd* dense_grads = nullptr);

/// Columns: step,layer,density,elm_ratio,itop_rate,anp,removed,regrown,shortfall
void write_step_csv_header(std::ostream& out);
void write_step_csv_row(std::ostream& out, const StepReport& report);

}  // namespace cht
