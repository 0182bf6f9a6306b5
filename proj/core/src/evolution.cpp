#include "cht/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "cht/error.hpp"
#include "cht/sampling.hpp"

namespace cht {
namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

LinkSet merge_sorted(const LinkSet& a, const LinkSet& b) {
  LinkSet out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void remember(LayerState& state, const Link& l) {
  state.historical(idx(l.row), idx(l.col)) = state.weights(idx(l.row), idx(l.col));
  state.has_history[l.row * state.cols() + l.col] = 1;
  state.weights(idx(l.row), idx(l.col)) = 0.0;
}

}  // namespace

double DeltaSchedule::at(double training_fraction) const {
  const double f = std::clamp(training_fraction, 0.0, 1.0);
  return start + (end - start) * f;
}

std::string_view to_string(RegrowthKind kind) {
  switch (kind) {
    case RegrowthKind::ch2_l3n_soft: return "ch2_l3n_soft";
    case RegrowthKind::ch2_l3n_deterministic: return "ch2_l3n_deterministic";
    case RegrowthKind::ch3_l3p_soft: return "ch3_l3p_soft";
    case RegrowthKind::random: return "random";
    case RegrowthKind::gradient: return "gradient";
    case RegrowthKind::none: return "none";
  }
  return "?";
}

RegrowthKind parse_regrowth_kind(std::string_view name) {
  for (auto k : {RegrowthKind::ch2_l3n_soft, RegrowthKind::ch2_l3n_deterministic,
                 RegrowthKind::ch3_l3p_soft, RegrowthKind::random, RegrowthKind::gradient,
                 RegrowthKind::none}) {
    if (name == to_string(k)) return k;
  }
  throw InvalidArgument("unknown regrowth rule '" + std::string(name) + "'");
}

void EvolutionConfig::validate() const {
  if (!(zeta > 0.0 && zeta < 1.0)) throw InvalidArgument("evolution: zeta must lie in (0, 1)");
  if (update_interval < 1) throw InvalidArgument("evolution: update interval must be >= 1");
  if (removal.alpha != 0.0 && removal.alpha != 1.0) {
    throw InvalidArgument("evolution: alpha must be 0 (relative importance) or 1 (magnitude)");
  }
  for (double d : {removal.delta.start, removal.delta.end}) {
    if (!(d >= 0.5 && d < 1.0)) throw InvalidArgument("evolution: delta must lie in [0.5, 1)");
  }
  const bool soft = regrowth.kind == RegrowthKind::ch2_l3n_soft ||
                    regrowth.kind == RegrowthKind::ch3_l3p_soft;
  if (soft && !(regrowth.epsilon_floor > 0.0)) {
    throw InvalidArgument("evolution: soft regrowth needs a positive epsilon floor");
  }
  if (!(elm_threshold > 0.0 && elm_threshold <= 1.0)) {
    throw InvalidArgument("evolution: elm threshold must lie in (0, 1]");
  }
}

LayerState::LayerState(Eigen::MatrixXd w, BipartiteMask m)
    : weights(std::move(w)),
      mask(std::move(m)),
      historical(Eigen::MatrixXd::Zero(weights.rows(), weights.cols())),
      has_history(mask.size(), 0),
      ever_active(mask.rows(), mask.cols()) {
  weights = apply_mask(weights, mask);
  itop_accumulate(ever_active, mask);
}

void LayerState::seed_history(const Eigen::MatrixXd& values) {
  if (values.rows() != historical.rows() || values.cols() != historical.cols()) {
    throw InvalidArgument("seed_history: shape mismatch");
  }
  historical = values;
  std::fill(has_history.begin(), has_history.end(), std::uint8_t{1});
}

ScoreMatrix removal_scores(const Eigen::MatrixXd& weights, const BipartiteMask& mask,
                           const RemovalRule& rule, double training_fraction) {
  if (static_cast<std::size_t>(weights.rows()) != mask.rows() ||
      static_cast<std::size_t>(weights.cols()) != mask.cols()) {
    throw InvalidArgument("removal_scores: weight and mask shapes differ");
  }
  const double delta = rule.delta.at(training_fraction);
  const double exponent = delta / (1.0 - delta);
  const double alpha = rule.alpha;

  const Eigen::MatrixXd magnitude = weights.cwiseAbs();
  const Eigen::VectorXd row_sum = magnitude.rowwise().sum();
  const Eigen::RowVectorXd col_sum = magnitude.colwise().sum();

  ScoreMatrix s = ScoreMatrix::Zero(weights.rows(), weights.cols());
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    for (std::size_t j = 0; j < mask.cols(); ++j) {
      if (!mask.test(i, j)) continue;
      const double w = magnitude(idx(i), idx(j));
      const double by_row = alpha + (1.0 - alpha) * row_sum(idx(i));
      const double by_col = alpha + (1.0 - alpha) * col_sum(idx(j));
      const double base = (by_row > 0.0 ? 0.5 * w / by_row : 0.0) +
                          (by_col > 0.0 ? 0.5 * w / by_col : 0.0);
      s(idx(i), idx(j)) = exponent == 1.0 ? base : std::pow(base, exponent);
    }
  }
  return s;
}

LinkSet soft_select(const ScoreMatrix& scores, const LinkSet& candidates, std::size_t count,
                    SelectMode mode, Softness softness, double epsilon_floor, Rng& rng) {
  if (count > candidates.size()) {
    throw InvalidArgument("soft_select: " + std::to_string(count) + " requested from " +
                          std::to_string(candidates.size()) + " candidates");
  }
  std::vector<double> values(candidates.size());
  double top = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    values[k] = scores(idx(candidates[k].row), idx(candidates[k].col));
    top = std::max(top, values[k]);
  }

  std::vector<std::size_t> chosen;
  if (softness == Softness::deterministic) {
    chosen = top_k_indices(values, count);
  } else {
    if (mode == SelectMode::grow) {
      const double floor = epsilon_floor * std::max(top, 1.0);
      for (double& v : values) v += floor;
    } else if (top > 0.0) {
      // Proportions are scale free; rescaling avoids underflow of small scores.
      for (double& v : values) v /= top;
    }
    chosen = weighted_sample_without_replacement(values, count, rng);
  }

  LinkSet out;
  out.reserve(chosen.size());
  for (std::size_t k : chosen) out.push_back(candidates[k]);
  return out;
}

Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& weights, const BipartiteMask& mask) {
  if (static_cast<std::size_t>(weights.rows()) != mask.rows() ||
      static_cast<std::size_t>(weights.cols()) != mask.cols()) {
    throw InvalidArgument("apply_mask: weight and mask shapes differ");
  }
  Eigen::MatrixXd out = weights;
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    for (std::size_t j = 0; j < mask.cols(); ++j) {
      if (!mask.test(i, j)) out(idx(i), idx(j)) = 0.0;
    }
  }
  return out;
}

RemovalOutcome remove_links(LayerState& state, const EvolutionConfig& config,
                            const StepContext& ctx, Rng& rng) {
  RemovalOutcome outcome;
  const std::size_t current = state.mask.link_count();
  const double exact_target = ctx.density_target * static_cast<double>(state.mask.size());
  const std::size_t target =
      std::min(current, static_cast<std::size_t>(std::max<long long>(0, std::llround(exact_target))));

  const ScoreMatrix scores =
      removal_scores(state.weights, state.mask, config.removal, ctx.training_fraction);
  LinkSet existing = state.mask.links();

  if (current > target) {
    std::vector<double> values(existing.size());
    for (std::size_t k = 0; k < existing.size(); ++k) {
      values[k] = scores(idx(existing[k].row), idx(existing[k].col));
    }
    const auto weakest = bottom_k_indices(values, current - target);
    LinkSet pruned;
    std::vector<std::uint8_t> drop(existing.size(), 0);
    for (std::size_t k : weakest) {
      drop[k] = 1;
      pruned.push_back(existing[k]);
    }
    LinkSet kept;
    kept.reserve(target);
    for (std::size_t k = 0; k < existing.size(); ++k) {
      if (!drop[k]) kept.push_back(existing[k]);
    }
    for (const Link& l : pruned) {
      remember(state, l);
      state.mask.reset(l.row, l.col);
    }
    outcome.pruned = pruned.size();
    outcome.removed_links = std::move(pruned);
    existing = std::move(kept);
  }

  if (config.regrowth.kind == RegrowthKind::none) return outcome;

  const auto removal_count =
      static_cast<std::size_t>(std::llround(config.zeta * static_cast<double>(existing.size())));
  const LinkSet kept = soft_select(scores, existing, existing.size() - removal_count,
                                   SelectMode::keep, config.removal.softness, 0.0, rng);
  LinkSet removed;
  removed.reserve(removal_count);
  std::set_difference(existing.begin(), existing.end(), kept.begin(), kept.end(),
                      std::back_inserter(removed));
  for (const Link& l : removed) {
    remember(state, l);
    state.mask.reset(l.row, l.col);
  }
  outcome.removed = removed.size();
  outcome.regrow_quota = removed.size();
  outcome.removed_links = merge_sorted(outcome.removed_links, removed);
  return outcome;
}

LinkSet drop_links(LayerState& state, const BipartiteMask& reduced) {
  if (reduced.rows() != state.rows() || reduced.cols() != state.cols()) {
    throw InvalidArgument("drop_links: shape mismatch");
  }
  LinkSet dropped;
  for (const Link& l : state.mask.links()) {
    if (!reduced.test(l.row, l.col)) dropped.push_back(l);
  }
  for (const Link& l : dropped) {
    remember(state, l);
    state.mask.reset(l.row, l.col);
  }
  return dropped;
}

RegrowthOutcome regrow_links(LayerState& state, const EvolutionConfig& config, std::size_t quota,
                             const std::vector<bool>& inactive_rows,
                             const std::vector<bool>& inactive_cols,
                             const Eigen::MatrixXd* dense_grads, Rng& rng) {
  RegrowthOutcome outcome;
  if (quota == 0 || config.regrowth.kind == RegrowthKind::none) return outcome;

  LinkSet candidates;
  for (std::size_t i = 0; i < state.rows(); ++i) {
    if (!inactive_rows.empty() && inactive_rows[i]) continue;
    for (std::size_t j = 0; j < state.cols(); ++j) {
      if (!inactive_cols.empty() && inactive_cols[j]) continue;
      if (!state.mask.test(i, j)) {
        candidates.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
      }
    }
  }
  const std::size_t count = std::min(quota, candidates.size());
  outcome.shortfall = quota - count;

  const double eps = config.regrowth.epsilon_floor;
  switch (config.regrowth.kind) {
    case RegrowthKind::ch2_l3n_soft:
      outcome.regrown_links = soft_select(ch2_l3n(state.mask), candidates, count, SelectMode::grow,
                                          Softness::soft, eps, rng);
      break;
    case RegrowthKind::ch2_l3n_deterministic:
      outcome.regrown_links = soft_select(ch2_l3n(state.mask), candidates, count, SelectMode::grow,
                                          Softness::deterministic, eps, rng);
      break;
    case RegrowthKind::ch3_l3p_soft:
      outcome.regrown_links = soft_select(ch3_l3p(state.mask), candidates, count, SelectMode::grow,
                                          Softness::soft, eps, rng);
      break;
    case RegrowthKind::random: {
      const ScoreMatrix ones = ScoreMatrix::Ones(idx(state.rows()), idx(state.cols()));
      outcome.regrown_links =
          soft_select(ones, candidates, count, SelectMode::grow, Softness::soft, eps, rng);
      break;
    }
    case RegrowthKind::gradient: {
      if (dense_grads == nullptr) {
        throw InvalidArgument("gradient regrowth needs dense gradients");
      }
      if (dense_grads->rows() != idx(state.rows()) || dense_grads->cols() != idx(state.cols())) {
        throw InvalidArgument("gradient regrowth: gradient shape mismatch");
      }
      const ScoreMatrix magnitude = dense_grads->cwiseAbs();
      outcome.regrown_links = soft_select(magnitude, candidates, count, SelectMode::grow,
                                          Softness::deterministic, eps, rng);
      break;
    }
    case RegrowthKind::none:
      break;
  }

  for (const Link& l : outcome.regrown_links) {
    state.mask.set(l.row, l.col);
    const std::size_t flat = l.row * state.cols() + l.col;
    const bool recall = config.use_historical && state.has_history[flat];
    state.weights(idx(l.row), idx(l.col)) = recall ? state.historical(idx(l.row), idx(l.col)) : 0.0;
  }
  outcome.regrown = outcome.regrown_links.size();
  return outcome;
}

StepReport evolve_step(LayerState& state, const EvolutionConfig& config, const StepContext& ctx,
                       const Eigen::MatrixXd* dense_grads) {
  config.validate();
  Rng rng = Rng::stream(config.seed, ctx.layer, ctx.step);

  StepReport report;
  report.step = ctx.step;
  report.layer = ctx.layer;

  RemovalOutcome removal = remove_links(state, config, ctx, rng);
  report.pruned = removal.pruned;
  report.removed = removal.removed;

  // Within a single layer a hidden node with no link here has no path through
  // the layer at all; it is excluded from regrowth.
  std::vector<bool> inactive_rows(state.rows(), false);
  std::vector<bool> inactive_cols(state.cols(), false);
  if (config.percolate) {
    const DegreeProfile deg = degrees(state.mask);
    std::size_t hidden = 0;
    std::size_t active = 0;
    if (ctx.inputs_hidden) {
      for (std::size_t i = 0; i < state.rows(); ++i) inactive_rows[i] = deg.input_degrees[i] == 0;
      hidden += state.rows();
      active += static_cast<std::size_t>(std::count(inactive_rows.begin(), inactive_rows.end(), false));
    }
    if (ctx.outputs_hidden) {
      for (std::size_t j = 0; j < state.cols(); ++j) inactive_cols[j] = deg.output_degrees[j] == 0;
      hidden += state.cols();
      active += static_cast<std::size_t>(std::count(inactive_cols.begin(), inactive_cols.end(), false));
    }
    report.anp = hidden == 0 ? 1.0 : static_cast<double>(active) / static_cast<double>(hidden);
  }

  const RegrowthOutcome regrowth = regrow_links(state, config, removal.regrow_quota, inactive_rows,
                                                inactive_cols, dense_grads, rng);
  report.regrown = regrowth.regrown;
  report.shortfall = regrowth.shortfall;
  report.removed_links = std::move(removal.removed_links);
  report.regrown_links = regrowth.regrown_links;

  report.elm_ratio = report.regrown_links.empty()
                         ? std::numeric_limits<double>::quiet_NaN()
                         : overlap_ratio(report.removed_links, report.regrown_links);
  report.elm = !std::isnan(report.elm_ratio) && report.elm_ratio >= config.elm_threshold;
  report.itop_rate = itop_accumulate(state.ever_active, state.mask);
  report.density = state.mask.density();
  return report;
}

void write_step_csv_header(std::ostream& out) {
  out << "step,layer,density,elm_ratio,itop_rate,anp,removed,regrown,shortfall\n";
}

void write_step_csv_row(std::ostream& out, const StepReport& r) {
  const auto old_precision = out.precision(10);
  out << r.step << ',' << r.layer << ',' << r.density << ',';
  if (std::isnan(r.elm_ratio)) {
    out << "nan";
  } else {
    out << r.elm_ratio;
  }
  out << ',' << r.itop_rate << ',' << r.anp << ',' << r.removed_links.size() << ',' << r.regrown
      << ',' << r.shortfall << '\n';
  out.precision(old_precision);
}

}  // namespace cht
