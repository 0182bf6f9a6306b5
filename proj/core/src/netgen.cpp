#include "cht/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "cht/error.hpp"
#include "cht/rng.hpp"
#include "cht/sampling.hpp"

namespace cht {
namespace {

// k distinct values from [0, n), in draw order (partial Fisher-Yates).
std::vector<std::size_t> uniform_subset(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t pick = t + static_cast<std::size_t>(rng.index(n - t));
    std::swap(pool[t], pool[pick]);
  }
  pool.resize(k);
  return pool;
}

std::vector<std::size_t> fixed_degrees(std::size_t cols, std::size_t budget) {
  std::vector<std::size_t> deg(cols, budget / cols);
  for (std::size_t j = 0; j < budget % cols; ++j) ++deg[j];
  return deg;
}

// Rescales raw positive weights to integers summing to `budget`, each <= cap.
std::vector<std::size_t> apportion(const std::vector<double>& raw, std::size_t budget,
                                   std::size_t cap) {
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  std::vector<std::size_t> deg(raw.size());
  std::vector<std::pair<double, std::size_t>> remainder;
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const double exact = raw[j] * static_cast<double>(budget) / total;
    deg[j] = std::min(cap, static_cast<std::size_t>(std::floor(exact)));
    assigned += deg[j];
    remainder.emplace_back(exact - static_cast<double>(deg[j]), j);
  }
  std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  // Hand out what is left, largest remainders first, skipping full nodes.
  while (assigned < budget) {
    bool progressed = false;
    for (const auto& [frac, j] : remainder) {
      if (assigned == budget) break;
      if (deg[j] < cap) {
        ++deg[j];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) throw InvalidArgument("brf: degree request exceeds the input layer size");
  }
  return deg;
}

std::vector<std::size_t> nearest_inputs(std::size_t j, std::size_t rows, std::size_t cols,
                                        std::size_t degree) {
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> dist(rows);
  for (std::size_t i = 0; i < rows; ++i) dist[i] = diagonal_distance(i, j, rows, cols);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(degree), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (dist[a] != dist[b]) return dist[a] < dist[b];
                      return a < b;
                    });
  order.resize(degree);
  return order;
}

BipartiteMask lattice(std::size_t rows, std::size_t cols, const std::vector<std::size_t>& deg) {
  BipartiteMask mask(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i : nearest_inputs(j, rows, cols, deg[j])) mask.set(i, j);
  }
  return mask;
}

void check_unit(double value, const char* what) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw InvalidArgument(std::string(what) + " must lie in [0, 1]");
  }
}

// Simple undirected graph used while building the scale-free model.
struct EdgeSet {
  std::set<std::pair<std::size_t, std::size_t>> edges;

  static std::pair<std::size_t, std::size_t> key(std::size_t a, std::size_t b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
  }
  bool contains(std::size_t a, std::size_t b) const { return edges.count(key(a, b)) > 0; }
  bool insert(std::size_t a, std::size_t b) { return a != b && edges.insert(key(a, b)).second; }
};

EdgeSet preferential_attachment(std::size_t nodes, std::size_t budget, Rng& rng) {
  const std::size_t per_node = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(budget) / static_cast<double>(nodes))),
      1, nodes - 1);
  EdgeSet g;
  std::vector<std::size_t> stubs;  // node repeated once per incident edge
  const std::size_t seed_nodes = per_node + 1;
  for (std::size_t a = 0; a < seed_nodes; ++a) {
    for (std::size_t b = a + 1; b < seed_nodes; ++b) {
      g.insert(a, b);
      stubs.push_back(a);
      stubs.push_back(b);
    }
  }
  for (std::size_t v = seed_nodes; v < nodes; ++v) {
    std::vector<std::size_t> targets;
    while (targets.size() < per_node) {
      const std::size_t t = stubs[rng.index(stubs.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (std::size_t t : targets) {
      g.insert(v, t);
      stubs.push_back(v);
      stubs.push_back(t);
    }
  }

  // Match the budget exactly with uniform edits.
  while (g.edges.size() > budget) {
    auto it = g.edges.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.index(g.edges.size())));
    g.edges.erase(it);
  }
  const std::size_t max_edges = nodes * (nodes - 1) / 2;
  while (g.edges.size() < std::min(budget, max_edges)) {
    g.insert(rng.index(nodes), rng.index(nodes));
  }
  return g;
}

// Greedy Gale-Ryser construction: outputs keep their degrees, inputs receive
// the prescribed capacities. Largest remaining capacity first, random ties.
BipartiteMask equalize_inputs(const BipartiteMask& mask, Rng& rng) {
  const std::size_t rows = mask.rows();
  const std::size_t cols = mask.cols();
  const std::size_t budget = mask.link_count();
  const auto out_deg = degrees(mask).output_degrees;

  std::vector<std::size_t> capacity(rows, budget / rows);
  for (std::size_t i : uniform_subset(rows, budget % rows, rng)) ++capacity[i];

  std::vector<std::size_t> col_order(cols);
  std::iota(col_order.begin(), col_order.end(), std::size_t{0});
  for (std::size_t t = cols; t > 1; --t) std::swap(col_order[t - 1], col_order[rng.index(t)]);
  std::stable_sort(col_order.begin(), col_order.end(),
                   [&](std::size_t a, std::size_t b) { return out_deg[a] > out_deg[b]; });

  BipartiteMask out(rows, cols);
  std::vector<double> tie(rows);
  std::vector<std::size_t> order(rows);
  for (std::size_t j : col_order) {
    for (auto& t : tie) t = rng.uniform();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (capacity[a] != capacity[b]) return capacity[a] > capacity[b];
      return tie[a] < tie[b];
    });
    for (std::size_t t = 0; t < out_deg[j]; ++t) {
      const std::size_t i = order[t];
      if (capacity[i] == 0) throw Error("bsf: equal partition is infeasible");
      --capacity[i];
      out.set(i, j);
    }
  }
  return out;
}

}  // namespace

std::size_t link_budget(std::size_t rows, std::size_t cols, double density) {
  if (!(density > 0.0 && density <= 1.0)) {
    throw InvalidArgument("density must lie in (0, 1]");
  }
  const double exact = density * static_cast<double>(rows) * static_cast<double>(cols);
  if (std::floor(exact) < 1.0) {
    throw InvalidArgument("density " + std::to_string(density) + " gives no links on a " +
                          std::to_string(rows) + "x" + std::to_string(cols) + " layer");
  }
  return std::min(rows * cols, static_cast<std::size_t>(std::llround(exact)));
}

std::size_t diagonal_distance(std::size_t i, std::size_t j, std::size_t rows, std::size_t cols) {
  const std::size_t mapped = ((2 * j * rows + cols) / (2 * cols)) % rows;
  const std::size_t diff = i > mapped ? i - mapped : mapped - i;
  return std::min(diff, rows - diff);
}

BipartiteMask gen_er(std::size_t rows, std::size_t cols, double density, std::uint64_t seed) {
  const std::size_t budget = link_budget(rows, cols, density);
  Rng rng(seed);
  BipartiteMask mask(rows, cols);
  for (std::size_t k : uniform_subset(rows * cols, budget, rng)) mask.set(k / cols, k % cols);
  return mask;
}

std::vector<std::size_t> brf_output_degrees(std::size_t rows, std::size_t cols,
                                            const BrfParams& params) {
  const std::size_t budget = link_budget(rows, cols, params.target_density);
  if (params.degree_mode == DegreeMode::fixed) return fixed_degrees(cols, budget);

  // Integers uniform on [1, 2*avg - 1], rescaled to the budget.
  Rng rng(splitmix64(params.seed ^ 0x5eed0fdec0deULL));
  const double avg = static_cast<double>(budget) / static_cast<double>(cols);
  const auto hi = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(2.0 * avg - 1.0)));
  std::vector<double> raw(cols);
  for (auto& r : raw) r = static_cast<double>(1 + rng.index(hi));
  return apportion(raw, budget, rows);
}

BipartiteMask gen_brf(std::size_t rows, std::size_t cols, const BrfParams& params) {
  check_unit(params.randomness, "brf randomness r");
  const auto deg = brf_output_degrees(rows, cols, params);
  const double r = params.randomness;

  if (r == 0.0 && !params.literal_score) return lattice(rows, cols, deg);

  Rng rng(params.seed);
  BipartiteMask mask(rows, cols);
  std::vector<double> weight(rows);
  for (std::size_t j = 0; j < cols; ++j) {
    std::vector<std::size_t> chosen;
    if (r == 0.0) {
      // Literal score with r -> 0: deterministic, farthest inputs first.
      for (std::size_t i = 0; i < rows; ++i) {
        weight[i] = static_cast<double>(diagonal_distance(i, j, rows, cols));
      }
      chosen = top_k_indices(weight, deg[j]);
    } else {
      const double exponent = (1.0 - r) / r;
      for (std::size_t i = 0; i < rows; ++i) {
        const auto d = static_cast<double>(diagonal_distance(i, j, rows, cols));
        weight[i] = params.literal_score ? std::pow(d, exponent) : std::pow(d + 1.0, -exponent);
      }
      chosen = weighted_sample_without_replacement(weight, deg[j], rng);
    }
    for (std::size_t i : chosen) mask.set(i, j);
  }
  return mask;
}

BipartiteMask gen_bsw(std::size_t rows, std::size_t cols, const BswParams& params) {
  check_unit(params.beta, "bsw beta");
  const std::size_t budget = link_budget(rows, cols, params.target_density);
  BipartiteMask mask = lattice(rows, cols, fixed_degrees(cols, budget));

  const auto rewired = static_cast<std::size_t>(std::llround(params.beta * static_cast<double>(budget)));
  if (rewired == 0) return mask;

  Rng rng(params.seed);
  const LinkSet links = mask.links();
  for (std::size_t k : uniform_subset(links.size(), rewired, rng)) {
    mask.reset(links[k].row, links[k].col);
  }
  std::vector<std::size_t> empty;
  empty.reserve(mask.size() - mask.link_count());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (!mask.test_flat(k)) empty.push_back(k);
  }
  for (std::size_t t : uniform_subset(empty.size(), rewired, rng)) {
    mask.set(empty[t] / cols, empty[t] % cols);
  }
  return mask;
}

BipartiteMask gen_bsf(std::size_t rows, std::size_t cols, const BsfParams& params) {
  const std::size_t budget = link_budget(rows, cols, params.target_density);
  Rng rng(params.seed);
  const std::size_t nodes = rows + cols;
  const EdgeSet graph = preferential_attachment(nodes, budget, rng);

  // side[v] < rows: input index; otherwise output index side[v] - rows.
  std::vector<std::size_t> side(nodes);
  std::iota(side.begin(), side.end(), std::size_t{0});
  for (std::size_t t = nodes; t > 1; --t) std::swap(side[t - 1], side[rng.index(t)]);

  BipartiteMask mask(rows, cols);
  std::vector<std::pair<std::size_t, std::size_t>> same_side;
  for (const auto& [a, b] : graph.edges) {
    const std::size_t pa = side[a];
    const std::size_t pb = side[b];
    const bool a_in = pa < rows;
    const bool b_in = pb < rows;
    if (a_in != b_in) {
      mask.set(a_in ? pa : pb, a_in ? pb - rows : pa - rows);
    } else {
      same_side.emplace_back(pa, pb);
    }
  }

  // Each same-side link keeps one random endpoint and is re-attached to a
  // uniformly chosen node of the other side.
  for (const auto& [pa, pb] : same_side) {
    const std::size_t keep = rng.index(2) == 0 ? pa : pb;
    const bool keep_is_input = keep < rows;
    const std::size_t other_size = keep_is_input ? cols : rows;
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      const std::size_t x = rng.index(other_size);
      placed = keep_is_input ? mask.set(keep, x) : mask.set(x, keep - rows);
    }
    if (!placed) {
      for (std::size_t x = 0; x < other_size && !placed; ++x) {
        placed = keep_is_input ? mask.set(keep, x) : mask.set(x, keep - rows);
      }
    }
  }

  if (params.equal_partition) mask = equalize_inputs(mask, rng);
  return mask;
}

void resort_hidden_neurons(MaskChain& chain) {
  chain.validate();
  for (std::size_t k = 0; k + 1 < chain.layers.size(); ++k) {
    const auto in_deg = degrees(chain.layers[k]).output_degrees;
    const BipartiteMask& next = chain.layers[k + 1];
    const auto out_deg = degrees(next).input_degrees;

    auto by_degree = [](const std::vector<std::size_t>& d) {
      std::vector<std::size_t> order(d.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
      return order;
    };
    const auto hubs_here = by_degree(in_deg);
    const auto hubs_next = by_degree(out_deg);

    BipartiteMask permuted(next.rows(), next.cols());
    for (std::size_t r = 0; r < hubs_here.size(); ++r) {
      const std::size_t src = hubs_next[r];
      const std::size_t dst = hubs_here[r];
      for (std::size_t j = 0; j < next.cols(); ++j) {
        if (next.test(src, j)) permuted.set(dst, j);
      }
    }
    chain.layers[k + 1] = std::move(permuted);
  }
}

Eigen::MatrixXd abs_feature_correlation(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index f = samples.cols();
  if (n < 2) throw InvalidArgument("csti: need at least 2 calibration samples");

  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(f, f);
  for (Eigen::Index a = 0; a < f; ++a) {
    for (Eigen::Index b = 0; b < f; ++b) {
      if (a == b) continue;
      const double denom = std::sqrt(cov(a, a) * cov(b, b));
      corr(a, b) = denom > 0.0 ? std::min(1.0, std::abs(cov(a, b)) / denom) : 0.0;
    }
  }
  return corr;
}

BipartiteMask gen_csti(std::size_t rows, std::size_t cols, const CstiParams& params) {
  if (static_cast<std::size_t>(params.calibration.cols()) != rows) {
    throw InvalidArgument("csti: calibration feature count must equal the input size");
  }
  const Eigen::MatrixXd corr = abs_feature_correlation(params.calibration);
  const std::size_t budget = link_budget(rows, cols, params.target_density);

  std::vector<double> score(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      score[i * cols + j] = corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j % rows));
    }
  }
  BipartiteMask mask(rows, cols);
  for (std::size_t k : top_k_indices(score, budget)) mask.set(k / cols, k % cols);
  return mask;
}

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::dense: return "dense";
    case TopologyKind::er: return "er";
    case TopologyKind::brf: return "brf";
    case TopologyKind::bsw: return "bsw";
    case TopologyKind::bsf: return "bsf";
    case TopologyKind::csti: return "csti";
  }
  return "?";
}

TopologyKind parse_topology_kind(std::string_view name) {
  if (name == "dense") return TopologyKind::dense;
  if (name == "er") return TopologyKind::er;
  if (name == "brf") return TopologyKind::brf;
  if (name == "bsw") return TopologyKind::bsw;
  if (name == "bsf") return TopologyKind::bsf;
  if (name == "csti") return TopologyKind::csti;
  throw InvalidArgument("unknown topology '" + std::string(name) + "'");
}

}  // namespace cht
