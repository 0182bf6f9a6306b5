#include "cht/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "cht/error.hpp"
#include "cht/rng.hpp"

namespace cht {
namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kShuffleStream = 0x5a5a;

BipartiteMask generate(TopologyKind kind, std::size_t rows, std::size_t cols, double density,
                       const TopologySpec& spec, std::uint64_t seed) {
  switch (kind) {
    case TopologyKind::dense:
      return BipartiteMask::full(rows, cols);
    case TopologyKind::er:
      return gen_er(rows, cols, density, seed);
    case TopologyKind::brf:
      return gen_brf(rows, cols, {spec.brf_randomness, spec.brf_degree_mode, density, seed, false});
    case TopologyKind::bsw:
      return gen_bsw(rows, cols, {spec.bsw_beta, density, seed});
    case TopologyKind::bsf:
      return gen_bsf(rows, cols, {density, spec.bsf_equal_partition, false, seed});
    case TopologyKind::csti:
      break;
  }
  throw InvalidArgument("csti needs calibration features");
}

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double top = logits.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      p(r, c) = std::exp(logits(r, c) - top);
      sum += p(r, c);
    }
    p.row(r) /= sum;
  }
  return p;
}

double cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double top = logits.row(r).maxCoeff();
    const double lse = top + std::log((logits.row(r).array() - top).exp().sum());
    total += lse - logits(r, labels[static_cast<std::size_t>(r)]);
  }
  return total / static_cast<double>(logits.rows());
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& order,
                            std::size_t begin, std::size_t end) {
  Eigen::MatrixXd out(idx(end - begin), x.cols());
  for (std::size_t k = begin; k < end; ++k) out.row(idx(k - begin)) = x.row(idx(order[k]));
  return out;
}

double sparse_density(const Network& net) {
  std::size_t links = 0;
  std::size_t size = 0;
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    if (!net.spec().is_sparse(k)) continue;
    links += net.layer(k).mask.link_count();
    size += net.layer(k).mask.size();
  }
  return size == 0 ? 1.0 : static_cast<double>(links) / static_cast<double>(size);
}

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const Network& net, const Dataset& d) {
  if (d.size() == 0) return {};
  const Eigen::MatrixXd logits = net.forward(d.features);
  return {cross_entropy(logits, d.labels), accuracy(logits, d.labels)};
}

}  // namespace

std::vector<BipartiteMask> initial_masks(const MlpSpec& mlp, const TopologySpec& topology,
                                         double density, const Eigen::MatrixXd* calibration,
                                         std::uint64_t seed) {
  std::vector<BipartiteMask> masks;
  for (std::size_t k = 0; k < mlp.layer_count(); ++k) {
    const std::size_t rows = mlp.layer_sizes[k];
    const std::size_t cols = mlp.layer_sizes[k + 1];
    const std::uint64_t layer_seed = splitmix64(seed ^ (0x9e37 + k));
    if (!mlp.is_sparse(k) || density >= 1.0) {
      masks.push_back(BipartiteMask::full(rows, cols));
      continue;
    }
    TopologyKind kind = topology.kind;
    if (kind == TopologyKind::csti && (k > 0 || calibration == nullptr)) kind = topology.csti_fallback;
    if (kind == TopologyKind::csti) {
      if (static_cast<std::size_t>(calibration->cols()) != rows) {
        throw InvalidArgument("csti: calibration feature count differs from layer inputs");
      }
      masks.push_back(gen_csti(rows, cols, {*calibration, density, layer_seed}));
    } else {
      masks.push_back(generate(kind, rows, cols, density, topology, layer_seed));
    }
  }
  if (topology.kind == TopologyKind::bsf && topology.bsf_resort) {
    MaskChain chain{masks, {}};
    resort_hidden_neurons(chain);
    masks = std::move(chain.layers);
  }
  return masks;
}

Network::Network(const MlpSpec& spec, std::vector<BipartiteMask> masks, std::uint64_t seed)
    : spec_(spec) {
  if (masks.size() != spec.layer_count()) throw InvalidArgument("network: one mask per layer");
  for (std::size_t k = 0; k < masks.size(); ++k) {
    const std::size_t rows = spec.layer_sizes[k];
    const std::size_t cols = spec.layer_sizes[k + 1];
    if (masks[k].rows() != rows || masks[k].cols() != cols) {
      throw InvalidArgument("network: mask " + std::to_string(k) + " has the wrong shape");
    }
    // Uniform in +-1/sqrt(fan-in), fan-in counted on the mask.
    Rng rng = Rng::stream(seed, k, kInitStream);
    const DegreeProfile deg = degrees(masks[k]);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(idx(rows), idx(cols));
    Eigen::VectorXd b(idx(cols));
    for (std::size_t j = 0; j < cols; ++j) {
      const double bound =
          1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(deg.output_degrees[j], 1)));
      for (std::size_t i = 0; i < rows; ++i) {
        const double draw = rng.uniform(-bound, bound);
        if (masks[k].test(i, j)) w(idx(i), idx(j)) = draw;
      }
      b(idx(j)) = rng.uniform(-bound, bound);
    }
    layers_.emplace_back(std::move(w), std::move(masks[k]));
    biases_.push_back(std::move(b));
  }
}

MaskChain Network::chain() const {
  MaskChain c;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    c.layers.push_back(layers_[k].mask);
    c.names.push_back("fc" + std::to_string(k));
  }
  return c;
}

Eigen::MatrixXd Network::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Eigen::MatrixXd z = h * layers_[k].weights;
    z.rowwise() += biases_[k].transpose();
    if (k + 1 < layers_.size()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

double Network::loss(const Eigen::MatrixXd& x, const std::vector<int>& labels) const {
  return cross_entropy(forward(x), labels);
}

Gradients Network::gradients(const Eigen::MatrixXd& x, const std::vector<int>& labels) const {
  const std::size_t n_layers = layers_.size();
  std::vector<Eigen::MatrixXd> acts;  // acts[k] is the input to layer k
  acts.reserve(n_layers + 1);
  acts.push_back(x);
  for (std::size_t k = 0; k < n_layers; ++k) {
    Eigen::MatrixXd z = acts.back() * layers_[k].weights;
    z.rowwise() += biases_[k].transpose();
    if (k + 1 < n_layers) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }

  Gradients g;
  g.loss = cross_entropy(acts.back(), labels);
  g.weights.resize(n_layers);
  g.biases.resize(n_layers);

  Eigen::MatrixXd delta = softmax(acts.back());
  for (Eigen::Index r = 0; r < delta.rows(); ++r) delta(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  delta /= static_cast<double>(x.rows());

  for (std::size_t k = n_layers; k-- > 0;) {
    g.weights[k] = acts[k].transpose() * delta;
    g.biases[k] = delta.colwise().sum().transpose();
    if (k == 0) break;
    Eigen::MatrixXd back = delta * layers_[k].weights.transpose();
    delta = back.array() * (acts[k].array() > 0.0).cast<double>();
  }
  return g;
}

SgdState::SgdState(const Network& net) {
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    const Eigen::MatrixXd& w = net.layer(k).weights;
    velocity.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    bias_velocity.push_back(Eigen::VectorXd::Zero(net.bias(k).size()));
  }
}

void SgdState::mask_to(const Network& net) {
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    velocity[k] = apply_mask(velocity[k], net.layer(k).mask);
  }
}

double sgd_step(Network& net, SgdState& state, const Eigen::MatrixXd& x,
                const std::vector<int>& labels, const SgdParams& params,
                std::vector<Eigen::MatrixXd>* dense_grads) {
  Gradients g = net.gradients(x, labels);
  if (!std::isfinite(g.loss)) throw NumericalError("non-finite loss");
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    LayerState& layer = net.layer(k);
    const Eigen::MatrixXd grad =
        apply_mask(g.weights[k] + params.weight_decay * layer.weights, layer.mask);
    state.velocity[k] = params.momentum * state.velocity[k] + grad;
    layer.weights -= params.lr * state.velocity[k];
    state.bias_velocity[k] = params.momentum * state.bias_velocity[k] + g.biases[k];
    net.bias(k) -= params.lr * state.bias_velocity[k];
  }
  if (dense_grads != nullptr) *dense_grads = std::move(g.weights);
  return g.loss;
}

void TrainConfig::validate() const {
  if (mlp.layer_sizes.size() < 2) throw InvalidArgument("mlp needs at least input and output sizes");
  for (std::size_t s : mlp.layer_sizes) {
    if (s == 0) throw InvalidArgument("mlp layer sizes must be positive");
  }
  if (epochs == 0 || batch_size == 0) throw InvalidArgument("epochs and batch size must be positive");
  if (lr_end < 0.0 || lr_end > lr_start) throw InvalidArgument("need 0 <= lr_end <= lr_start");
  if (momentum < 0.0 || momentum >= 1.0) throw InvalidArgument("momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw InvalidArgument("weight decay must be non-negative");
  evolution.validate();
  schedule.validate();
}

std::uint64_t mask_hash(const BipartiteMask& mask) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (int s = 0; s < 64; s += 8) mix((mask.rows() >> s) & 0xff);
  for (int s = 0; s < 64; s += 8) mix((mask.cols() >> s) & 0xff);
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    for (std::uint8_t v : mask.row(i)) mix(v);
  }
  return h;
}

double accuracy(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  if (logits.rows() == 0) return 0.0;
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    logits.row(r).maxCoeff(&best);
    if (best == labels[static_cast<std::size_t>(r)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

RunRecord train(const TrainConfig& config, const DatasetSplit& data) {
  config.validate();
  const MlpSpec& mlp = config.mlp;
  if (data.train.feature_count() != mlp.layer_sizes.front()) {
    throw InvalidArgument("dataset has " + std::to_string(data.train.feature_count()) +
                          " features, network expects " + std::to_string(mlp.layer_sizes.front()));
  }
  if (static_cast<std::size_t>(data.train.classes) > mlp.layer_sizes.back()) {
    throw InvalidArgument("dataset has more classes than network outputs");
  }
  const auto start = std::chrono::steady_clock::now();

  const Eigen::MatrixXd calibration =
      data.train.features.topRows(idx(std::min(config.topology.csti_samples, data.train.size())));
  Network net(mlp,
              initial_masks(mlp, config.topology, density_at(config.schedule, 0.0), &calibration,
                            config.seed),
              config.seed);

  const std::size_t n_layers = net.layer_count();
  SgdState sgd(net);

  const std::size_t n_train = data.train.size();
  const std::size_t steps_per_epoch = (n_train + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.epochs;
  const std::size_t interval = std::max<std::size_t>(config.evolution.update_interval, 1);

  RunRecord record;
  std::vector<Eigen::MatrixXd> last_dense_grads(n_layers);
  const bool capture = config.evolve && config.evolution.regrowth.kind == RegrowthKind::gradient;
  std::vector<std::size_t> order(n_train);
  std::uint64_t step = 0;
  std::uint64_t evolution_step = 0;

  auto evolve = [&]() {
    const double t = static_cast<double>(step) / static_cast<double>(steps_per_epoch);
    const double fraction = static_cast<double>(step) / static_cast<double>(total_steps);
    const double target = density_at(config.schedule, t);
    const EvolutionConfig& evo = config.evolution;

    std::vector<RemovalOutcome> removals(n_layers);
    std::vector<Rng> rngs;
    for (std::size_t k = 0; k < n_layers; ++k) {
      rngs.push_back(Rng::stream(evo.seed ^ config.seed, k, evolution_step));
      if (!mlp.is_sparse(k)) continue;
      StepContext ctx{target, fraction, evolution_step, k, k > 0, k + 1 < n_layers};
      removals[k] = remove_links(net.layer(k), evo, ctx, rngs[k]);
    }

    std::vector<std::vector<bool>> inactive(n_layers + 1);
    std::vector<std::size_t> percolated(n_layers, 0);
    double anp = 1.0;
    if (evo.percolate) {
      auto [reduced, report] = percolate(net.chain());
      for (std::size_t k = 0; k < n_layers; ++k) {
        const LinkSet dropped = drop_links(net.layer(k), reduced.layers[k]);
        percolated[k] = dropped.size();
        removals[k].removed_links.insert(removals[k].removed_links.end(), dropped.begin(),
                                         dropped.end());
        std::sort(removals[k].removed_links.begin(), removals[k].removed_links.end());
      }
      inactive = report.inactive;
      anp = report.anp;
      // A removed neuron contributes nothing downstream, its bias included.
      for (std::size_t k = 1; k < n_layers; ++k) {
        for (std::size_t v = 0; v < inactive[k].size(); ++v) {
          if (inactive[k][v]) {
            net.bias(k - 1)(idx(v)) = 0.0;
            sgd.bias_velocity[k - 1](idx(v)) = 0.0;
          }
        }
      }
    } else {
      anp = percolate(net.chain()).second.anp;
    }

    for (std::size_t k = 0; k < n_layers; ++k) {
      if (!mlp.is_sparse(k)) {
        sgd.velocity[k] = apply_mask(sgd.velocity[k], net.layer(k).mask);
        continue;
      }
      LayerState& layer = net.layer(k);
      static const std::vector<bool> none;
      const RegrowthOutcome grown =
          regrow_links(layer, evo, removals[k].regrow_quota, evo.percolate ? inactive[k] : none,
                       evo.percolate ? inactive[k + 1] : none,
                       last_dense_grads[k].size() > 0 ? &last_dense_grads[k] : nullptr, rngs[k]);
      sgd.velocity[k] = apply_mask(sgd.velocity[k], layer.mask);

      StepReport r;
      r.step = evolution_step;
      r.layer = k;
      r.pruned = removals[k].pruned;
      r.removed = removals[k].removed;
      r.percolated = percolated[k];
      r.regrown = grown.regrown;
      r.shortfall = grown.shortfall;
      r.removed_links = std::move(removals[k].removed_links);
      r.regrown_links = grown.regrown_links;
      r.elm_ratio = r.regrown_links.empty() ? std::nan("")
                                            : overlap_ratio(r.removed_links, r.regrown_links);
      r.elm = !std::isnan(r.elm_ratio) && r.elm_ratio >= evo.elm_threshold;
      r.itop_rate = itop_accumulate(layer.ever_active, layer.mask);
      r.density = layer.mask.density();
      r.anp = anp;
      record.steps.push_back(std::move(r));
      record.mask_trace.push_back({evolution_step, k, mask_hash(layer.mask)});
    }
    ++evolution_step;
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = Rng::stream(config.seed, kShuffleStream, epoch);
    for (std::size_t i = n_train; i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle.index(i))]);
    }

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(n_train, begin + config.batch_size);
      const Eigen::MatrixXd x = gather_rows(data.train.features, order, begin, end);
      std::vector<int> y(end - begin);
      for (std::size_t k = begin; k < end; ++k) y[k - begin] = data.train.labels[order[k]];

      const double progress =
          total_steps > 1 ? static_cast<double>(step) / static_cast<double>(total_steps - 1) : 0.0;
      const SgdParams params{config.lr_start + (config.lr_end - config.lr_start) * progress,
                             config.momentum, config.weight_decay};
      double loss = 0.0;
      try {
        loss = sgd_step(net, sgd, x, y, params, capture ? &last_dense_grads : nullptr);
      } catch (const NumericalError&) {
        throw NumericalError("non-finite loss at step " + std::to_string(step) +
                             " (epoch " + std::to_string(epoch) + ")");
      }
      loss_sum += loss * static_cast<double>(end - begin);
      ++step;
      if (config.evolve && step % interval == 0 && step < total_steps) evolve();
    }

    EpochRecord e;
    e.epoch = epoch;
    const Evaluation train_eval = evaluate(net, data.train);
    const Evaluation test_eval = evaluate(net, data.test);
    e.train_loss = loss_sum / static_cast<double>(n_train);
    e.train_accuracy = train_eval.accuracy;
    e.test_loss = test_eval.loss;
    e.test_accuracy = test_eval.accuracy;
    e.density = sparse_density(net);
    e.anp = percolate(net.chain()).second.anp;
    record.epochs.push_back(e);
    record.best_test_accuracy = std::max(record.best_test_accuracy, e.test_accuracy);
  }

  record.final_test_accuracy = record.epochs.back().test_accuracy;
  record.final_anp = record.epochs.back().anp;
  record.final_density = record.epochs.back().density;
  for (std::size_t k = 0; k < n_layers; ++k) record.final_masks.push_back(net.layer(k).mask);
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

}  // namespace cht
