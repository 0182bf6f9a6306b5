#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cht/dataset.hpp"
#include "cht/evolution.hpp"
#include "cht/netgen.hpp"
#include "cht/schedule.hpp"

namespace cht {

/// layer_sizes = {inputs, hidden..., outputs}. Every layer but the last is
/// sparse unless sparsify_last is set.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  bool sparsify_last = false;

  std::size_t layer_count() const { return layer_sizes.empty() ? 0 : layer_sizes.size() - 1; }
  bool is_sparse(std::size_t layer) const {
    return layer + 1 < layer_count() || sparsify_last;
  }
};

struct TopologySpec {
  TopologyKind kind = TopologyKind::er;
  double brf_randomness = 0.5;
  DegreeMode brf_degree_mode = DegreeMode::fixed;
  double bsw_beta = 0.5;
  bool bsf_equal_partition = false;
  bool bsf_resort = false;
  /// CSTI needs input features; later layers use this generator instead.
  TopologyKind csti_fallback = TopologyKind::brf;
  std::size_t csti_samples = 1000;
};

/// Initial masks for every layer at the given density (dense layers are full).
std::vector<BipartiteMask> initial_masks(const MlpSpec& mlp, const TopologySpec& topology,
                                         double density, const Eigen::MatrixXd* calibration,
                                         std::uint64_t seed);

struct Gradients {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> weights;  // dense: defined off the mask as well
  std::vector<Eigen::VectorXd> biases;
};

/// Multilayer perceptron with ReLU hidden units and a softmax cross-entropy head.
/// Weights are stored inputs x outputs, matching the mask layout.
class Network {
 public:
  Network() = default;
  Network(const MlpSpec& spec, std::vector<BipartiteMask> masks, std::uint64_t seed);

  const MlpSpec& spec() const { return spec_; }
  std::size_t layer_count() const { return layers_.size(); }
  LayerState& layer(std::size_t k) { return layers_[k]; }
  const LayerState& layer(std::size_t k) const { return layers_[k]; }
  Eigen::VectorXd& bias(std::size_t k) { return biases_[k]; }
  const Eigen::VectorXd& bias(std::size_t k) const { return biases_[k]; }
  MaskChain chain() const;

  /// Logits, samples x classes.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  /// Mean cross-entropy over the rows of x.
  double loss(const Eigen::MatrixXd& x, const std::vector<int>& labels) const;
  Gradients gradients(const Eigen::MatrixXd& x, const std::vector<int>& labels) const;

 private:
  MlpSpec spec_;
  std::vector<LayerState> layers_;
  std::vector<Eigen::VectorXd> biases_;
};

/// Momentum buffers of every layer.
struct SgdState {
  std::vector<Eigen::MatrixXd> velocity;
  std::vector<Eigen::VectorXd> bias_velocity;

  explicit SgdState(const Network& net);
  /// Zeroes the buffers off the current masks.
  void mask_to(const Network& net);
};

struct SgdParams {
  double lr = 0.025;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

/// One SGD step on (x, labels): masked gradient plus weight decay into the
/// momentum buffer, then W -= lr * v; off-mask weights stay zero. When
/// `dense_grads` is given it receives each layer's full loss gradient.
/// Returns the batch loss; throws NumericalError if it is not finite.
double sgd_step(Network& net, SgdState& state, const Eigen::MatrixXd& x,
                const std::vector<int>& labels, const SgdParams& params,
                std::vector<Eigen::MatrixXd>* dense_grads = nullptr);

struct TrainConfig {
  MlpSpec mlp;
  TopologySpec topology;
  EvolutionConfig evolution;
  /// Time is measured in epochs.
  DensitySchedule schedule = DensitySchedule::constant(0.9);
  bool evolve = true;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double lr_start = 0.025;
  double lr_end = 2.5e-4;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  double density = 0.0;  // over sparse layers
  double anp = 1.0;
};

struct MaskTraceEntry {
  std::uint64_t step = 0;
  std::uint64_t layer = 0;
  std::uint64_t hash = 0;
};

struct RunRecord {
  std::vector<EpochRecord> epochs;
  std::vector<StepReport> steps;
  std::vector<MaskTraceEntry> mask_trace;
  std::vector<BipartiteMask> final_masks;
  double final_test_accuracy = 0.0;
  double best_test_accuracy = 0.0;
  double final_anp = 1.0;
  double final_density = 0.0;
  double wall_seconds = 0.0;
};

/// FNV-1a over the mask shape and entries.
std::uint64_t mask_hash(const BipartiteMask& mask);

double accuracy(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

RunRecord train(const TrainConfig& config, const DatasetSplit& data);

}  // namespace cht
