#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

namespace cht {

/// Row-per-sample features with integer class labels.
struct Dataset {
  Eigen::MatrixXd features;  // samples x features
  std::vector<int> labels;
  int classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_count() const { return static_cast<std::size_t>(features.cols()); }
  /// First `count` samples (all if count is 0 or too large).
  Dataset head(std::size_t count) const;
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

/// Reads an IDX image file (magic 0x00000803, u8 pixels) and its IDX label file
/// (magic 0x00000801). Pixels are scaled to [0, 1]. `limit` > 0 keeps the first
/// `limit` samples. Throws IoError naming the offending file.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t limit = 0);

/// Loads train-images-idx3-ubyte / train-labels-idx1-ubyte and the t10k-* pair
/// from a directory.
DatasetSplit load_idx_directory(const std::filesystem::path& dir, std::size_t train_limit = 0,
                                std::size_t test_limit = 0);

/// Isotropic Gaussian blobs with class centres drawn uniformly in [-1, 1]^features.
DatasetSplit make_blobs(std::size_t train_samples, std::size_t test_samples, std::size_t features,
                        int classes, double spread, std::uint64_t seed);

/// Two interleaving half circles with Gaussian noise, two features.
DatasetSplit make_two_moons(std::size_t train_samples, std::size_t test_samples, double noise,
                            std::uint64_t seed);

}  // namespace cht
