#include "cht/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "cht/error.hpp"
#include "cht/rng.hpp"

namespace cht {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_u32(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError(path.string() + ": truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file " + path.string());
  return in;
}

}  // namespace

Dataset Dataset::head(std::size_t count) const {
  if (count == 0 || count >= size()) return *this;
  Dataset d;
  d.features = features.topRows(static_cast<Eigen::Index>(count));
  d.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(count));
  d.classes = classes;
  return d;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t limit) {
  std::ifstream img = open(images);
  if (read_u32(img, images) != kImageMagic) {
    throw IoError(images.string() + ": not an IDX image file (magic 0x00000803)");
  }
  std::size_t count = read_u32(img, images);
  const std::size_t h = read_u32(img, images);
  const std::size_t w = read_u32(img, images);

  std::ifstream lab = open(labels);
  if (read_u32(lab, labels) != kLabelMagic) {
    throw IoError(labels.string() + ": not an IDX label file (magic 0x00000801)");
  }
  const std::size_t label_count = read_u32(lab, labels);
  if (label_count != count) {
    throw IoError(labels.string() + ": label count does not match " + images.string());
  }
  if (limit > 0) count = std::min(count, limit);

  Dataset d;
  const std::size_t pixels = h * w;
  d.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  std::vector<unsigned char> buffer(pixels);
  for (std::size_t s = 0; s < count; ++s) {
    img.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(pixels));
    if (!img) throw IoError(images.string() + ": truncated image data");
    for (std::size_t p = 0; p < pixels; ++p) {
      d.features(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(p)) = buffer[p] / 255.0;
    }
  }
  d.labels.resize(count);
  int max_label = 0;
  for (std::size_t s = 0; s < count; ++s) {
    const int c = lab.get();
    if (c == std::char_traits<char>::eof()) throw IoError(labels.string() + ": truncated labels");
    d.labels[s] = c;
    max_label = std::max(max_label, c);
  }
  d.classes = max_label + 1;
  return d;
}

DatasetSplit load_idx_directory(const std::filesystem::path& dir, std::size_t train_limit,
                                std::size_t test_limit) {
  DatasetSplit split;
  split.train = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", train_limit);
  split.test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", test_limit);
  const int classes = std::max(split.train.classes, split.test.classes);
  split.train.classes = classes;
  split.test.classes = classes;
  return split;
}

DatasetSplit make_blobs(std::size_t train_samples, std::size_t test_samples, std::size_t features,
                        int classes, double spread, std::uint64_t seed) {
  if (classes < 2 || features == 0) throw InvalidArgument("blobs: need >= 2 classes and >= 1 feature");
  Rng rng(seed);
  Eigen::MatrixXd centres(classes, static_cast<Eigen::Index>(features));
  for (Eigen::Index c = 0; c < centres.rows(); ++c) {
    for (Eigen::Index f = 0; f < centres.cols(); ++f) centres(c, f) = rng.uniform(-1.0, 1.0);
  }
  auto draw = [&](std::size_t n) {
    Dataset d;
    d.classes = classes;
    d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features));
    d.labels.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      const int c = static_cast<int>(s % static_cast<std::size_t>(classes));
      d.labels[s] = c;
      for (std::size_t f = 0; f < features; ++f) {
        d.features(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f)) =
            centres(c, static_cast<Eigen::Index>(f)) + spread * rng.normal();
      }
    }
    return d;
  };
  return {draw(train_samples), draw(test_samples)};
}

DatasetSplit make_two_moons(std::size_t train_samples, std::size_t test_samples, double noise,
                            std::uint64_t seed) {
  Rng rng(seed);
  auto draw = [&](std::size_t n) {
    Dataset d;
    d.classes = 2;
    d.features.resize(static_cast<Eigen::Index>(n), 2);
    d.labels.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      const int c = static_cast<int>(s % 2);
      const double t = rng.uniform() * std::numbers::pi;
      const double x = c == 0 ? std::cos(t) : 1.0 - std::cos(t);
      const double y = c == 0 ? std::sin(t) : 0.5 - std::sin(t);
      d.labels[s] = c;
      d.features(static_cast<Eigen::Index>(s), 0) = x + noise * rng.normal();
      d.features(static_cast<Eigen::Index>(s), 1) = y + noise * rng.normal();
    }
    return d;
  };
  return {draw(train_samples), draw(test_samples)};
}

}  // namespace cht
