#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cht {

/// One link of a bipartite layer: input node `row` to output node `col`.
struct Link {
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  friend auto operator<=>(const Link&, const Link&) = default;
};

/// Sorted, duplicate-free list of links of one layer.
using LinkSet = std::vector<Link>;

/// Binary connectivity of one layer (rows = input nodes, cols = output nodes).
///
/// Entries are stored row-major, one byte per entry; the link count is kept
/// in sync by every mutator.
class BipartiteMask {
 public:
  BipartiteMask() = default;
  BipartiteMask(std::size_t rows, std::size_t cols);

  static BipartiteMask full(std::size_t rows, std::size_t cols);
  static BipartiteMask from_links(std::size_t rows, std::size_t cols, const LinkSet& links);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }
  std::size_t link_count() const { return link_count_; }
  double density() const;
  double sparsity() const { return 1.0 - density(); }

  bool test(std::size_t i, std::size_t j) const { return bits_[i * cols_ + j] != 0; }
  bool test_flat(std::size_t k) const { return bits_[k] != 0; }

  /// Returns true when the entry changed.
  bool set(std::size_t i, std::size_t j);
  bool reset(std::size_t i, std::size_t j);
  bool assign(std::size_t i, std::size_t j, bool value) {
    return value ? set(i, j) : reset(i, j);
  }

  std::span<const std::uint8_t> row(std::size_t i) const {
    return {bits_.data() + i * cols_, cols_};
  }
  std::span<const std::uint8_t> entries() const { return bits_; }

  /// Clears every link of input node i / output node j; returns the number removed.
  std::size_t clear_row(std::size_t i);
  std::size_t clear_col(std::size_t j);

  LinkSet links() const;
  BipartiteMask transposed() const;

  friend bool operator==(const BipartiteMask& a, const BipartiteMask& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.bits_ == b.bits_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t link_count_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Node degrees of one layer: `input_degrees` are row sums (length rows),
/// `output_degrees` are column sums (length cols).
struct DegreeProfile {
  std::vector<std::size_t> input_degrees;
  std::vector<std::size_t> output_degrees;
};

DegreeProfile degrees(const BipartiteMask& mask);

/// Consecutive layers of a feed-forward network; layers[k].cols() == layers[k+1].rows().
struct MaskChain {
  std::vector<BipartiteMask> layers;
  std::vector<std::string> names;

  /// Throws InvalidArgument when adjacent dimensions disagree.
  void validate() const;
  std::size_t hidden_neuron_count() const;
};

struct PercolationOptions {
  /// Count network inputs (with at least one link) as neurons in the ANP ratio.
  bool anp_includes_inputs = false;
};

struct LayerPercolation {
  std::vector<std::uint32_t> removed_inputs;   // rows cleared in this layer
  std::vector<std::uint32_t> removed_outputs;  // columns cleared in this layer
  std::size_t removed_links = 0;
};

struct PercolationReport {
  std::vector<LayerPercolation> layers;
  /// inactive[k][v]: node v of node set k is inactive after percolation.
  /// Node set 0 is the network input, node set L the network output; both are
  /// never marked.
  std::vector<std::vector<bool>> inactive;
  std::size_t removed_link_count = 0;
  double anp = 1.0;
};

/// Removes hidden neurons without links on either side, and the links attached
/// to them, until no such neuron remains.
std::pair<MaskChain, PercolationReport> percolate(MaskChain chain,
                                                  const PercolationOptions& options = {});

/// Fraction of `regrown` links that are also in `removed` (both sorted).
/// Throws UndefinedResult when `regrown` is empty.
double overlap_ratio(const LinkSet& removed, const LinkSet& regrown);

/// Positions that have held a link at least once.
struct BitField {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;
  std::size_t count = 0;

  BitField() = default;
  BitField(std::size_t r, std::size_t c) : rows(r), cols(c), bits(r * c, 0) {}
  double rate() const {
    return bits.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(bits.size());
  }
};

/// ever_active |= mask; returns the updated field and its coverage rate.
std::pair<BitField, double> itop_update(BitField ever_active, const BipartiteMask& mask);

/// In-place form of itop_update for the training loop.
double itop_accumulate(BitField& ever_active, const BipartiteMask& mask);

}  // namespace cht
