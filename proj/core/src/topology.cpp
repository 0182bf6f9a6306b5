#include "cht/topology.hpp"

#include <algorithm>
#include <sstream>

#include "cht/error.hpp"

namespace cht {

BipartiteMask::BipartiteMask(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

BipartiteMask BipartiteMask::full(std::size_t rows, std::size_t cols) {
  BipartiteMask mask(rows, cols);
  std::fill(mask.bits_.begin(), mask.bits_.end(), std::uint8_t{1});
  mask.link_count_ = rows * cols;
  return mask;
}

BipartiteMask BipartiteMask::from_links(std::size_t rows, std::size_t cols,
                                        const LinkSet& links) {
  BipartiteMask mask(rows, cols);
  for (const Link& l : links) {
    if (l.row >= rows || l.col >= cols) {
      throw InvalidArgument("link out of range for mask");
    }
    mask.set(l.row, l.col);
  }
  return mask;
}

double BipartiteMask::density() const {
  if (size() == 0) return 0.0;
  return static_cast<double>(link_count_) / static_cast<double>(size());
}

bool BipartiteMask::set(std::size_t i, std::size_t j) {
  auto& b = bits_[i * cols_ + j];
  if (b) return false;
  b = 1;
  ++link_count_;
  return true;
}

bool BipartiteMask::reset(std::size_t i, std::size_t j) {
  auto& b = bits_[i * cols_ + j];
  if (!b) return false;
  b = 0;
  --link_count_;
  return true;
}

std::size_t BipartiteMask::clear_row(std::size_t i) {
  std::size_t removed = 0;
  for (std::size_t j = 0; j < cols_; ++j) removed += reset(i, j) ? 1 : 0;
  return removed;
}

std::size_t BipartiteMask::clear_col(std::size_t j) {
  std::size_t removed = 0;
  for (std::size_t i = 0; i < rows_; ++i) removed += reset(i, j) ? 1 : 0;
  return removed;
}

LinkSet BipartiteMask::links() const {
  LinkSet out;
  out.reserve(link_count_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      if (test(i, j)) {
        out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
      }
    }
  }
  return out;
}

BipartiteMask BipartiteMask::transposed() const {
  BipartiteMask t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      if (test(i, j)) t.set(j, i);
    }
  }
  return t;
}

DegreeProfile degrees(const BipartiteMask& mask) {
  DegreeProfile d;
  d.input_degrees.assign(mask.rows(), 0);
  d.output_degrees.assign(mask.cols(), 0);
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    const auto row = mask.row(i);
    std::size_t s = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      s += row[j];
      d.output_degrees[j] += row[j];
    }
    d.input_degrees[i] = s;
  }
  return d;
}

void MaskChain::validate() const {
  if (!names.empty() && names.size() != layers.size()) {
    throw InvalidArgument("mask chain: names and layers differ in length");
  }
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    if (layers[k].cols() != layers[k + 1].rows()) {
      std::ostringstream msg;
      msg << "mask chain: layer " << k << " has " << layers[k].cols()
          << " outputs but layer " << k + 1 << " has " << layers[k + 1].rows() << " inputs";
      throw InvalidArgument(msg.str());
    }
  }
}

std::size_t MaskChain::hidden_neuron_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) n += layers[k].cols();
  return n;
}

std::pair<MaskChain, PercolationReport> percolate(MaskChain chain,
                                                  const PercolationOptions& options) {
  chain.validate();
  const std::size_t L = chain.layers.size();

  PercolationReport report;
  report.layers.resize(L);
  report.inactive.resize(L + 1);
  if (L == 0) return {std::move(chain), report};

  report.inactive[0].assign(chain.layers[0].rows(), false);
  for (std::size_t k = 0; k < L; ++k) {
    report.inactive[k + 1].assign(chain.layers[k].cols(), false);
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 1; k < L; ++k) {
      BipartiteMask& upstream = chain.layers[k - 1];
      BipartiteMask& downstream = chain.layers[k];
      const auto in_deg = degrees(upstream).output_degrees;
      const auto out_deg = degrees(downstream).input_degrees;
      for (std::size_t v = 0; v < in_deg.size(); ++v) {
        if (in_deg[v] != 0 && out_deg[v] != 0) continue;
        report.inactive[k][v] = true;
        const std::size_t a = upstream.clear_col(v);
        const std::size_t b = downstream.clear_row(v);
        if (a > 0) report.layers[k - 1].removed_outputs.push_back(static_cast<std::uint32_t>(v));
        if (b > 0) report.layers[k].removed_inputs.push_back(static_cast<std::uint32_t>(v));
        report.layers[k - 1].removed_links += a;
        report.layers[k].removed_links += b;
        report.removed_link_count += a + b;
        if (a + b > 0) changed = true;
      }
    }
  }

  for (auto& layer : report.layers) {
    std::sort(layer.removed_inputs.begin(), layer.removed_inputs.end());
    layer.removed_inputs.erase(std::unique(layer.removed_inputs.begin(), layer.removed_inputs.end()),
                               layer.removed_inputs.end());
    std::sort(layer.removed_outputs.begin(), layer.removed_outputs.end());
    layer.removed_outputs.erase(
        std::unique(layer.removed_outputs.begin(), layer.removed_outputs.end()),
        layer.removed_outputs.end());
  }

  std::size_t total = 0;
  std::size_t active = 0;
  for (std::size_t k = 1; k < L; ++k) {
    total += report.inactive[k].size();
    active += static_cast<std::size_t>(
        std::count(report.inactive[k].begin(), report.inactive[k].end(), false));
  }
  if (options.anp_includes_inputs) {
    const auto in_deg = degrees(chain.layers[0]).input_degrees;
    total += in_deg.size();
    active += static_cast<std::size_t>(
        std::count_if(in_deg.begin(), in_deg.end(), [](std::size_t d) { return d > 0; }));
  }
  report.anp = total == 0 ? 1.0 : static_cast<double>(active) / static_cast<double>(total);
  return {std::move(chain), report};
}

double overlap_ratio(const LinkSet& removed, const LinkSet& regrown) {
  if (regrown.empty()) {
    throw UndefinedResult("overlap ratio is undefined for an empty regrown set");
  }
  std::size_t common = 0;
  auto a = removed.begin();
  auto b = regrown.begin();
  while (a != removed.end() && b != regrown.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++common;
      ++a;
      ++b;
    }
  }
  return static_cast<double>(common) / static_cast<double>(regrown.size());
}

double itop_accumulate(BitField& ever_active, const BipartiteMask& mask) {
  if (ever_active.rows != mask.rows() || ever_active.cols != mask.cols()) {
    throw InvalidArgument("itop: bit field and mask dimensions differ");
  }
  const auto entries = mask.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k] && !ever_active.bits[k]) {
      ever_active.bits[k] = 1;
      ++ever_active.count;
    }
  }
  return ever_active.rate();
}

std::pair<BitField, double> itop_update(BitField ever_active, const BipartiteMask& mask) {
  const double rate = itop_accumulate(ever_active, mask);
  return {std::move(ever_active), rate};
}

}  // namespace cht
