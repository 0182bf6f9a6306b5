#include "cht/mask_io.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cht/error.hpp"

namespace cht {
namespace {

constexpr std::array<char, 4> kMagic = {'B', 'P', 'M', 'K'};

void put_be(std::ostream& out, std::uint64_t value, int bytes) {
  for (int b = bytes - 1; b >= 0; --b) {
    out.put(static_cast<char>((value >> (8 * b)) & 0xff));
  }
}

std::uint64_t get_be(std::istream& in, int bytes) {
  std::uint64_t value = 0;
  for (int b = 0; b < bytes; ++b) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw IoError("mask: truncated header");
    value = (value << 8) | static_cast<std::uint8_t>(c);
  }
  return value;
}

}  // namespace

void write_mask(std::ostream& out, const BipartiteMask& mask) {
  out.write(kMagic.data(), kMagic.size());
  put_be(out, kMaskFormatVersion, 2);
  put_be(out, mask.rows(), 4);
  put_be(out, mask.cols(), 4);
  const auto entries = mask.entries();
  std::uint8_t byte = 0;
  int filled = 0;
  for (std::uint8_t e : entries) {
    byte = static_cast<std::uint8_t>(byte | (e ? 0x80u >> filled : 0u));
    if (++filled == 8) {
      out.put(static_cast<char>(byte));
      byte = 0;
      filled = 0;
    }
  }
  if (filled > 0) out.put(static_cast<char>(byte));
  if (!out) throw IoError("mask: write failed");
}

BipartiteMask read_mask(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError("mask: bad magic, expected BPMK");
  const auto version = get_be(in, 2);
  if (version != kMaskFormatVersion) {
    throw IoError("mask: unsupported version " + std::to_string(version));
  }
  const auto rows = static_cast<std::size_t>(get_be(in, 4));
  const auto cols = static_cast<std::size_t>(get_be(in, 4));
  BipartiteMask mask(rows, cols);
  const std::size_t total = rows * cols;
  std::size_t k = 0;
  while (k < total) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw IoError("mask: truncated payload");
    const auto byte = static_cast<std::uint8_t>(c);
    for (int bit = 0; bit < 8 && k < total; ++bit, ++k) {
      if (byte & (0x80u >> bit)) mask.set(k / cols, k % cols);
    }
  }
  return mask;
}

void save_mask(const std::filesystem::path& path, const BipartiteMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_mask(out, mask);
}

BipartiteMask load_mask(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mask file " + path.string());
  try {
    return read_mask(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_edge_list(std::ostream& out, const BipartiteMask& mask) {
  out << "# " << mask.rows() << ' ' << mask.cols() << '\n';
  for (const Link& l : mask.links()) out << l.row << ' ' << l.col << '\n';
}

BipartiteMask read_edge_list(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw IoError("edge list: missing '# rows cols' header");
  }
  std::istringstream header(line.substr(1));
  std::size_t rows = 0;
  std::size_t cols = 0;
  if (!(header >> rows >> cols)) throw IoError("edge list: malformed header");
  BipartiteMask mask(rows, cols);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::size_t i = 0;
    std::size_t j = 0;
    if (!(fields >> i >> j) || i >= rows || j >= cols) {
      throw IoError("edge list: bad line '" + line + "'");
    }
    mask.set(i, j);
  }
  return mask;
}

}  // namespace cht
