#pragma once

#include <filesystem>
#include <iosfwd>

#include "cht/topology.hpp"

namespace cht {

// Binary layout: "BPMK", version (u16), rows (u32), cols (u32), all big-endian,
// followed by ceil(rows*cols/8) bytes of row-major entries packed MSB-first.
inline constexpr std::uint16_t kMaskFormatVersion = 1;

void write_mask(std::ostream& out, const BipartiteMask& mask);
BipartiteMask read_mask(std::istream& in);

void save_mask(const std::filesystem::path& path, const BipartiteMask& mask);
BipartiteMask load_mask(const std::filesystem::path& path);

// Text form: a "# rows cols" header line, then one "row col" line per link.
void write_edge_list(std::ostream& out, const BipartiteMask& mask);
BipartiteMask read_edge_list(std::istream& in);

}  // namespace cht
