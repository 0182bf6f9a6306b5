#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cht/error.hpp"
#include "cht/mask_io.hpp"
#include "cht/netgen.hpp"

using namespace cht;

TEST_SUITE("mask_io") {

TEST_CASE("binary round trip") {
  for (std::size_t rows : {1u, 3u, 8u, 13u}) {
    const BipartiteMask m = gen_er(rows, 11, 0.4, rows);
    std::stringstream buf;
    write_mask(buf, m);
    CHECK(buf.str().size() == 14 + (rows * 11 + 7) / 8);
    CHECK(read_mask(buf) == m);
  }
}

TEST_CASE("binary header is big-endian") {
  BipartiteMask m(2, 3);
  m.set(0, 0);
  m.set(1, 2);
  std::stringstream buf;
  write_mask(buf, m);
  const std::string s = buf.str();
  CHECK(s.substr(0, 4) == "BPMK");
  CHECK(static_cast<unsigned char>(s[5]) == 1);
  CHECK(static_cast<unsigned char>(s[9]) == 2);
  CHECK(static_cast<unsigned char>(s[13]) == 3);
  // entries 100001 packed MSB first
  CHECK(static_cast<unsigned char>(s[14]) == 0x84);
}

TEST_CASE("malformed input is rejected") {
  std::stringstream bad_magic("XXXX");
  CHECK_THROWS_AS(read_mask(bad_magic), IoError);
  std::stringstream buf;
  write_mask(buf, gen_er(8, 8, 0.5, 1));
  std::stringstream truncated(buf.str().substr(0, 16));
  CHECK_THROWS_AS(read_mask(truncated), IoError);
}

TEST_CASE("file errors name the file") {
  try {
    load_mask("/nonexistent/layer.bpmk");
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/layer.bpmk") != std::string::npos);
  }
}

TEST_CASE("edge list round trip") {
  const BipartiteMask m = gen_er(9, 4, 0.3, 2);
  std::stringstream buf;
  write_edge_list(buf, m);
  CHECK(buf.str().rfind("# 9 4\n", 0) == 0);
  CHECK(read_edge_list(buf) == m);
  std::stringstream out_of_range("# 2 2\n0 5\n");
  CHECK_THROWS(read_edge_list(out_of_range));
}

TEST_CASE("save and load through a file") {
  const auto path = std::filesystem::temp_directory_path() / "cht_mask_io_test.bpmk";
  const BipartiteMask m = gen_er(20, 30, 0.1, 4);
  save_mask(path, m);
  CHECK(load_mask(path) == m);
  std::filesystem::remove(path);
}

}
