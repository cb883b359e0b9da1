#include "decodekit/errors.hpp"
#include "decodekit/manifest.hpp"
#include "decodekit/matrix_io.hpp"
#include "support.hpp"

#include "doctest.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

using namespace decodekit;
using dk_test::TempDir;

namespace {

bool bit_identical(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("csv parse of a small matrix") {
  const auto m = parse_csv("stimulus_id,a,b\ns1,1.0,2.0\ns2,3.0,4.0\n");
  CHECK(m.stimulus_ids() == std::vector<std::string>{"s1", "s2"});
  Matrix expected(2, 2);
  expected << 1, 2, 3, 4;
  CHECK(m.values() == expected);
}

TEST_CASE("csv tolerates CRLF and a missing final newline") {
  const auto m = parse_csv("stimulus_id,a\r\ns1,1\r\ns2,-2.5e-3");
  CHECK(m.values()(1, 0) == -2.5e-3);
}

TEST_CASE("csv errors carry positions") {
  SUBCASE("NaN cell") {
    try {
      parse_csv("stimulus_id,a,b\ns1,1.0,2.0\ns2,NaN,4.0\n");
      FAIL("expected an error");
    } catch (const FormatError& e) {
      CHECK(e.row() == 3);
      CHECK(e.column() == 2);
    }
  }
  SUBCASE("infinite cell") { CHECK_THROWS_AS(parse_csv("stimulus_id,a\ns1,inf\ns2,1\n"), FormatError); }
  SUBCASE("overflowing cell") { CHECK_THROWS_AS(parse_csv("stimulus_id,a\ns1,1e999\ns2,1\n"), FormatError); }
  SUBCASE("ragged row") {
    try {
      parse_csv("stimulus_id,a,b\ns1,1,2\ns2,3\n");
      FAIL("expected an error");
    } catch (const FormatError& e) {
      CHECK(e.row() == 3);
    }
  }
  SUBCASE("duplicate id") {
    try {
      parse_csv("stimulus_id,a\ns1,1\ns1,2\n");
      FAIL("expected an error");
    } catch (const FormatError& e) {
      CHECK(e.row() == 3);
      CHECK(e.column() == 1);
    }
  }
  SUBCASE("bad header") {
    try {
      parse_csv("id,a\ns1,1\ns2,2\n");
      FAIL("expected an error");
    } catch (const FormatError& e) {
      CHECK(e.row() == 1);
    }
  }
  SUBCASE("header without value columns") { CHECK_THROWS_AS(parse_csv("stimulus_id\ns1\n"), FormatError); }
  SUBCASE("trailing junk in a number") { CHECK_THROWS_AS(parse_csv("stimulus_id,a\ns1,1.0x\ns2,2\n"), FormatError); }
  SUBCASE("no data rows") { CHECK_THROWS_AS(parse_csv("stimulus_id,a\n"), FormatError); }
  SUBCASE("empty id") { CHECK_THROWS_AS(parse_csv("stimulus_id,a\n,1\ns2,2\n"), FormatError); }
}

TEST_CASE("every malformed csv either loads valid or raises a positioned error") {
  // Mutate a valid document one byte at a time.
  const std::string base = "stimulus_id,a,b\ns1,1.5,2\ns2,3,-4e2\n";
  const std::string alphabet = ",\n.-eNx 9";
  int loaded = 0, rejected = 0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (char c : alphabet) {
      std::string text = base;
      text[i] = c;
      try {
        const auto m = parse_csv(text);
        CHECK_NOTHROW(validate_matrix(m.stimulus_ids(), m.values()));
        ++loaded;
      } catch (const FormatError& e) {
        CHECK(e.row() >= 1);
        ++rejected;
      }
    }
  }
  CHECK(loaded > 0);
  CHECK(rejected > 0);
}

TEST_CASE("binary round trip is bit-identical") {
  SUBCASE("100x50") {
    const auto m = dk_test::labeled(dk_test::gaussian(100, 50, 1));
    const auto back = decode_binary(encode_binary(m));
    CHECK(back.stimulus_ids() == m.stimulus_ids());
    CHECK(bit_identical(back.values(), m.values()));
  }
  SUBCASE("384x512 through a file") {
    TempDir dir;
    const auto m = dk_test::labeled(dk_test::gaussian(384, 512, 2));
    save_matrix(m, dir / "m.rdmx");
    const auto back = load_matrix(dir / "m.rdmx");
    CHECK(bit_identical(back.values(), m.values()));
    CHECK(back.stimulus_ids() == m.stimulus_ids());
  }
}

TEST_CASE("binary layout is little-endian RDMX v1") {
  Matrix v(1, 1);
  v << 1.0;
  const auto bytes = encode_binary(LabeledMatrix({"ab"}, v));
  REQUIRE(bytes.size() == 4 + 4 + 8 + 8 + 4 + 2 + 8);
  CHECK(bytes.substr(0, 4) == "RDMX");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);   // rows
  CHECK(static_cast<unsigned char>(bytes[16]) == 1);  // cols
  CHECK(static_cast<unsigned char>(bytes[24]) == 2);  // id length
  CHECK(bytes.substr(28, 2) == "ab");
  const std::uint64_t one = std::bit_cast<std::uint64_t>(1.0);
  for (int i = 0; i < 8; ++i) {
    CHECK(static_cast<unsigned char>(bytes[30 + i]) == ((one >> (8 * i)) & 0xff));
  }
}

TEST_CASE("binary decoder rejects corrupt input") {
  const auto good = encode_binary(dk_test::labeled(dk_test::gaussian(3, 2, 3)));
  CHECK_THROWS_AS(decode_binary("XXXX" + good.substr(4)), FormatError);
  CHECK_THROWS_AS(decode_binary(good.substr(0, good.size() - 1)), FormatError);
  CHECK_THROWS_AS(decode_binary(good + "x"), FormatError);
  std::string v2 = good;
  v2[4] = 2;
  CHECK_THROWS_AS(decode_binary(v2), FormatError);
  std::string nan = good;
  const double q = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan.data() + nan.size() - 8, &q, 8);
  CHECK_THROWS_AS(decode_binary(nan), FormatError);
  for (std::size_t cut = 0; cut < good.size(); ++cut) {
    CHECK_THROWS_AS(decode_binary(good.substr(0, cut)), FormatError);
  }
}

TEST_CASE("csv round trip preserves every value exactly") {
  Matrix v(6, 3);
  v << 0.1, 1e-300, -0.0, 5e-324, std::numeric_limits<double>::max(), 1.0 / 3.0, 123456789.123456789, -2.5, 1e22,
      std::numeric_limits<double>::min(), 7, 0.30000000000000004, 1e-7, 9007199254740993.0, -1e-310, 2, 3, 4;
  const LabeledMatrix m(dk_test::ids(6), v);
  const auto back = parse_csv(render_csv(m));
  CHECK(bit_identical(back.values(), v));
}

TEST_CASE("randomized round trips") {
  TempDir dir;
  for (std::uint64_t t = 0; t < 200; ++t) {
    const auto rows = 1 + static_cast<Eigen::Index>(dk_test::uniform(t, 0, "shape") * 20);
    const auto cols = 1 + static_cast<Eigen::Index>(dk_test::uniform(t, 1, "shape") * 20);
    const double scale = std::pow(10.0, std::floor(dk_test::uniform(t, 2, "shape") * 40) - 20);
    const auto m = dk_test::labeled(dk_test::gaussian(rows, cols, t) * scale, "stim-" + std::to_string(t) + "-");
    const auto bin = decode_binary(encode_binary(m));
    CHECK(bit_identical(bin.values(), m.values()));
    CHECK(bin.stimulus_ids() == m.stimulus_ids());
    const auto csv = parse_csv(render_csv(m));
    CHECK(bit_identical(csv.values(), m.values()));
    CHECK(csv.stimulus_ids() == m.stimulus_ids());
  }
  const auto m = dk_test::labeled(dk_test::gaussian(5, 4, 99));
  save_matrix(m, dir / "m.csv");
  CHECK(load_matrix(dir / "m.csv") == m);
}

TEST_CASE("1x1 zero matrix round trips in both formats") {
  TempDir dir;
  const LabeledMatrix m({"only"}, Matrix::Zero(1, 1));
  save_matrix(m, dir / "z.rdmx");
  save_matrix(m, dir / "z.csv");
  CHECK(load_matrix(dir / "z.rdmx") == m);
  CHECK(load_matrix(dir / "z.csv") == m);
}

TEST_CASE("invalid matrices are rejected before anything is written") {
  CHECK_THROWS_AS(LabeledMatrix({}, Matrix(0, 3)), ValidationError);
  CHECK_THROWS_AS(LabeledMatrix({"a", "b"}, Matrix(2, 0)), ValidationError);
  CHECK_THROWS_AS(LabeledMatrix({"a"}, Matrix::Zero(2, 1)), ValidationError);
  CHECK_THROWS_AS(LabeledMatrix({"a", "a"}, Matrix::Zero(2, 1)), ValidationError);
  CHECK_THROWS_AS(LabeledMatrix({"a", ""}, Matrix::Zero(2, 1)), ValidationError);
  Matrix bad = Matrix::Zero(2, 1);
  bad(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(LabeledMatrix({"a", "b"}, bad), ValidationError);
}

TEST_CASE("load reports missing files and names the path") {
  TempDir dir;
  const auto msg = message_of([&] { load_matrix(dir / "absent.rdmx"); });
  CHECK(msg.find("absent.rdmx") != std::string::npos);
  std::ofstream(dir / "bad.csv") << "stimulus_id,a\ns1,nan\ns2,1\n";
  try {
    load_matrix(dir / "bad.csv");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(e.row() == 2);
    CHECK(std::string(e.what()).find("bad.csv") != std::string::npos);
  }
}

TEST_CASE("align") {
  Matrix v(2, 2);
  v << 1, 2, 3, 4;
  const LabeledMatrix m({"b", "a"}, v);

  SUBCASE("swaps rows") {
    const std::vector<std::string> canon{"a", "b"};
    const auto out = align(m, canon);
    CHECK(out.stimulus_ids() == canon);
    CHECK(out.values().row(0) == v.row(1));
    CHECK(out.values().row(1) == v.row(0));
  }
  SUBCASE("identity order is untouched") {
    const std::vector<std::string> canon{"b", "a"};
    CHECK(align(m, canon) == m);
  }
  SUBCASE("unknown and missing ids are named") {
    const std::vector<std::string> canon{"a", "c"};
    const auto msg = message_of([&] { align(m, canon); });
    CHECK(msg.find("'c'") != std::string::npos);
    CHECK(msg.find("'b'") != std::string::npos);
  }
  SUBCASE("length mismatch") {
    const std::vector<std::string> canon{"a", "b", "c"};
    CHECK_THROWS_AS(align(m, canon), ValidationError);
  }
}

TEST_CASE("align is a row permutation on random inputs") {
  for (std::uint64_t t = 0; t < 200; ++t) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(dk_test::uniform(t, 0, "align") * 30);
    const auto m = dk_test::labeled(dk_test::gaussian(n, 3, t, "align"));
    std::vector<std::string> canon = m.stimulus_ids();
    decodekit::CounterStream s(decodekit::derive_key(t, {"perm"}));
    for (std::size_t i = canon.size(); i > 1; --i) std::swap(canon[i - 1], canon[s.below(i)]);
    const auto out = align(m, canon);
    REQUIRE(out.stimulus_ids() == canon);
    for (Eigen::Index r = 0; r < n; ++r) {
      CHECK(out.values().row(r) == m.values().row(m.find(canon[static_cast<std::size_t>(r)])));
    }
    CHECK(align(out, m.stimulus_ids()) == m);
  }
}

namespace {

nlohmann::json small_manifest_json() {
  return nlohmann::json{{"format_version", 1},
                        {"subjects", {{{"id", "sub-01"}, {"path", "sub-01.csv"}}}},
                        {"models", {{{"id", "m1"}, {"path", "m1.csv"}}}},
                        {"stimulus_ids", {"a", "b", "c"}},
                        {"eval", {{"folds", 3}, {"inner_folds", 2}, {"alpha_grid", {0.1, 10.0}}, {"seed", 5}}}};
}

}  // namespace

TEST_CASE("manifest parsing and validation") {
  const auto m = manifest_from_json(small_manifest_json(), "/data");
  CHECK(m.eval.folds == 3);
  CHECK(m.eval.ridge.cv_folds == 2);
  CHECK(m.eval.ridge.alpha_grid == std::vector<double>{0.1, 10.0});
  CHECK(m.eval.seed == 5);
  CHECK(m.eval.bootstrap_replicates == 1000);
  CHECK(m.resolve("sub-01.csv") == std::filesystem::path("/data/sub-01.csv"));
  CHECK(m.resolve("/abs/x.csv") == std::filesystem::path("/abs/x.csv"));
  CHECK(manifest_from_json(manifest_to_json(m), "/data").stimulus_ids == m.stimulus_ids);

  auto dup = small_manifest_json();
  dup["models"].push_back({{"id", "m1"}, {"path", "other.csv"}});
  CHECK_THROWS_AS(manifest_from_json(dup, "."), ValidationError);

  auto unsafe = small_manifest_json();
  unsafe["subjects"][0]["id"] = "../escape";
  CHECK_THROWS_AS(manifest_from_json(unsafe, "."), ValidationError);

  auto few = small_manifest_json();
  few["eval"]["folds"] = 4;
  CHECK_THROWS_AS(manifest_from_json(few, "."), ValidationError);

  auto grid = small_manifest_json();
  grid["eval"]["alpha_grid"] = {10.0, 1.0};
  CHECK_THROWS_AS(manifest_from_json(grid, "."), ValidationError);

  CHECK(is_safe_id("sub-01_a.b"));
  CHECK_FALSE(is_safe_id(".hidden"));
  CHECK_FALSE(is_safe_id("a/b"));
  CHECK_FALSE(is_safe_id(""));
}

TEST_CASE("load_experiment aligns by id and names failing entities") {
  TempDir dir;
  Matrix v(3, 1);
  v << 3, 1, 2;
  save_matrix(LabeledMatrix({"c", "a", "b"}, v), dir / "sub-01.csv");
  save_matrix(LabeledMatrix({"b", "a", "c"}, v), dir / "m1.csv");
  std::ofstream(dir / "manifest.json") << small_manifest_json().dump();
  const auto exp = load_experiment(load_manifest(dir / "manifest.json"));
  CHECK(exp.subjects[0].matrix.stimulus_ids() == std::vector<std::string>{"a", "b", "c"});
  CHECK(exp.subjects[0].matrix.values()(0, 0) == 1);
  CHECK(exp.models[0].matrix.values()(0, 0) == 1);
  CHECK(exp.models[0].matrix.values()(1, 0) == 3);

  std::filesystem::remove(dir / "sub-01.csv");
  try {
    load_experiment(load_manifest(dir / "manifest.json"));
    FAIL("expected an error");
  } catch (const ExperimentError& e) {
    CHECK(e.entity_id() == "sub-01");
    CHECK(std::string(e.what()).find("sub-01.csv") != std::string::npos);
  }

  save_matrix(LabeledMatrix({"a", "b", "z"}, v), dir / "sub-01.csv");
  const auto msg = message_of([&] { load_experiment(load_manifest(dir / "manifest.json")); });
  CHECK(msg.find("'z'") != std::string::npos);
  CHECK(msg.find("'c'") != std::string::npos);
}

TEST_CASE("manifest save and load round trip") {
  TempDir dir;
  auto m = manifest_from_json(small_manifest_json(), dir.path());
  save_manifest(m, dir / "out.json");
  const auto back = load_manifest(dir / "out.json");
  CHECK(back.subjects[0].id == "sub-01");
  CHECK(back.models[0].path == std::filesystem::path("m1.csv"));
  CHECK(back.eval.ridge.alpha_grid == m.eval.ridge.alpha_grid);
  CHECK(back.eval.seed == 5);
}
