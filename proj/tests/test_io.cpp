#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "ddns/errors.hpp"
#include "ddns/field_factory.hpp"
#include "ddns/hash.hpp"
#include "ddns/io.hpp"
#include "helpers.hpp"

using namespace ddns;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("ddns_io_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  return dir;
}

bool same_bits(const Field& a, const Field& b) {
  return a.components() == b.components() && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

SolutionState forced_state() {
  TorusGrid g(2, 16);
  auto s = testing_util::random_state(g, 1, 0.3);
  Field p = testing_util::noise(g, 1, 3);
  Field f = single_mode(g, {0, 1, 0}, 0.5, 2);
  return SolutionState::make(s.rho, s.u, p, f, 0.125, 0.01);
}

template <class T>
T read_le(const std::vector<std::uint8_t>& b, std::size_t at) {
  T v{};
  std::memcpy(&v, b.data() + at, sizeof v);
  return v;
}

}  // namespace

TEST_CASE("snapshots round-trip bit for bit") {
  auto s = forced_state();
  auto back = decode_snapshot(encode_snapshot(s));
  CHECK(same_bits(back.rho, s.rho));
  CHECK(same_bits(back.u, s.u));
  REQUIRE(back.p.has_value());
  CHECK(same_bits(*back.p, *s.p));
  REQUIRE(back.force.has_value());
  CHECK(same_bits(*back.force, *s.force));
  CHECK(back.t == 0.125);
  CHECK(back.mu == 0.01);
  auto bare = SolutionState::make(s.rho, s.u);
  auto b2 = decode_snapshot(encode_snapshot(bare));
  CHECK_FALSE(b2.p.has_value());
  CHECK_FALSE(b2.force.has_value());
  TorusGrid g3(3, 8);
  auto s3 = SolutionState::make(constant_field(g3, 1, 1.0), single_mode(g3, {1, 1, 0}, 1.0, 3));
  CHECK(same_bits(decode_snapshot(encode_snapshot(s3)).u, s3.u));
}

TEST_CASE("header layout") {
  auto s = forced_state();
  auto bytes = encode_snapshot(s);
  CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "DDNS1");
  CHECK(read_le<std::uint16_t>(bytes, 5) == kSnapshotVersion);
  CHECK(bytes[7] == 2);
  CHECK(read_le<std::uint32_t>(bytes, 8) == 16);
  CHECK(read_le<std::uint32_t>(bytes, 12) == 16);
  CHECK(bytes[16] == 6);  // rho, u1, u2, p, f1, f2
  CHECK(read_le<double>(bytes, 17) == 0.125);
  CHECK(read_le<double>(bytes, 25) == 0.01);
  CHECK(read_le<std::uint32_t>(bytes, 33) == (kHasPressure | kHasForce | kDivergenceFree));
  const std::size_t header = 37;
  CHECK(bytes.size() == header + 6 * 256 * 8);
  CHECK(read_le<double>(bytes, header) == s.rho.at(0, 0));
  CHECK(read_le<double>(bytes, header + 256 * 8) == s.u.at(0, 0));
  CHECK(read_le<double>(bytes, header + 3 * 256 * 8 + 8) == s.p->at(0, 1));
}

TEST_CASE("corrupt snapshots are rejected") {
  auto bytes = encode_snapshot(forced_state());
  auto expect_error = [](std::vector<std::uint8_t> b, const std::string& fragment) {
    try {
      decode_snapshot(b);
      FAIL("accepted");
    } catch (const ValidationError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
    }
  };
  auto b = bytes;
  b[0] = 'X';
  expect_error(b, "magic");
  b = bytes;
  b[5] = 9;
  expect_error(b, "version");
  b = bytes;
  b.resize(b.size() - 8);
  expect_error(b, "payload");
  b = bytes;
  b.push_back(0);
  expect_error(b, "payload");
  expect_error(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10), "truncated");
  b = bytes;
  b[16] = 5;
  expect_error(b, "array count");
  b = bytes;
  b[12] = 8;
  expect_error(b, "equal points");
  b = bytes;
  b[33] |= 0x10;
  expect_error(b, "flags");
  b = bytes;
  const double nan = std::nan("");
  std::memcpy(b.data() + 37 + 8, &nan, 8);
  expect_error(b, "finite");
  b = bytes;
  const double neg = -1.0;
  std::memcpy(b.data() + 37, &neg, 8);
  expect_error(b, "0 < rho_lo <= rho <= rho_hi");
  b = bytes;
  b[8] = 12;
  b[12] = 12;
  expect_error(b, "power of two");
}

TEST_CASE("snapshot files and series directories") {
  auto dir = scratch("series");
  std::vector<SolutionState> states;
  for (int k = 0; k < 3; ++k) states.push_back(taylor_green(TorusGrid(2, 16), 0.01, 0.1 * k));
  SeriesManifest m{"0123456789abcdef", kSchemeTag, kSolverVersion, {}, {}};
  write_series(dir, states, m);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "snap_00002.ddns"));
  SeriesManifest got;
  auto back = read_series(dir, &got);
  REQUIRE(back.size() == 3);
  CHECK(got.config_hash == m.config_hash);
  CHECK(got.scheme == kSchemeTag);
  CHECK(got.files[1] == "snap_00001.ddns");
  CHECK(got.times[2] == states[2].t);
  for (int k = 0; k < 3; ++k) CHECK(same_bits(back[k].u, states[k].u));
  CHECK(read_states(dir).size() == 3);
  CHECK(read_states(dir / "snap_00001.ddns").size() == 1);
  CHECK_THROWS_AS(read_states(dir / "missing.ddns"), ValidationError);
  CHECK_THROWS_AS(read_states(""), ValidationError);

  std::ofstream(dir / "manifest.json") << "{\"format\": \"DDNS1\"}";
  CHECK_THROWS_AS(read_series(dir), ValidationError);
  std::ofstream(dir / "manifest.json") << "not json";
  CHECK_THROWS_AS(read_series(dir), ValidationError);
  std::ofstream(dir / "manifest.json")
      << R"({"format":"DDNS1","config_hash":"x","scheme":"s","version":"1","snapshots":[{"file":"../x","t":0}]})";
  CHECK_THROWS_AS(read_series(dir), ValidationError);
  std::ofstream(dir / "manifest.json")
      << R"({"format":"DDNS1","config_hash":"x","scheme":"s","version":"1","snapshots":[{"file":"snap_00001.ddns","t":7}]})";
  CHECK_THROWS_AS(read_series(dir), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("run configuration validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto mutate) {
    RunConfig r;
    mutate(r);
    CHECK_THROWS_AS(r.validate(), ValidationError);
  };
  bad([](RunConfig& r) { r.cutoff = "gaussian"; });
  bad([](RunConfig& r) { r.s = 1.0; });
  bad([](RunConfig& r) { r.a = 0.5; });
  bad([](RunConfig& r) { r.besov_r = "two"; });
  bad([](RunConfig& r) { r.besov_r = "0.5"; });
  bad([](RunConfig& r) { r.q_lo = -2; });
  bad([](RunConfig& r) {
    r.q_lo = 4;
    r.q_hi = 3;
  });
  bad([](RunConfig& r) { r.lag_radius = 32; });
  bad([](RunConfig& r) { r.n = 100; });
  bad([](RunConfig& r) { r.solver.cfl = 0.9; });
  RunConfig ok;
  ok.besov_r = "c0";
  CHECK_NOTHROW(ok.validate());
  ok.besov_r = "2.5";
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("hypothesis regime ties the exponents together") {
  RunConfig c;
  c.hypothesis_regime = true;
  c.a = 3.0;
  c.b = 4.5;  // 1/3 + 2/3 = 1
  CHECK_NOTHROW(c.validate());
  c.b = 3.0;
  c.a = std::numeric_limits<double>::infinity();
  CHECK_NOTHROW(c.validate());
  c.a = 3.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.hypothesis_regime = false;
  CHECK_NOTHROW(c.validate());
  c.hypothesis_regime = true;
  c.a = 1.0;
  c.b = 1e300;
  CHECK_NOTHROW(c.validate());
  c.a = 2.0;
  c.b = 1.5;  // 1/2 + 2 != 1 and b < 3
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("configuration hash") {
  RunConfig a, b;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.input = "/some/where";
  b.output = "elsewhere.csv";
  CHECK(a.hash() == b.hash());
  b.s = 0.25;
  CHECK(a.hash() != b.hash());
  RunConfig c;
  c.solver.mu = 0.5;
  CHECK(a.hash() != c.hash());
  CHECK(provenance_line(a) == "# config_hash=" + a.hash());
  auto kv = a.canonical_map();
  CHECK(kv.count("input") == 0);
  CHECK(kv.count("output") == 0);
  CHECK(kv.at("n") == "64");
  CHECK(kv.count("mu") == 1);
  // FNV-1a 64 of the empty string
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
}

TEST_CASE("solver configuration takes the grid size") {
  RunConfig c;
  c.n = 32;
  c.solver.n = 128;
  CHECK(c.solver_config().n == 32);
  CHECK(c.grid().n() == 32);
  CHECK(c.cutoff_profile().kind() == CutoffKind::smooth);
  c.cutoff = "sharp";
  CHECK(c.cutoff_profile().kind() == CutoffKind::sharp);
}
