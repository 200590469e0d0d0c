#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fb5/protein.hpp"
#include "fb5/rng.hpp"

using namespace fb5;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content)
      : path("/tmp/fb5_test_" + name) {
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

std::string pdb_atom(int serial, const char* chain, int resseq, double x,
                     double y, double z, char altloc = ' ') {
  char buf[100];
  std::snprintf(buf, sizeof buf,
                "ATOM  %5d  CA %cALA %s%4d    %8.3f%8.3f%8.3f  1.00  0.00",
                serial, altloc, chain, resseq, x, y, z);
  return std::string(buf) + "\n";
}

CaTrace helix_trace(int n, std::uint64_t seed = 0) {
  // synthetic helix-like walk with ~3.8 A steps
  CaTrace t;
  t.chain_id = "A";
  for (int i = 0; i < n; ++i) {
    const double a = 0.6 * i;
    t.coords.emplace_back(2.3 * std::cos(a), 2.3 * std::sin(a), 2.9 * i);
  }
  if (seed) {
    Rng rng(seed);
    for (auto& c : t.coords) {
      c += 0.1 * Vec3(rng.uniform() - 0.5, rng.uniform() - 0.5,
                      rng.uniform() - 0.5);
    }
  }
  t.break_after.assign(t.coords.size() - 1, false);
  return t;
}

}  // namespace

TEST_CASE("csv parsing: three rows make one trace") {
  TempFile f("a.csv", "x,y,z\n0,0,0\n3.8,0,0\n7.6,0,0\n");
  const auto traces = parse_ca_file(f.path);
  REQUIRE(traces.size() == 1);
  CHECK(traces[0].coords.size() == 3);
}

TEST_CASE("csv chain column splits traces") {
  TempFile f("b.csv", "0,0,0,A\n3.8,0,0,A\n50,0,0,B\n53.8,0,0,B\n");
  const auto traces = parse_ca_file(f.path);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].chain_id == "A");
  CHECK(traces[1].chain_id == "B");
}

TEST_CASE("pdb parsing: two chains, altloc filter") {
  std::string text;
  text += pdb_atom(1, "A", 1, 0, 0, 0);
  text += pdb_atom(2, "A", 2, 3.8, 0, 0);
  text += pdb_atom(3, "A", 3, 7.6, 0, 0, 'B');  // skipped with a warning
  text += pdb_atom(4, "A", 3, 7.6, 0.2, 0, 'A');
  text += "TER\n";
  text += pdb_atom(5, "B", 1, 0, 50, 0);
  text += pdb_atom(6, "B", 2, 3.8, 50, 0);
  TempFile f("c.pdb", "HEADER    TEST\n" + text);
  const auto traces = parse_ca_file(f.path);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].coords.size() == 3);  // altloc B row dropped
  CHECK(traces[1].coords.size() == 2);
}

TEST_CASE("pdb parsing rejects malformed records") {
  TempFile f("d.pdb", "ATOM      1  CA AALA A\n");
  CHECK_THROWS(parse_ca_file(f.path));
}

TEST_CASE("missing or empty input") {
  CHECK_THROWS(parse_ca_file("/tmp/does_not_exist_fb5.csv"));
  TempFile f("e.csv", "x,y,z\n1,2,3\n");  // single point: no usable trace
  CHECK_THROWS(parse_ca_file(f.path));
}

TEST_CASE("chain breaks flagged from implausible steps") {
  TempFile f("f.csv", "0,0,0\n3.8,0,0\n30,0,0\n33.8,0,0\n");
  const auto traces = parse_ca_file(f.path);
  REQUIRE(traces.size() == 1);
  REQUIRE(traces[0].break_after.size() == 3);
  CHECK_FALSE(traces[0].break_after[0]);
  CHECK(traces[0].break_after[1]);
  CHECK_FALSE(traces[0].break_after[2]);
  // the pair across the break is skipped: 3 bonds, 1 invalid
  const DirectionalDataset ds = directions_from_trace(traces[0]);
  CHECK(ds.size() == 2);
}

TEST_CASE("two atoms give one pair with the step length") {
  CaTrace t;
  t.chain_id = "A";
  t.coords = {Vec3(1, 2, 3), Vec3(1, 2, 3) + 3.8 * Vec3(0, 1, 0)};
  t.break_after = {false};
  const DirectionalDataset ds = directions_from_trace(t);
  REQUIRE(ds.size() == 1);
  CHECK(ds.radii[0] == doctest::Approx(3.8).epsilon(1e-12));
}

TEST_CASE("collinear triple: second direction has theta = 0") {
  CaTrace t;
  t.chain_id = "A";
  t.coords = {Vec3(0, 0, 0), Vec3(3.8, 0, 0), Vec3(7.6, 0, 0)};
  t.break_after = {false, false};
  const DirectionalDataset ds = directions_from_trace(t);
  REQUIRE(ds.size() == 2);
  CHECK(ds.pairs[1].theta == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("n residues without breaks give n-1 pairs") {
  const CaTrace t = helix_trace(20);
  CHECK(directions_from_trace(t).size() == 19);
}

TEST_CASE("intrinsic frame: rigid-motion invariance from the third bond") {
  const CaTrace t = helix_trace(15, 5);
  const DirectionalDataset base = directions_from_trace(t);

  const Mat3 r = axes_from_angles(0.7, 1.9, 2.5).as_matrix();
  const Vec3 shift(11.0, -3.0, 42.0);
  CaTrace moved = t;
  for (auto& c : moved.coords) c = r * c + shift;
  const DirectionalDataset rot = directions_from_trace(moved);

  REQUIRE(base.size() == rot.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(rot.radii[i] == doctest::Approx(base.radii[i]).epsilon(1e-9));
    if (i >= 2) {
      CHECK(rot.pairs[i].theta ==
            doctest::Approx(base.pairs[i].theta).epsilon(1e-9));
      CHECK(std::abs(std::remainder(rot.pairs[i].phi - base.pairs[i].phi,
                                    kTwoPi)) < 1e-9);
    } else if (i == 1) {
      // the bootstrap frame fixes theta but not phi for the second bond
      CHECK(rot.pairs[i].theta ==
            doctest::Approx(base.pairs[i].theta).epsilon(1e-9));
    }
  }
}

TEST_CASE("uniform null model bits per residue") {
  // epsilon = 0.001 A and constant r = 3.8 A: 27.435 bits per residue
  DirectionalDataset ds;
  for (int i = 0; i < 100; ++i) {
    ds.pairs.push_back({1.0, 2.0});
    ds.radii.push_back(3.8);
  }
  const NullModelBits u = null_model_bits_uniform(ds, 0.001);
  CHECK(u.bits_per_residue == doctest::Approx(27.435).epsilon(0.01 / 27.435));
  // depends only on the radii, never the directions
  DirectionalDataset ds2 = ds;
  for (auto& p : ds2.pairs) p = SphericalAngles{0.3, 4.0};
  CHECK(null_model_bits_uniform(ds2, 0.001).total_bits ==
        doctest::Approx(u.total_bits).epsilon(1e-12));
}

TEST_CASE("a near-uniform mixture reproduces the uniform null") {
  DirectionalDataset ds;
  for (int i = 0; i < 50; ++i) {
    ds.pairs.push_back({0.4 + 0.01 * i, 0.1 * i});
    ds.radii.push_back(3.7 + 0.004 * i);
  }
  MixtureModel flat;
  flat.family = Family::Vmf;
  flat.weights = {1.0};
  flat.components = {
      KentParams(OrientationAngles(0, kPi / 2, 0), 1e-8, 0.0)};
  const NullModelBits a = null_model_bits(ds, flat, 0.001);
  const NullModelBits b = null_model_bits_uniform(ds, 0.001);
  CHECK(a.total_bits == doctest::Approx(b.total_bits).epsilon(1e-9));
}

TEST_CASE("a fitted mixture beats the uniform null on structured data") {
  // directional data concentrated around one direction compresses better
  // under a one-component model than under the uniform null
  const KentParams concentrated(OrientationAngles(0.3, 1.0, 2.0), 50.0, 10.0);
  const auto xs = kent_sample(concentrated, 500, 19);
  DirectionalDataset ds;
  for (const auto& x : xs) {
    ds.pairs.push_back(cartesian_to_spherical(UnitVector3(x)));
    ds.radii.push_back(3.8);
  }
  MixtureModel model;
  model.family = Family::Kent;
  model.weights = {1.0};
  model.components = {concentrated};
  const NullModelBits fit = null_model_bits(ds, model, 0.001);
  const NullModelBits uni = null_model_bits_uniform(ds, 0.001);
  CHECK(fit.total_bits < uni.total_bits);
}

TEST_CASE("directional dataset round trip to unit vectors") {
  DirectionalDataset ds;
  ds.pairs = {{0.5, 1.0}, {2.0, 4.0}};
  ds.radii = {3.8, 3.8};
  const auto vs = ds.unit_vectors();
  REQUIRE(vs.size() == 2);
  for (const auto& v : vs) CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vs[0].x() == doctest::Approx(std::cos(0.5)).epsilon(1e-12));
}
