#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "hglab/embedding.hpp"
#include "hglab/errors.hpp"
#include "hglab/rng.hpp"

using namespace hglab;

namespace {

const FontFace& dejavu() {
  static FontFace f = load_font(HGLAB_DATA_DIR "/fonts/DejaVuSans.ttf");
  return f;
}

EmbeddingSpace toy_space(const std::vector<std::pair<char32_t, std::vector<float>>>& rows) {
  EmbeddingSpace s(SpaceKind::Ices, static_cast<int>(rows.front().second.size()), {});
  for (const auto& [cp, v] : rows) s.add(cp, v);
  return s;
}

// Reference implementation: full argsort by (similarity desc, codepoint asc).
NeighborSet brute_top_k(const EmbeddingSpace& space, char32_t cp, int k) {
  struct Entry {
    char32_t cp;
    double sim;
  };
  std::vector<Entry> all;
  for (char32_t other : space.codepoints())
    if (other != cp) all.push_back({other, cosine(space.vec(cp), space.vec(other))});
  std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.cp < b.cp;
  });
  NeighborSet ns;
  ns.codepoint = cp;
  for (int i = 0; i < k && i < static_cast<int>(all.size()); ++i) {
    ns.neighbors.push_back(all[static_cast<std::size_t>(i)].cp);
    ns.similarities.push_back(all[static_cast<std::size_t>(i)].sim);
  }
  return ns;
}

}  // namespace

TEST_CASE("cosine: frozen oracle") {
  // (1,2,3)·(4,5,6) = 32; |u| = sqrt(14); |v| = sqrt(77)
  // 32 / sqrt(1078) = 0.9746318461970762
  std::vector<float> u = {1, 2, 3}, v = {4, 5, 6};
  CHECK(cosine(u, v) == doctest::Approx(0.9746318461970762).epsilon(1e-9));
  CHECK(cosine(u, u) == doctest::Approx(1.0));
  std::vector<float> w = {-1, -2, -3};
  CHECK(cosine(u, w) == doctest::Approx(-1.0));
  // clamped into [-1, 1] despite float noise
  CHECK(cosine(u, u) <= 1.0);
}

TEST_CASE("cosine: error paths") {
  std::vector<float> u = {1, 2}, z = {0, 0}, w = {1, 2, 3};
  CHECK_THROWS_AS(cosine(u, z), Error);  // ZeroVector
  CHECK_THROWS_AS(cosine(z, u), Error);
  CHECK_THROWS_AS(cosine(u, w), Error);  // LengthMismatch
}

TEST_CASE("top_k matches brute force, including tie-breaks") {
  Rng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(199));  // up to 200 entries
    const int dim = 3 + static_cast<int>(rng.below(6));
    std::vector<std::pair<char32_t, std::vector<float>>> rows;
    std::vector<float> prev;
    for (int i = 0; i < n; ++i) {
      std::vector<float> v(static_cast<std::size_t>(dim));
      if (i > 0 && rng.below(4) == 0) {
        v = prev;  // duplicate vector: forces an exact similarity tie
      } else {
        for (auto& x : v) x = rng.next_float() * 2.0f - 1.0f;
        if (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; })) v[0] = 0.5f;
      }
      prev = v;
      rows.push_back({static_cast<char32_t>(0x100 + i), v});
    }
    EmbeddingSpace space = toy_space(rows);
    const char32_t probe = static_cast<char32_t>(0x100 + rng.below(static_cast<uint64_t>(n)));
    const int k = 1 + static_cast<int>(rng.below(12));
    NeighborSet got = top_k(space, probe, k);
    NeighborSet want = brute_top_k(space, probe, k);
    CAPTURE(trial);
    CHECK(got.neighbors == want.neighbors);
    CHECK(got.similarities == want.similarities);
  }
}

TEST_CASE("top_k: similarity ordering and self exclusion") {
  EmbeddingSpace s = toy_space({{U'a', {1, 0}}, {U'b', {1, 0.1f}}, {U'c', {0, 1}}});
  NeighborSet ns = top_k(s, U'a', 10);
  REQUIRE(ns.neighbors.size() == 2);
  CHECK(ns.neighbors[0] == U'b');
  CHECK(std::is_sorted(ns.similarities.rbegin(), ns.similarities.rend()));
  CHECK(std::find(ns.neighbors.begin(), ns.neighbors.end(), U'a') == ns.neighbors.end());
  CHECK_THROWS_AS(top_k(s, U'z', 3), Error);  // UnknownCodepoint
}

TEST_CASE("build_ices: dimensions and canvas") {
  std::vector<char32_t> abc = {U'a', U'b', U'c'};
  EmbeddingSpace s = build_ices(abc, dejavu());
  CHECK(s.dim() == 24 * 24);
  CHECK(s.size() == 3);
  CHECK(s.kind() == SpaceKind::Ices);
  CHECK(s.meta().canvas_w == kIcesCanvas);
  CHECK(s.contains(U'b'));
  CHECK(s.vec(U'a').size() == 576);
}

TEST_CASE("build_ices: drops unrenderable codepoints, rejects empty result") {
  std::vector<char32_t> mixed = {U'a', 0x1B170, U' '};  // letter, uncovered, blank
  std::vector<char32_t> dropped;
  EmbeddingSpace s = build_ices(mixed, dejavu(), &dropped);
  CHECK(s.size() == 1);
  // the builder canonicalizes the charset to ascending codepoint order
  CHECK(dropped == std::vector<char32_t>{U' ', 0x1B170});

  std::vector<char32_t> hopeless = {U' ', 0x1B170};
  CHECK_THROWS_AS(build_ices(hopeless, dejavu()), Error);  // EmptySpace
  CHECK_THROWS_AS(build_ices({}, dejavu()), Error);
}

TEST_CASE("space persistence roundtrip is exact") {
  std::filesystem::create_directories("test_tmp_embedding");
  std::vector<char32_t> cps = {U'0', U'O', U'o', static_cast<char32_t>(0x043E)};
  EmbeddingSpace s = build_ices(cps, dejavu());
  s.save("test_tmp_embedding/ices");
  EmbeddingSpace back = EmbeddingSpace::load("test_tmp_embedding/ices");
  CHECK(back.kind() == s.kind());
  CHECK(back.dim() == s.dim());
  CHECK(back.codepoints() == s.codepoints());
  for (char32_t cp : cps) {
    auto a = s.vec(cp), b = back.vec(cp);
    CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
  CHECK(top_k(back, U'o', 3).neighbors == top_k(s, U'o', 3).neighbors);
}

TEST_CASE("space add(): ordering and shape rules") {
  EmbeddingSpace s(SpaceKind::Ices, 2, {});
  std::vector<float> v = {1, 2};
  s.add(U'b', v);
  CHECK_THROWS_AS(s.add(U'a', v), Error);             // descending insert
  CHECK_THROWS_AS(s.add(U'b', v), Error);             // duplicate
  std::vector<float> bad = {1, 2, 3};
  CHECK_THROWS_AS(s.add(U'c', bad), Error);           // wrong length
  std::vector<float> zero = {0, 0};
  CHECK_THROWS_AS(s.add(U'c', zero), Error);          // zero vector
  CHECK_THROWS_AS(s.vec(U'x'), Error);                // UnknownCodepoint
}

TEST_CASE("neighbor set json roundtrip") {
  std::filesystem::create_directories("test_tmp_embedding");
  NeighborSet ns;
  ns.codepoint = U'o';
  ns.neighbors = {0x043E, U'e', U'c'};
  ns.similarities = {0.99, 0.84, 0.71};
  ns.save_json("test_tmp_embedding/ns.json");
  NeighborSet back = NeighborSet::load_json("test_tmp_embedding/ns.json");
  CHECK(back.codepoint == ns.codepoint);
  CHECK(back.neighbors == ns.neighbors);
  CHECK(back.similarities == ns.similarities);
}
