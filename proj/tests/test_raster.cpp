#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "hglab/errors.hpp"
#include "hglab/pgm.hpp"
#include "hglab/raster.hpp"
#include "hglab/rng.hpp"

using namespace hglab;

namespace {

const FontFace& dejavu() {
  static FontFace f = load_font(HGLAB_DATA_DIR "/fonts/DejaVuSans.ttf");
  return f;
}

FontSet all_faces() {
  FontSet fonts;
  const char* names[] = {"DejaVuSans.ttf",         "DejaVuSans-Bold.ttf",
                         "DejaVuSans-Oblique.ttf", "DejaVuSans-BoldOblique.ttf",
                         "DejaVuSansMono.ttf",     "DejaVuSansMono-Bold.ttf",
                         "DejaVuSansMono-Oblique.ttf", "DejaVuSansMono-BoldOblique.ttf"};
  for (const char* n : names) fonts.load(std::string(HGLAB_DATA_DIR "/fonts/") + n);
  return fonts;
}

}  // namespace

TEST_CASE("font loading and glyph lookup") {
  const FontFace& f = dejavu();
  CHECK(f.units_per_em() > 0);
  CHECK(f.has_glyph(U'a'));
  CHECK(f.has_glyph(0x0430));        // Cyrillic a
  CHECK(!f.has_glyph(0x1B170));      // Nushu, far outside coverage
  CHECK(f.outline(U'g').has_value());
  CHECK_THROWS_AS(load_font(HGLAB_DATA_DIR "/charsets/desk150.txt"), Error);  // NotAFont
  CHECK_THROWS_AS(load_font("no/such/file.ttf"), Error);
}

TEST_CASE("rasterize_centered centers the ink box") {
  for (char32_t cp : {U'a', U'W', U'.', U'0', char32_t(0x0431), char32_t(0x03B1)}) {
    CAPTURE(cp);
    GlyphBitmap b = rasterize_centered(cp, dejavu(), 80.0f, 100, 100);
    CHECK(b.width == 100);
    CHECK(b.height == 100);
    auto box = b.ink_bbox();
    REQUIRE(box.has_value());
    const double cx = (box->x0 + box->x1) / 2.0, cy = (box->y0 + box->y1) / 2.0;
    CHECK(std::abs(cx - 49.5) <= 1.0);
    CHECK(std::abs(cy - 49.5) <= 1.0);
    for (float v : b.pixels) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("rasterize_centered error paths") {
  CHECK_THROWS_AS(rasterize_centered(U' ', dejavu(), 80.0f, 100, 100), Error);   // BlankGlyph
  CHECK_THROWS_AS(rasterize_centered(0x1B170, dejavu(), 80.0f, 100, 100), Error);  // NotRenderable
  // Oversized glyphs scale down rather than overflow.
  GlyphBitmap b = rasterize_centered(U'W', dejavu(), 300.0f, 24, 24);
  auto box = b.ink_bbox();
  REQUIRE(box.has_value());
  CHECK(box->x0 >= 1);
  CHECK(box->x1 <= 22);
}

TEST_CASE("rotation keeps mass and respects the angle limit") {
  GlyphBitmap b = rasterize_centered(U'g', dejavu(), 60.0f, 100, 100);
  GlyphBitmap r = rotate(b, 20.0f);
  CHECK(r.rotation_deg == doctest::Approx(20.0f));
  CHECK(r.ink_mass() == doctest::Approx(b.ink_mass()).epsilon(0.08));
  GlyphBitmap zero = rotate(b, 0.0f);
  CHECK(zero.pixels == b.pixels);
  CHECK_THROWS_AS(rotate(b, 50.0f), std::invalid_argument);
  CHECK_THROWS_AS(rotate(b, -46.0f), std::invalid_argument);
}

TEST_CASE("salt and pepper noise: determinism and density") {
  GlyphBitmap b = rasterize_centered(U'o', dejavu(), 80.0f, 100, 100);
  GlyphBitmap n1 = add_salt_pepper(b, 0.02, 123);
  GlyphBitmap n2 = add_salt_pepper(b, 0.02, 123);
  CHECK(n1.pixels == n2.pixels);
  CHECK(add_salt_pepper(b, 0.02, 124).pixels != n1.pixels);

  std::size_t changed = 0;
  for (std::size_t i = 0; i < b.pixels.size(); ++i)
    if (b.pixels[i] != n1.pixels[i]) ++changed;
  // each pixel is hit with prob p and then re-set to 0 or 1; a hit on a
  // saturated pixel is invisible half the time, so the visible rate sits
  // between p/2 and p (4-sigma slack)
  const double n = static_cast<double>(b.pixels.size());
  CHECK(changed > 0.5 * 0.02 * n - 4 * std::sqrt(0.02 * n));
  CHECK(static_cast<double>(changed) < 0.02 * n + 4 * std::sqrt(0.02 * n));

  GlyphBitmap clean = add_salt_pepper(b, 0.0, 55);
  CHECK(clean.pixels == b.pixels);
}

TEST_CASE("default rotation angles: 20 values, zero excluded") {
  auto angles = AugmentationSpec::default_rotation_angles();
  CHECK(angles.size() == 20);
  for (float a : angles) {
    CHECK(a != 0.0f);
    CHECK(std::abs(a) >= 2.0f);
    CHECK(std::abs(a) <= 20.0f);
    CHECK(std::fmod(std::abs(a), 2.0f) == doctest::Approx(0.0f));
  }
}

TEST_CASE("augment_char materializes the full view grid") {
  FontSet fonts = all_faces();
  AugmentationSpec spec;
  spec.fonts = fonts.ids();
  CHECK(spec.views_per_char() == 8 * 2 * 20);

  AugmentationSpec small = spec;
  small.fonts = {fonts.ids()[0], fonts.ids()[1]};
  small.sizes_pt = {60.0f};
  small.rotations_deg = {-4.0f, 4.0f};
  auto views = augment_char(U'k', fonts, small, 9);
  REQUIRE(views.size() == 4);
  for (const auto& v : views) {
    CHECK(v.width == 100);
    CHECK(v.noise_seed.has_value());
  }
  // deterministic per (seed, view identity)
  auto again = augment_char(U'k', fonts, small, 9);
  for (std::size_t i = 0; i < views.size(); ++i) CHECK(views[i].pixels == again[i].pixels);
}

TEST_CASE("pgm roundtrip") {
  std::filesystem::create_directories("test_tmp_raster");
  GlyphBitmap b = rasterize_centered(U'Q', dejavu(), 80.0f, 64, 64);
  write_pgm("test_tmp_raster/q.pgm", b);
  GlyphBitmap back = read_pgm("test_tmp_raster/q.pgm");
  CHECK(back.width == 64);
  CHECK(back.height == 64);
  // 8-bit quantization on the way out
  for (std::size_t i = 0; i < b.pixels.size(); ++i)
    CHECK(std::abs(back.pixels[i] - b.pixels[i]) <= 0.5f / 255.0f + 1e-6f);
}
