#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hglab/font.hpp"

namespace hglab {

// A rendered, centered grayscale view of one codepoint, with the render
// parameters that produced it.
struct GlyphBitmap {
  char32_t codepoint = 0;
  int width = 0, height = 0;
  std::vector<float> pixels;  // row-major, intensities in [0,1], ink = high
  int font_id = -1;
  float size_pt = 0;
  float rotation_deg = 0;
  std::optional<uint64_t> noise_seed;

  float at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  float& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  double ink_mass() const;

  // Tight bounding box of pixels > 0: {x0, y0, x1, y1} inclusive, or
  // nullopt for an all-zero bitmap.
  struct Box {
    int x0, y0, x1, y1;
  };
  std::optional<Box> ink_bbox() const;
};

// Training-view augmentation grid: every font x size x rotation, each with
// salt-and-pepper noise.
struct AugmentationSpec {
  std::vector<int> fonts;                          // FontSet ids
  std::vector<float> sizes_pt = {60.0f, 80.0f};
  std::vector<float> rotations_deg = default_rotation_angles();
  double noise_density = 0.02;
  int canvas_w = 100, canvas_h = 100;

  // {-20,-18,...,-2, 2,...,20}: 20 angles, 0 excluded (the unrotated view
  // serves as the canonical probe, not a training view).
  static std::vector<float> default_rotation_angles();
  size_t views_per_char() const { return fonts.size() * sizes_pt.size() * rotations_deg.size(); }
};

// Renders cp and centers the ink bounding box on the canvas (within one
// pixel in each axis). Glyphs that would not fit are scaled down to leave
// a 2-pixel margin. Throws NotRenderable / BlankGlyph / GlyphOverflow.
GlyphBitmap rasterize_centered(char32_t cp, const FontFace& font, float size_pt, int canvas_w,
                               int canvas_h);

// Rotation about the canvas center, bilinear resampling, zero fill.
// Requires |deg| <= 45.
GlyphBitmap rotate(const GlyphBitmap& b, float deg);

// Each pixel independently becomes 0 or 1 (fair coin) with probability
// `density`. Deterministic for a fixed seed.
GlyphBitmap add_salt_pepper(const GlyphBitmap& b, double density, uint64_t seed);

// All |fonts| x |sizes| x |rotations| views of cp, noised per the spec.
// Render errors carry the offending font id in their message.
std::vector<GlyphBitmap> augment_char(char32_t cp, const FontSet& fonts,
                                      const AugmentationSpec& spec, uint64_t seed = 0);

}  // namespace hglab
