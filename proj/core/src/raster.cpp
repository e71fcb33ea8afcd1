#include "hglab/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hglab/errors.hpp"
#include "hglab/rng.hpp"
#include "hglab/utf8.hpp"

namespace hglab {

double GlyphBitmap::ink_mass() const {
  double s = 0;
  for (float p : pixels) s += p;
  return s;
}

std::optional<GlyphBitmap::Box> GlyphBitmap::ink_bbox() const {
  int x0 = width, y0 = height, x1 = -1, y1 = -1;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (at(x, y) > 0.0f) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return std::nullopt;
  return Box{x0, y0, x1, y1};
}

std::vector<float> AugmentationSpec::default_rotation_angles() {
  std::vector<float> out;
  for (int d = -20; d <= 20; d += 2)
    if (d != 0) out.push_back(static_cast<float>(d));
  return out;
}

namespace {

struct Edge {
  float x0, y0, x1, y1;  // y0 < y1 after normalization
  int winding;           // +1 if the original edge pointed downward in raster space
};

void push_edge(std::vector<Edge>& edges, float x0, float y0, float x1, float y1) {
  if (y0 == y1) return;  // horizontal edges contribute nothing
  if (y0 < y1) edges.push_back({x0, y0, x1, y1, +1});
  else edges.push_back({x1, y1, x0, y0, -1});
}

// Flattens a quadratic into line segments, count chosen from the control
// point's deviation from the chord.
void flatten_quad(std::vector<Edge>& edges, float x0, float y0, float cx, float cy, float x1,
                  float y1) {
  float dx = 0.5f * (x0 + x1) - cx;
  float dy = 0.5f * (y0 + y1) - cy;
  float dev = std::sqrt(dx * dx + dy * dy);
  int n = std::clamp(static_cast<int>(std::ceil(std::sqrt(dev * 4.0f))), 1, 24);
  float px = x0, py = y0;
  for (int i = 1; i <= n; ++i) {
    float t = static_cast<float>(i) / n;
    float u = 1 - t;
    float qx = u * u * x0 + 2 * u * t * cx + t * t * x1;
    float qy = u * u * y0 + 2 * u * t * cy + t * t * y1;
    push_edge(edges, px, py, qx, qy);
    px = qx;
    py = qy;
  }
}

// Nonzero-winding scanline fill with 4 sub-scanlines per row and exact
// horizontal coverage. Edges are in raster space (y down), clipped to
// [0,w]x[0,h] horizontally by span clamping.
std::vector<float> fill_coverage(const std::vector<Edge>& edges, int w, int h) {
  constexpr int kSub = 4;
  std::vector<float> img(static_cast<size_t>(w) * h, 0.0f);
  std::vector<std::pair<float, int>> crossings;
  for (int y = 0; y < h; ++y) {
    float* row = img.data() + static_cast<size_t>(y) * w;
    for (int s = 0; s < kSub; ++s) {
      float yc = y + (s + 0.5f) / kSub;
      crossings.clear();
      for (const auto& e : edges) {
        if (yc < e.y0 || yc >= e.y1) continue;
        float t = (yc - e.y0) / (e.y1 - e.y0);
        crossings.emplace_back(e.x0 + t * (e.x1 - e.x0), e.winding);
      }
      if (crossings.empty()) continue;
      std::sort(crossings.begin(), crossings.end());
      int acc = 0;
      float span_start = 0;
      for (const auto& [x, wind] : crossings) {
        if (acc != 0) {
          // emit span [span_start, x)
          float xa = std::max(span_start, 0.0f);
          float xb = std::min(x, static_cast<float>(w));
          if (xa < xb) {
            int pa = static_cast<int>(xa);
            int pb = static_cast<int>(xb);
            if (pa == pb) {
              row[pa] += (xb - xa) / kSub;
            } else {
              row[pa] += (pa + 1 - xa) / kSub;
              for (int p = pa + 1; p < pb; ++p) row[p] += 1.0f / kSub;
              if (pb < w) row[pb] += (xb - pb) / kSub;
            }
          }
        }
        acc += wind;
        span_start = x;
      }
    }
    for (int x = 0; x < w; ++x) row[x] = std::min(row[x], 1.0f);
  }
  return img;
}

std::string cp_label(char32_t cp) { return cp_to_string(cp); }

}  // namespace

GlyphBitmap rasterize_centered(char32_t cp, const FontFace& font, float size_pt, int canvas_w,
                               int canvas_h) {
  require(size_pt > 0, Err::GlyphOverflow, "nonpositive size");
  const int margin = 2;
  int avail_w = canvas_w - 2 * margin;
  int avail_h = canvas_h - 2 * margin;
  require(avail_w > 0 && avail_h > 0, Err::GlyphOverflow,
          "canvas too small to hold any glyph with margin");

  auto outline = font.outline(cp);
  if (!outline)
    fail(Err::NotRenderable, "font '" + font.name() + "' has no glyph for " + cp_label(cp));
  if (outline->empty())
    fail(Err::BlankGlyph, cp_label(cp) + " renders no ink in font '" + font.name() + "'");

  float scale = size_pt / static_cast<float>(outline->units_per_em);
  float w_px = (outline->xmax - outline->xmin) * scale;
  float h_px = (outline->ymax - outline->ymin) * scale;
  if (w_px <= 0 || h_px <= 0)
    fail(Err::BlankGlyph, cp_label(cp) + " has a degenerate outline");
  // scale down oversized glyphs so they keep a 2 px margin
  float fit = std::min(avail_w / w_px, avail_h / h_px);
  if (fit < 1.0f) scale *= fit;

  // raster space: y down, ink bbox translated to start near (1,1)
  const float pad = 1.0f;
  auto to_x = [&](float xu) { return (xu - outline->xmin) * scale + pad; };
  auto to_y = [&](float yu) { return (outline->ymax - yu) * scale + pad; };

  std::vector<Edge> edges;
  for (const auto& contour : outline->contours) {
    for (const auto& s : contour) {
      if (s.is_curve)
        flatten_quad(edges, to_x(s.x0), to_y(s.y0), to_x(s.cx), to_y(s.cy), to_x(s.x1),
                     to_y(s.y1));
      else
        push_edge(edges, to_x(s.x0), to_y(s.y0), to_x(s.x1), to_y(s.y1));
    }
  }

  int tw = static_cast<int>(std::ceil((outline->xmax - outline->xmin) * scale + 2 * pad)) + 1;
  int th = static_cast<int>(std::ceil((outline->ymax - outline->ymin) * scale + 2 * pad)) + 1;
  std::vector<float> tight = fill_coverage(edges, tw, th);

  GlyphBitmap tmp;
  tmp.width = tw;
  tmp.height = th;
  tmp.pixels = std::move(tight);
  auto box = tmp.ink_bbox();
  if (!box) fail(Err::BlankGlyph, cp_label(cp) + " rasterized to an empty bitmap");

  int bw = box->x1 - box->x0 + 1;
  int bh = box->y1 - box->y0 + 1;
  if (bw > canvas_w || bh > canvas_h)
    fail(Err::GlyphOverflow, cp_label(cp) + " ink exceeds canvas after fitting");

  GlyphBitmap out;
  out.codepoint = cp;
  out.width = canvas_w;
  out.height = canvas_h;
  out.pixels.assign(static_cast<size_t>(canvas_w) * canvas_h, 0.0f);
  out.font_id = font.id();
  out.size_pt = size_pt;
  int left = (canvas_w - bw) / 2;
  int top = (canvas_h - bh) / 2;
  for (int y = 0; y < bh; ++y)
    for (int x = 0; x < bw; ++x)
      out.at(left + x, top + y) = tmp.at(box->x0 + x, box->y0 + y);
  return out;
}

GlyphBitmap rotate(const GlyphBitmap& b, float deg) {
  if (std::abs(deg) > 45.0f) throw std::invalid_argument("rotation limited to |deg| <= 45");
  GlyphBitmap out = b;
  out.rotation_deg = b.rotation_deg + deg;
  if (deg == 0.0f) return out;

  const float rad = deg * 3.14159265358979323846f / 180.0f;
  const float c = std::cos(rad), s = std::sin(rad);
  const float cx = (b.width - 1) * 0.5f;
  const float cy = (b.height - 1) * 0.5f;
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      float dx = x - cx, dy = y - cy;
      // inverse map: sample the source at the un-rotated position
      float sx = cx + c * dx + s * dy;
      float sy = cy - s * dx + c * dy;
      float v = 0.0f;
      int x0 = static_cast<int>(std::floor(sx));
      int y0 = static_cast<int>(std::floor(sy));
      float fx = sx - x0, fy = sy - y0;
      auto px = [&](int xx, int yy) -> float {
        if (xx < 0 || yy < 0 || xx >= b.width || yy >= b.height) return 0.0f;
        return b.at(xx, yy);
      };
      v = (1 - fx) * (1 - fy) * px(x0, y0) + fx * (1 - fy) * px(x0 + 1, y0) +
          (1 - fx) * fy * px(x0, y0 + 1) + fx * fy * px(x0 + 1, y0 + 1);
      out.at(x, y) = v;
    }
  }
  return out;
}

GlyphBitmap add_salt_pepper(const GlyphBitmap& b, double density, uint64_t seed) {
  if (density < 0 || density > 1) throw std::invalid_argument("noise density must be in [0,1]");
  GlyphBitmap out = b;
  out.noise_seed = seed;
  if (density == 0.0) return out;
  Rng rng(seed);
  for (auto& p : out.pixels) {
    if (rng.next_double() < density) p = rng.next_double() < 0.5 ? 0.0f : 1.0f;
  }
  return out;
}

std::vector<GlyphBitmap> augment_char(char32_t cp, const FontSet& fonts,
                                      const AugmentationSpec& spec, uint64_t seed) {
  std::vector<GlyphBitmap> out;
  out.reserve(spec.views_per_char());
  for (size_t fi = 0; fi < spec.fonts.size(); ++fi) {
    const FontFace& face = fonts.by_id(spec.fonts[fi]);
    for (size_t si = 0; si < spec.sizes_pt.size(); ++si) {
      GlyphBitmap base;
      try {
        base = rasterize_centered(cp, face, spec.sizes_pt[si], spec.canvas_w, spec.canvas_h);
      } catch (const Error& e) {
        throw Error(e.code(),
                    "font id " + std::to_string(face.id()) + " (" + face.name() + "): " + e.what());
      }
      for (size_t ri = 0; ri < spec.rotations_deg.size(); ++ri) {
        GlyphBitmap view = rotate(base, spec.rotations_deg[ri]);
        if (spec.noise_density > 0) {
          uint64_t s = hash_seq({seed, cp, static_cast<uint64_t>(face.id()), si, ri});
          view = add_salt_pepper(view, spec.noise_density, s);
        }
        out.push_back(std::move(view));
      }
    }
  }
  return out;
}

}  // namespace hglab
