#include "hglab/font.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "hglab/errors.hpp"

namespace hglab {

namespace {

// Big-endian reader with bounds checks. A malformed file turns into
// Error(NotAFont) rather than an out-of-range read.
struct Reader {
  const uint8_t* data;
  size_t size;

  void check(size_t off, size_t n) const {
    require(off + n <= size && off + n >= off, Err::NotAFont, "truncated table data");
  }
  uint8_t u8(size_t off) const {
    check(off, 1);
    return data[off];
  }
  uint16_t u16(size_t off) const {
    check(off, 2);
    return static_cast<uint16_t>((data[off] << 8) | data[off + 1]);
  }
  int16_t i16(size_t off) const { return static_cast<int16_t>(u16(off)); }
  uint32_t u32(size_t off) const {
    check(off, 4);
    return (static_cast<uint32_t>(data[off]) << 24) | (static_cast<uint32_t>(data[off + 1]) << 16) |
           (static_cast<uint32_t>(data[off + 2]) << 8) | data[off + 3];
  }
};

constexpr uint32_t tag(const char (&s)[5]) {
  return (static_cast<uint32_t>(s[0]) << 24) | (static_cast<uint32_t>(s[1]) << 16) |
         (static_cast<uint32_t>(s[2]) << 8) | static_cast<uint32_t>(s[3]);
}

struct Point {
  float x, y;
  bool on_curve;
};

std::atomic<int> g_next_font_id{0};

}  // namespace

struct FontFace::Impl {
  std::vector<uint8_t> bytes;
  Reader r{nullptr, 0};

  size_t head = 0, maxp = 0, cmap = 0, loca = 0, glyf = 0, name = 0;
  size_t loca_len = 0, glyf_len = 0;
  int units_per_em = 0;
  bool long_loca = false;
  uint16_t num_glyphs = 0;
  uint16_t mac_style = 0;

  // chosen cmap subtable
  size_t cmap_sub = 0;
  uint16_t cmap_format = 0;

  void parse();
  void pick_cmap();
  uint16_t glyph_index(char32_t cp) const;
  size_t glyph_offset(uint16_t gid, size_t* len) const;
  void append_glyph(uint16_t gid, float a, float b, float c, float d, float dx, float dy,
                    int depth, std::vector<std::vector<Point>>& out) const;
  std::string family_name() const;
};

void FontFace::Impl::parse() {
  r = Reader{bytes.data(), bytes.size()};
  uint32_t version = r.u32(0);
  if (version == tag("OTTO"))
    fail(Err::NotAFont, "CFF-outline OpenType fonts are not supported, need glyf outlines");
  require(version == 0x00010000 || version == tag("true"), Err::NotAFont,
          "not a TrueType font (bad sfnt version)");
  uint16_t num_tables = r.u16(4);
  require(num_tables > 0 && num_tables < 512, Err::NotAFont, "implausible table count");
  for (uint16_t i = 0; i < num_tables; ++i) {
    size_t rec = 12 + 16 * static_cast<size_t>(i);
    uint32_t t = r.u32(rec);
    size_t off = r.u32(rec + 8);
    size_t len = r.u32(rec + 12);
    require(off <= bytes.size() && len <= bytes.size() - off, Err::NotAFont,
            "table extends past end of file");
    if (t == tag("head")) head = off;
    else if (t == tag("maxp")) maxp = off;
    else if (t == tag("cmap")) cmap = off;
    else if (t == tag("loca")) { loca = off; loca_len = len; }
    else if (t == tag("glyf")) { glyf = off; glyf_len = len; }
    else if (t == tag("name")) name = off;
  }
  require(head && maxp && cmap && loca && glyf, Err::NotAFont, "missing required table");
  require(r.u32(head + 12) == 0x5F0F3CF5, Err::NotAFont, "bad head magic");
  units_per_em = r.u16(head + 18);
  require(units_per_em >= 16, Err::NotAFont, "bad unitsPerEm");
  mac_style = r.u16(head + 44);
  long_loca = r.i16(head + 50) != 0;
  num_glyphs = r.u16(maxp + 4);
  pick_cmap();
}

void FontFace::Impl::pick_cmap() {
  uint16_t n = r.u16(cmap + 2);
  size_t best = 0;
  int best_score = -1;
  for (uint16_t i = 0; i < n; ++i) {
    size_t rec = cmap + 4 + 8 * static_cast<size_t>(i);
    uint16_t platform = r.u16(rec);
    uint16_t encoding = r.u16(rec + 2);
    size_t off = cmap + r.u32(rec + 4);
    uint16_t format = r.u16(off);
    int score = -1;
    if (platform == 3 && encoding == 10 && format == 12) score = 4;
    else if (platform == 0 && format == 12) score = 4;
    else if (platform == 3 && encoding == 1 && format == 4) score = 3;
    else if (platform == 0 && format == 4) score = 2;
    else if (format == 6 || format == 0) score = 1;
    if (score > best_score) {
      best_score = score;
      best = off;
    }
  }
  require(best_score >= 0, Err::NotAFont, "no usable cmap subtable");
  cmap_sub = best;
  cmap_format = r.u16(best);
}

uint16_t FontFace::Impl::glyph_index(char32_t cp) const {
  size_t t = cmap_sub;
  switch (cmap_format) {
    case 0: {
      if (cp > 255) return 0;
      return r.u8(t + 6 + cp);
    }
    case 4: {
      if (cp > 0xFFFF) return 0;
      uint16_t seg_count = r.u16(t + 6) / 2;
      size_t end_codes = t + 14;
      size_t start_codes = end_codes + 2 * seg_count + 2;
      size_t deltas = start_codes + 2 * seg_count;
      size_t range_offsets = deltas + 2 * seg_count;
      // binary search over endCode
      uint16_t lo = 0, hi = seg_count;
      while (lo < hi) {
        uint16_t mid = (lo + hi) / 2;
        if (r.u16(end_codes + 2 * mid) < cp) lo = mid + 1;
        else hi = mid;
      }
      if (lo >= seg_count) return 0;
      uint16_t start = r.u16(start_codes + 2 * lo);
      if (cp < start) return 0;
      uint16_t delta = r.u16(deltas + 2 * lo);
      uint16_t range_off = r.u16(range_offsets + 2 * lo);
      if (range_off == 0) return static_cast<uint16_t>((cp + delta) & 0xFFFF);
      size_t addr = range_offsets + 2 * lo + range_off + 2 * (cp - start);
      uint16_t gid = r.u16(addr);
      if (gid == 0) return 0;
      return static_cast<uint16_t>((gid + delta) & 0xFFFF);
    }
    case 6: {
      uint16_t first = r.u16(t + 6);
      uint16_t count = r.u16(t + 8);
      if (cp < first || cp >= static_cast<char32_t>(first + count)) return 0;
      return r.u16(t + 10 + 2 * (cp - first));
    }
    case 12: {
      uint32_t groups = r.u32(t + 12);
      uint32_t lo = 0, hi = groups;
      while (lo < hi) {
        uint32_t mid = (lo + hi) / 2;
        size_t g = t + 16 + 12 * static_cast<size_t>(mid);
        if (r.u32(g + 4) < cp) lo = mid + 1;
        else hi = mid;
      }
      if (lo >= groups) return 0;
      size_t g = t + 16 + 12 * static_cast<size_t>(lo);
      uint32_t start = r.u32(g), end = r.u32(g + 4);
      if (cp < start || cp > end) return 0;
      return static_cast<uint16_t>(r.u32(g + 8) + (cp - start));
    }
    default:
      return 0;
  }
}

size_t FontFace::Impl::glyph_offset(uint16_t gid, size_t* len) const {
  require(gid < num_glyphs, Err::NotAFont, "glyph index out of range");
  size_t o0, o1;
  if (long_loca) {
    o0 = r.u32(loca + 4 * static_cast<size_t>(gid));
    o1 = r.u32(loca + 4 * static_cast<size_t>(gid) + 4);
  } else {
    o0 = 2 * static_cast<size_t>(r.u16(loca + 2 * static_cast<size_t>(gid)));
    o1 = 2 * static_cast<size_t>(r.u16(loca + 2 * static_cast<size_t>(gid) + 2));
  }
  require(o0 <= o1 && o1 <= glyf_len, Err::NotAFont, "bad loca entry");
  *len = o1 - o0;
  return glyf + o0;
}

// Decodes glyph gid, applying the affine transform (a b c d dx dy), and
// appends its contours as absolute points. Composite glyphs recurse.
void FontFace::Impl::append_glyph(uint16_t gid, float a, float b, float c, float d, float dx,
                                  float dy, int depth, std::vector<std::vector<Point>>& out) const {
  require(depth < 8, Err::NotAFont, "composite glyph nesting too deep");
  size_t len = 0;
  size_t g = glyph_offset(gid, &len);
  if (len == 0) return;  // no outline
  int16_t n_contours = r.i16(g);

  auto xform = [&](float x, float y) -> Point {
    return {a * x + c * y + dx, b * x + d * y + dy, true};
  };

  if (n_contours >= 0) {
    size_t pos = g + 10;
    std::vector<uint16_t> ends(n_contours);
    for (int i = 0; i < n_contours; ++i) {
      ends[i] = r.u16(pos);
      pos += 2;
    }
    uint16_t n_points = n_contours ? ends.back() + 1 : 0;
    uint16_t instr_len = r.u16(pos);
    pos += 2 + instr_len;

    std::vector<uint8_t> flags;
    flags.reserve(n_points);
    while (flags.size() < n_points) {
      uint8_t f = r.u8(pos++);
      flags.push_back(f);
      if (f & 0x08) {  // REPEAT
        uint8_t reps = r.u8(pos++);
        for (uint8_t k = 0; k < reps && flags.size() < n_points; ++k) flags.push_back(f);
      }
    }

    std::vector<int> xs(n_points), ys(n_points);
    int v = 0;
    for (uint16_t i = 0; i < n_points; ++i) {
      uint8_t f = flags[i];
      if (f & 0x02) {  // X_SHORT
        int delta = r.u8(pos++);
        v += (f & 0x10) ? delta : -delta;
      } else if (!(f & 0x10)) {
        v += r.i16(pos);
        pos += 2;
      }
      xs[i] = v;
    }
    v = 0;
    for (uint16_t i = 0; i < n_points; ++i) {
      uint8_t f = flags[i];
      if (f & 0x04) {  // Y_SHORT
        int delta = r.u8(pos++);
        v += (f & 0x20) ? delta : -delta;
      } else if (!(f & 0x20)) {
        v += r.i16(pos);
        pos += 2;
      }
      ys[i] = v;
    }

    uint16_t start = 0;
    for (int ci = 0; ci < n_contours; ++ci) {
      uint16_t end = ends[ci];
      if (end < start) { start = end + 1; continue; }
      std::vector<Point> contour;
      contour.reserve(end - start + 1);
      for (uint16_t i = start; i <= end; ++i) {
        Point p = xform(static_cast<float>(xs[i]), static_cast<float>(ys[i]));
        p.on_curve = (flags[i] & 0x01) != 0;
        contour.push_back(p);
      }
      if (contour.size() >= 2) out.push_back(std::move(contour));
      start = end + 1;
    }
    return;
  }

  // composite
  size_t pos = g + 10;
  for (;;) {
    uint16_t flags = r.u16(pos);
    uint16_t sub_gid = r.u16(pos + 2);
    pos += 4;
    float arg1, arg2;
    if (flags & 0x0001) {  // ARG_1_AND_2_ARE_WORDS
      arg1 = r.i16(pos);
      arg2 = r.i16(pos + 2);
      pos += 4;
    } else {
      arg1 = static_cast<int8_t>(r.u8(pos));
      arg2 = static_cast<int8_t>(r.u8(pos + 1));
      pos += 2;
    }
    float sa = 1, sb = 0, sc = 0, sd = 1;
    if (flags & 0x0008) {  // WE_HAVE_A_SCALE
      sa = sd = r.i16(pos) / 16384.0f;
      pos += 2;
    } else if (flags & 0x0040) {  // X_AND_Y_SCALE
      sa = r.i16(pos) / 16384.0f;
      sd = r.i16(pos + 2) / 16384.0f;
      pos += 4;
    } else if (flags & 0x0080) {  // TWO_BY_TWO
      sa = r.i16(pos) / 16384.0f;
      sb = r.i16(pos + 2) / 16384.0f;
      sc = r.i16(pos + 4) / 16384.0f;
      sd = r.i16(pos + 6) / 16384.0f;
      pos += 8;
    }
    float tx = 0, ty = 0;
    if (flags & 0x0002) {  // ARGS_ARE_XY_VALUES; point matching is not used by our fonts
      tx = arg1;
      ty = arg2;
    }
    // compose child transform with the incoming one
    float na = a * sa + c * sb;
    float nb = b * sa + d * sb;
    float nc = a * sc + c * sd;
    float nd = b * sc + d * sd;
    float ndx = a * tx + c * ty + dx;
    float ndy = b * tx + d * ty + dy;
    append_glyph(sub_gid, na, nb, nc, nd, ndx, ndy, depth + 1, out);
    if (!(flags & 0x0020)) break;  // MORE_COMPONENTS
  }
}

std::string FontFace::Impl::family_name() const {
  if (!name) return {};
  uint16_t count = r.u16(name + 2);
  size_t storage = name + r.u16(name + 4);
  std::string best;
  for (uint16_t i = 0; i < count; ++i) {
    size_t rec = name + 6 + 12 * static_cast<size_t>(i);
    uint16_t platform = r.u16(rec);
    uint16_t name_id = r.u16(rec + 6);
    uint16_t len = r.u16(rec + 8);
    size_t off = storage + r.u16(rec + 10);
    if (name_id != 1) continue;  // family name
    if (platform == 3 || platform == 0) {
      // UTF-16BE; keep Latin-1 range
      std::string s;
      for (uint16_t k = 0; k + 1 < len; k += 2) {
        uint16_t u = r.u16(off + k);
        if (u < 256) s.push_back(static_cast<char>(u));
      }
      if (!s.empty()) return s;
    } else if (platform == 1 && best.empty()) {
      std::string s;
      for (uint16_t k = 0; k < len; ++k) s.push_back(static_cast<char>(r.u8(off + k)));
      best = s;
    }
  }
  return best;
}

int FontFace::units_per_em() const { return impl_->units_per_em; }

bool FontFace::has_glyph(char32_t cp) const { return impl_->glyph_index(cp) != 0; }

std::optional<GlyphOutline> FontFace::outline(char32_t cp) const {
  uint16_t gid = impl_->glyph_index(cp);
  if (gid == 0) return std::nullopt;

  std::vector<std::vector<Point>> contours;
  impl_->append_glyph(gid, 1, 0, 0, 1, 0, 0, 0, contours);

  GlyphOutline out;
  out.units_per_em = impl_->units_per_em;
  bool first = true;
  for (const auto& pts : contours) {
    // Insert implied on-curve midpoints between consecutive off-curve
    // points, then emit segments.
    std::vector<Point> norm;
    size_t n = pts.size();
    size_t start_idx = 0;
    while (start_idx < n && !pts[start_idx].on_curve) ++start_idx;
    if (start_idx == n) {
      // all off-curve: start from the implied midpoint
      Point mid{(pts[0].x + pts[n - 1].x) / 2, (pts[0].y + pts[n - 1].y) / 2, true};
      norm.push_back(mid);
      start_idx = 0;
      for (size_t k = 0; k < n; ++k) {
        const Point& p = pts[k];
        const Point& q = pts[(k + 1) % n];
        norm.push_back(p);
        Point m{(p.x + q.x) / 2, (p.y + q.y) / 2, true};
        norm.push_back(m);
      }
    } else {
      for (size_t k = 0; k <= n; ++k) {
        const Point& p = pts[(start_idx + k) % n];
        if (!norm.empty() && !norm.back().on_curve && !p.on_curve) {
          norm.push_back({(norm.back().x + p.x) / 2, (norm.back().y + p.y) / 2, true});
        }
        norm.push_back(p);
      }
    }

    std::vector<PathSegment> segs;
    for (size_t k = 0; k + 1 < norm.size();) {
      const Point& p = norm[k];
      const Point& q = norm[k + 1];
      if (q.on_curve) {
        segs.push_back({p.x, p.y, 0, 0, q.x, q.y, false});
        k += 1;
      } else {
        const Point& e = norm[k + 2];
        segs.push_back({p.x, p.y, q.x, q.y, e.x, e.y, true});
        k += 2;
      }
    }
    if (segs.empty()) continue;
    // close the contour if decoding left a gap
    const auto& last = segs.back();
    const auto& head = segs.front();
    if (last.x1 != head.x0 || last.y1 != head.y0)
      segs.push_back({last.x1, last.y1, 0, 0, head.x0, head.y0, false});

    auto grow = [&](float px, float py) {
      if (first) {
        out.xmin = out.xmax = px;
        out.ymin = out.ymax = py;
        first = false;
        return;
      }
      out.xmin = std::min(out.xmin, px);
      out.xmax = std::max(out.xmax, px);
      out.ymin = std::min(out.ymin, py);
      out.ymax = std::max(out.ymax, py);
    };
    for (const auto& s : segs) {
      grow(s.x0, s.y0);
      grow(s.x1, s.y1);
      if (s.is_curve) grow(s.cx, s.cy);
    }
    out.contours.push_back(std::move(segs));
  }
  return out;
}

FontFace load_font(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Err::FileUnreadable, "cannot open font file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  require(!bytes.empty(), Err::FileUnreadable, "empty font file: " + path);
  require(bytes.size() >= 12, Err::NotAFont, "file too small to be a font: " + path);

  auto impl = std::make_shared<FontFace::Impl>();
  impl->bytes = std::move(bytes);
  try {
    impl->parse();
  } catch (const Error& e) {
    if (e.code() == Err::NotAFont) throw Error(Err::NotAFont, path + ": " + e.what());
    throw;
  }

  FontFace face;
  face.id_ = g_next_font_id.fetch_add(1);
  face.source_path_ = path;
  face.style_.bold = (impl->mac_style & 0x01) != 0;
  face.style_.oblique = (impl->mac_style & 0x02) != 0;
  face.name_ = impl->family_name();
  if (face.name_.empty()) face.name_ = std::filesystem::path(path).stem().string();
  face.impl_ = std::move(impl);
  return face;
}

int FontSet::add(FontFace face) {
  for (const auto& f : faces_)
    require(f.id() != face.id(), Err::NotAFont, "duplicate font id in set");
  int id = face.id();
  faces_.push_back(std::move(face));
  return id;
}

const FontFace& FontSet::by_id(int id) const {
  for (const auto& f : faces_)
    if (f.id() == id) return f;
  fail(Err::NotAFont, "font id " + std::to_string(id) + " not in set");
}

std::vector<int> FontSet::ids() const {
  std::vector<int> out;
  out.reserve(faces_.size());
  for (const auto& f : faces_) out.push_back(f.id());
  return out;
}

}  // namespace hglab
