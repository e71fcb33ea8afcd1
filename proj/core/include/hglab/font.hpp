#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hglab {

struct FontStyle {
  bool bold = false;
  bool oblique = false;
};

// One closed contour of a glyph outline, flattened to lines and quadratic
// curves in font units (y up).
struct PathSegment {
  float x0, y0;        // start
  float cx, cy;        // control point (quadratic only)
  float x1, y1;        // end
  bool is_curve = false;
};

struct GlyphOutline {
  std::vector<std::vector<PathSegment>> contours;
  float xmin = 0, ymin = 0, xmax = 0, ymax = 0;  // control-point bounds, font units
  int units_per_em = 0;
  bool empty() const { return contours.empty(); }
};

// A parsed TrueType face (glyf outlines). Immutable after load; cheap to
// copy (shared file buffer); safe for concurrent reads.
class FontFace {
 public:
  int id() const { return id_; }
  const std::string& name() const { return name_; }
  const std::string& source_path() const { return source_path_; }
  FontStyle style() const { return style_; }
  int units_per_em() const;

  bool has_glyph(char32_t cp) const;

  // Outline for cp. nullopt if the font maps cp to no glyph; an outline
  // with no contours if the glyph exists but draws nothing (e.g. space).
  std::optional<GlyphOutline> outline(char32_t cp) const;

  struct Impl;

 private:
  friend FontFace load_font(const std::string& path);
  std::shared_ptr<const Impl> impl_;
  int id_ = 0;
  std::string name_;
  std::string source_path_;
  FontStyle style_;
};

// Parses a TTF/OTF file. Ids are fresh per process (monotonic counter).
// Throws Error(FileUnreadable) / Error(NotAFont).
FontFace load_font(const std::string& path);

// An ordered collection of faces; the augmentation spec refers to members
// by id.
class FontSet {
 public:
  int add(FontFace face);                       // returns the face's id
  int load(const std::string& path) { return add(load_font(path)); }
  const FontFace& by_id(int id) const;
  const std::vector<FontFace>& faces() const { return faces_; }
  size_t size() const { return faces_.size(); }
  std::vector<int> ids() const;

 private:
  std::vector<FontFace> faces_;
};

}  // namespace hglab
