#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hglab/font.hpp"

namespace hglab {

enum class SpaceKind { Ices, I2ces };

const char* space_kind_name(SpaceKind k);
SpaceKind space_kind_from(const std::string& name);

struct BuildMeta {
  std::string font_name;
  int canvas_w = 0;
  int canvas_h = 0;
  std::string classifier_id;  // checkpoint id for I2CES, empty for ICES
  std::string layer_choice;   // "conv" or "linear" (I2CES only)
  std::string ave_choice;     // "single" or "ave" (I2CES only)
};

// A character embedding space: one fixed-length vector per codepoint,
// stored unnormalized. Codepoints are kept in ascending order.
class EmbeddingSpace {
 public:
  EmbeddingSpace(SpaceKind kind, int dim, BuildMeta meta);

  SpaceKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const BuildMeta& meta() const { return meta_; }
  std::size_t size() const { return cps_.size(); }
  const std::vector<char32_t>& codepoints() const { return cps_; }

  bool contains(char32_t cp) const;
  std::span<const float> vec(char32_t cp) const;  // UnknownCodepoint if absent

  // Insertion must be in ascending codepoint order; the vector must be
  // non-zero and of length dim.
  void add(char32_t cp, std::span<const float> v);

  // Writes stem.json (header) and stem.bin (little-endian f32 matrix in
  // codepoint order).
  void save(const std::string& stem) const;
  static EmbeddingSpace load(const std::string& stem);

 private:
  SpaceKind kind_;
  int dim_;
  BuildMeta meta_;
  std::vector<char32_t> cps_;
  std::vector<float> data_;
};

struct NeighborSet {
  char32_t codepoint = 0;
  std::vector<char32_t> neighbors;
  std::vector<double> similarities;  // parallel, non-increasing

  void save_json(const std::string& path) const;
  static NeighborSet load_json(const std::string& path);
};

double cosine(std::span<const float> u, std::span<const float> v);

NeighborSet top_k(const EmbeddingSpace& space, char32_t cp, int k);

// Pixel space: 24x24 centered render of each codepoint, rows flattened.
// Blank or unrenderable codepoints are omitted; if `dropped` is given they
// are recorded there.
EmbeddingSpace build_ices(const std::vector<char32_t>& charset, const FontFace& font,
                          std::vector<char32_t>* dropped = nullptr);

constexpr int kIcesCanvas = 24;

}  // namespace hglab
