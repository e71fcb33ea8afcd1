#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hglab/embedding.hpp"
#include "hglab/nn.hpp"
#include "hglab/raster.hpp"

namespace hglab {

// Glyph training corpus. Base renders (one per codepoint x font x size) are
// rasterized up front; rotation and noise views are materialized on demand,
// which keeps the full augmented set out of memory.
class GlyphDataset {
 public:
  static GlyphDataset build(const std::vector<char32_t>& charset, const FontSet& fonts,
                            const AugmentationSpec& spec, double val_fraction,
                            std::uint64_t seed = 0, std::vector<char32_t>* dropped = nullptr);

  const std::vector<char32_t>& charset() const { return charset_; }
  int num_classes() const { return static_cast<int>(charset_.size()); }
  std::size_t views_per_char() const { return spec_.views_per_char(); }
  std::size_t size() const { return charset_.size() * views_per_char(); }

  int label(std::size_t sample) const;
  GlyphBitmap materialize(std::size_t sample) const;

  const std::vector<std::size_t>& train_indices() const { return train_; }
  const std::vector<std::size_t>& val_indices() const { return val_; }
  const AugmentationSpec& spec() const { return spec_; }

 private:
  GlyphDataset() = default;
  std::vector<char32_t> charset_;
  AugmentationSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<GlyphBitmap> base_;  // [class][font][size]
  std::vector<std::size_t> train_, val_;
};

struct GlyphTrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  int batch = 64;
  int max_epochs = 20;
  double target_acc = 0.90;
  std::uint64_t seed = 1;
  std::function<void(const std::string&)> log;  // optional progress sink
};

struct GlyphClassifierCheckpoint {
  Net net;
  std::vector<char32_t> charset;  // class order
  double val_accuracy = 0.0;
  bool converged = false;
  nlohmann::json train_meta;
  std::string id = "unsaved";

  void save(const std::string& stem);
  static GlyphClassifierCheckpoint load(const std::string& stem);
};

// Charset file: one "U+XXXX" per line, '#' comments, blanks ignored.
// Throws MalformedLine with path:lineno; duplicates are collapsed.
std::vector<char32_t> read_charset_file(const std::string& path);

// Five conv/pool blocks plus two linear layers, composed for single-channel
// 100x100 input; the final conv block's activations are the 1152-dim
// embedding the extraction helpers read back out.
Net glyph_cnn(int num_class);

GlyphClassifierCheckpoint train_glyph_classifier(const GlyphDataset& ds,
                                                 const GlyphTrainConfig& config);

// Throws DidNotConverge if the checkpoint is flagged unconverged.
void require_converged(const GlyphClassifierCheckpoint& ckpt);

enum class EmbedLayer { Conv, Linear };

EmbedLayer embed_layer_from(const std::string& s);
const char* embed_layer_name(EmbedLayer l);

// conv: flattened activations after the final pooling stage (1152 for the
// full-width net); linear: the logits.
std::vector<float> extract_embedding(GlyphClassifierCheckpoint& ckpt, const GlyphBitmap& bitmap,
                                     EmbedLayer layer);

// Canonical probe render: DejaVu-style single view, size 80, rotation 0,
// no noise, on the classifier canvas.
GlyphBitmap canonical_probe(char32_t cp, const FontFace& font);

enum class AveChoice { Single, Ave };

AveChoice ave_choice_from(const std::string& s);
const char* ave_choice_name(AveChoice a);

EmbeddingSpace build_i2ces(const std::vector<char32_t>& charset, GlyphClassifierCheckpoint& ckpt,
                           const FontFace& probe_font, EmbedLayer layer, AveChoice ave,
                           const std::vector<float>& rotations = AugmentationSpec::default_rotation_angles());

// Fraction of codepoints whose canonical probe render the classifier
// labels correctly.
double probe_accuracy(GlyphClassifierCheckpoint& ckpt, const FontFace& probe_font);

constexpr int kGlyphCanvas = 100;
constexpr float kProbeSize = 80.0f;

}  // namespace hglab
