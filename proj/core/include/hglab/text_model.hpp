#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hglab/dataset.hpp"
#include "hglab/font.hpp"
#include "hglab/nn.hpp"

namespace hglab {

// Fixed 70-symbol alphabet: printable ASCII case-folded (95 - 26 = 69
// symbols) plus newline. Anything else is UNKNOWN and encodes to an
// all-zero row, which is exactly the blindness the substitution attack
// exploits.
class Vocabulary {
 public:
  static Vocabulary standard70(int max_len = 256);

  int size() const { return static_cast<int>(chars_.size()); }
  int max_len() const { return max_len_; }
  static constexpr int kUnknown = -1;

  // Case-folds ASCII capitals; returns kUnknown for unmapped codepoints.
  int lookup(char32_t cp) const;
  const std::vector<char32_t>& chars() const { return chars_; }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, int> index_;
  int max_len_ = 256;
};

// One sample: rows are character positions, columns one-hot vocab slots.
Tensor encode_onehot(const std::string& text, const Vocabulary& vocab);

struct VbRenderConfig {
  int canvas = 32;
  float size_pt = 32.0f;
  std::string font_path;
};

struct TextTrainConfig {
  double lr = 0.02;
  double momentum = 0.9;
  int batch = 32;
  int epochs = 5;
  std::uint64_t seed = 1;
  int max_len = 256;
  std::function<void(const std::string&)> log;
};

// Rewrites a sample's text before it enters a training batch; used for
// per-epoch adversarial perturbation.
using PerturbFn = std::function<std::string(std::size_t sample_index, int epoch,
                                            const std::string& text)>;

class TextModelCheckpoint {
 public:
  std::string kind;  // "charcnn" or "vb"
  Net text_net;
  Net glyph_encoder;  // vb only
  Vocabulary vocab;   // charcnn only
  VbRenderConfig render;
  int max_len = 256;
  int num_classes = 0;
  nlohmann::json train_meta;

  void save(const std::string& stem);
  static TextModelCheckpoint load(const std::string& stem);

  // vb: the checkpoint carries its probe font at runtime.
  const FontFace& vb_font();
  void set_vb_font(FontFace f) { vb_font_ = std::move(f); }

  int embed_dim() const;

  // Render cache shared by training and evaluation; nullopt marks
  // unrenderable codepoints.
  const std::optional<std::vector<float>>* cached_render(char32_t cp);

 private:
  std::optional<FontFace> vb_font_;
  std::unordered_map<char32_t, std::optional<std::vector<float>>> render_cache_;
};

// Per-character glyph images through the jointly trained encoder; rows of
// the result are character embeddings, zero for UNKNOWN-like characters.
Tensor encode_visual(const std::string& text, TextModelCheckpoint& ckpt);

TextModelCheckpoint train_text_classifier(const Dataset& train, const std::string& kind,
                                          const TextTrainConfig& config,
                                          const FontFace* vb_font = nullptr);

// Further epochs on an existing checkpoint, optionally with per-epoch
// sample perturbation. Both nets keep training for vb.
void continue_training(TextModelCheckpoint& ckpt, const Dataset& train,
                       const TextTrainConfig& config, const PerturbFn& perturb = nullptr);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::size_t> per_class_correct;
  std::vector<std::size_t> per_class_total;
};

EvalResult evaluate(TextModelCheckpoint& ckpt, const Dataset& test);

constexpr int kVbEmbedDim = 32 * 8 * 8;

}  // namespace hglab
