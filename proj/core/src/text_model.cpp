#include "hglab/text_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hglab/errors.hpp"
#include "hglab/raster.hpp"
#include "hglab/rng.hpp"
#include "hglab/utf8.hpp"

namespace hglab {

Vocabulary Vocabulary::standard70(int max_len) {
  Vocabulary v;
  v.max_len_ = max_len;
  for (char32_t c = 0x20; c <= 0x7E; ++c) {
    if (c >= 'A' && c <= 'Z') continue;  // folded into a-z
    v.index_.emplace(c, static_cast<int>(v.chars_.size()));
    v.chars_.push_back(c);
  }
  v.index_.emplace(U'\n', static_cast<int>(v.chars_.size()));
  v.chars_.push_back(U'\n');
  return v;
}

int Vocabulary::lookup(char32_t cp) const {
  if (cp >= U'A' && cp <= U'Z') cp = cp - U'A' + U'a';
  auto it = index_.find(cp);
  return it == index_.end() ? kUnknown : it->second;
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (char32_t c : chars_) arr.push_back(cp_to_string(c));
  return {{"chars", arr}, {"max_len", max_len_}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  Vocabulary v;
  v.max_len_ = j.at("max_len").get<int>();
  for (const auto& s : j.at("chars")) {
    char32_t c = cp_from_string(s.get<std::string>());
    v.index_.emplace(c, static_cast<int>(v.chars_.size()));
    v.chars_.push_back(c);
  }
  return v;
}

namespace {

std::vector<char32_t> first_chars(const std::string& text, int max_len) {
  std::vector<char32_t> out;
  out.reserve(static_cast<std::size_t>(max_len));
  for (const auto& u : utf8_scan(text)) {
    if (static_cast<int>(out.size()) >= max_len) break;
    out.push_back(u.valid ? u.cp : char32_t(0xFFFFFFFF));  // sentinel: never in vocab
  }
  return out;
}

Net text_trunk(int in_channels, int num_classes) {
  Net n;
  n.add<Conv1DT<float>>(in_channels, 64, 7);
  n.add<MaxPool1DT<float>>(3);
  n.add<Conv1DT<float>>(64, 64, 5);
  n.add<MaxPool1DT<float>>(3);
  n.add<Conv1DT<float>>(64, 64, 3);
  n.add<GlobalMaxPool1DT<float>>();
  n.add<LinearT<float>>(64, 128);
  n.add<ReLUT<float>>();
  n.add<LinearT<float>>(128, num_classes);
  return n;
}

Net vb_encoder_net() {
  Net n;
  n.add<Conv2DT<float>>(1, 8, 3, 3, 1);
  n.add<ReLUT<float>>();
  n.add<MaxPool2DT<float>>(2, 2);
  n.add<Conv2DT<float>>(8, 16, 3, 3, 1);
  n.add<ReLUT<float>>();
  n.add<MaxPool2DT<float>>(2, 2);
  n.add<Conv2DT<float>>(16, 32, 3, 3, 1);
  n.add<FlattenT<float>>();
  return n;
}

}  // namespace

Tensor encode_onehot(const std::string& text, const Vocabulary& vocab) {
  const int L = vocab.max_len(), V = vocab.size();
  Tensor x({L, V});
  auto chars = first_chars(text, L);
  for (std::size_t i = 0; i < chars.size(); ++i) {
    const int idx = vocab.lookup(chars[i]);
    if (idx != Vocabulary::kUnknown)
      x[i * static_cast<std::size_t>(V) + static_cast<std::size_t>(idx)] = 1.0f;
  }
  return x;
}

const FontFace& TextModelCheckpoint::vb_font() {
  if (!vb_font_) {
    require(!render.font_path.empty(), Err::FileUnreadable,
            "vb checkpoint has no font path recorded");
    vb_font_ = load_font(render.font_path);
  }
  return *vb_font_;
}

int TextModelCheckpoint::embed_dim() const {
  return kind == "charcnn" ? vocab.size() : kVbEmbedDim;
}

const std::optional<std::vector<float>>* TextModelCheckpoint::cached_render(char32_t cp) {
  auto it = render_cache_.find(cp);
  if (it == render_cache_.end()) {
    std::optional<std::vector<float>> pixels;
    const FontFace& font = vb_font();
    if (font.has_glyph(cp)) {
      try {
        pixels = rasterize_centered(cp, font, render.size_pt, render.canvas, render.canvas).pixels;
      } catch (const Error&) {
        pixels.reset();
      }
    }
    it = render_cache_.emplace(cp, std::move(pixels)).first;
  }
  return &it->second;
}

namespace {

// Batched one-hot in conv layout [B, V, L].
Tensor charcnn_batch(const std::vector<std::string>& texts, const Vocabulary& vocab) {
  const int B = static_cast<int>(texts.size());
  const int V = vocab.size(), L = vocab.max_len();
  Tensor x({B, V, L});
  for (int b = 0; b < B; ++b) {
    auto chars = first_chars(texts[static_cast<std::size_t>(b)], L);
    for (std::size_t l = 0; l < chars.size(); ++l) {
      const int idx = vocab.lookup(chars[l]);
      if (idx != Vocabulary::kUnknown)
        x[(static_cast<std::size_t>(b) * V + static_cast<std::size_t>(idx)) * L + l] = 1.0f;
    }
  }
  return x;
}

struct VbBatch {
  Tensor x;                        // [B, E, L]
  Tensor enc_in;                   // [D, 1, canvas, canvas]
  std::vector<std::vector<int>> slot;  // per sample, per position: row in enc_in or -1
};

VbBatch vb_gather(const std::vector<std::string>& texts, TextModelCheckpoint& ckpt,
                  int max_len) {
  VbBatch out;
  const int B = static_cast<int>(texts.size());
  std::map<char32_t, int> rows;  // ordered: deterministic accumulation
  std::vector<std::vector<char32_t>> chars(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    chars[static_cast<std::size_t>(b)] = first_chars(texts[static_cast<std::size_t>(b)], max_len);
    for (char32_t c : chars[static_cast<std::size_t>(b)])
      if (ckpt.cached_render(c)->has_value()) rows.emplace(c, 0);
  }
  int next = 0;
  for (auto& [cp, row] : rows) row = next++;

  const int canvas = ckpt.render.canvas;
  out.enc_in = Tensor({std::max(1, next), 1, canvas, canvas});
  for (const auto& [cp, row] : rows) {
    const auto& px = **ckpt.cached_render(cp);
    std::copy(px.begin(), px.end(),
              out.enc_in.ptr() + static_cast<std::size_t>(row) * canvas * canvas);
  }
  out.slot.resize(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    auto& sl = out.slot[static_cast<std::size_t>(b)];
    sl.assign(static_cast<std::size_t>(max_len), -1);
    for (std::size_t l = 0; l < chars[static_cast<std::size_t>(b)].size(); ++l) {
      auto it = rows.find(chars[static_cast<std::size_t>(b)][l]);
      if (it != rows.end()) sl[l] = it->second;
    }
  }
  return out;
}

// Spreads encoder outputs [D, E] into the text tensor [B, E, L].
void vb_scatter(VbBatch& batch, const Tensor& emb, int max_len) {
  const int B = static_cast<int>(batch.slot.size());
  const int E = emb.dim(1);
  batch.x = Tensor({B, E, max_len});
  for (int b = 0; b < B; ++b)
    for (int l = 0; l < max_len; ++l) {
      const int row = batch.slot[static_cast<std::size_t>(b)][static_cast<std::size_t>(l)];
      if (row < 0) continue;
      const float* src = emb.ptr() + static_cast<std::size_t>(row) * E;
      float* dst = batch.x.ptr() + (static_cast<std::size_t>(b) * E) * max_len + l;
      for (int e = 0; e < E; ++e) dst[static_cast<std::size_t>(e) * max_len] = src[e];
    }
}

// Gathers text-input gradients [B, E, L] back onto encoder rows [D, E].
Tensor vb_gather_grad(const VbBatch& batch, const Tensor& gx, int rows_n) {
  const int B = gx.dim(0), E = gx.dim(1), L = gx.dim(2);
  Tensor gemb({rows_n, E});
  for (int b = 0; b < B; ++b)
    for (int l = 0; l < L; ++l) {
      const int row = batch.slot[static_cast<std::size_t>(b)][static_cast<std::size_t>(l)];
      if (row < 0) continue;
      float* dst = gemb.ptr() + static_cast<std::size_t>(row) * E;
      const float* src = gx.ptr() + (static_cast<std::size_t>(b) * E) * L + l;
      for (int e = 0; e < E; ++e) dst[e] += src[static_cast<std::size_t>(e) * L];
    }
  return gemb;
}

void batch_accuracy(const Tensor& logits, const std::vector<int>& labels, std::size_t& correct) {
  const int K = logits.dim(1);
  for (int b = 0; b < logits.dim(0); ++b)
    if (argmax_row(logits.ptr() + static_cast<std::size_t>(b) * K, K) ==
        labels[static_cast<std::size_t>(b)])
      ++correct;
}

}  // namespace

Tensor encode_visual(const std::string& text, TextModelCheckpoint& ckpt) {
  require(ckpt.kind == "vb", Err::InvalidDataset, "encode_visual needs a vb checkpoint");
  const int L = ckpt.max_len;
  VbBatch batch = vb_gather({text}, ckpt, L);
  Tensor emb = ckpt.glyph_encoder.forward(batch.enc_in, false);
  vb_scatter(batch, emb, L);
  // transpose [1, E, L] to the documented per-sample layout [L, E]
  const int E = emb.dim(1);
  Tensor out({L, E});
  for (int l = 0; l < L; ++l)
    for (int e = 0; e < E; ++e)
      out[static_cast<std::size_t>(l) * E + e] =
          batch.x[static_cast<std::size_t>(e) * L + static_cast<std::size_t>(l)];
  return out;
}

TextModelCheckpoint train_text_classifier(const Dataset& train, const std::string& kind,
                                          const TextTrainConfig& config, const FontFace* vb_font) {
  require(kind == "charcnn" || kind == "vb", Err::InvalidDataset,
          "model kind must be 'charcnn' or 'vb', got '" + kind + "'");
  require(!train.samples.empty(), Err::InvalidDataset, "training set is empty");
  require(train.num_classes >= 2, Err::InvalidDataset, "training set needs at least 2 classes");
  for (const auto& s : train.samples)
    require(s.label >= 0 && s.label < train.num_classes, Err::InvalidDataset,
            "label outside [0, num_classes)");

  TextModelCheckpoint ckpt;
  ckpt.kind = kind;
  ckpt.max_len = config.max_len;
  ckpt.num_classes = train.num_classes;
  if (kind == "charcnn") {
    ckpt.vocab = Vocabulary::standard70(config.max_len);
    ckpt.text_net = text_trunk(ckpt.vocab.size(), train.num_classes);
  } else {
    require(vb_font != nullptr, Err::FileUnreadable, "vb training needs a font");
    ckpt.set_vb_font(*vb_font);
    ckpt.render.font_path = vb_font->source_path();
    ckpt.glyph_encoder = vb_encoder_net();
    ckpt.glyph_encoder.init(hash_seq({config.seed, 0xE4Cull}));
    ckpt.text_net = text_trunk(kVbEmbedDim, train.num_classes);
  }
  ckpt.text_net.init(config.seed);
  ckpt.train_meta = {{"kind", kind}, {"clean_epochs", config.epochs}, {"seed", config.seed},
                     {"lr", config.lr}, {"batch", config.batch}};
  continue_training(ckpt, train, config);
  return ckpt;
}

void continue_training(TextModelCheckpoint& ckpt, const Dataset& train,
                       const TextTrainConfig& config, const PerturbFn& perturb) {
  require(!train.samples.empty(), Err::InvalidDataset, "training set is empty");
  require(train.num_classes == ckpt.num_classes, Err::ClassCountMismatch,
          "dataset classes " + std::to_string(train.num_classes) + " != model classes " +
              std::to_string(ckpt.num_classes));
  Sgd text_opt(config.lr, config.momentum);
  Sgd enc_opt(config.lr, config.momentum);

  std::vector<std::size_t> order(train.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(hash_seq({config.seed, static_cast<std::uint64_t>(epoch), 0x7E07ull}));
    rng.shuffle(order);
    double loss_sum = 0;
    std::size_t batches = 0, correct = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch)) {
      const std::size_t end =
          std::min(order.size(), at + static_cast<std::size_t>(config.batch));
      std::vector<std::string> texts;
      std::vector<int> labels;
      texts.reserve(end - at);
      for (std::size_t i = at; i < end; ++i) {
        const auto& s = train.samples[order[i]];
        texts.push_back(perturb ? perturb(order[i], epoch, s.text) : s.text);
        labels.push_back(s.label);
      }

      Tensor logits;
      VbBatch batch;
      if (ckpt.kind == "charcnn") {
        Tensor x = charcnn_batch(texts, ckpt.vocab);
        logits = ckpt.text_net.forward(x, true);
      } else {
        batch = vb_gather(texts, ckpt, ckpt.max_len);
        Tensor emb = ckpt.glyph_encoder.forward(batch.enc_in, true);
        vb_scatter(batch, emb, ckpt.max_len);
        logits = ckpt.text_net.forward(batch.x, true);
      }
      auto [loss, grad] = softmax_cross_entropy(logits, labels);
      batch_accuracy(logits, labels, correct);
      ckpt.text_net.zero_grads();
      Tensor gx = ckpt.text_net.backward(grad);
      if (ckpt.kind == "vb") {
        ckpt.glyph_encoder.zero_grads();
        Tensor gemb = vb_gather_grad(batch, gx, batch.enc_in.dim(0));
        ckpt.glyph_encoder.backward(gemb);
        enc_opt.step(ckpt.glyph_encoder);
      }
      text_opt.step(ckpt.text_net);
      loss_sum += loss;
      ++batches;
    }
    if (config.log)
      config.log("epoch " + std::to_string(epoch + 1) + ": loss " +
                 std::to_string(batches ? loss_sum / static_cast<double>(batches) : 0.0) +
                 ", train_acc " +
                 std::to_string(static_cast<double>(correct) /
                                static_cast<double>(train.samples.size())));
  }
}

EvalResult evaluate(TextModelCheckpoint& ckpt, const Dataset& test) {
  require(!test.samples.empty(), Err::EmptyDataset, "evaluation set is empty");
  require(test.num_classes == ckpt.num_classes, Err::ClassCountMismatch,
          "dataset classes " + std::to_string(test.num_classes) + " != model classes " +
              std::to_string(ckpt.num_classes));
  EvalResult res;
  res.per_class_correct.assign(static_cast<std::size_t>(ckpt.num_classes), 0);
  res.per_class_total.assign(static_cast<std::size_t>(ckpt.num_classes), 0);

  const std::size_t batch = 64;
  std::size_t correct = 0;
  for (std::size_t at = 0; at < test.samples.size(); at += batch) {
    const std::size_t end = std::min(test.samples.size(), at + batch);
    std::vector<std::string> texts;
    std::vector<int> labels;
    for (std::size_t i = at; i < end; ++i) {
      require(test.samples[i].label >= 0 && test.samples[i].label < ckpt.num_classes,
              Err::ClassCountMismatch, "label outside model's class range");
      texts.push_back(test.samples[i].text);
      labels.push_back(test.samples[i].label);
    }
    Tensor logits;
    if (ckpt.kind == "charcnn") {
      logits = ckpt.text_net.forward(charcnn_batch(texts, ckpt.vocab), false);
    } else {
      VbBatch vb = vb_gather(texts, ckpt, ckpt.max_len);
      Tensor emb = ckpt.glyph_encoder.forward(vb.enc_in, false);
      vb_scatter(vb, emb, ckpt.max_len);
      logits = ckpt.text_net.forward(vb.x, false);
    }
    const int K = logits.dim(1);
    for (int b = 0; b < logits.dim(0); ++b) {
      const int pred = argmax_row(logits.ptr() + static_cast<std::size_t>(b) * K, K);
      const int truth = labels[static_cast<std::size_t>(b)];
      ++res.per_class_total[static_cast<std::size_t>(truth)];
      if (pred == truth) {
        ++correct;
        ++res.per_class_correct[static_cast<std::size_t>(truth)];
      }
    }
  }
  res.accuracy = static_cast<double>(correct) / static_cast<double>(test.samples.size());
  return res;
}

void TextModelCheckpoint::save(const std::string& stem) {
  nlohmann::json meta;
  meta["model"] = "text_classifier";
  meta["kind"] = kind;
  meta["max_len"] = max_len;
  meta["num_classes"] = num_classes;
  meta["train"] = train_meta;
  if (kind == "charcnn") {
    meta["vocab"] = vocab.to_json();
  } else {
    meta["render"] = {{"canvas", render.canvas},
                      {"size_pt", render.size_pt},
                      {"font_path", render.font_path}};
  }
  save_checkpoint(text_net, stem, meta);
  if (kind == "vb")
    save_checkpoint(glyph_encoder, stem + "_enc", nlohmann::json{{"model", "vb_encoder"}});
}

TextModelCheckpoint TextModelCheckpoint::load(const std::string& stem) {
  auto [net, meta] = load_checkpoint(stem);
  require(meta.value("model", "") == "text_classifier", Err::MalformedLine,
          stem + ": not a text classifier checkpoint");
  TextModelCheckpoint ckpt;
  ckpt.text_net = std::move(net);
  ckpt.kind = meta.at("kind").get<std::string>();
  ckpt.max_len = meta.at("max_len").get<int>();
  ckpt.num_classes = meta.at("num_classes").get<int>();
  if (meta.contains("train")) ckpt.train_meta = meta["train"];
  if (ckpt.kind == "charcnn") {
    ckpt.vocab = Vocabulary::from_json(meta.at("vocab"));
  } else {
    const auto& r = meta.at("render");
    ckpt.render.canvas = r.at("canvas").get<int>();
    ckpt.render.size_pt = r.at("size_pt").get<float>();
    ckpt.render.font_path = r.at("font_path").get<std::string>();
    auto [enc, enc_meta] = load_checkpoint(stem + "_enc");
    require(enc_meta.value("model", "") == "vb_encoder", Err::MalformedLine,
            stem + "_enc: not a vb encoder checkpoint");
    ckpt.glyph_encoder = std::move(enc);
  }
  return ckpt;
}

}  // namespace hglab
