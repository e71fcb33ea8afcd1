#include "hglab/glyph_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hglab/errors.hpp"
#include "hglab/rng.hpp"
#include "hglab/utf8.hpp"

namespace hglab {

GlyphDataset GlyphDataset::build(const std::vector<char32_t>& charset, const FontSet& fonts,
                                 const AugmentationSpec& spec, double val_fraction,
                                 std::uint64_t seed, std::vector<char32_t>* dropped) {
  require(!charset.empty(), Err::EmptyCharset, "glyph dataset needs a non-empty charset");
  require(val_fraction > 0.0 && val_fraction < 1.0, Err::InvalidSplit,
          "val_fraction must lie strictly between 0 and 1");
  require(!spec.fonts.empty() && !spec.sizes_pt.empty() && !spec.rotations_deg.empty(),
          Err::EmptyCharset, "augmentation spec lists no views");

  GlyphDataset ds;
  ds.spec_ = spec;
  ds.seed_ = seed;

  std::vector<char32_t> uniq;
  for (char32_t cp : charset)
    if (std::find(uniq.begin(), uniq.end(), cp) == uniq.end()) uniq.push_back(cp);

  const std::size_t F = spec.fonts.size(), S = spec.sizes_pt.size();
  for (char32_t cp : uniq) {
    std::vector<GlyphBitmap> bases;
    bases.reserve(F * S);
    bool ok = true;
    for (std::size_t fi = 0; fi < F && ok; ++fi) {
      const FontFace& face = fonts.by_id(spec.fonts[fi]);
      for (std::size_t si = 0; si < S; ++si) {
        try {
          bases.push_back(
              rasterize_centered(cp, face, spec.sizes_pt[si], spec.canvas_w, spec.canvas_h));
        } catch (const Error&) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) {
      if (dropped) dropped->push_back(cp);
      continue;
    }
    ds.charset_.push_back(cp);
    for (auto& b : bases) ds.base_.push_back(std::move(b));
  }
  require(!ds.charset_.empty(), Err::EmptyCharset,
          "no codepoint survived rendering in every font and size");

  const std::size_t V = ds.views_per_char();
  require(V >= 2, Err::InvalidSplit, "need at least two views per character to split");
  for (std::size_t ci = 0; ci < ds.charset_.size(); ++ci) {
    std::vector<std::size_t> idx(V);
    for (std::size_t v = 0; v < V; ++v) idx[v] = ci * V + v;
    Rng rng(hash_seq({seed, ci, 0x5117ull}));
    rng.shuffle(idx);
    std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(val_fraction * V));
    if (n_val >= V) n_val = V - 1;
    ds.val_.insert(ds.val_.end(), idx.begin(), idx.begin() + n_val);
    ds.train_.insert(ds.train_.end(), idx.begin() + n_val, idx.end());
  }
  std::sort(ds.train_.begin(), ds.train_.end());
  std::sort(ds.val_.begin(), ds.val_.end());
  return ds;
}

int GlyphDataset::label(std::size_t sample) const {
  return static_cast<int>(sample / views_per_char());
}

GlyphBitmap GlyphDataset::materialize(std::size_t sample) const {
  const std::size_t V = views_per_char();
  const std::size_t S = spec_.sizes_pt.size(), R = spec_.rotations_deg.size();
  const std::size_t ci = sample / V;
  const std::size_t rest = sample % V;
  const std::size_t fi = rest / (S * R);
  const std::size_t si = (rest / R) % S;
  const std::size_t ri = rest % R;

  const GlyphBitmap& base = base_[ci * spec_.fonts.size() * S + fi * S + si];
  GlyphBitmap view = rotate(base, spec_.rotations_deg[ri]);
  if (spec_.noise_density > 0) {
    std::uint64_t s = hash_seq({seed_, charset_[ci],
                                static_cast<std::uint64_t>(spec_.fonts[fi]), si, ri});
    view = add_salt_pepper(view, spec_.noise_density, s);
  }
  return view;
}

std::vector<char32_t> read_charset_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Err::FileUnreadable, "cannot open charset file " + path);
  std::vector<char32_t> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    try {
      out.push_back(cp_from_string(std::string_view(line).substr(b, e - b + 1)));
    } catch (const Error& err) {
      fail(Err::MalformedLine, path + ":" + std::to_string(lineno) + ": " + err.what());
    }
  }
  std::vector<char32_t> dedup;
  for (char32_t cp : out)
    if (std::find(dedup.begin(), dedup.end(), cp) == dedup.end()) dedup.push_back(cp);
  return dedup;
}

Net glyph_cnn(int num_class) {
  require(num_class >= 2, Err::ClassCountMismatch, "classifier needs at least two classes");
  Net n;
  n.add<Conv2DT<float>>(1, 16, 5, 5, 0);
  n.add<MaxPool2DT<float>>(2, 2);
  n.add<ReLUT<float>>();
  n.add<Conv2DT<float>>(16, 32, 3, 3, 1);
  n.add<MaxPool2DT<float>>(2, 2);
  n.add<ReLUT<float>>();
  n.add<Conv2DT<float>>(32, 64, 3, 3, 1);
  n.add<MaxPool2DT<float>>(2, 2);
  n.add<ReLUT<float>>();
  n.add<Conv2DT<float>>(64, 128, 3, 3, 1);
  n.add<MaxPool2DT<float>>(2, 2);
  n.add<ReLUT<float>>();
  n.add<Conv2DT<float>>(128, 128, 3, 3, 1);
  n.add<MaxPool2DT<float>>(2, 2);
  n.add<FlattenT<float>>();
  n.add<LinearT<float>>(1152, 500);
  n.add<LinearT<float>>(500, num_class);
  return n;
}

namespace {

Tensor batch_tensor(const GlyphDataset& ds, const std::vector<std::size_t>& order,
                    std::size_t begin, std::size_t end, std::vector<int>& labels) {
  const int B = static_cast<int>(end - begin);
  Tensor x({B, 1, kGlyphCanvas, kGlyphCanvas});
  labels.resize(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    const std::size_t sample = order[begin + static_cast<std::size_t>(b)];
    GlyphBitmap bm = ds.materialize(sample);
    std::copy(bm.pixels.begin(), bm.pixels.end(),
              x.ptr() + static_cast<std::size_t>(b) * kGlyphCanvas * kGlyphCanvas);
    labels[static_cast<std::size_t>(b)] = ds.label(sample);
  }
  return x;
}

double eval_accuracy(Net& net, const GlyphDataset& ds, const std::vector<std::size_t>& idx,
                     int batch) {
  std::size_t correct = 0;
  std::vector<int> labels;
  for (std::size_t at = 0; at < idx.size(); at += static_cast<std::size_t>(batch)) {
    const std::size_t end = std::min(idx.size(), at + static_cast<std::size_t>(batch));
    Tensor x = batch_tensor(ds, idx, at, end, labels);
    Tensor logits = net.forward(x, false);
    const int K = logits.dim(1);
    for (int b = 0; b < logits.dim(0); ++b)
      if (argmax_row(logits.ptr() + static_cast<std::size_t>(b) * K, K) == labels[static_cast<std::size_t>(b)])
        ++correct;
  }
  return idx.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(idx.size());
}

}  // namespace

GlyphClassifierCheckpoint train_glyph_classifier(const GlyphDataset& ds,
                                                 const GlyphTrainConfig& config) {
  require(config.batch > 0 && config.max_epochs >= 0, Err::InvalidSplit,
          "batch must be positive and max_epochs non-negative");
  GlyphClassifierCheckpoint ckpt;
  ckpt.charset = ds.charset();
  ckpt.net = glyph_cnn(ds.num_classes());
  ckpt.net.init(config.seed);

  Sgd opt(config.lr, config.momentum);
  std::vector<std::size_t> order = ds.train_indices();
  std::vector<int> labels;
  Net best = ckpt.net;
  double best_acc = -1.0;

  int epoch = 0;
  for (; epoch < config.max_epochs; ++epoch) {
    Rng rng(hash_seq({config.seed, static_cast<std::uint64_t>(epoch), 0xE9ull}));
    rng.shuffle(order);
    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch)) {
      const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(config.batch));
      Tensor x = batch_tensor(ds, order, at, end, labels);
      Tensor logits = ckpt.net.forward(x, true);
      auto [loss, grad] = softmax_cross_entropy(logits, labels);
      ckpt.net.zero_grads();
      ckpt.net.backward(grad);
      opt.step(ckpt.net);
      loss_sum += loss;
      ++batches;
    }
    const double val_acc = eval_accuracy(ckpt.net, ds, ds.val_indices(), config.batch);
    if (config.log)
      config.log("epoch " + std::to_string(epoch + 1) + ": train_loss " +
                 std::to_string(batches ? loss_sum / static_cast<double>(batches) : 0.0) +
                 ", val_acc " + std::to_string(val_acc));
    if (val_acc > best_acc) {
      best_acc = val_acc;
      best = ckpt.net;
    }
    if (val_acc > config.target_acc) {
      ++epoch;
      break;
    }
  }

  if (best_acc < 0) best_acc = eval_accuracy(ckpt.net, ds, ds.val_indices(), config.batch);
  else ckpt.net = best;
  ckpt.val_accuracy = best_acc;
  ckpt.converged = best_acc > config.target_acc;
  ckpt.train_meta = {{"lr", config.lr},
                     {"momentum", config.momentum},
                     {"batch", config.batch},
                     {"max_epochs", config.max_epochs},
                     {"epochs_run", epoch},
                     {"target_acc", config.target_acc},
                     {"seed", config.seed}};
  return ckpt;
}

void require_converged(const GlyphClassifierCheckpoint& ckpt) {
  require(ckpt.converged, Err::DidNotConverge,
          "glyph classifier stopped at val accuracy " + std::to_string(ckpt.val_accuracy));
}

void GlyphClassifierCheckpoint::save(const std::string& stem) {
  nlohmann::json meta;
  meta["model"] = "glyph_classifier";
  nlohmann::json cs = nlohmann::json::array();
  for (char32_t cp : charset) cs.push_back(cp_to_string(cp));
  meta["charset"] = cs;
  meta["val_accuracy"] = val_accuracy;
  meta["converged"] = converged;
  meta["train"] = train_meta;
  save_checkpoint(net, stem, meta);
  id = stem;
}

GlyphClassifierCheckpoint GlyphClassifierCheckpoint::load(const std::string& stem) {
  auto [net, meta] = load_checkpoint(stem);
  require(meta.value("model", "") == "glyph_classifier", Err::MalformedLine,
          stem + ": not a glyph classifier checkpoint");
  GlyphClassifierCheckpoint ckpt;
  ckpt.net = std::move(net);
  for (const auto& s : meta.at("charset")) ckpt.charset.push_back(cp_from_string(s.get<std::string>()));
  ckpt.val_accuracy = meta.value("val_accuracy", 0.0);
  ckpt.converged = meta.value("converged", false);
  if (meta.contains("train")) ckpt.train_meta = meta["train"];
  ckpt.id = stem;
  return ckpt;
}

EmbedLayer embed_layer_from(const std::string& s) {
  if (s == "conv") return EmbedLayer::Conv;
  if (s == "linear") return EmbedLayer::Linear;
  fail(Err::ConfigError, "layer choice must be 'conv' or 'linear', got '" + s + "'");
}

const char* embed_layer_name(EmbedLayer l) { return l == EmbedLayer::Conv ? "conv" : "linear"; }

AveChoice ave_choice_from(const std::string& s) {
  if (s == "single") return AveChoice::Single;
  if (s == "ave") return AveChoice::Ave;
  fail(Err::ConfigError, "ave choice must be 'single' or 'ave', got '" + s + "'");
}

const char* ave_choice_name(AveChoice a) { return a == AveChoice::Single ? "single" : "ave"; }

std::vector<float> extract_embedding(GlyphClassifierCheckpoint& ckpt, const GlyphBitmap& bitmap,
                                     EmbedLayer layer) {
  require(bitmap.width == kGlyphCanvas && bitmap.height == kGlyphCanvas, Err::WrongCanvas,
          "embedding extraction expects a " + std::to_string(kGlyphCanvas) + "x" +
              std::to_string(kGlyphCanvas) + " bitmap, got " + std::to_string(bitmap.width) +
              "x" + std::to_string(bitmap.height));
  Tensor x({1, 1, kGlyphCanvas, kGlyphCanvas});
  std::copy(bitmap.pixels.begin(), bitmap.pixels.end(), x.ptr());

  if (layer == EmbedLayer::Linear) {
    Tensor logits = ckpt.net.forward(x, false);
    return {logits.data.begin(), logits.data.end()};
  }
  Tensor cur = x;
  for (std::size_t i = 0; i < ckpt.net.layer_count(); ++i) {
    if (std::string(ckpt.net.layer(i).kind()) == "flatten") break;
    cur = ckpt.net.layer(i).forward(cur, false);
  }
  return {cur.data.begin(), cur.data.end()};
}

GlyphBitmap canonical_probe(char32_t cp, const FontFace& font) {
  return rasterize_centered(cp, font, kProbeSize, kGlyphCanvas, kGlyphCanvas);
}

EmbeddingSpace build_i2ces(const std::vector<char32_t>& charset, GlyphClassifierCheckpoint& ckpt,
                           const FontFace& probe_font, EmbedLayer layer, AveChoice ave,
                           const std::vector<float>& rotations) {
  require(!charset.empty(), Err::EmptySpace, "I2CES build over empty charset");
  std::vector<char32_t> cps(charset);
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  for (char32_t cp : cps)
    require(std::find(ckpt.charset.begin(), ckpt.charset.end(), cp) != ckpt.charset.end(),
            Err::UnknownCodepoint,
            cp_to_string(cp) + " was not in the classifier's training charset");

  const int dim = layer == EmbedLayer::Conv ? 1152 : static_cast<int>(ckpt.charset.size());
  BuildMeta meta;
  meta.font_name = probe_font.name();
  meta.canvas_w = kGlyphCanvas;
  meta.canvas_h = kGlyphCanvas;
  meta.classifier_id = ckpt.id;
  meta.layer_choice = embed_layer_name(layer);
  meta.ave_choice = ave_choice_name(ave);
  EmbeddingSpace space(SpaceKind::I2ces, dim, meta);

  for (char32_t cp : cps) {
    GlyphBitmap probe = canonical_probe(cp, probe_font);
    if (ave == AveChoice::Single) {
      auto v = extract_embedding(ckpt, probe, layer);
      space.add(cp, v);
      continue;
    }
    std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
    for (float deg : rotations) {
      auto v = extract_embedding(ckpt, rotate(probe, deg), layer);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
    }
    std::vector<float> mean(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i)
      mean[i] = static_cast<float>(acc[i] / static_cast<double>(rotations.size()));
    space.add(cp, mean);
  }
  return space;
}

double probe_accuracy(GlyphClassifierCheckpoint& ckpt, const FontFace& probe_font) {
  require(!ckpt.charset.empty(), Err::EmptyCharset, "checkpoint has no charset");
  std::size_t correct = 0;
  for (std::size_t ci = 0; ci < ckpt.charset.size(); ++ci) {
    auto logits = extract_embedding(ckpt, canonical_probe(ckpt.charset[ci], probe_font),
                                    EmbedLayer::Linear);
    int best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
      if (logits[k] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    if (best == static_cast<int>(ci)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ckpt.charset.size());
}

}  // namespace hglab
