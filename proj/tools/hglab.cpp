// hglab: homoglyph attack/defense pipeline front end.
//
// One subcommand per pipeline stage; config-driven stages take INI files
// whose schema is documented in data/configs/. Everything is deterministic
// given its flags and seed (--serial exists for interface stability and is
// currently the only mode).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hglab/attack.hpp"
#include "hglab/config.hpp"
#include "hglab/dataset.hpp"
#include "hglab/embedding.hpp"
#include "hglab/errors.hpp"
#include "hglab/experiments.hpp"
#include "hglab/glyph_classifier.hpp"
#include "hglab/names.hpp"
#include "hglab/pgm.hpp"
#include "hglab/rng.hpp"
#include "hglab/text_model.hpp"
#include "hglab/utf8.hpp"

namespace {

using namespace hglab;

char32_t parse_char_arg(const std::string& s) {
  if (s.rfind("U+", 0) == 0 || s.rfind("u+", 0) == 0) return cp_from_string(s);
  auto units = utf8_scan(s);
  require(units.size() == 1 && units[0].valid, Err::MalformedLine,
          "'" + s + "' is not a single character; use U+XXXX for codepoints");
  return units[0].cp;
}

std::uint64_t seed_fallback(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("PERTURB_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

FontSet load_fonts(const std::string& spec) {
  FontSet fonts;
  namespace fs = std::filesystem;
  if (fs::is_directory(spec)) {
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(spec)) {
      const std::string p = entry.path().string();
      if (p.size() > 4 && p.substr(p.size() - 4) == ".ttf") paths.push_back(p);
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) fonts.load(p);
  } else {
    std::istringstream in(spec);
    std::string item;
    while (std::getline(in, item, ',')) fonts.load(item);
  }
  require(fonts.size() > 0, Err::FileUnreadable, "no fonts found in '" + spec + "'");
  return fonts;
}

void progress(const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); }

int cmd_render(const std::string& ch, const std::string& font_path, float size, int canvas,
               const std::string& out) {
  FontFace font = load_font(font_path);
  GlyphBitmap b = rasterize_centered(parse_char_arg(ch), font, size, canvas, canvas);
  write_pgm(out, b);
  std::printf("wrote %s (%dx%d)\n", out.c_str(), b.width, b.height);
  return 0;
}

int cmd_build_space(const std::string& kind, const std::string& charset_path,
                    const std::string& font_path, const std::string& ckpt_stem,
                    const std::string& layer, const std::string& ave, const std::string& out) {
  std::vector<char32_t> charset = read_charset_file(charset_path);
  FontFace font = load_font(font_path);
  std::vector<char32_t> dropped;
  EmbeddingSpace space = [&] {
    if (kind == "ices") return build_ices(charset, font, &dropped);
    require(kind == "i2ces", Err::ConfigError, "kind must be ices or i2ces");
    require(!ckpt_stem.empty(), Err::ConfigError, "i2ces needs --glyph-checkpoint");
    GlyphClassifierCheckpoint ckpt = GlyphClassifierCheckpoint::load(ckpt_stem);
    return build_i2ces(charset, ckpt, font, embed_layer_from(layer), ave_choice_from(ave));
  }();
  space.save(out);
  std::printf("%s space: %zu entries, dim %d -> %s.{json,bin}", kind.c_str(), space.size(),
              space.dim(), out.c_str());
  if (!dropped.empty()) std::printf(" (%zu unrenderable dropped)", dropped.size());
  std::printf("\n");
  return 0;
}

int cmd_neighbors(const std::string& space_stem, const std::string& names_path,
                  const std::string& ch, int k) {
  const char32_t cp = parse_char_arg(ch);
  NeighborSet ns;
  if (!space_stem.empty()) {
    EmbeddingSpace space = EmbeddingSpace::load(space_stem);
    ns = top_k(space, cp, k);
  } else {
    require(!names_path.empty(), Err::ConfigError, "need --space or --names");
    NamesTable table = parse_names_list(names_path);
    ns = dces_neighbors(cp, table);
  }
  for (std::size_t i = 0; i < ns.neighbors.size(); ++i)
    std::printf("%s\t%s\t%.6f\n", utf8_encode(ns.neighbors[i]).c_str(),
                cp_to_string(ns.neighbors[i]).c_str(), ns.similarities[i]);
  return 0;
}

int cmd_attack(const std::string& in_path, const std::string& out_path,
               const std::string& hset_path, double p, std::optional<std::uint64_t> seed) {
  std::ifstream in(in_path, std::ios::binary);
  require(in.good(), Err::FileUnreadable, "cannot open " + in_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  HSet hset = HSet::load(hset_path);
  AttackSpec spec{p, &hset, seed_fallback(seed)};
  std::string out = vp_perturb(buf.str(), spec);
  std::ofstream of(out_path, std::ios::binary);
  require(of.good(), Err::FileUnreadable, "cannot write " + out_path);
  of << out;
  std::printf("wrote %s (p=%g, seed=%llu)\n", out_path.c_str(), p,
              static_cast<unsigned long long>(spec.seed));
  return 0;
}

int cmd_train_glyph(const std::string& config_path) {
  Config cfg = Config::parse_file(config_path);
  std::vector<char32_t> charset = read_charset_file(cfg.get_string("glyph.charset"));
  FontSet fonts = load_fonts(cfg.get_string("glyph.fonts"));

  AugmentationSpec spec;
  spec.fonts = fonts.ids();
  if (cfg.has("glyph.sizes")) {
    spec.sizes_pt.clear();
    for (double s : cfg.get_double_list("glyph.sizes")) spec.sizes_pt.push_back(float(s));
  }
  spec.noise_density = cfg.get_double("glyph.noise", spec.noise_density);

  const double val_fraction = cfg.get_double("glyph.val_fraction", 0.1);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("glyph.seed", 1));
  std::vector<char32_t> dropped;
  GlyphDataset ds = GlyphDataset::build(charset, fonts, spec, val_fraction, seed, &dropped);
  if (!dropped.empty()) progress("dropped " + std::to_string(dropped.size()) + " unrenderable");

  GlyphTrainConfig tc;
  tc.lr = cfg.get_double("glyph.lr", tc.lr);
  tc.momentum = cfg.get_double("glyph.momentum", tc.momentum);
  tc.batch = int(cfg.get_int("glyph.batch", tc.batch));
  tc.max_epochs = int(cfg.get_int("glyph.epochs", tc.max_epochs));
  tc.target_acc = cfg.get_double("glyph.target_acc", tc.target_acc);
  tc.seed = seed;
  tc.log = progress;

  GlyphClassifierCheckpoint ckpt = train_glyph_classifier(ds, tc);
  ckpt.save(cfg.get_string("glyph.out"));
  std::printf("val accuracy %.4f (%s) -> %s\n", ckpt.val_accuracy,
              ckpt.converged ? "converged" : "not converged",
              cfg.get_string("glyph.out").c_str());
  return ckpt.converged ? 0 : 3;
}

TextTrainConfig text_config(const Config& cfg, std::uint64_t seed) {
  TextTrainConfig tc;
  tc.lr = cfg.get_double("model.lr", tc.lr);
  tc.momentum = cfg.get_double("model.momentum", tc.momentum);
  tc.batch = int(cfg.get_int("model.batch", tc.batch));
  tc.epochs = int(cfg.get_int("model.epochs", tc.epochs));
  tc.max_len = int(cfg.get_int("model.max_len", tc.max_len));
  tc.seed = seed;
  tc.log = progress;
  return tc;
}

Dataset config_dataset(const Config& cfg, const std::string& which, std::uint64_t seed) {
  const std::size_t n = std::size_t(
      cfg.get_int(which == "train" ? "data.train_n" : "data.test_n", which == "train" ? 8000 : 2000));
  const std::uint64_t salt = which == "train" ? 0x7214ull : 0x7E57ull;
  if (cfg.get_bool("data.synthetic", false)) return make_synthetic_corpus(n, hash_seq({seed, salt}));
  Dataset full = read_csv_dataset(cfg.get_string("data.dir") + "/" + which + ".csv");
  return stratified_subsample(full, n, hash_seq({seed, salt}));
}

int cmd_train_text(const std::string& config_path) {
  Config cfg = Config::parse_file(config_path);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));
  const std::string kind = cfg.get_string("model.kind", "charcnn");
  Dataset train = config_dataset(cfg, "train", seed);
  Dataset test = config_dataset(cfg, "test", seed);

  std::optional<FontFace> font;
  if (kind == "vb") font = load_font(cfg.get_string("model.font"));
  TextModelCheckpoint ckpt =
      train_text_classifier(train, kind, text_config(cfg, seed), font ? &*font : nullptr);
  const double acc = evaluate(ckpt, test).accuracy;
  ckpt.save(cfg.get_string("model.out"));
  std::printf("%s clean test accuracy %.4f -> %s\n", kind.c_str(), acc,
              cfg.get_string("model.out").c_str());
  return 0;
}

int cmd_adv_train(const std::string& config_path) {
  Config cfg = Config::parse_file(config_path);
  const std::uint64_t seed = std::uint64_t(cfg.get_int("experiment.seed", 1));
  Dataset train = config_dataset(cfg, "train", seed);
  Dataset test = config_dataset(cfg, "test", seed);

  TextModelCheckpoint ckpt;
  if (cfg.has("model.checkpoint")) {
    ckpt = TextModelCheckpoint::load(cfg.get_string("model.checkpoint"));
  } else {
    const std::string kind = cfg.get_string("model.kind", "vb");
    std::optional<FontFace> font;
    if (kind == "vb") font = load_font(cfg.get_string("model.font"));
    ckpt = train_text_classifier(train, kind, text_config(cfg, seed), font ? &*font : nullptr);
  }

  HSet hset = HSet::load(cfg.get_string("adv.hset"));
  TextTrainConfig phase2 = text_config(cfg, hash_seq({seed, 0xAD7ull}));
  phase2.epochs = int(cfg.get_int("adv.epochs", 3));
  adversarial_train(ckpt, train, hset, cfg.get_double("adv.p_train", 0.5), phase2);

  const double acc = evaluate(ckpt, test).accuracy;
  ckpt.save(cfg.get_string("model.out"));
  std::printf("adversarially trained %s: clean test accuracy %.4f -> %s\n", ckpt.kind.c_str(),
              acc, cfg.get_string("model.out").c_str());
  return 0;
}

int cmd_run(const std::string& config_path, const char* forced_kind) {
  Config cfg = Config::parse_file(config_path);
  if (forced_kind) {
    const std::string present = cfg.get_string("experiment.kind", forced_kind);
    require(present == forced_kind, Err::ConfigError,
            "experiment.kind is '" + present + "' but this subcommand runs '" + forced_kind +
                "'");
    cfg.set("experiment.kind", forced_kind);
  }
  std::string dir = run_experiment(cfg);
  std::printf("artifacts in %s\n", dir.c_str());
  return 0;
}

int cmd_synth_dataset(const std::string& out_dir, std::size_t train_n, std::size_t test_n,
                      std::uint64_t seed) {
  std::filesystem::create_directories(out_dir);
  write_csv_dataset(make_synthetic_corpus(train_n, hash_seq({seed, 0x7214ull})),
                    out_dir + "/train.csv");
  write_csv_dataset(make_synthetic_corpus(test_n, hash_seq({seed, 0x7E57ull})),
                    out_dir + "/test.csv");
  std::printf("wrote %s/train.csv (%zu) and %s/test.csv (%zu)\n", out_dir.c_str(), train_n,
              out_dir.c_str(), test_n);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homoglyph attack & defense pipeline"};
  app.require_subcommand(1);
  bool serial = false;
  app.add_flag("--serial", serial, "force bit-reproducible serial mode (currently always on)");

  // render
  std::string ch, font_path, out_path;
  float size = 80.0f;
  int canvas = 100;
  auto* render = app.add_subcommand("render", "rasterize one glyph to a PGM image");
  render->add_option("--char", ch, "character or U+XXXX")->required();
  render->add_option("--font", font_path, "TTF path")->required();
  render->add_option("--size", size, "point size (default 80)");
  render->add_option("--canvas", canvas, "canvas edge in pixels (default 100)");
  render->add_option("--out", out_path, "output PGM path")->required();

  // build-space
  std::string kind, charset_path, ckpt_stem, layer = "conv", ave = "single";
  auto* build = app.add_subcommand("build-space", "build and persist an embedding space");
  build->add_option("--kind", kind, "ices or i2ces")->required();
  build->add_option("--charset", charset_path, "charset file (U+XXXX lines)")->required();
  build->add_option("--font", font_path, "probe font TTF")->required();
  build->add_option("--glyph-checkpoint", ckpt_stem, "glyph classifier stem (i2ces)");
  build->add_option("--layer", layer, "i2ces extraction layer: conv or linear");
  build->add_option("--ave", ave, "i2ces probe: single or ave");
  build->add_option("--out", out_path, "output stem")->required();

  // neighbors
  std::string space_stem, names_path;
  int k = 10;
  auto* neigh = app.add_subcommand("neighbors", "print nearest neighbors of a character");
  neigh->add_option("--space", space_stem, "embedding space stem (cosine top-k)");
  neigh->add_option("--names", names_path, "Unicode names list (DCES rule)");
  neigh->add_option("--char", ch, "character or U+XXXX")->required();
  neigh->add_option("--k", k, "neighbor count for --space (default 10)");

  // attack
  std::string in_path, hset_path;
  double p = 0.0;
  std::optional<std::uint64_t> seed_flag;
  auto* attack = app.add_subcommand("attack", "perturb a UTF-8 text file with an h_set");
  attack->add_option("--in", in_path, "input text file")->required();
  attack->add_option("--out", out_path, "output text file")->required();
  attack->add_option("--hset", hset_path, "replacement table JSON")->required();
  attack->add_option("--p", p, "per-character replacement probability")->required();
  attack->add_option("--seed", seed_flag, "RNG seed (default: PERTURB_SEED env, then 0)");

  // config-driven stages
  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI config file")->required();
  };
  add_config(app.add_subcommand("train-glyph", "train the glyph classification CNN"));
  add_config(app.add_subcommand("train-text", "train a text classifier (charcnn or vb)"));
  add_config(app.add_subcommand("adv-train", "adversarial phase-2 training"));
  add_config(app.add_subcommand("curve", "attack degradation curve experiment"));
  add_config(app.add_subcommand("compare-extraction", "rank embedding extraction options"));
  add_config(app.add_subcommand("run", "run any experiment config"));

  // synth-dataset
  std::string out_dir;
  std::size_t train_n = 8000, test_n = 2000;
  std::uint64_t seed = 1;
  auto* synth = app.add_subcommand("synth-dataset", "generate the synthetic 4-class corpus");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--train", train_n, "train sample count (default 8000)");
  synth->add_option("--test", test_n, "test sample count (default 2000)");
  synth->add_option("--seed", seed, "generator seed (default 1)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (render->parsed()) return cmd_render(ch, font_path, size, canvas, out_path);
    if (build->parsed())
      return cmd_build_space(kind, charset_path, font_path, ckpt_stem, layer, ave, out_path);
    if (neigh->parsed()) return cmd_neighbors(space_stem, names_path, ch, k);
    if (attack->parsed()) return cmd_attack(in_path, out_path, hset_path, p, seed_flag);
    if (app.get_subcommand("train-glyph")->parsed()) return cmd_train_glyph(config_path);
    if (app.get_subcommand("train-text")->parsed()) return cmd_train_text(config_path);
    if (app.get_subcommand("adv-train")->parsed()) return cmd_adv_train(config_path);
    if (app.get_subcommand("curve")->parsed()) return cmd_run(config_path, "curve");
    if (app.get_subcommand("compare-extraction")->parsed())
      return cmd_run(config_path, "extraction");
    if (app.get_subcommand("run")->parsed()) return cmd_run(config_path, nullptr);
    if (synth->parsed()) return cmd_synth_dataset(out_dir, train_n, test_n, seed);
  } catch (const hglab::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
