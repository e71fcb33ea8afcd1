#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hglab/errors.hpp"
#include "hglab/experiments.hpp"
#include "hglab/rng.hpp"

using namespace hglab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

const std::string kFont = HGLAB_DATA_DIR "/fonts/DejaVuSans.ttf";

HSet ascii_hset() {
  HSet h;
  h.map[U'a'] = {0x0430};
  h.map[U'e'] = {0x0435};
  h.map[U'o'] = {0x043E};
  h.map[U'c'] = {0x0441};
  h.provenance = {{"space", "toy"}};
  return h;
}

}  // namespace

TEST_CASE("config: sections, comments, typed getters") {
  Config c = Config::parse_string(
      "# leading comment\n"
      "top = 1\n"
      "[model]\n"
      "kind = charcnn   ; trailing comment\n"
      "lr = 0.05\n"
      "batch = 32\n"
      "deep = yes\n"
      "[attack]\n"
      "p_grid = 0, 0.5, 1\n"
      "seeds = 1,2,3\n"
      "names = a, b , c\n",
      "test.ini");

  CHECK(c.get_int("top") == 1);
  CHECK(c.get_string("model.kind") == "charcnn");
  CHECK(c.get_double("model.lr") == doctest::Approx(0.05));
  CHECK(c.get_int("model.batch") == 32);
  CHECK(c.get_bool("model.deep", false));
  CHECK(c.get_bool("model.absent", true));
  CHECK(c.get_double_list("attack.p_grid") == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(c.get_u64_list("attack.seeds") == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(c.get_string_list("attack.names") == std::vector<std::string>{"a", "b", "c"});
  CHECK(c.get_string("model.missing", "dflt") == "dflt");
  CHECK(c.get_int("model.missing", 9) == 9);
  CHECK(c.origin() == "test.ini");
  CHECK(c.has("model.lr"));
  CHECK(!c.has("model.lr2"));
}

TEST_CASE("config: errors carry the field path or line") {
  Config c = Config::parse_string("[a]\nx = notanum\n", "t.ini");
  try {
    c.get_int("a.x");
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ConfigError);
    CHECK(std::string(e.what()).find("a.x") != std::string::npos);
  }
  try {
    c.get_string("a.gone");
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("a.gone") != std::string::npos);
  }
  try {
    Config::parse_string("[a]\nthis line has no equals\n", "t2.ini");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("t2.ini:2") != std::string::npos);
  }
  CHECK_THROWS_AS(Config::parse_file("no/such/file.ini"), Error);
}

TEST_CASE("config: text() preserves the raw input for snapshots") {
  const std::string raw = "[x]\na = 1\n";
  Config c = Config::parse_string(raw, "r.ini");
  CHECK(c.text() == raw);
  c.set("x.a", "2");
  CHECK(c.get_int("x.a") == 2);
}

TEST_CASE("metrics csv: frozen byte layout") {
  MetricsTable t;
  t.add({"exp1", "charcnn", "ices", 0.0, 1, 0.9125, 2000});
  t.add({"exp1", "charcnn", "ices", 0.25, 2, 0.8004999999, 2000});
  fs::create_directories("test_tmp_exp");
  write_metrics_csv(t, "test_tmp_exp/m.csv");
  CHECK(slurp("test_tmp_exp/m.csv") ==
        "experiment_id,model_kind,attack_space,p,seed,accuracy,n_samples\n"
        "exp1,charcnn,ices,0,1,0.9125,2000\n"
        "exp1,charcnn,ices,0.25,2,0.8004999999,2000\n");
}

TEST_CASE("plot data: mean and population std per p") {
  MetricsTable t;
  t.add({"e", "m", "s", 0.0, 1, 0.9, 10});
  t.add({"e", "m", "s", 0.0, 2, 0.7, 10});
  t.add({"e", "m", "s", 0.5, 1, 0.5, 10});
  t.add({"e", "other", "s", 0.5, 9, 0.0, 10});

  nlohmann::json j = plot_data(t, "curve_m", "m");
  CHECK(j["curve_id"] == "curve_m");
  REQUIRE(j["x"].size() == 2);
  CHECK(j["x"][0].get<double>() == 0.0);
  CHECK(j["mean"][0].get<double>() == doctest::Approx(0.8));
  CHECK(j["std"][0].get<double>() == doctest::Approx(0.1));
  CHECK(j["mean"][1].get<double>() == doctest::Approx(0.5));
  CHECK(j["std"][1].get<double>() == doctest::Approx(0.0));

  nlohmann::json all = plot_data(t, "c", "");
  CHECK(all["mean"][1].get<double>() == doctest::Approx(0.25));
}

TEST_CASE("perturb_dataset: p=0 copies, labels survive, batching independent") {
  Dataset ds = make_synthetic_corpus(40, 11);
  HSet h = ascii_hset();

  Dataset same = perturb_dataset(ds, h, 0.0, 9);
  REQUIRE(same.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(same.samples[i].text == ds.samples[i].text);
    CHECK(same.samples[i].label == ds.samples[i].label);
  }

  Dataset a = perturb_dataset(ds, h, 0.8, 9);
  Dataset b = perturb_dataset(ds, h, 0.8, 9);
  bool any_changed = false;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(a.samples[i].text == b.samples[i].text);
    CHECK(a.samples[i].label == ds.samples[i].label);
    any_changed |= a.samples[i].text != ds.samples[i].text;
  }
  CHECK(any_changed);

  // sample i's perturbation doesn't depend on its position in the batch
  Dataset tail;
  tail.num_classes = ds.num_classes;
  tail.samples.assign(ds.samples.begin() + 5, ds.samples.end());
  Dataset c = perturb_dataset(tail, h, 0.8, 9);
  CHECK(c.samples[0].text != a.samples[5].text);  // seeds are positional by design
  Dataset again = perturb_dataset(ds, h, 0.8, 10);
  bool differs = false;
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    differs |= again.samples[i].text != a.samples[i].text;
  CHECK(differs);
}

TEST_CASE("disjoint halves guard") {
  HSet train, eval;
  train.map[U'a'] = {0x0430, 0x00E0};
  eval.map[U'a'] = {0x0251};
  eval.map[U'b'] = {0x0180};
  CHECK_NOTHROW(check_disjoint_halves(train, eval));

  eval.map[U'a'].push_back(0x00E0);
  try {
    check_disjoint_halves(train, eval);
    FAIL("expected InvalidSplit");
  } catch (const Error& e) {
    CHECK(e.code() == Err::InvalidSplit);
    CHECK(std::string(e.what()).find("U+00E0") != std::string::npos);
  }
}

TEST_CASE("load_dataset: stratified subsample from csv files") {
  fs::create_directories("test_tmp_exp/ds");
  {
    std::ofstream train("test_tmp_exp/ds/train.csv", std::ios::binary);
    std::ofstream test("test_tmp_exp/ds/test.csv", std::ios::binary);
    for (int i = 0; i < 200; ++i) {
      train << (i % 4) + 1 << ",t" << i << ",text body " << i << "\n";
      if (i < 80) test << (i % 4) + 1 << ",t" << i << ",test body " << i << "\n";
    }
  }
  auto [train, test] = load_dataset("test_tmp_exp/ds", {100, 40}, 3);
  CHECK(train.samples.size() == 100);
  CHECK(test.samples.size() == 40);
  CHECK(train.num_classes == 4);
  std::vector<int> counts(4, 0);
  for (const auto& s : train.samples) ++counts[static_cast<std::size_t>(s.label)];
  for (int k : counts) CHECK(k == 25);

  auto [t2, e2] = load_dataset("test_tmp_exp/ds", {100, 40}, 3);
  for (std::size_t i = 0; i < train.samples.size(); ++i)
    CHECK(t2.samples[i].text == train.samples[i].text);

  CHECK_THROWS_AS(load_dataset("test_tmp_exp/ds", {2000, 40}, 3), Error);
  CHECK_THROWS_AS(load_dataset("test_tmp_exp/missing", {10, 10}, 3), Error);
}

TEST_CASE("degradation curve: p=0 equals the clean path for every seed") {
  Dataset train = make_synthetic_corpus(64, 21);
  Dataset test = make_synthetic_corpus(32, 22);
  TextTrainConfig tc;
  tc.epochs = 2;
  tc.batch = 16;
  tc.max_len = 48;
  tc.seed = 4;
  TextModelCheckpoint ckpt = train_text_classifier(train, "charcnn", tc);

  HSet h = ascii_hset();
  MetricsTable t = degradation_curve(ckpt, test, h, {0.0, 1.0}, {7, 8}, "ex", "charcnn", "toy");
  REQUIRE(t.rows.size() == 4);
  const double clean = evaluate(ckpt, test).accuracy;
  CHECK(t.rows[0].accuracy == clean);
  CHECK(t.rows[1].accuracy == clean);
  CHECK(t.rows[0].p == 0.0);
  CHECK(t.rows[2].p == 1.0);
  CHECK(t.rows[0].n_samples == 32);
  for (const auto& r : t.rows) {
    CHECK(r.experiment_id == "ex");
    CHECK(r.model_kind == "charcnn");
    CHECK(r.attack_space == "toy");
  }
  CHECK_THROWS_AS(
      degradation_curve(ckpt, test, h, {0.0, 2.0}, {1}, "ex", "charcnn", "toy"), Error);
}

TEST_CASE("adversarial training moves the weights") {
  Dataset train = make_synthetic_corpus(32, 31);
  TextTrainConfig tc;
  tc.epochs = 1;
  tc.batch = 16;
  tc.max_len = 48;
  tc.seed = 6;
  TextModelCheckpoint ckpt = train_text_classifier(train, "charcnn", tc);
  const double before = evaluate(ckpt, train).accuracy;

  TextTrainConfig phase2 = tc;
  phase2.epochs = 1;
  phase2.seed = 99;
  adversarial_train(ckpt, train, ascii_hset(), 0.5, phase2);
  // still a working classifier on clean data after the extra phase
  const double after = evaluate(ckpt, train).accuracy;
  CHECK(after >= 0.0);
  CHECK(after <= 1.0);
  CHECK(std::isfinite(before));
}

TEST_CASE("run_experiment: curve writes a reproducible artifact set") {
  HSet h = ascii_hset();
  fs::create_directories("test_tmp_exp");
  h.save("test_tmp_exp/h.json");

  auto config_for = [](const std::string& out) {
    return Config::parse_string(
        "[experiment]\n"
        "kind = curve\n"
        "id = tiny\n"
        "output = " + out + "\n"
        "seed = 5\n"
        "[data]\n"
        "synthetic = true\n"
        "train_n = 96\n"
        "test_n = 48\n"
        "[model]\n"
        "kind = charcnn\n"
        "epochs = 1\n"
        "batch = 16\n"
        "max_len = 48\n"
        "[attack]\n"
        "hset = test_tmp_exp/h.json\n"
        "space = toy\n"
        "p_grid = 0, 1\n"
        "seeds = 1, 2\n",
        "tiny.ini");
  };

  const std::string out1 = run_experiment(config_for("test_tmp_exp/run1"));
  CHECK(out1 == "test_tmp_exp/run1");
  CHECK(fs::exists(out1 + "/metrics.csv"));
  CHECK(fs::exists(out1 + "/plot_charcnn.json"));
  CHECK(fs::exists(out1 + "/config.ini"));
  CHECK(fs::exists(out1 + "/checkpoints/charcnn.json"));
  CHECK(fs::exists(out1 + "/checkpoints/charcnn.bin"));

  const std::string m1 = slurp(out1 + "/metrics.csv");
  CHECK(line_count(m1) == 5);  // header + 2 p-values x 2 seeds

  run_experiment(config_for("test_tmp_exp/run2"));
  CHECK(slurp("test_tmp_exp/run2/metrics.csv") == m1);

  nlohmann::json plot =
      nlohmann::json::parse(slurp(out1 + "/plot_charcnn.json"));
  CHECK(plot["curve_id"] == "tiny_charcnn");
  REQUIRE(plot["x"].size() == 2);
  CHECK(plot["std"][0].get<double>() == 0.0);  // p=0 identical across seeds
}

TEST_CASE("run_experiment: config errors name the field") {
  auto expect_cfg_error = [](const std::string& text, const std::string& needle) {
    try {
      run_experiment(Config::parse_string(text, "bad.ini"));
      FAIL_CHECK("expected ConfigError mentioning " << needle);
    } catch (const Error& e) {
      CHECK(e.code() == Err::ConfigError);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_cfg_error("[experiment]\nkind = curve\noutput = test_tmp_exp/x\n", "experiment.id");
  expect_cfg_error(
      "[experiment]\nkind = sideways\nid = a\noutput = test_tmp_exp/x\n"
      "[attack]\nhset = test_tmp_exp/h.json\n",
      "experiment.kind");
  expect_cfg_error(
      "[experiment]\nkind = curve\nid = a\noutput = test_tmp_exp/x\n"
      "[attack]\nhset = test_tmp_exp/h.json\np_grid = 1, 0\n",
      "p_grid");
  expect_cfg_error(
      "[experiment]\nkind = curve\nid = a\noutput = test_tmp_exp/x\n"
      "[attack]\nhset = test_tmp_exp/absent.json\n",
      "attack.hset");
  expect_cfg_error(
      "[experiment]\nkind = curve\nid = a\noutput = test_tmp_exp/x\n"
      "[data]\ndir = test_tmp_exp/missing\n"
      "[attack]\nhset = test_tmp_exp/h.json\n",
      "data.dir");
}

TEST_CASE("compare_extraction: four options with the right dimensions") {
  FontSet fonts;
  fonts.load(kFont);
  AugmentationSpec spec;
  spec.fonts = {0};
  spec.sizes_pt = {80.0f};
  spec.rotations_deg = {-8.0f, -4.0f, 4.0f, 8.0f};
  GlyphDataset ds = GlyphDataset::build({U'i', U'o', U'x'}, fonts, spec, 0.25, 2);
  GlyphTrainConfig gc;
  gc.batch = 8;
  gc.max_epochs = 4;
  gc.target_acc = 0.34;
  gc.seed = 12;
  GlyphClassifierCheckpoint ckpt = train_glyph_classifier(ds, gc);

  FontFace font = load_font(kFont);
  ExtractionReport rep = compare_extraction(ckpt, {U'o'}, font, 2);
  REQUIRE(rep.options.size() == 4);
  CHECK(rep.options[0].layer == EmbedLayer::Conv);
  CHECK(rep.options[0].ave == AveChoice::Single);
  CHECK(rep.options[0].dim == 1152);
  CHECK(rep.options[1].ave == AveChoice::Ave);
  CHECK(rep.options[2].layer == EmbedLayer::Linear);
  CHECK(rep.options[2].dim == 3);
  for (const auto& opt : rep.options) {
    REQUIRE(opt.probes.size() == 1);
    CHECK(opt.probes[0].codepoint == U'o');
    CHECK(opt.probes[0].neighbors.size() == 2);  // whole space minus self
  }

  ExtractionReport rep2 = compare_extraction(ckpt, {U'o'}, font, 2);
  CHECK(extraction_to_json(rep) == extraction_to_json(rep2));

  const std::string text = extraction_to_text(rep);
  CHECK(text.find("layer=conv") != std::string::npos);
  CHECK(text.find("layer=linear") != std::string::npos);
  CHECK(text.find("U+006F") != std::string::npos);

  nlohmann::json j = extraction_to_json(rep);
  REQUIRE(j.size() == 4);
  CHECK(j[0]["dim"] == 1152);
  CHECK(j[0]["probes"][0]["cp"] == "U+006F");
}
