#include "hglab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "hglab/errors.hpp"
#include "hglab/names.hpp"
#include "hglab/rng.hpp"
#include "hglab/utf8.hpp"

namespace fs = std::filesystem;

namespace hglab {

std::pair<Dataset, Dataset> load_dataset(const std::string& dir, const SubsampleSpec& sub,
                                         std::uint64_t seed) {
  Dataset train = read_csv_dataset(dir + "/train.csv");
  Dataset test = read_csv_dataset(dir + "/test.csv");
  return {stratified_subsample(train, sub.train_n, hash_seq({seed, 0x7214ull})),
          stratified_subsample(test, sub.test_n, hash_seq({seed, 0x7E57ull}))};
}

void MetricsTable::append(const MetricsTable& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void write_metrics_csv(const MetricsTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: stable newlines everywhere
  require(out.good(), Err::FileUnreadable, "cannot write " + path);
  out << "experiment_id,model_kind,attack_space,p,seed,accuracy,n_samples\n";
  for (const auto& r : table.rows)
    out << r.experiment_id << ',' << r.model_kind << ',' << r.attack_space << ','
        << fmt_double(r.p) << ',' << r.seed << ',' << fmt_double(r.accuracy) << ','
        << r.n_samples << '\n';
}

nlohmann::json plot_data(const MetricsTable& table, const std::string& curve_id,
                         const std::string& model_kind) {
  std::map<double, std::vector<double>> by_p;
  for (const auto& r : table.rows)
    if (model_kind.empty() || r.model_kind == model_kind) by_p[r.p].push_back(r.accuracy);

  nlohmann::json x = nlohmann::json::array(), mean = nlohmann::json::array(),
                 stddev = nlohmann::json::array();
  for (const auto& [p, accs] : by_p) {
    double m = 0;
    for (double a : accs) m += a;
    m /= static_cast<double>(accs.size());
    double var = 0;
    for (double a : accs) var += (a - m) * (a - m);
    var /= static_cast<double>(accs.size());
    x.push_back(p);
    mean.push_back(m);
    stddev.push_back(std::sqrt(var));
  }
  return {{"curve_id", curve_id}, {"x", x}, {"mean", mean}, {"std", stddev}};
}

Dataset perturb_dataset(const Dataset& ds, const HSet& hset, double p, std::uint64_t seed) {
  Dataset out;
  out.num_classes = ds.num_classes;
  out.samples.reserve(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    AttackSpec spec{p, &hset, hash_seq({seed, i, 0xA77Cull})};
    out.samples.push_back({ds.samples[i].label, vp_perturb(ds.samples[i].text, spec)});
  }
  return out;
}

MetricsTable degradation_curve(TextModelCheckpoint& ckpt, const Dataset& test, const HSet& hset,
                               const std::vector<double>& p_grid,
                               const std::vector<std::uint64_t>& seeds,
                               const std::string& experiment_id, const std::string& model_kind,
                               const std::string& attack_space) {
  MetricsTable table;
  for (double p : p_grid) {
    require(p >= 0.0 && p <= 1.0, Err::ConfigError, "p_grid value outside [0,1]");
    for (std::uint64_t seed : seeds) {
      double acc;
      if (p == 0.0) {
        acc = evaluate(ckpt, test).accuracy;
      } else {
        Dataset attacked = perturb_dataset(test, hset, p, seed);
        acc = evaluate(ckpt, attacked).accuracy;
      }
      table.add({experiment_id, model_kind, attack_space, p, seed, acc, test.samples.size()});
    }
  }
  return table;
}

void adversarial_train(TextModelCheckpoint& ckpt, const Dataset& train, const HSet& hset_train,
                       double p_train, const TextTrainConfig& phase2) {
  PerturbFn perturb = [&](std::size_t i, int epoch, const std::string& text) {
    AttackSpec spec{p_train, &hset_train,
                    hash_seq({phase2.seed, static_cast<std::uint64_t>(epoch), i, 0xADull})};
    return vp_perturb(text, spec);
  };
  continue_training(ckpt, train, phase2, perturb);
}

void check_disjoint_halves(const HSet& train_half, const HSet& eval_half) {
  for (const auto& [cp, train_subs] : train_half.map) {
    auto it = eval_half.map.find(cp);
    if (it == eval_half.map.end()) continue;
    std::set<char32_t> eval_set(it->second.begin(), it->second.end());
    for (char32_t s : train_subs)
      require(!eval_set.count(s), Err::InvalidSplit,
              "substitute " + cp_to_string(s) + " of " + cp_to_string(cp) +
                  " appears in both train and eval halves");
  }
}

ExtractionReport compare_extraction(GlyphClassifierCheckpoint& ckpt,
                                    const std::vector<char32_t>& probe_chars,
                                    const FontFace& probe_font, int k) {
  ExtractionReport report;
  for (EmbedLayer layer : {EmbedLayer::Conv, EmbedLayer::Linear})
    for (AveChoice ave : {AveChoice::Single, AveChoice::Ave}) {
      EmbeddingSpace space = build_i2ces(ckpt.charset, ckpt, probe_font, layer, ave);
      ExtractionReport::Option opt;
      opt.layer = layer;
      opt.ave = ave;
      opt.dim = space.dim();
      for (char32_t cp : probe_chars) opt.probes.push_back(top_k(space, cp, k));
      report.options.push_back(std::move(opt));
    }
  return report;
}

nlohmann::json extraction_to_json(const ExtractionReport& report) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& opt : report.options) {
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& ns : opt.probes) {
      nlohmann::json neigh = nlohmann::json::array();
      for (std::size_t i = 0; i < ns.neighbors.size(); ++i)
        neigh.push_back({{"cp", cp_to_string(ns.neighbors[i])},
                         {"char", utf8_encode(ns.neighbors[i])},
                         {"similarity", ns.similarities[i]}});
      probes.push_back({{"cp", cp_to_string(ns.codepoint)},
                        {"char", utf8_encode(ns.codepoint)},
                        {"neighbors", neigh}});
    }
    out.push_back({{"layer", embed_layer_name(opt.layer)},
                   {"ave", ave_choice_name(opt.ave)},
                   {"dim", opt.dim},
                   {"probes", probes}});
  }
  return out;
}

std::string extraction_to_text(const ExtractionReport& report) {
  std::string out;
  for (const auto& opt : report.options) {
    out += std::string("== layer=") + embed_layer_name(opt.layer) +
           " probe=" + ave_choice_name(opt.ave) + " dim=" + std::to_string(opt.dim) + "\n";
    for (const auto& ns : opt.probes) {
      out += "  " + utf8_encode(ns.codepoint) + " (" + cp_to_string(ns.codepoint) + "):";
      for (std::size_t i = 0; i < ns.neighbors.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", ns.similarities[i]);
        out += " " + utf8_encode(ns.neighbors[i]) + "/" + buf;
      }
      out += "\n";
    }
  }
  return out;
}

namespace {

Dataset dataset_from_config(const Config& cfg, const std::string& which, std::size_t n,
                            std::uint64_t seed) {
  if (cfg.get_bool("data.synthetic", false)) {
    const std::uint64_t salt = which == "train" ? 0x7214ull : 0x7E57ull;
    return make_synthetic_corpus(n, hash_seq({seed, salt}));
  }
  const std::string dir = cfg.get_string("data.dir");
  try {
    Dataset full = read_csv_dataset(dir + "/" + which + ".csv");
    return stratified_subsample(full, n, hash_seq({seed, which == "train" ? 0x7214ull : 0x7E57ull}));
  } catch (const Error& e) {
    if (e.code() == Err::FileUnreadable)
      fail(Err::ConfigError, "data.dir: " + std::string(e.what()));
    throw;
  }
}

TextTrainConfig train_config_from(const Config& cfg, std::uint64_t seed) {
  TextTrainConfig tc;
  tc.lr = cfg.get_double("model.lr", tc.lr);
  tc.momentum = cfg.get_double("model.momentum", tc.momentum);
  tc.batch = static_cast<int>(cfg.get_int("model.batch", tc.batch));
  tc.epochs = static_cast<int>(cfg.get_int("model.epochs", tc.epochs));
  tc.max_len = static_cast<int>(cfg.get_int("model.max_len", tc.max_len));
  tc.seed = seed;
  return tc;
}

HSet hset_from_config(const Config& cfg) {
  const std::string path = cfg.get_string("attack.hset");
  try {
    return HSet::load(path);
  } catch (const Error& e) {
    fail(Err::ConfigError, "attack.hset: " + std::string(e.what()));
  }
}

struct CommonExperiment {
  std::string id;
  std::string out_dir;
  std::uint64_t seed;
  std::vector<double> p_grid;
  std::vector<std::uint64_t> seeds;
};

CommonExperiment common_from(const Config& cfg) {
  CommonExperiment c;
  c.id = cfg.get_string("experiment.id");
  c.out_dir = cfg.get_string("experiment.output");
  c.seed = static_cast<std::uint64_t>(cfg.get_int("experiment.seed", 1));
  if (cfg.has("attack.p_grid"))
    c.p_grid = cfg.get_double_list("attack.p_grid");
  else
    c.p_grid = {0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
  for (std::size_t i = 1; i < c.p_grid.size(); ++i)
    require(c.p_grid[i - 1] < c.p_grid[i], Err::ConfigError,
            "attack.p_grid must be sorted ascending");
  for (double p : c.p_grid)
    require(p >= 0.0 && p <= 1.0, Err::ConfigError, "attack.p_grid value outside [0,1]");
  if (cfg.has("attack.seeds"))
    c.seeds = cfg.get_u64_list("attack.seeds");
  else
    c.seeds = {1, 2, 3};
  require(!c.seeds.empty(), Err::ConfigError, "attack.seeds must be non-empty");
  return c;
}

void snapshot_config(const Config& cfg, const std::string& out_dir) {
  std::ofstream out(out_dir + "/config.ini", std::ios::binary);
  require(out.good(), Err::FileUnreadable, "cannot write config snapshot");
  out << cfg.text();
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Err::FileUnreadable, "cannot write " + path);
  out << j.dump(2) << "\n";
}

void run_curve(const Config& cfg, const CommonExperiment& c) {
  const SubsampleSpec sub{static_cast<std::size_t>(cfg.get_int("data.train_n", 8000)),
                          static_cast<std::size_t>(cfg.get_int("data.test_n", 2000))};
  const std::string kind = cfg.get_string("model.kind", "charcnn");
  HSet hset = hset_from_config(cfg);
  const std::string space = cfg.get_string("attack.space", hset.provenance.value("space", "hset"));

  Dataset test = dataset_from_config(cfg, "test", sub.test_n, c.seed);
  TextModelCheckpoint ckpt;
  if (cfg.has("model.checkpoint")) {
    ckpt = TextModelCheckpoint::load(cfg.get_string("model.checkpoint"));
  } else {
    Dataset train = dataset_from_config(cfg, "train", sub.train_n, c.seed);
    TextTrainConfig tc = train_config_from(cfg, c.seed);
    std::optional<FontFace> font;
    if (kind == "vb") font = load_font(cfg.get_string("model.font"));
    ckpt = train_text_classifier(train, kind, tc, font ? &*font : nullptr);
  }
  fs::create_directories(c.out_dir + "/checkpoints");
  ckpt.save(c.out_dir + "/checkpoints/" + kind);

  MetricsTable table = degradation_curve(ckpt, test, hset, c.p_grid, c.seeds, c.id, kind, space);
  write_metrics_csv(table, c.out_dir + "/metrics.csv");
  write_json(plot_data(table, c.id + "_" + kind, kind), c.out_dir + "/plot_" + kind + ".json");
}

void run_defense(const Config& cfg, const CommonExperiment& c) {
  const SubsampleSpec sub{static_cast<std::size_t>(cfg.get_int("data.train_n", 8000)),
                          static_cast<std::size_t>(cfg.get_int("data.test_n", 2000))};
  HSet hset = hset_from_config(cfg);
  const std::string space = cfg.get_string("attack.space", hset.provenance.value("space", "hset"));
  const std::string names_path = cfg.get_string("defense.names");
  const double p_train = cfg.get_double("defense.p_train", 0.5);
  const std::string font_path = cfg.get_string("model.font");

  NamesTable names;
  try {
    names = parse_names_list(names_path);
  } catch (const Error& e) {
    fail(Err::ConfigError, "defense.names: " + std::string(e.what()));
  }
  std::vector<NeighborSet> dces;
  for (const auto& [cp, subs] : hset.map) {
    try {
      dces.push_back(dces_neighbors(cp, names));
    } catch (const Error&) {
      // keyed char has no case/base token: it simply never intersects
    }
  }
  SplitResult split =
      intersection_split(hset, dces, cfg.has("defense.split_seed")
                                         ? static_cast<std::uint64_t>(cfg.get_int("defense.split_seed"))
                                         : c.seed);
  HSet train_half = split.train_hset();
  HSet eval_half = split.eval_hset();
  require(!eval_half.map.empty(), Err::ConfigError,
          "defense: intersection split left no evaluable codepoints");
  check_disjoint_halves(train_half, eval_half);

  Dataset train = dataset_from_config(cfg, "train", sub.train_n, c.seed);
  Dataset test = dataset_from_config(cfg, "test", sub.test_n, c.seed);
  FontFace font = load_font(font_path);

  TextTrainConfig tc = train_config_from(cfg, c.seed);
  TextTrainConfig vb_tc = tc;
  vb_tc.epochs = static_cast<int>(cfg.get_int("model.vb_epochs", tc.epochs));
  TextTrainConfig adv_tc = vb_tc;
  adv_tc.epochs = static_cast<int>(cfg.get_int("defense.adv_epochs", 3));
  adv_tc.seed = hash_seq({c.seed, 0xAD7ull});

  fs::create_directories(c.out_dir + "/checkpoints");
  MetricsTable table;

  TextModelCheckpoint vanilla = train_text_classifier(train, "charcnn", tc);
  vanilla.save(c.out_dir + "/checkpoints/charcnn");
  table.append(
      degradation_curve(vanilla, test, eval_half, c.p_grid, c.seeds, c.id, "charcnn", space));

  TextModelCheckpoint vb = train_text_classifier(train, "vb", vb_tc, &font);
  vb.save(c.out_dir + "/checkpoints/vb");
  table.append(degradation_curve(vb, test, eval_half, c.p_grid, c.seeds, c.id, "vb", space));

  adversarial_train(vb, train, train_half, p_train, adv_tc);
  vb.save(c.out_dir + "/checkpoints/at_vb");
  table.append(degradation_curve(vb, test, eval_half, c.p_grid, c.seeds, c.id, "at_vb", space));

  write_metrics_csv(table, c.out_dir + "/metrics.csv");
  for (const char* kind : {"charcnn", "vb", "at_vb"})
    write_json(plot_data(table, c.id + std::string("_") + kind, kind),
               c.out_dir + "/plot_" + kind + ".json");

  nlohmann::json split_j;
  split_j["excluded"] = nlohmann::json::array();
  for (char32_t cp : split.excluded) split_j["excluded"].push_back(cp_to_string(cp));
  split_j["entries"] = nlohmann::json::array();
  for (const auto& e : split.entries) {
    nlohmann::json tr = nlohmann::json::array(), ev = nlohmann::json::array();
    for (char32_t s : e.train_half) tr.push_back(cp_to_string(s));
    for (char32_t s : e.eval_half) ev.push_back(cp_to_string(s));
    split_j["entries"].push_back(
        {{"cp", cp_to_string(e.codepoint)}, {"train", tr}, {"eval", ev}});
  }
  write_json(split_j, c.out_dir + "/split.json");
}

void run_extraction(const Config& cfg, const CommonExperiment& c) {
  const std::string stem = cfg.get_string("extraction.glyph_checkpoint");
  GlyphClassifierCheckpoint ckpt;
  try {
    ckpt = GlyphClassifierCheckpoint::load(stem);
  } catch (const Error& e) {
    fail(Err::ConfigError, "extraction.glyph_checkpoint: " + std::string(e.what()));
  }
  FontFace font = load_font(cfg.get_string("extraction.font"));
  const int k = static_cast<int>(cfg.get_int("extraction.k", 10));

  std::vector<char32_t> probes;
  for (const auto& item : cfg.get_string_list("extraction.probes")) {
    if (item.rfind("U+", 0) == 0 || item.rfind("u+", 0) == 0) {
      probes.push_back(cp_from_string(item));
    } else {
      auto units = utf8_scan(item);
      require(units.size() == 1 && units[0].valid, Err::ConfigError,
              "extraction.probes item '" + item + "' is not a single character");
      probes.push_back(units[0].cp);
    }
  }
  require(!probes.empty(), Err::ConfigError, "extraction.probes is empty");

  ExtractionReport report = compare_extraction(ckpt, probes, font, k);
  write_json(extraction_to_json(report), c.out_dir + "/extraction.json");
  std::ofstream txt(c.out_dir + "/extraction.txt", std::ios::binary);
  txt << extraction_to_text(report);
}

}  // namespace

std::string run_experiment(const Config& cfg) {
  CommonExperiment c = common_from(cfg);
  const std::string kind = cfg.get_string("experiment.kind");
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  require(!ec, Err::ConfigError, "experiment.output: cannot create " + c.out_dir);
  snapshot_config(cfg, c.out_dir);

  if (kind == "curve")
    run_curve(cfg, c);
  else if (kind == "defense")
    run_defense(cfg, c);
  else if (kind == "extraction")
    run_extraction(cfg, c);
  else
    fail(Err::ConfigError, "experiment.kind must be curve, defense, or extraction, got '" +
                               kind + "'");
  return c.out_dir;
}

}  // namespace hglab
