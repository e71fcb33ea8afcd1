#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hglab/attack.hpp"
#include "hglab/config.hpp"
#include "hglab/dataset.hpp"
#include "hglab/glyph_classifier.hpp"
#include "hglab/text_model.hpp"

namespace hglab {

struct SubsampleSpec {
  std::size_t train_n = 8000;
  std::size_t test_n = 2000;
};

// Reads train.csv / test.csv from a directory and takes a class-stratified
// subsample of each. Throws MalformedCSV / InsufficientSamples.
std::pair<Dataset, Dataset> load_dataset(const std::string& dir, const SubsampleSpec& sub,
                                         std::uint64_t seed);

struct MetricsRow {
  std::string experiment_id;
  std::string model_kind;
  std::string attack_space;
  double p = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::size_t n_samples = 0;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
  void add(MetricsRow r) { rows.push_back(std::move(r)); }
  void append(const MetricsTable& other);
};

// Fixed column order and number formatting so identical runs produce
// byte-identical files.
void write_metrics_csv(const MetricsTable& table, const std::string& path);

// {curve_id, x, mean, std} aggregated over seeds, restricted to rows with
// the given model_kind ("" = all rows).
nlohmann::json plot_data(const MetricsTable& table, const std::string& curve_id,
                         const std::string& model_kind = "");

// Every sample attacked with a per-sample seed derived from `seed`, so the
// result is independent of evaluation batching.
Dataset perturb_dataset(const Dataset& ds, const HSet& hset, double p, std::uint64_t seed);

// Accuracy at each (p, seed) cell; the p = 0 cells take the clean
// evaluation path (no perturbation machinery involved).
MetricsTable degradation_curve(TextModelCheckpoint& ckpt, const Dataset& test, const HSet& hset,
                               const std::vector<double>& p_grid,
                               const std::vector<std::uint64_t>& seeds,
                               const std::string& experiment_id, const std::string& model_kind,
                               const std::string& attack_space);

// Phase 2 of adversarial training: continue an already-trained checkpoint
// on data re-perturbed every epoch (fresh draws seeded by epoch index).
void adversarial_train(TextModelCheckpoint& ckpt, const Dataset& train, const HSet& hset_train,
                       double p_train, const TextTrainConfig& phase2);

// Fair-protocol guard: no substitute may appear in both halves for the
// same codepoint. Throws InvalidSplit naming the first offender.
void check_disjoint_halves(const HSet& train_half, const HSet& eval_half);

// Extraction comparison: nearest neighbors per probe character under each
// extraction option (conv/linear layer x single/averaged probe).
struct ExtractionReport {
  struct Option {
    EmbedLayer layer;
    AveChoice ave;
    int dim = 0;
    std::vector<NeighborSet> probes;
  };
  std::vector<Option> options;
};

ExtractionReport compare_extraction(GlyphClassifierCheckpoint& ckpt,
                                    const std::vector<char32_t>& probe_chars,
                                    const FontFace& probe_font, int k = 10);

nlohmann::json extraction_to_json(const ExtractionReport& report);
std::string extraction_to_text(const ExtractionReport& report);

// Drives a whole experiment from a parsed config ([experiment] kind =
// curve | defense | extraction) and writes metrics.csv, plot-data JSON,
// checkpoints, and a config snapshot into the output directory. Returns
// that directory. Throws ConfigError with the offending field path.
std::string run_experiment(const Config& cfg);

}  // namespace hglab
