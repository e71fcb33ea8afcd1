#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hglab {

struct TextSample {
  int label = 0;  // 0-based class index
  std::string text;
};

struct Dataset {
  std::vector<TextSample> samples;
  int num_classes = 0;

  std::size_t size() const { return samples.size(); }
  std::vector<std::size_t> per_class_counts() const;
};

// CSV rows of (class index starting at 1, title, description); sample text
// is title + " " + description. RFC-4180 style quoting with "" escapes.
Dataset read_csv_dataset(const std::string& path);

void write_csv_dataset(const Dataset& ds, const std::string& path);

// Class-stratified pick of n samples (n/K per class, remainder spread over
// the lowest class indices), order shuffled deterministically.
Dataset stratified_subsample(const Dataset& full, std::size_t n, std::uint64_t seed);

// Synthetic 4-class news-style corpus: each class draws from its own
// keyword pool plus shared filler, so a character-level model can learn
// the classes and character substitutions destroy the signal.
Dataset make_synthetic_corpus(std::size_t n, std::uint64_t seed);

}  // namespace hglab
