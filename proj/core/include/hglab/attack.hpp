#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hglab/embedding.hpp"

namespace hglab {

// A replacement table: codepoint -> visually confusable substitutes.
// Carries a provenance object (which space, how curated) that rides along
// in the JSON file format.
struct HSet {
  std::map<char32_t, std::vector<char32_t>> map;
  nlohmann::json provenance;

  bool has(char32_t cp) const { return map.count(cp) != 0; }
  std::size_t total_entries() const;

  // Throws MalformedHSetFile on self-maps, empty lists, or invalid
  // scalars. Called by load() and before save().
  void validate() const;

  void save(const std::string& path) const;
  static HSet load(const std::string& path);
};

struct AttackSpec {
  double p = 0.0;
  const HSet* hset = nullptr;
  std::uint64_t seed = 0;
};

// Each character is independently replaced with probability p by a
// uniformly drawn element of its h_set list. Characters without an entry
// pass through, as do invalid UTF-8 units (byte-for-byte). Draws are
// keyed by (seed, character position), so the result is independent of
// how the caller batches samples.
std::string vp_perturb(const std::string& text, const AttackSpec& spec);

// Automated curation: keep neighbors whose similarity clears tau.
// tau must lie in (0, 1]. space_label lands in the provenance object.
HSet curate_hset(const std::vector<NeighborSet>& neighbors, double tau,
                 const std::string& space_label);

// Converts raw neighbor sets into an HSet verbatim (no filtering); used
// when an attack should draw from a whole embedding-space neighborhood.
HSet hset_from_neighbors(const std::vector<NeighborSet>& neighbors,
                         const std::string& space_label);

// Per-codepoint halves of (h_set ∩ DCES neighbors): one half is attacked
// at evaluation time, the other is reserved for adversarial training, so
// the defense never trains on the substitutes it is tested against.
struct SplitResult {
  struct Entry {
    char32_t codepoint;
    std::vector<char32_t> train_half;
    std::vector<char32_t> eval_half;
  };
  std::vector<Entry> entries;
  std::vector<char32_t> excluded;  // intersection had < 2 elements
  std::uint64_t seed = 0;

  HSet train_hset() const;
  HSet eval_hset() const;
};

// Odd intersections give the extra element to the training half.
SplitResult intersection_split(const HSet& hset_i2ces, const std::vector<NeighborSet>& dces,
                               std::uint64_t seed);

}  // namespace hglab
