#include "hglab/attack.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "hglab/errors.hpp"
#include "hglab/rng.hpp"
#include "hglab/utf8.hpp"

namespace hglab {

namespace {

bool valid_scalar(char32_t cp) {
  return cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
}

}  // namespace

std::size_t HSet::total_entries() const {
  std::size_t n = 0;
  for (const auto& [cp, subs] : map) n += subs.size();
  return n;
}

void HSet::validate() const {
  for (const auto& [cp, subs] : map) {
    require(valid_scalar(cp), Err::MalformedHSetFile,
            "key " + cp_to_string(cp) + " is not a Unicode scalar");
    require(!subs.empty(), Err::MalformedHSetFile,
            cp_to_string(cp) + " has an empty replacement list");
    for (char32_t s : subs) {
      require(valid_scalar(s), Err::MalformedHSetFile,
              cp_to_string(cp) + " lists invalid scalar");
      require(s != cp, Err::MalformedHSetFile, cp_to_string(cp) + " maps to itself");
    }
  }
}

void HSet::save(const std::string& path) const {
  validate();
  nlohmann::json j;
  j["provenance"] = provenance.is_null() ? nlohmann::json::object() : provenance;
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [cp, subs] : map) {
    nlohmann::json arr = nlohmann::json::array();
    for (char32_t s : subs) arr.push_back(cp_to_string(s));
    m[cp_to_string(cp)] = std::move(arr);
  }
  j["map"] = std::move(m);
  std::ofstream out(path);
  require(out.good(), Err::FileUnreadable, "cannot write " + path);
  out << j.dump(2) << "\n";
}

HSet HSet::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Err::FileUnreadable, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Err::MalformedHSetFile, path + ": " + e.what());
  }
  require(j.is_object(), Err::MalformedHSetFile, path + ": top level must be an object");

  HSet h;
  if (j.contains("provenance")) h.provenance = j["provenance"];
  const nlohmann::json& entries = j.contains("map") ? j["map"] : j;
  require(entries.is_object(), Err::MalformedHSetFile, path + ": 'map' must be an object");
  try {
    for (const auto& [key, val] : entries.items()) {
      if (key == "provenance") continue;
      char32_t cp = cp_from_string(key);
      require(val.is_array(), Err::MalformedHSetFile, path + ": " + key + " must map to a list");
      std::vector<char32_t> subs;
      for (const auto& s : val) subs.push_back(cp_from_string(s.get<std::string>()));
      h.map.emplace(cp, std::move(subs));
    }
  } catch (const Error& e) {
    if (e.code() == Err::MalformedHSetFile) throw;
    fail(Err::MalformedHSetFile, path + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    fail(Err::MalformedHSetFile, path + ": " + e.what());
  }
  try {
    h.validate();
  } catch (const Error& e) {
    fail(Err::MalformedHSetFile, path + ": " + e.what());
  }
  return h;
}

std::string vp_perturb(const std::string& text, const AttackSpec& spec) {
  require(spec.p >= 0.0 && spec.p <= 1.0, Err::ConfigError,
          "attack probability must lie in [0,1]");
  if (spec.p == 0.0 || spec.hset == nullptr) return text;

  std::string out;
  out.reserve(text.size());
  std::uint64_t pos = 0;
  for (const Utf8Unit& u : utf8_scan(text)) {
    const std::uint64_t i = pos++;
    const std::vector<char32_t>* subs = nullptr;
    if (u.valid) {
      auto it = spec.hset->map.find(u.cp);
      if (it != spec.hset->map.end() && !it->second.empty()) subs = &it->second;
    }
    const double draw =
        static_cast<double>(hash_seq({spec.seed, i, 0}) >> 11) * 0x1.0p-53;
    if (subs && draw < spec.p) {
      const std::size_t k = hash_seq({spec.seed, i, 1}) % subs->size();
      utf8_append(out, (*subs)[k]);
    } else {
      out.append(text, u.offset, u.length);
    }
  }
  return out;
}

HSet curate_hset(const std::vector<NeighborSet>& neighbors, double tau,
                 const std::string& space_label) {
  require(tau > 0.0 && tau <= 1.0, Err::ConfigError, "tau must lie in (0,1]");
  HSet h;
  h.provenance = {{"space", space_label}, {"curation", "threshold"}, {"tau", tau}};
  for (const auto& ns : neighbors) {
    std::vector<char32_t> kept;
    for (std::size_t i = 0; i < ns.neighbors.size(); ++i)
      if (ns.similarities[i] >= tau && ns.neighbors[i] != ns.codepoint)
        kept.push_back(ns.neighbors[i]);
    if (!kept.empty()) h.map.emplace(ns.codepoint, std::move(kept));
  }
  return h;
}

HSet hset_from_neighbors(const std::vector<NeighborSet>& neighbors,
                         const std::string& space_label) {
  HSet h;
  h.provenance = {{"space", space_label}, {"curation", "all-neighbors"}};
  for (const auto& ns : neighbors) {
    std::vector<char32_t> kept;
    for (char32_t n : ns.neighbors)
      if (n != ns.codepoint) kept.push_back(n);
    if (!kept.empty()) h.map.emplace(ns.codepoint, std::move(kept));
  }
  return h;
}

namespace {

HSet half_hset(const SplitResult& split, bool train) {
  HSet h;
  h.provenance = {{"curation", train ? "intersection_split_train" : "intersection_split_eval"},
                  {"seed", split.seed}};
  for (const auto& e : split.entries) {
    const auto& half = train ? e.train_half : e.eval_half;
    if (!half.empty()) h.map.emplace(e.codepoint, half);
  }
  return h;
}

}  // namespace

HSet SplitResult::train_hset() const { return half_hset(*this, true); }
HSet SplitResult::eval_hset() const { return half_hset(*this, false); }

SplitResult intersection_split(const HSet& hset_i2ces, const std::vector<NeighborSet>& dces,
                               std::uint64_t seed) {
  std::map<char32_t, std::set<char32_t>> dces_of;
  for (const auto& ns : dces)
    dces_of[ns.codepoint].insert(ns.neighbors.begin(), ns.neighbors.end());

  SplitResult res;
  res.seed = seed;
  for (const auto& [cp, subs] : hset_i2ces.map) {
    std::vector<char32_t> inter;
    auto it = dces_of.find(cp);
    if (it != dces_of.end())
      for (char32_t s : subs)
        if (it->second.count(s)) inter.push_back(s);
    std::sort(inter.begin(), inter.end());
    inter.erase(std::unique(inter.begin(), inter.end()), inter.end());

    if (inter.size() < 2) {
      res.excluded.push_back(cp);
      continue;
    }
    Rng rng(hash_seq({seed, static_cast<std::uint64_t>(cp)}));
    rng.shuffle(inter);
    const std::size_t n_eval = inter.size() / 2;
    SplitResult::Entry e;
    e.codepoint = cp;
    e.eval_half.assign(inter.begin(), inter.begin() + static_cast<std::ptrdiff_t>(n_eval));
    e.train_half.assign(inter.begin() + static_cast<std::ptrdiff_t>(n_eval), inter.end());
    std::sort(e.eval_half.begin(), e.eval_half.end());
    std::sort(e.train_half.begin(), e.train_half.end());
    res.entries.push_back(std::move(e));
  }
  return res;
}

}  // namespace hglab
