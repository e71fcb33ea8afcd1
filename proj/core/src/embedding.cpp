#include "hglab/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "hglab/errors.hpp"
#include "hglab/raster.hpp"
#include "hglab/utf8.hpp"

namespace hglab {

using nlohmann::json;

const char* space_kind_name(SpaceKind k) { return k == SpaceKind::Ices ? "ICES" : "I2CES"; }

SpaceKind space_kind_from(const std::string& name) {
  if (name == "ICES") return SpaceKind::Ices;
  if (name == "I2CES") return SpaceKind::I2ces;
  fail(Err::MalformedLine, "unknown space kind '" + name + "'");
}

EmbeddingSpace::EmbeddingSpace(SpaceKind kind, int dim, BuildMeta meta)
    : kind_(kind), dim_(dim), meta_(std::move(meta)) {
  require(dim_ > 0, Err::LengthMismatch, "space dim must be positive");
}

bool EmbeddingSpace::contains(char32_t cp) const {
  return std::binary_search(cps_.begin(), cps_.end(), cp);
}

std::span<const float> EmbeddingSpace::vec(char32_t cp) const {
  auto it = std::lower_bound(cps_.begin(), cps_.end(), cp);
  require(it != cps_.end() && *it == cp, Err::UnknownCodepoint,
          cp_to_string(cp) + " not in " + space_kind_name(kind_) + " space");
  std::size_t row = static_cast<std::size_t>(it - cps_.begin());
  return {data_.data() + row * dim_, static_cast<std::size_t>(dim_)};
}

void EmbeddingSpace::add(char32_t cp, std::span<const float> v) {
  require(v.size() == static_cast<std::size_t>(dim_), Err::LengthMismatch,
          "vector length " + std::to_string(v.size()) + " != dim " + std::to_string(dim_));
  require(cps_.empty() || cps_.back() < cp, Err::UnknownCodepoint,
          "codepoints must be added in ascending order");
  bool nonzero = std::any_of(v.begin(), v.end(), [](float x) { return x != 0.f; });
  require(nonzero, Err::ZeroVector, "all-zero embedding for " + cp_to_string(cp));
  cps_.push_back(cp);
  data_.insert(data_.end(), v.begin(), v.end());
}

void EmbeddingSpace::save(const std::string& stem) const {
  json header;
  header["kind"] = space_kind_name(kind_);
  header["dim"] = dim_;
  json meta;
  meta["font_name"] = meta_.font_name;
  meta["canvas_w"] = meta_.canvas_w;
  meta["canvas_h"] = meta_.canvas_h;
  meta["classifier_id"] = meta_.classifier_id;
  meta["layer_choice"] = meta_.layer_choice;
  meta["ave_choice"] = meta_.ave_choice;
  header["build_meta"] = meta;
  json cps = json::array();
  for (char32_t cp : cps_) cps.push_back(cp_to_string(cp));
  header["codepoints"] = cps;

  std::ofstream jout(stem + ".json", std::ios::binary);
  require(jout.good(), Err::FileUnreadable, "cannot write " + stem + ".json");
  jout << header.dump(1) << "\n";

  std::ofstream bout(stem + ".bin", std::ios::binary);
  require(bout.good(), Err::FileUnreadable, "cannot write " + stem + ".bin");
  static_assert(sizeof(float) == 4);
  bout.write(reinterpret_cast<const char*>(data_.data()),
             static_cast<std::streamsize>(data_.size() * sizeof(float)));
  require(bout.good(), Err::FileUnreadable, "short write to " + stem + ".bin");
}

EmbeddingSpace EmbeddingSpace::load(const std::string& stem) {
  std::ifstream jin(stem + ".json", std::ios::binary);
  require(jin.good(), Err::FileUnreadable, "cannot open " + stem + ".json");
  json header;
  try {
    jin >> header;
  } catch (const json::exception& e) {
    fail(Err::MalformedLine, stem + ".json: " + e.what());
  }

  BuildMeta meta;
  const auto& jm = header.at("build_meta");
  meta.font_name = jm.value("font_name", "");
  meta.canvas_w = jm.value("canvas_w", 0);
  meta.canvas_h = jm.value("canvas_h", 0);
  meta.classifier_id = jm.value("classifier_id", "");
  meta.layer_choice = jm.value("layer_choice", "");
  meta.ave_choice = jm.value("ave_choice", "");
  EmbeddingSpace space(space_kind_from(header.at("kind").get<std::string>()),
                       header.at("dim").get<int>(), meta);

  std::vector<char32_t> cps;
  for (const auto& s : header.at("codepoints")) cps.push_back(cp_from_string(s.get<std::string>()));

  std::ifstream bin(stem + ".bin", std::ios::binary | std::ios::ate);
  require(bin.good(), Err::FileUnreadable, "cannot open " + stem + ".bin");
  auto bytes = static_cast<std::size_t>(bin.tellg());
  std::size_t expect = cps.size() * static_cast<std::size_t>(space.dim_) * sizeof(float);
  require(bytes == expect, Err::LengthMismatch,
          stem + ".bin holds " + std::to_string(bytes) + " bytes, header implies " +
              std::to_string(expect));
  bin.seekg(0);
  std::vector<float> row(static_cast<std::size_t>(space.dim_));
  for (char32_t cp : cps) {
    bin.read(reinterpret_cast<char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(float)));
    require(bin.good(), Err::FileUnreadable, "short read from " + stem + ".bin");
    space.add(cp, row);
  }
  return space;
}

void NeighborSet::save_json(const std::string& path) const {
  json j;
  j["codepoint"] = cp_to_string(codepoint);
  json ns = json::array(), ss = json::array();
  for (char32_t n : neighbors) ns.push_back(cp_to_string(n));
  for (double s : similarities) ss.push_back(s);
  j["neighbors"] = ns;
  j["similarities"] = ss;
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Err::FileUnreadable, "cannot write " + path);
  out << j.dump(1) << "\n";
}

NeighborSet NeighborSet::load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Err::FileUnreadable, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Err::MalformedLine, path + ": " + e.what());
  }
  NeighborSet out;
  out.codepoint = cp_from_string(j.at("codepoint").get<std::string>());
  for (const auto& s : j.at("neighbors")) out.neighbors.push_back(cp_from_string(s.get<std::string>()));
  for (const auto& s : j.at("similarities")) out.similarities.push_back(s.get<double>());
  require(out.neighbors.size() == out.similarities.size(), Err::LengthMismatch,
          path + ": neighbors and similarities differ in length");
  return out;
}

double cosine(std::span<const float> u, std::span<const float> v) {
  require(u.size() == v.size(), Err::LengthMismatch,
          "cosine over lengths " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  require(nu > 0 && nv > 0, Err::ZeroVector, "cosine of all-zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

NeighborSet top_k(const EmbeddingSpace& space, char32_t cp, int k) {
  require(k > 0, Err::LengthMismatch, "top_k needs k > 0");
  auto ref = space.vec(cp);  // throws UnknownCodepoint
  std::vector<std::pair<double, char32_t>> scored;
  scored.reserve(space.size());
  for (char32_t other : space.codepoints()) {
    if (other == cp) continue;
    scored.emplace_back(cosine(ref, space.vec(other)), other);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));

  NeighborSet out;
  out.codepoint = cp;
  for (auto& [s, c] : scored) {
    out.neighbors.push_back(c);
    out.similarities.push_back(s);
  }
  return out;
}

EmbeddingSpace build_ices(const std::vector<char32_t>& charset, const FontFace& font,
                          std::vector<char32_t>* dropped) {
  require(!charset.empty(), Err::EmptySpace, "ICES build over empty charset");
  std::vector<char32_t> cps(charset);
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());

  BuildMeta meta;
  meta.font_name = font.name();
  meta.canvas_w = kIcesCanvas;
  meta.canvas_h = kIcesCanvas;
  EmbeddingSpace space(SpaceKind::Ices, kIcesCanvas * kIcesCanvas, meta);

  for (char32_t cp : cps) {
    try {
      auto bm = rasterize_centered(cp, font, static_cast<float>(kIcesCanvas), kIcesCanvas,
                                   kIcesCanvas);
      space.add(cp, bm.pixels);
    } catch (const Error&) {
      if (dropped) dropped->push_back(cp);
    }
  }
  require(space.size() > 0, Err::EmptySpace, "no codepoint in the charset produced ink");
  return space;
}

}  // namespace hglab
