#include "hglab/names.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hglab/errors.hpp"
#include "hglab/utf8.hpp"

namespace hglab {

namespace {

bool is_case_token(const std::string& t) { return t == "SMALL" || t == "CAPITAL"; }

bool is_letter_token(const std::string& t) { return t.size() == 1 && t[0] >= 'A' && t[0] <= 'Z'; }

int bucket_index(char caseq, char letter) {
  return (caseq == 'C' ? 26 : 0) + (letter - 'A');
}

}  // namespace

const std::vector<std::string>& NamesTable::tokens(char32_t cp) const {
  auto it = tokens_.find(cp);
  require(it != tokens_.end(), Err::UnknownCodepoint, "no name entry for " + cp_to_string(cp));
  return it->second;
}

void NamesTable::insert(char32_t cp, std::vector<std::string> toks) {
  bool small = false, capital = false;
  for (auto& t : toks) {
    if (t == "SMALL") small = true;
    if (t == "CAPITAL") capital = true;
  }
  // Names holding both tokens (SMALL CAPITAL letters, titlecase digraphs)
  // have no single case and sit in neither bucket.
  if (small != capital) {
    const char caseq = small ? 'S' : 'C';
    for (auto& t : toks)
      if (is_letter_token(t)) buckets_[bucket_index(caseq, t[0])].push_back(cp);
  }
  tokens_.emplace(cp, std::move(toks));
}

const std::vector<char32_t>& NamesTable::bucket(char caseq, char letter) const {
  return buckets_[bucket_index(caseq, letter)];
}

NamesTable parse_names_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Err::FileUnreadable, "cannot open names list " + path);
  NamesTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto semi1 = line.find(';');
    require(semi1 != std::string::npos, Err::MalformedLine,
            path + ":" + std::to_string(lineno) + ": no field separator");
    auto semi2 = line.find(';', semi1 + 1);
    std::string hex = line.substr(0, semi1);
    std::string name = line.substr(semi1 + 1, (semi2 == std::string::npos ? line.size() : semi2) - semi1 - 1);
    char32_t cp = 0;
    try {
      std::size_t used = 0;
      unsigned long v = std::stoul(hex, &used, 16);
      require(used == hex.size() && v <= 0x10FFFF, Err::MalformedLine, "");
      cp = static_cast<char32_t>(v);
    } catch (const std::exception&) {
      fail(Err::MalformedLine,
           path + ":" + std::to_string(lineno) + ": bad codepoint field '" + hex + "'");
    }
    if (name.empty() || name.front() == '<') continue;  // <control>, range markers
    std::vector<std::string> toks;
    std::istringstream ts(name);
    for (std::string tok; ts >> tok;) toks.push_back(std::move(tok));
    table.insert(cp, std::move(toks));
  }
  return table;
}

NeighborSet dces_neighbors(char32_t cp, const NamesTable& table) {
  const auto& toks = table.tokens(cp);
  bool small = false, capital = false;
  std::vector<char> letters;
  for (auto& t : toks) {
    if (is_case_token(t)) (t[0] == 'S' ? small : capital) = true;
    if (is_letter_token(t)) letters.push_back(t[0]);
  }
  require(small != capital, Err::NoCaseToken,
          cp_to_string(cp) + " has no unambiguous SMALL/CAPITAL token in its name");
  require(!letters.empty(), Err::NoBaseLetter,
          cp_to_string(cp) + " has no single-letter base token in its name");

  const char caseq = small ? 'S' : 'C';
  std::vector<char32_t> merged;
  for (char l : letters) {
    const auto& b = table.bucket(caseq, l);
    merged.insert(merged.end(), b.begin(), b.end());
  }
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  std::erase(merged, cp);

  NeighborSet out;
  out.codepoint = cp;
  out.neighbors = std::move(merged);
  out.similarities.assign(out.neighbors.size(), 1.0);
  return out;
}

}  // namespace hglab
