#pragma once

#include <map>
#include <string>
#include <vector>

#include "hglab/embedding.hpp"

namespace hglab {

// Unicode character names, tokenized. Built from a UnicodeData.txt-style
// file; codepoints whose name field is a bracketed label (<control>,
// <CJK Ideograph, First>, ...) are absent.
class NamesTable {
 public:
  bool contains(char32_t cp) const { return tokens_.count(cp) != 0; }
  const std::vector<std::string>& tokens(char32_t cp) const;
  std::size_t size() const { return tokens_.size(); }

  void insert(char32_t cp, std::vector<std::string> toks);

  // All codepoints whose name holds exactly one case token ("SMALL" or
  // "CAPITAL") matching `caseq` plus the single-letter token `letter`.
  // Names with both case tokens (small capitals, titlecase digraphs) are
  // in neither bucket.
  const std::vector<char32_t>& bucket(char caseq, char letter) const;

 private:
  std::map<char32_t, std::vector<std::string>> tokens_;
  // keyed by caseq*26 slots: [0..25] SMALL A..Z, [26..51] CAPITAL A..Z
  std::vector<std::vector<char32_t>> buckets_{52};
};

NamesTable parse_names_list(const std::string& path);

// Descriptive space neighbors: same case token (SMALL/CAPITAL) plus same
// single-letter base token. Unranked; similarities are all 1.0.
NeighborSet dces_neighbors(char32_t cp, const NamesTable& table);

}  // namespace hglab
