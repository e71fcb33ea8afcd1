#include "hglab/dataset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>

#include "hglab/errors.hpp"
#include "hglab/rng.hpp"

namespace hglab {

std::vector<std::size_t> Dataset::per_class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (const auto& s : samples) ++counts[static_cast<std::size_t>(s.label)];
  return counts;
}

namespace {

// Splits one complete CSV record; quotes per RFC 4180.
std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  require(!quoted, Err::MalformedCSV, where + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

Dataset read_csv_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Err::FileUnreadable, "cannot open dataset " + path);
  Dataset ds;
  std::string line, record;
  std::size_t lineno = 0, record_line = 0;
  int max_label = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (record.empty()) {
      if (line.empty()) continue;
      record_line = lineno;
      record = line;
    } else {
      // a quoted field is still open: the physical newline belongs to it
      record += '\n';
      record += line;
    }
    if (std::count(record.begin(), record.end(), '"') % 2 != 0) continue;
    const std::string where = path + ":" + std::to_string(record_line);
    auto fields = split_csv_line(record, where);
    record.clear();
    require(fields.size() == 3, Err::MalformedCSV,
            where + ": expected 3 fields (class,title,description), got " +
                std::to_string(fields.size()));
    int label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(fields[0], &used);
      require(used == fields[0].size() && label >= 1, Err::MalformedCSV, "");
    } catch (const std::exception&) {
      fail(Err::MalformedCSV, where + ": class field '" + fields[0] + "' is not a positive integer");
    }
    max_label = std::max(max_label, label);
    ds.samples.push_back({label - 1, fields[1] + " " + fields[2]});
  }
  require(record.empty(), Err::MalformedCSV,
          path + ":" + std::to_string(record_line) + ": unterminated quote");
  require(!ds.samples.empty(), Err::EmptyDataset, path + " holds no samples");
  ds.num_classes = max_label;
  return ds;
}

void write_csv_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Err::FileUnreadable, "cannot write " + path);
  for (const auto& s : ds.samples) {
    // title/description split is not preserved; emit an empty title
    out << (s.label + 1) << "," << csv_quote("") << "," << csv_quote(s.text) << "\n";
  }
}

Dataset stratified_subsample(const Dataset& full, std::size_t n, std::uint64_t seed) {
  require(full.num_classes >= 1, Err::EmptyDataset, "subsample of an empty dataset");
  require(n >= 1, Err::InsufficientSamples, "requested an empty subsample");
  const std::size_t K = static_cast<std::size_t>(full.num_classes);

  std::vector<std::vector<std::size_t>> by_class(K);
  for (std::size_t i = 0; i < full.samples.size(); ++i)
    by_class[static_cast<std::size_t>(full.samples[i].label)].push_back(i);

  Dataset out;
  out.num_classes = full.num_classes;
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t want = n / K + (k < n % K ? 1 : 0);
    require(want <= by_class[k].size(), Err::InsufficientSamples,
            "class " + std::to_string(k + 1) + " has " + std::to_string(by_class[k].size()) +
                " samples, need " + std::to_string(want));
    Rng rng(hash_seq({seed, k, 0x57A7ull}));
    rng.shuffle(by_class[k]);
    for (std::size_t i = 0; i < want; ++i) out.samples.push_back(full.samples[by_class[k][i]]);
  }
  Rng rng(hash_seq({seed, 0xD5ull}));
  rng.shuffle(out.samples);
  return out;
}

namespace {

const std::array<std::vector<const char*>, 4> kTopicWords = {{
    // world affairs
    {"government", "minister", "election", "treaty", "border", "embassy", "parliament",
     "diplomat", "summit", "sanctions", "refugee", "ceasefire", "coalition", "province",
     "protest", "military", "nation", "president", "senate", "foreign", "crisis", "votes",
     "capital", "region", "peace", "conflict", "leader", "policy", "council", "reform"},
    // sports
    {"coach", "season", "playoff", "tournament", "striker", "goalkeeper", "inning",
     "marathon", "champion", "league", "stadium", "referee", "penalty", "victory",
     "defeat", "roster", "transfer", "quarterback", "sprint", "medal", "scoreboard",
     "halftime", "overtime", "derby", "fixture", "batting", "squad", "contest",
     "qualifier", "record"},
    // business
    {"market", "shares", "profit", "revenue", "merger", "investor", "quarterly",
     "earnings", "dividend", "startup", "acquisition", "bankruptcy", "portfolio",
     "inflation", "forecast", "retail", "exports", "commodity", "currency", "deficit",
     "stakeholder", "valuation", "lending", "interest", "trading", "economy", "billion",
     "contract", "supplier", "audit"},
    // science & technology
    {"software", "satellite", "genome", "processor", "telescope", "algorithm", "vaccine",
     "quantum", "bandwidth", "asteroid", "neuron", "compiler", "robotics", "encryption",
     "molecule", "spacecraft", "browser", "particle", "reactor", "database", "protein",
     "silicon", "firmware", "galaxy", "sensor", "laboratory", "prototype", "enzyme",
     "network", "research"},
}};

const std::vector<const char*> kFillerWords = {
    "the",  "a",     "of",    "and",   "to",     "in",    "on",    "for",   "with",
    "after", "over",  "from",  "said",  "will",   "new",   "has",   "its",   "as",
    "at",    "by",    "was",   "were",  "more",   "than",  "into",  "amid",  "under",
    "last",  "first", "again", "early", "latest", "major", "local", "group", "plan",
    "talks", "report", "week",  "year",  "today",  "still", "while", "could", "three",
    "some",  "officials", "announced", "expected", "between"};

}  // namespace

Dataset make_synthetic_corpus(std::size_t n, std::uint64_t seed) {
  require(n >= 4, Err::InsufficientSamples, "synthetic corpus needs at least one sample per class");
  Dataset ds;
  ds.num_classes = 4;
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 4);
    Rng rng(hash_seq({seed, i, 0xC095ull}));
    const auto& topic = kTopicWords[static_cast<std::size_t>(label)];

    std::string text;
    const std::size_t words = 15 + rng.below(21);  // 15..35
    for (std::size_t w = 0; w < words; ++w) {
      if (!text.empty()) text.push_back(' ');
      // roughly a third of the words carry the class signal
      if (rng.next_double() < 0.35)
        text += topic[rng.below(topic.size())];
      else
        text += kFillerWords[rng.below(kFillerWords.size())];
    }
    text.push_back('.');
    ds.samples.push_back({label, std::move(text)});
  }
  Rng rng(hash_seq({seed, 0x5011ull}));
  rng.shuffle(ds.samples);
  return ds;
}

}  // namespace hglab
