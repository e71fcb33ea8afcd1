#include "hglab/utf8.hpp"

#include <cstdio>

#include "hglab/errors.hpp"

namespace hglab {

namespace {

// Returns the number of bytes consumed (>=1) and writes the scalar, or
// returns 0 if the sequence starting at i is not well-formed UTF-8.
size_t decode_one(std::string_view s, size_t i, char32_t& out) {
  const auto b = [&](size_t k) { return static_cast<unsigned char>(s[i + k]); };
  unsigned char b0 = b(0);
  if (b0 < 0x80) {
    out = b0;
    return 1;
  }
  auto cont = [&](size_t k) { return i + k < s.size() && (b(k) & 0xc0) == 0x80; };
  if ((b0 & 0xe0) == 0xc0) {
    if (!cont(1)) return 0;
    char32_t cp = ((b0 & 0x1fu) << 6) | (b(1) & 0x3fu);
    if (cp < 0x80) return 0;  // overlong
    out = cp;
    return 2;
  }
  if ((b0 & 0xf0) == 0xe0) {
    if (!cont(1) || !cont(2)) return 0;
    char32_t cp = ((b0 & 0x0fu) << 12) | ((b(1) & 0x3fu) << 6) | (b(2) & 0x3fu);
    if (cp < 0x800 || (cp >= 0xd800 && cp <= 0xdfff)) return 0;
    out = cp;
    return 3;
  }
  if ((b0 & 0xf8) == 0xf0) {
    if (!cont(1) || !cont(2) || !cont(3)) return 0;
    char32_t cp = ((b0 & 0x07u) << 18) | ((b(1) & 0x3fu) << 12) | ((b(2) & 0x3fu) << 6) |
                  (b(3) & 0x3fu);
    if (cp < 0x10000 || cp > 0x10ffff) return 0;
    out = cp;
    return 4;
  }
  return 0;
}

}  // namespace

std::vector<Utf8Unit> utf8_scan(std::string_view s) {
  std::vector<Utf8Unit> units;
  units.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    char32_t cp = 0;
    size_t n = decode_one(s, i, cp);
    if (n == 0) {
      units.push_back({0xFFFD, false, static_cast<uint32_t>(i), 1});
      ++i;
    } else {
      units.push_back({cp, true, static_cast<uint32_t>(i), static_cast<uint32_t>(n)});
      i += n;
    }
  }
  return units;
}

std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  for (const auto& u : utf8_scan(s)) out.push_back(u.cp);
  return out;
}

void utf8_append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

std::string utf8_encode(char32_t cp) {
  std::string out;
  utf8_append(out, cp);
  return out;
}

std::string utf8_encode(const std::u32string& s) {
  std::string out;
  for (char32_t cp : s) utf8_append(out, cp);
  return out;
}

std::string cp_to_string(char32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
  return buf;
}

char32_t cp_from_string(std::string_view s) {
  if (s.size() >= 2 && (s[0] == 'U' || s[0] == 'u') && s[1] == '+') s.remove_prefix(2);
  require(!s.empty() && s.size() <= 6, Err::MalformedLine, "bad codepoint literal");
  char32_t v = 0;
  for (char c : s) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else fail(Err::MalformedLine, "bad hex digit in codepoint literal");
    v = (v << 4) | static_cast<char32_t>(d);
  }
  require(v <= 0x10ffff, Err::MalformedLine, "codepoint out of range");
  return v;
}

}  // namespace hglab
