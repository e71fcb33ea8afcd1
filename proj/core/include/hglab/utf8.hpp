#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hglab {

// One decoded unit of an input string. Invalid bytes decode as single
// units with valid=false so perturbation can copy them through verbatim.
struct Utf8Unit {
  char32_t cp;     // scalar value, or 0xFFFD when !valid
  bool valid;
  uint32_t offset; // byte offset in the source string
  uint32_t length; // byte length (1 for invalid bytes)
};

std::vector<Utf8Unit> utf8_scan(std::string_view s);

// Lossy decode: invalid bytes become U+FFFD.
std::u32string utf8_decode(std::string_view s);

void utf8_append(std::string& out, char32_t cp);
std::string utf8_encode(char32_t cp);
std::string utf8_encode(const std::u32string& s);

// "U+0062" <-> codepoint. parse accepts 4-6 hex digits, upper or lower case.
std::string cp_to_string(char32_t cp);
char32_t cp_from_string(std::string_view s);  // throws Error(MalformedLine) on bad syntax

}  // namespace hglab
