#pragma once

#include <stdexcept>
#include <string>

namespace hglab {

// Every failure the library reports, by name. CLI diagnostics print the
// enum name so callers can grep for the failing contract.
enum class Err {
  // fonts & rasterization
  FileUnreadable,
  NotAFont,
  NotRenderable,
  BlankGlyph,
  GlyphOverflow,
  // embedding spaces & names
  EmptySpace,
  MalformedLine,
  NoCaseToken,
  NoBaseLetter,
  UnknownCodepoint,
  ZeroVector,
  LengthMismatch,
  // tensor / nn engine
  ShapeMismatch,
  OddDimension,
  LabelOutOfRange,
  NoForwardState,
  // classifier & text models
  EmptyCharset,
  InvalidSplit,
  DidNotConverge,
  WrongCanvas,
  InvalidDataset,
  ClassCountMismatch,
  EmptyDataset,
  // attack
  MalformedHSetFile,
  // experiments
  MalformedCSV,
  InsufficientSamples,
  ConfigError,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Err code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace hglab
