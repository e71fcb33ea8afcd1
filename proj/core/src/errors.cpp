#include "hglab/errors.hpp"

namespace hglab {

const char* err_name(Err e) {
  switch (e) {
    case Err::FileUnreadable: return "FileUnreadable";
    case Err::NotAFont: return "NotAFont";
    case Err::NotRenderable: return "NotRenderable";
    case Err::BlankGlyph: return "BlankGlyph";
    case Err::GlyphOverflow: return "GlyphOverflow";
    case Err::EmptySpace: return "EmptySpace";
    case Err::MalformedLine: return "MalformedLine";
    case Err::NoCaseToken: return "NoCaseToken";
    case Err::NoBaseLetter: return "NoBaseLetter";
    case Err::UnknownCodepoint: return "UnknownCodepoint";
    case Err::ZeroVector: return "ZeroVector";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::OddDimension: return "OddDimension";
    case Err::LabelOutOfRange: return "LabelOutOfRange";
    case Err::NoForwardState: return "NoForwardState";
    case Err::EmptyCharset: return "EmptyCharset";
    case Err::InvalidSplit: return "InvalidSplit";
    case Err::DidNotConverge: return "DidNotConverge";
    case Err::WrongCanvas: return "WrongCanvas";
    case Err::InvalidDataset: return "InvalidDataset";
    case Err::ClassCountMismatch: return "ClassCountMismatch";
    case Err::EmptyDataset: return "EmptyDataset";
    case Err::MalformedHSetFile: return "MalformedHSetFile";
    case Err::MalformedCSV: return "MalformedCSV";
    case Err::InsufficientSamples: return "InsufficientSamples";
    case Err::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}


}  // namespace hglab
