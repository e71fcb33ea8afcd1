#include "hglab/pgm.hpp"

#include <cmath>
#include <fstream>

#include "hglab/errors.hpp"

namespace hglab {

void write_pgm(const std::string& path, const GlyphBitmap& b) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), Err::FileUnreadable, "cannot open for writing: " + path);
  f << "P5\n" << b.width << " " << b.height << "\n255\n";
  for (float p : b.pixels) {
    float clamped = std::min(std::max(p, 0.0f), 1.0f);
    f.put(static_cast<char>(std::lround(clamped * 255.0f)));
  }
  require(static_cast<bool>(f), Err::FileUnreadable, "write failed: " + path);
}

GlyphBitmap read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), Err::FileUnreadable, "cannot open: " + path);
  std::string magic;
  f >> magic;
  require(magic == "P5", Err::MalformedLine, "not a P5 PGM: " + path);
  int w = 0, h = 0, maxval = 0;
  f >> w >> h >> maxval;
  require(w > 0 && h > 0 && maxval > 0 && maxval < 65536, Err::MalformedLine,
          "bad PGM header: " + path);
  f.get();  // single whitespace after header
  GlyphBitmap b;
  b.width = w;
  b.height = h;
  b.pixels.resize(static_cast<size_t>(w) * h);
  std::vector<char> raw(b.pixels.size());
  f.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  require(f.gcount() == static_cast<std::streamsize>(raw.size()), Err::MalformedLine,
          "truncated PGM payload: " + path);
  for (size_t i = 0; i < raw.size(); ++i)
    b.pixels[i] = static_cast<float>(static_cast<unsigned char>(raw[i])) / maxval;
  return b;
}

}  // namespace hglab
