#pragma once

#include <cstdint>
#include <initializer_list>

namespace hglab {

// splitmix64 finalizer. Good diffusion, trivially portable; all randomness
// in the toolkit goes through this so results do not depend on the C++
// standard library's distribution implementations.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Order-sensitive combine for counter-based draws: a draw keyed by
// (seed, position, ...) is independent of evaluation order.
inline uint64_t hash_seq(std::initializer_list<uint64_t> vs) {
  uint64_t h = 0x243f6a8885a308d3ull;  // arbitrary odd constant
  for (uint64_t v : vs) h = mix64(h ^ v);
  return h;
}

// Sequential generator (splitmix64 stream).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() { return mix64(state_++); }

  // [0, 1), 53-bit mantissa
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  float next_float() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

  // uniform in [0, n); n > 0. Modulo bias is < 2^-53 for our n, ignored.
  uint64_t below(uint64_t n) { return next_u64() % n; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  template <typename T>
  void shuffle(T* data, size_t n) {
    for (size_t i = n; i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      T tmp = data[i - 1];
      data[i - 1] = data[j];
      data[j] = tmp;
    }
  }

  template <typename C>
  void shuffle(C& container) {
    shuffle(container.data(), container.size());
  }

 private:
  uint64_t state_;
};

// One-off counter-based draws.
inline double unit_at(uint64_t seed, uint64_t counter) {
  return static_cast<double>(hash_seq({seed, counter}) >> 11) * 0x1.0p-53;
}

}  // namespace hglab
