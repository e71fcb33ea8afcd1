#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "hglab/errors.hpp"
#include "hglab/rng.hpp"

namespace hglab {

inline std::size_t numel_of(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    require(d > 0, Err::ShapeMismatch, "non-positive dimension " + std::to_string(d));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

// Dense row-major tensor. Instantiated with float for all models; the
// double instantiation exists so gradient checks can run the identical
// code without float rounding drowning the finite differences.
template <class T>
struct Ten {
  std::vector<int> shape;
  std::vector<T> data;

  Ten() = default;
  explicit Ten(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), T(0)) {}
  Ten(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    require(data.size() == numel_of(shape), Err::ShapeMismatch,
            "data length does not match shape product");
  }

  std::size_t numel() const { return data.size(); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  T& operator[](std::size_t i) { return data[i]; }
  T operator[](std::size_t i) const { return data[i]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Ten& o) const { return shape == o.shape; }

  // View with a new shape over the same element count.
  Ten reshaped(std::vector<int> s) const {
    require(numel_of(s) == numel(), Err::ShapeMismatch, "reshape changes element count");
    return Ten(std::move(s), data);
  }

  template <class U>
  Ten<U> cast() const {
    Ten<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

using Tensor = Ten<float>;

template <class T>
Ten<T> uniform_tensor(std::vector<int> shape, T lo, T hi, Rng& rng) {
  Ten<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
  return t;
}

}  // namespace hglab
