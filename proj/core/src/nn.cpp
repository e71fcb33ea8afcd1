#include "hglab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Dense>

namespace hglab {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using CMapMat = Eigen::Map<const RowMat<T>>;

void check_rank(const std::vector<int>& shape, int want, const char* who) {
  require(static_cast<int>(shape.size()) == want, Err::ShapeMismatch,
          std::string(who) + ": expected rank " + std::to_string(want) + ", got rank " +
              std::to_string(shape.size()));
}

// x: C×H×W sample, col: (C·kh·kw)×(Ho·Wo) row-major.
template <class T>
void im2col(const T* x, int C, int H, int W, int kh, int kw, int pad, int Ho, int Wo, T* col) {
  const int P = Ho * Wo;
  for (int c = 0; c < C; ++c)
    for (int dy = 0; dy < kh; ++dy)
      for (int dx = 0; dx < kw; ++dx) {
        T* row = col + (static_cast<std::size_t>(c) * kh * kw + dy * kw + dx) * P;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy + dy - pad;
          T* dst = row + static_cast<std::size_t>(oy) * Wo;
          if (iy < 0 || iy >= H) {
            std::fill(dst, dst + Wo, T(0));
            continue;
          }
          const T* src = x + (static_cast<std::size_t>(c) * H + iy) * W;
          const int lo = std::max(0, pad - dx);
          const int hi = std::min(Wo, W + pad - dx);  // ox valid in [lo, hi)
          std::fill(dst, dst + lo, T(0));
          for (int ox = lo; ox < hi; ++ox) dst[ox] = src[ox + dx - pad];
          std::fill(dst + std::max(lo, hi), dst + Wo, T(0));
        }
      }
}

template <class T>
void col2im_add(const T* col, int C, int H, int W, int kh, int kw, int pad, int Ho, int Wo, T* x) {
  const int P = Ho * Wo;
  for (int c = 0; c < C; ++c)
    for (int dy = 0; dy < kh; ++dy)
      for (int dx = 0; dx < kw; ++dx) {
        const T* row = col + (static_cast<std::size_t>(c) * kh * kw + dy * kw + dx) * P;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy + dy - pad;
          if (iy < 0 || iy >= H) continue;
          T* dst = x + (static_cast<std::size_t>(c) * H + iy) * W;
          const T* src = row + static_cast<std::size_t>(oy) * Wo;
          const int lo = std::max(0, pad - dx);
          const int hi = std::min(Wo, W + pad - dx);
          for (int ox = lo; ox < hi; ++ox) dst[ox + dx - pad] += src[ox];
        }
      }
}

template <class T>
T glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return static_cast<T>(std::sqrt(6.0 / (static_cast<double>(fan_in) + static_cast<double>(fan_out))));
}

}  // namespace

// ---------------- Conv2D ----------------

template <class T>
Conv2DT<T>::Conv2DT(int in_c, int out_c, int kh, int kw, int pad)
    : in_c_(in_c), out_c_(out_c), kh_(kh), kw_(kw), pad_(pad) {
  require(in_c > 0 && out_c > 0 && kh > 0 && kw > 0 && pad >= 0, Err::ShapeMismatch,
          "conv2d parameters must be positive (padding may be zero)");
  w_ = Ten<T>({out_c_, in_c_, kh_, kw_});
  b_ = Ten<T>({out_c_});
  gw_ = Ten<T>({out_c_, in_c_, kh_, kw_});
  gb_ = Ten<T>({out_c_});
}

template <class T>
void Conv2DT<T>::init(Rng& rng) {
  const T bound = glorot_bound<T>(static_cast<std::size_t>(in_c_) * kh_ * kw_,
                                  static_cast<std::size_t>(out_c_) * kh_ * kw_);
  for (auto& v : w_.data) v = static_cast<T>(rng.uniform(-bound, bound));
  b_.fill(T(0));
}

template <class T>
Ten<T> Conv2DT<T>::forward(const Ten<T>& x, bool record) {
  check_rank(x.shape, 4, "conv2d");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(C == in_c_, Err::ShapeMismatch,
          "conv2d: input has " + std::to_string(C) + " channels, layer expects " +
              std::to_string(in_c_));
  const int Ho = H + 2 * pad_ - kh_ + 1;
  const int Wo = W + 2 * pad_ - kw_ + 1;
  require(Ho >= 1 && Wo >= 1, Err::ShapeMismatch, "conv2d: kernel larger than padded input");

  const int K = in_c_ * kh_ * kw_;
  const int P = Ho * Wo;
  Ten<T> y({B, out_c_, Ho, Wo});
  std::vector<T> col(static_cast<std::size_t>(K) * P);
  CMapMat<T> wm(w_.ptr(), out_c_, K);
  for (int b = 0; b < B; ++b) {
    im2col(x.ptr() + static_cast<std::size_t>(b) * C * H * W, C, H, W, kh_, kw_, pad_, Ho, Wo,
           col.data());
    MapMat<T> ym(y.ptr() + static_cast<std::size_t>(b) * out_c_ * P, out_c_, P);
    CMapMat<T> cm(col.data(), K, P);
    ym.noalias() = wm * cm;
    for (int o = 0; o < out_c_; ++o) ym.row(o).array() += b_[static_cast<std::size_t>(o)];
  }
  if (record) {
    x_ = x;
    recorded_ = true;
  }
  return y;
}

template <class T>
Ten<T> Conv2DT<T>::backward(const Ten<T>& gy) {
  require(recorded_, Err::NoForwardState, "conv2d backward without recorded forward");
  const int B = x_.dim(0), C = x_.dim(1), H = x_.dim(2), W = x_.dim(3);
  const int Ho = H + 2 * pad_ - kh_ + 1;
  const int Wo = W + 2 * pad_ - kw_ + 1;
  require(gy.shape == std::vector<int>({B, out_c_, Ho, Wo}), Err::ShapeMismatch,
          "conv2d backward: output-grad shape mismatch");

  const int K = in_c_ * kh_ * kw_;
  const int P = Ho * Wo;
  Ten<T> gx({B, C, H, W});
  std::vector<T> col(static_cast<std::size_t>(K) * P);
  std::vector<T> dcol(static_cast<std::size_t>(K) * P);
  CMapMat<T> wm(w_.ptr(), out_c_, K);
  MapMat<T> gwm(gw_.ptr(), out_c_, K);
  for (int b = 0; b < B; ++b) {
    const T* xb = x_.ptr() + static_cast<std::size_t>(b) * C * H * W;
    const T* gyb = gy.ptr() + static_cast<std::size_t>(b) * out_c_ * P;
    im2col(xb, C, H, W, kh_, kw_, pad_, Ho, Wo, col.data());
    CMapMat<T> gym(gyb, out_c_, P);
    CMapMat<T> cm(col.data(), K, P);
    gwm.noalias() += gym * cm.transpose();
    // Scalar bias reduction: Eigen's vectorized sum() peels to an aligned
    // boundary, so its rounding depends on where the heap placed the buffer.
    // A fixed-order loop keeps repeat trainings bit-identical.
    for (int o = 0; o < out_c_; ++o) {
      const T* row = gyb + static_cast<std::size_t>(o) * P;
      T s = 0;
      for (int p = 0; p < P; ++p) s += row[p];
      gb_[static_cast<std::size_t>(o)] += s;
    }
    MapMat<T> dcm(dcol.data(), K, P);
    dcm.noalias() = wm.transpose() * gym;
    col2im_add(dcol.data(), C, H, W, kh_, kw_, pad_, Ho, Wo,
               gx.ptr() + static_cast<std::size_t>(b) * C * H * W);
  }
  return gx;
}

template <class T>
nlohmann::json Conv2DT<T>::spec() const {
  return {{"kind", "conv2d"}, {"in_c", in_c_}, {"out_c", out_c_},
          {"kh", kh_},        {"kw", kw_},     {"pad", pad_}};
}

// ---------------- MaxPool2D ----------------

template <class T>
MaxPool2DT<T>::MaxPool2DT(int kh, int kw) : kh_(kh), kw_(kw) {
  require(kh > 0 && kw > 0, Err::ShapeMismatch, "maxpool2d kernel must be positive");
}

template <class T>
Ten<T> MaxPool2DT<T>::forward(const Ten<T>& x, bool record) {
  check_rank(x.shape, 4, "maxpool2d");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(H % kh_ == 0 && W % kw_ == 0, Err::OddDimension,
          "maxpool2d: input " + std::to_string(H) + "x" + std::to_string(W) +
              " not divisible by window " + std::to_string(kh_) + "x" + std::to_string(kw_));
  const int Ho = H / kh_, Wo = W / kw_;
  Ten<T> y({B, C, Ho, Wo});
  if (record) argmax_.resize(y.numel());
  std::size_t oi = 0;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const T* plane = x.ptr() + (static_cast<std::size_t>(b) * C + c) * H * W;
      const std::size_t base = (static_cast<std::size_t>(b) * C + c) * H * W;
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox, ++oi) {
          T best{};
          std::size_t besti = 0;
          bool first = true;
          for (int dy = 0; dy < kh_; ++dy)
            for (int dx = 0; dx < kw_; ++dx) {
              const int iy = oy * kh_ + dy, ix = ox * kw_ + dx;
              const T v = plane[static_cast<std::size_t>(iy) * W + ix];
              if (first || v > best) {
                best = v;
                besti = base + static_cast<std::size_t>(iy) * W + ix;
                first = false;
              }
            }
          y[oi] = best;
          if (record) argmax_[oi] = besti;
        }
    }
  if (record) {
    in_shape_ = x.shape;
    recorded_ = true;
  }
  return y;
}

template <class T>
Ten<T> MaxPool2DT<T>::backward(const Ten<T>& gy) {
  require(recorded_, Err::NoForwardState, "maxpool2d backward without recorded forward");
  require(gy.numel() == argmax_.size(), Err::ShapeMismatch,
          "maxpool2d backward: output-grad size mismatch");
  Ten<T> gx(in_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) gx[argmax_[i]] += gy[i];
  return gx;
}

template <class T>
nlohmann::json MaxPool2DT<T>::spec() const {
  return {{"kind", "maxpool2d"}, {"kh", kh_}, {"kw", kw_}};
}

// ---------------- ReLU ----------------

template <class T>
Ten<T> ReLUT<T>::forward(const Ten<T>& x, bool record) {
  Ten<T> y = x;
  for (auto& v : y.data) v = v > T(0) ? v : T(0);
  if (record) {
    x_ = x;
    recorded_ = true;
  }
  return y;
}

template <class T>
Ten<T> ReLUT<T>::backward(const Ten<T>& gy) {
  require(recorded_, Err::NoForwardState, "relu backward without recorded forward");
  require(gy.numel() == x_.numel(), Err::ShapeMismatch, "relu backward: size mismatch");
  Ten<T> gx(x_.shape);
  for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] = x_[i] > T(0) ? gy[i] : T(0);
  return gx;
}

template <class T>
nlohmann::json ReLUT<T>::spec() const {
  return {{"kind", "relu"}};
}

// ---------------- Flatten ----------------

template <class T>
Ten<T> FlattenT<T>::forward(const Ten<T>& x, bool record) {
  require(x.ndim() >= 2, Err::ShapeMismatch, "flatten: need at least a batch dimension");
  if (record) {
    in_shape_ = x.shape;
    recorded_ = true;
  }
  const int B = x.dim(0);
  const int rest = static_cast<int>(x.numel() / static_cast<std::size_t>(B));
  return x.reshaped({B, rest});
}

template <class T>
Ten<T> FlattenT<T>::backward(const Ten<T>& gy) {
  require(recorded_, Err::NoForwardState, "flatten backward without recorded forward");
  return gy.reshaped(in_shape_);
}

template <class T>
nlohmann::json FlattenT<T>::spec() const {
  return {{"kind", "flatten"}};
}

// ---------------- Linear ----------------

template <class T>
LinearT<T>::LinearT(int in_f, int out_f) : in_f_(in_f), out_f_(out_f) {
  require(in_f > 0 && out_f > 0, Err::ShapeMismatch, "linear sizes must be positive");
  w_ = Ten<T>({out_f_, in_f_});
  b_ = Ten<T>({out_f_});
  gw_ = Ten<T>({out_f_, in_f_});
  gb_ = Ten<T>({out_f_});
}

template <class T>
void LinearT<T>::init(Rng& rng) {
  const T bound = glorot_bound<T>(static_cast<std::size_t>(in_f_), static_cast<std::size_t>(out_f_));
  for (auto& v : w_.data) v = static_cast<T>(rng.uniform(-bound, bound));
  b_.fill(T(0));
}

template <class T>
Ten<T> LinearT<T>::forward(const Ten<T>& x, bool record) {
  check_rank(x.shape, 2, "linear");
  const int B = x.dim(0);
  require(x.dim(1) == in_f_, Err::ShapeMismatch,
          "linear: input width " + std::to_string(x.dim(1)) + ", layer expects " +
              std::to_string(in_f_));
  Ten<T> y({B, out_f_});
  CMapMat<T> xm(x.ptr(), B, in_f_);
  CMapMat<T> wm(w_.ptr(), out_f_, in_f_);
  MapMat<T> ym(y.ptr(), B, out_f_);
  ym.noalias() = xm * wm.transpose();
  for (int b = 0; b < B; ++b)
    for (int o = 0; o < out_f_; ++o) y[static_cast<std::size_t>(b) * out_f_ + o] += b_[static_cast<std::size_t>(o)];
  if (record) {
    x_ = x;
    recorded_ = true;
  }
  return y;
}

template <class T>
Ten<T> LinearT<T>::backward(const Ten<T>& gy) {
  require(recorded_, Err::NoForwardState, "linear backward without recorded forward");
  const int B = x_.dim(0);
  require(gy.shape == std::vector<int>({B, out_f_}), Err::ShapeMismatch,
          "linear backward: output-grad shape mismatch");
  CMapMat<T> gym(gy.ptr(), B, out_f_);
  CMapMat<T> xm(x_.ptr(), B, in_f_);
  MapMat<T> gwm(gw_.ptr(), out_f_, in_f_);
  gwm.noalias() += gym.transpose() * xm;
  for (int b = 0; b < B; ++b)
    for (int o = 0; o < out_f_; ++o) gb_[static_cast<std::size_t>(o)] += gy[static_cast<std::size_t>(b) * out_f_ + o];
  Ten<T> gx({B, in_f_});
  MapMat<T> gxm(gx.ptr(), B, in_f_);
  CMapMat<T> wm(w_.ptr(), out_f_, in_f_);
  gxm.noalias() = gym * wm;
  return gx;
}

template <class T>
nlohmann::json LinearT<T>::spec() const {
  return {{"kind", "linear"}, {"in_f", in_f_}, {"out_f", out_f_}};
}

// ---------------- Conv1D ----------------

template <class T>
Conv1DT<T>::Conv1DT(int in_c, int out_c, int k) : in_c_(in_c), out_c_(out_c), k_(k) {
  require(in_c > 0 && out_c > 0 && k > 0, Err::ShapeMismatch, "conv1d parameters must be positive");
  w_ = Ten<T>({out_c_, in_c_, k_});
  b_ = Ten<T>({out_c_});
  gw_ = Ten<T>({out_c_, in_c_, k_});
  gb_ = Ten<T>({out_c_});
}

template <class T>
void Conv1DT<T>::init(Rng& rng) {
  const T bound = glorot_bound<T>(static_cast<std::size_t>(in_c_) * k_,
                                  static_cast<std::size_t>(out_c_) * k_);
  for (auto& v : w_.data) v = static_cast<T>(rng.uniform(-bound, bound));
  b_.fill(T(0));
}

template <class T>
Ten<T> Conv1DT<T>::forward(const Ten<T>& x, bool record) {
  check_rank(x.shape, 3, "conv1d");
  const int B = x.dim(0), C = x.dim(1), L = x.dim(2);
  require(C == in_c_, Err::ShapeMismatch, "conv1d: channel mismatch");
  const int P = L - k_ + 1;
  require(P >= 1, Err::ShapeMismatch, "conv1d: kernel longer than input");
  const int K = in_c_ * k_;
  Ten<T> y({B, out_c_, P});
  std::vector<T> col(static_cast<std::size_t>(K) * P);
  CMapMat<T> wm(w_.ptr(), out_c_, K);
  for (int b = 0; b < B; ++b) {
    const T* xb = x.ptr() + static_cast<std::size_t>(b) * C * L;
    for (int c = 0; c < C; ++c)
      for (int dk = 0; dk < k_; ++dk) {
        T* row = col.data() + (static_cast<std::size_t>(c) * k_ + dk) * P;
        std::memcpy(row, xb + static_cast<std::size_t>(c) * L + dk, sizeof(T) * static_cast<std::size_t>(P));
      }
    MapMat<T> ym(y.ptr() + static_cast<std::size_t>(b) * out_c_ * P, out_c_, P);
    CMapMat<T> cm(col.data(), K, P);
    ym.noalias() = wm * cm;
    for (int o = 0; o < out_c_; ++o) ym.row(o).array() += b_[static_cast<std::size_t>(o)];
  }
  if (record) {
    x_ = x;
    recorded_ = true;
  }
  return y;
}

template <class T>
Ten<T> Conv1DT<T>::backward(const Ten<T>& gy) {
  require(recorded_, Err::NoForwardState, "conv1d backward without recorded forward");
  const int B = x_.dim(0), C = x_.dim(1), L = x_.dim(2);
  const int P = L - k_ + 1;
  require(gy.shape == std::vector<int>({B, out_c_, P}), Err::ShapeMismatch,
          "conv1d backward: output-grad shape mismatch");
  const int K = in_c_ * k_;
  Ten<T> gx({B, C, L});
  std::vector<T> col(static_cast<std::size_t>(K) * P);
  std::vector<T> dcol(static_cast<std::size_t>(K) * P);
  CMapMat<T> wm(w_.ptr(), out_c_, K);
  MapMat<T> gwm(gw_.ptr(), out_c_, K);
  for (int b = 0; b < B; ++b) {
    const T* xb = x_.ptr() + static_cast<std::size_t>(b) * C * L;
    for (int c = 0; c < C; ++c)
      for (int dk = 0; dk < k_; ++dk) {
        T* row = col.data() + (static_cast<std::size_t>(c) * k_ + dk) * P;
        std::memcpy(row, xb + static_cast<std::size_t>(c) * L + dk, sizeof(T) * static_cast<std::size_t>(P));
      }
    CMapMat<T> gym(gy.ptr() + static_cast<std::size_t>(b) * out_c_ * P, out_c_, P);
    CMapMat<T> cm(col.data(), K, P);
    gwm.noalias() += gym * cm.transpose();
    // Fixed-order bias reduction; see the conv2d note on alignment-dependent
    // rounding in Eigen's sum().
    for (int o = 0; o < out_c_; ++o) {
      const T* row = gy.ptr() + (static_cast<std::size_t>(b) * out_c_ + o) * P;
      T s = 0;
      for (int p = 0; p < P; ++p) s += row[p];
      gb_[static_cast<std::size_t>(o)] += s;
    }
    MapMat<T> dcm(dcol.data(), K, P);
    dcm.noalias() = wm.transpose() * gym;
    T* gxb = gx.ptr() + static_cast<std::size_t>(b) * C * L;
    for (int c = 0; c < C; ++c)
      for (int dk = 0; dk < k_; ++dk) {
        const T* row = dcol.data() + (static_cast<std::size_t>(c) * k_ + dk) * P;
        T* dst = gxb + static_cast<std::size_t>(c) * L + dk;
        for (int p = 0; p < P; ++p) dst[p] += row[p];
      }
  }
  return gx;
}

template <class T>
nlohmann::json Conv1DT<T>::spec() const {
  return {{"kind", "conv1d"}, {"in_c", in_c_}, {"out_c", out_c_}, {"k", k_}};
}

// ---------------- MaxPool1D ----------------

template <class T>
MaxPool1DT<T>::MaxPool1DT(int k) : k_(k) {
  require(k > 0, Err::ShapeMismatch, "maxpool1d window must be positive");
}

template <class T>
Ten<T> MaxPool1DT<T>::forward(const Ten<T>& x, bool record) {
  check_rank(x.shape, 3, "maxpool1d");
  const int B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const int Lo = L / k_;  // trailing remainder dropped
  require(Lo >= 1, Err::ShapeMismatch, "maxpool1d: input shorter than window");
  Ten<T> y({B, C, Lo});
  if (record) argmax_.resize(y.numel());
  std::size_t oi = 0;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const std::size_t base = (static_cast<std::size_t>(b) * C + c) * L;
      for (int o = 0; o < Lo; ++o, ++oi) {
        std::size_t besti = base + static_cast<std::size_t>(o) * k_;
        T best = x[besti];
        for (int d = 1; d < k_; ++d) {
          const std::size_t i = base + static_cast<std::size_t>(o) * k_ + d;
          if (x[i] > best) {
            best = x[i];
            besti = i;
          }
        }
        y[oi] = best;
        if (record) argmax_[oi] = besti;
      }
    }
  if (record) {
    in_shape_ = x.shape;
    recorded_ = true;
  }
  return y;
}

template <class T>
Ten<T> MaxPool1DT<T>::backward(const Ten<T>& gy) {
  require(recorded_, Err::NoForwardState, "maxpool1d backward without recorded forward");
  require(gy.numel() == argmax_.size(), Err::ShapeMismatch,
          "maxpool1d backward: output-grad size mismatch");
  Ten<T> gx(in_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) gx[argmax_[i]] += gy[i];
  return gx;
}

template <class T>
nlohmann::json MaxPool1DT<T>::spec() const {
  return {{"kind", "maxpool1d"}, {"k", k_}};
}

// ---------------- GlobalMaxPool1D ----------------

template <class T>
Ten<T> GlobalMaxPool1DT<T>::forward(const Ten<T>& x, bool record) {
  check_rank(x.shape, 3, "globalmaxpool1d");
  const int B = x.dim(0), C = x.dim(1), L = x.dim(2);
  Ten<T> y({B, C});
  if (record) argmax_.resize(y.numel());
  std::size_t oi = 0;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c, ++oi) {
      const std::size_t base = (static_cast<std::size_t>(b) * C + c) * L;
      std::size_t besti = base;
      T best = x[base];
      for (int i = 1; i < L; ++i)
        if (x[base + static_cast<std::size_t>(i)] > best) {
          best = x[base + static_cast<std::size_t>(i)];
          besti = base + static_cast<std::size_t>(i);
        }
      y[oi] = best;
      if (record) argmax_[oi] = besti;
    }
  if (record) {
    in_shape_ = x.shape;
    recorded_ = true;
  }
  return y;
}

template <class T>
Ten<T> GlobalMaxPool1DT<T>::backward(const Ten<T>& gy) {
  require(recorded_, Err::NoForwardState, "globalmaxpool1d backward without recorded forward");
  require(gy.numel() == argmax_.size(), Err::ShapeMismatch,
          "globalmaxpool1d backward: output-grad size mismatch");
  Ten<T> gx(in_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) gx[argmax_[i]] += gy[i];
  return gx;
}

template <class T>
nlohmann::json GlobalMaxPool1DT<T>::spec() const {
  return {{"kind", "globalmaxpool1d"}};
}

// ---------------- Net ----------------

template <class T>
NetT<T>::NetT(const NetT& o) {
  layers_.reserve(o.layers_.size());
  for (const auto& l : o.layers_) layers_.push_back(l->clone());
}

template <class T>
NetT<T>& NetT<T>::operator=(const NetT& o) {
  if (this != &o) {
    layers_.clear();
    layers_.reserve(o.layers_.size());
    for (const auto& l : o.layers_) layers_.push_back(l->clone());
  }
  return *this;
}

template <class T>
Ten<T> NetT<T>::forward(const Ten<T>& x, bool record) {
  Ten<T> cur = x;
  for (auto& l : layers_) cur = l->forward(cur, record);
  return cur;
}

template <class T>
Ten<T> NetT<T>::backward(const Ten<T>& gy) {
  Ten<T> cur = gy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

template <class T>
void NetT<T>::init(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : layers_) l->init(rng);
}

template <class T>
void NetT<T>::zero_grads() {
  for (auto* g : grads()) g->fill(T(0));
}

template <class T>
std::vector<Ten<T>*> NetT<T>::params() {
  std::vector<Ten<T>*> out;
  for (auto& l : layers_)
    for (auto* p : l->params()) out.push_back(p);
  return out;
}

template <class T>
std::vector<Ten<T>*> NetT<T>::grads() {
  std::vector<Ten<T>*> out;
  for (auto& l : layers_)
    for (auto* g : l->grads()) out.push_back(g);
  return out;
}

template <class T>
std::size_t NetT<T>::param_count() {
  std::size_t n = 0;
  for (auto* p : params()) n += p->numel();
  return n;
}

template <class T>
nlohmann::json NetT<T>::spec_list() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& l : layers_) arr.push_back(l->spec());
  return arr;
}

template <class T>
std::unique_ptr<LayerT<T>> layer_from_spec(const nlohmann::json& spec) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "conv2d")
    return std::make_unique<Conv2DT<T>>(spec.at("in_c").get<int>(), spec.at("out_c").get<int>(),
                                        spec.at("kh").get<int>(), spec.at("kw").get<int>(),
                                        spec.at("pad").get<int>());
  if (kind == "maxpool2d")
    return std::make_unique<MaxPool2DT<T>>(spec.at("kh").get<int>(), spec.at("kw").get<int>());
  if (kind == "relu") return std::make_unique<ReLUT<T>>();
  if (kind == "flatten") return std::make_unique<FlattenT<T>>();
  if (kind == "linear")
    return std::make_unique<LinearT<T>>(spec.at("in_f").get<int>(), spec.at("out_f").get<int>());
  if (kind == "conv1d")
    return std::make_unique<Conv1DT<T>>(spec.at("in_c").get<int>(), spec.at("out_c").get<int>(),
                                        spec.at("k").get<int>());
  if (kind == "maxpool1d") return std::make_unique<MaxPool1DT<T>>(spec.at("k").get<int>());
  if (kind == "globalmaxpool1d") return std::make_unique<GlobalMaxPool1DT<T>>();
  fail(Err::ShapeMismatch, "unknown layer kind '" + kind + "'");
}

// ---------------- Loss ----------------

template <class T>
std::pair<double, Ten<T>> softmax_cross_entropy(const Ten<T>& logits,
                                                const std::vector<int>& labels) {
  check_rank(logits.shape, 2, "softmax_cross_entropy");
  const int N = logits.dim(0), K = logits.dim(1);
  require(static_cast<std::size_t>(N) == labels.size(), Err::ShapeMismatch,
          "softmax_cross_entropy: batch/label count mismatch");
  for (int lab : labels)
    require(lab >= 0 && lab < K, Err::LabelOutOfRange,
            "label " + std::to_string(lab) + " outside [0, " + std::to_string(K) + ")");

  Ten<T> grad({N, K});
  double loss = 0;
  for (int n = 0; n < N; ++n) {
    const T* row = logits.ptr() + static_cast<std::size_t>(n) * K;
    T m = row[0];
    for (int k = 1; k < K; ++k) m = std::max(m, row[k]);
    double denom = 0;
    for (int k = 0; k < K; ++k) denom += std::exp(static_cast<double>(row[k] - m));
    loss += std::log(denom) - static_cast<double>(row[labels[static_cast<std::size_t>(n)]] - m);
    T* grow = grad.ptr() + static_cast<std::size_t>(n) * K;
    for (int k = 0; k < K; ++k)
      grow[k] = static_cast<T>(std::exp(static_cast<double>(row[k] - m)) / denom / N);
    grow[labels[static_cast<std::size_t>(n)]] -= static_cast<T>(1.0 / N);
  }
  return {loss / N, std::move(grad)};
}

// ---------------- Optimizer ----------------

template <class T>
void sgd_step(Ten<T>& param, const Ten<T>& grad, double lr) {
  require(param.same_shape(grad), Err::ShapeMismatch, "sgd_step: param/grad shape mismatch");
  require(lr >= 0, Err::ShapeMismatch, "sgd_step: negative learning rate");
  for (std::size_t i = 0; i < param.numel(); ++i)
    param[i] -= static_cast<T>(lr) * grad[i];
}

template <class T>
void SgdT<T>::step(NetT<T>& net) {
  auto ps = net.params();
  auto gs = net.grads();
  if (vel_.size() != ps.size()) {
    vel_.clear();
    for (auto* p : ps) vel_.emplace_back(p->shape);
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Ten<T>& v = vel_[i];
    Ten<T>& p = *ps[i];
    const Ten<T>& g = *gs[i];
    require(p.same_shape(g) && p.same_shape(v), Err::ShapeMismatch, "sgd: shape mismatch");
    for (std::size_t j = 0; j < p.numel(); ++j) {
      v[j] = static_cast<T>(momentum_) * v[j] + g[j];
      p[j] -= static_cast<T>(lr_) * v[j];
    }
  }
}

// ---------------- Single-sample wrappers ----------------

Tensor conv2d_forward(const Tensor& x_chw, const Tensor& w_ockk, const Tensor& bias, int pad) {
  check_rank(x_chw.shape, 3, "conv2d_forward");
  check_rank(w_ockk.shape, 4, "conv2d_forward weights");
  check_rank(bias.shape, 1, "conv2d_forward bias");
  require(w_ockk.dim(0) == bias.dim(0), Err::ShapeMismatch,
          "conv2d_forward: bias length != output channels");
  Conv2DT<float> layer(w_ockk.dim(1), w_ockk.dim(0), w_ockk.dim(2), w_ockk.dim(3), pad);
  *layer.params()[0] = w_ockk;
  *layer.params()[1] = bias;
  Tensor x = x_chw.reshaped({1, x_chw.dim(0), x_chw.dim(1), x_chw.dim(2)});
  Tensor y = layer.forward(x, false);
  return y.reshaped({y.dim(1), y.dim(2), y.dim(3)});
}

Tensor maxpool2d_forward(const Tensor& x_chw, int kh, int kw) {
  check_rank(x_chw.shape, 3, "maxpool2d_forward");
  MaxPool2DT<float> layer(kh, kw);
  Tensor x = x_chw.reshaped({1, x_chw.dim(0), x_chw.dim(1), x_chw.dim(2)});
  Tensor y = layer.forward(x, false);
  return y.reshaped({y.dim(1), y.dim(2), y.dim(3)});
}

int argmax_row(const float* row, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

// ---------------- Checkpoints ----------------

void save_checkpoint(Net& net, const std::string& stem, const nlohmann::json& meta) {
  nlohmann::json header;
  header["format"] = "hglab-ckpt-1";
  header["layers"] = net.spec_list();
  header["meta"] = meta;
  std::ofstream jout(stem + ".json", std::ios::binary);
  require(jout.good(), Err::FileUnreadable, "cannot write " + stem + ".json");
  jout << header.dump(1) << "\n";

  std::ofstream bout(stem + ".bin", std::ios::binary);
  require(bout.good(), Err::FileUnreadable, "cannot write " + stem + ".bin");
  for (auto* p : net.params())
    bout.write(reinterpret_cast<const char*>(p->ptr()),
               static_cast<std::streamsize>(p->numel() * sizeof(float)));
  require(bout.good(), Err::FileUnreadable, "short write to " + stem + ".bin");
}

std::pair<Net, nlohmann::json> load_checkpoint(const std::string& stem) {
  std::ifstream jin(stem + ".json", std::ios::binary);
  require(jin.good(), Err::FileUnreadable, "cannot open " + stem + ".json");
  nlohmann::json header;
  try {
    jin >> header;
  } catch (const nlohmann::json::exception& e) {
    fail(Err::MalformedLine, stem + ".json: " + e.what());
  }
  require(header.value("format", "") == "hglab-ckpt-1", Err::MalformedLine,
          stem + ".json: not a checkpoint header");
  Net net;
  for (const auto& spec : header.at("layers")) net.add_layer(layer_from_spec<float>(spec));

  std::ifstream bin(stem + ".bin", std::ios::binary | std::ios::ate);
  require(bin.good(), Err::FileUnreadable, "cannot open " + stem + ".bin");
  const auto bytes = static_cast<std::size_t>(bin.tellg());
  std::size_t expect = 0;
  for (auto* p : net.params()) expect += p->numel() * sizeof(float);
  require(bytes == expect, Err::LengthMismatch,
          stem + ".bin holds " + std::to_string(bytes) + " bytes, layer specs imply " +
              std::to_string(expect));
  bin.seekg(0);
  for (auto* p : net.params()) {
    bin.read(reinterpret_cast<char*>(p->ptr()),
             static_cast<std::streamsize>(p->numel() * sizeof(float)));
    require(bin.good(), Err::FileUnreadable, "short read from " + stem + ".bin");
  }
  return {std::move(net), header.at("meta")};
}

// ---------------- Instantiations ----------------

template class Conv2DT<float>;
template class Conv2DT<double>;
template class MaxPool2DT<float>;
template class MaxPool2DT<double>;
template class ReLUT<float>;
template class ReLUT<double>;
template class FlattenT<float>;
template class FlattenT<double>;
template class LinearT<float>;
template class LinearT<double>;
template class Conv1DT<float>;
template class Conv1DT<double>;
template class MaxPool1DT<float>;
template class MaxPool1DT<double>;
template class GlobalMaxPool1DT<float>;
template class GlobalMaxPool1DT<double>;
template class NetT<float>;
template class NetT<double>;
template class SgdT<float>;
template class SgdT<double>;
template std::unique_ptr<LayerT<float>> layer_from_spec<float>(const nlohmann::json&);
template std::unique_ptr<LayerT<double>> layer_from_spec<double>(const nlohmann::json&);
template std::pair<double, Ten<float>> softmax_cross_entropy<float>(const Ten<float>&,
                                                                    const std::vector<int>&);
template std::pair<double, Ten<double>> softmax_cross_entropy<double>(const Ten<double>&,
                                                                      const std::vector<int>&);
template void sgd_step<float>(Ten<float>&, const Ten<float>&, double);
template void sgd_step<double>(Ten<double>&, const Ten<double>&, double);

}  // namespace hglab
