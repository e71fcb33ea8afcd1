#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hglab/tensor.hpp"

namespace hglab {

// Sequential layer with recorded forward state for exact reverse-mode
// gradients. Inputs are batched: the leading dimension is always the
// batch. backward() before any recorded forward throws NoForwardState.
template <class T>
class LayerT {
 public:
  virtual ~LayerT() = default;

  virtual Ten<T> forward(const Ten<T>& x, bool record) = 0;
  virtual Ten<T> backward(const Ten<T>& gy) = 0;

  virtual std::vector<Ten<T>*> params() { return {}; }
  virtual std::vector<Ten<T>*> grads() { return {}; }
  virtual void init(Rng&) {}

  virtual nlohmann::json spec() const = 0;
  virtual const char* kind() const = 0;
  virtual std::unique_ptr<LayerT<T>> clone() const = 0;
};

template <class T>
class Conv2DT final : public LayerT<T> {
 public:
  Conv2DT(int in_c, int out_c, int kh, int kw, int pad);
  Ten<T> forward(const Ten<T>& x, bool record) override;
  Ten<T> backward(const Ten<T>& gy) override;
  std::vector<Ten<T>*> params() override { return {&w_, &b_}; }
  std::vector<Ten<T>*> grads() override { return {&gw_, &gb_}; }
  void init(Rng& rng) override;
  nlohmann::json spec() const override;
  const char* kind() const override { return "conv2d"; }
  std::unique_ptr<LayerT<T>> clone() const override { return std::make_unique<Conv2DT>(*this); }

 private:
  int in_c_, out_c_, kh_, kw_, pad_;
  Ten<T> w_, b_, gw_, gb_;
  Ten<T> x_;
  bool recorded_ = false;
};

template <class T>
class MaxPool2DT final : public LayerT<T> {
 public:
  MaxPool2DT(int kh, int kw);
  Ten<T> forward(const Ten<T>& x, bool record) override;
  Ten<T> backward(const Ten<T>& gy) override;
  nlohmann::json spec() const override;
  const char* kind() const override { return "maxpool2d"; }
  std::unique_ptr<LayerT<T>> clone() const override { return std::make_unique<MaxPool2DT>(*this); }

 private:
  int kh_, kw_;
  std::vector<int> in_shape_;
  std::vector<std::size_t> argmax_;
  bool recorded_ = false;
};

template <class T>
class ReLUT final : public LayerT<T> {
 public:
  Ten<T> forward(const Ten<T>& x, bool record) override;
  Ten<T> backward(const Ten<T>& gy) override;
  nlohmann::json spec() const override;
  const char* kind() const override { return "relu"; }
  std::unique_ptr<LayerT<T>> clone() const override { return std::make_unique<ReLUT>(*this); }

 private:
  Ten<T> x_;
  bool recorded_ = false;
};

// Collapses every non-batch dimension; shape restored on backward.
template <class T>
class FlattenT final : public LayerT<T> {
 public:
  Ten<T> forward(const Ten<T>& x, bool record) override;
  Ten<T> backward(const Ten<T>& gy) override;
  nlohmann::json spec() const override;
  const char* kind() const override { return "flatten"; }
  std::unique_ptr<LayerT<T>> clone() const override { return std::make_unique<FlattenT>(*this); }

 private:
  std::vector<int> in_shape_;
  bool recorded_ = false;
};

template <class T>
class LinearT final : public LayerT<T> {
 public:
  LinearT(int in_f, int out_f);
  Ten<T> forward(const Ten<T>& x, bool record) override;
  Ten<T> backward(const Ten<T>& gy) override;
  std::vector<Ten<T>*> params() override { return {&w_, &b_}; }
  std::vector<Ten<T>*> grads() override { return {&gw_, &gb_}; }
  void init(Rng& rng) override;
  nlohmann::json spec() const override;
  const char* kind() const override { return "linear"; }
  std::unique_ptr<LayerT<T>> clone() const override { return std::make_unique<LinearT>(*this); }

 private:
  int in_f_, out_f_;
  Ten<T> w_, b_, gw_, gb_;
  Ten<T> x_;
  bool recorded_ = false;
};

template <class T>
class Conv1DT final : public LayerT<T> {
 public:
  Conv1DT(int in_c, int out_c, int k);
  Ten<T> forward(const Ten<T>& x, bool record) override;
  Ten<T> backward(const Ten<T>& gy) override;
  std::vector<Ten<T>*> params() override { return {&w_, &b_}; }
  std::vector<Ten<T>*> grads() override { return {&gw_, &gb_}; }
  void init(Rng& rng) override;
  nlohmann::json spec() const override;
  const char* kind() const override { return "conv1d"; }
  std::unique_ptr<LayerT<T>> clone() const override { return std::make_unique<Conv1DT>(*this); }

 private:
  int in_c_, out_c_, k_;
  Ten<T> w_, b_, gw_, gb_;
  Ten<T> x_;
  bool recorded_ = false;
};

template <class T>
class MaxPool1DT final : public LayerT<T> {
 public:
  explicit MaxPool1DT(int k);
  Ten<T> forward(const Ten<T>& x, bool record) override;
  Ten<T> backward(const Ten<T>& gy) override;
  nlohmann::json spec() const override;
  const char* kind() const override { return "maxpool1d"; }
  std::unique_ptr<LayerT<T>> clone() const override { return std::make_unique<MaxPool1DT>(*this); }

 private:
  int k_;
  std::vector<int> in_shape_;
  std::vector<std::size_t> argmax_;
  bool recorded_ = false;
};

template <class T>
class GlobalMaxPool1DT final : public LayerT<T> {
 public:
  Ten<T> forward(const Ten<T>& x, bool record) override;
  Ten<T> backward(const Ten<T>& gy) override;
  nlohmann::json spec() const override;
  const char* kind() const override { return "globalmaxpool1d"; }
  std::unique_ptr<LayerT<T>> clone() const override {
    return std::make_unique<GlobalMaxPool1DT>(*this);
  }

 private:
  std::vector<int> in_shape_;
  std::vector<std::size_t> argmax_;
  bool recorded_ = false;
};

template <class T>
class NetT {
 public:
  NetT() = default;
  NetT(const NetT& o);
  NetT& operator=(const NetT& o);
  NetT(NetT&&) noexcept = default;
  NetT& operator=(NetT&&) noexcept = default;

  template <class L, class... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }
  void add_layer(std::unique_ptr<LayerT<T>> l) { layers_.push_back(std::move(l)); }

  Ten<T> forward(const Ten<T>& x, bool record = false);
  // gy is the gradient of the loss w.r.t. the network output; returns the
  // gradient w.r.t. the input. Parameter grads accumulate.
  Ten<T> backward(const Ten<T>& gy);

  void init(std::uint64_t seed);
  void zero_grads();
  std::vector<Ten<T>*> params();
  std::vector<Ten<T>*> grads();
  std::size_t param_count();

  std::size_t layer_count() const { return layers_.size(); }
  LayerT<T>& layer(std::size_t i) { return *layers_[i]; }

  nlohmann::json spec_list() const;

 private:
  std::vector<std::unique_ptr<LayerT<T>>> layers_;
};

using Net = NetT<float>;

template <class T>
std::unique_ptr<LayerT<T>> layer_from_spec(const nlohmann::json& spec);

// Mean negative log softmax over the batch; grad is (softmax - onehot)/N.
template <class T>
std::pair<double, Ten<T>> softmax_cross_entropy(const Ten<T>& logits,
                                                const std::vector<int>& labels);

// w <- w - lr * g, elementwise.
template <class T>
void sgd_step(Ten<T>& param, const Ten<T>& grad, double lr);

// SGD with optional momentum: v <- m*v + g; w <- w - lr*v.
template <class T>
class SgdT {
 public:
  SgdT(double lr, double momentum) : lr_(lr), momentum_(momentum) {}
  void step(NetT<T>& net);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_;
  double momentum_;
  std::vector<Ten<T>> vel_;
};

using Sgd = SgdT<float>;

// Single-sample convenience forms matching the shapes in which the
// operations are usually described.
Tensor conv2d_forward(const Tensor& x_chw, const Tensor& w_ockk, const Tensor& bias, int pad);
Tensor maxpool2d_forward(const Tensor& x_chw, int kh, int kw);

int argmax_row(const float* row, int n);

// Checkpoints: stem.json holds the layer specs plus caller metadata;
// stem.bin holds every parameter tensor as little-endian f32 in layer
// order.
void save_checkpoint(Net& net, const std::string& stem, const nlohmann::json& meta);
std::pair<Net, nlohmann::json> load_checkpoint(const std::string& stem);

}  // namespace hglab
