#include <benchmark/benchmark.h>

#include "hglab/attack.hpp"
#include "hglab/embedding.hpp"
#include "hglab/glyph_classifier.hpp"
#include "hglab/nn.hpp"
#include "hglab/raster.hpp"
#include "hglab/rng.hpp"

namespace {

using namespace hglab;

const FontFace& dejavu() {
  static FontFace font = load_font(HGLAB_DATA_DIR "/fonts/DejaVuSans.ttf");
  return font;
}

void BM_RasterizeCentered(benchmark::State& state) {
  const FontFace& font = dejavu();
  for (auto _ : state) {
    GlyphBitmap b = rasterize_centered(U'g', font, 80.0f, 100, 100);
    benchmark::DoNotOptimize(b.pixels.data());
  }
}
BENCHMARK(BM_RasterizeCentered);

void BM_AugmentView(benchmark::State& state) {
  const FontFace& font = dejavu();
  GlyphBitmap base = rasterize_centered(U'g', font, 80.0f, 100, 100);
  for (auto _ : state) {
    GlyphBitmap v = add_salt_pepper(rotate(base, 14.0f), 0.02, 42);
    benchmark::DoNotOptimize(v.pixels.data());
  }
}
BENCHMARK(BM_AugmentView);

void BM_Conv2DForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Net net;
  net.add<Conv2DT<float>>(16, 32, 3, 3, 1);
  net.init(1);
  Rng rng(3);
  Tensor x = uniform_tensor<float>({batch, 16, 50, 50}, -1.0f, 1.0f, rng);
  for (auto _ : state) {
    Tensor y = net.forward(x, false);
    benchmark::DoNotOptimize(y.ptr());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_Conv2DForward)->Arg(1)->Arg(16);

void BM_Table2ForwardBackward(benchmark::State& state) {
  Net net = glyph_cnn(150);
  net.init(1);
  Rng rng(5);
  Tensor x = uniform_tensor<float>({8, 1, 100, 100}, 0.0f, 1.0f, rng);
  std::vector<int> labels(8);
  for (int i = 0; i < 8; ++i) labels[i] = i * 17 % 150;
  for (auto _ : state) {
    Tensor logits = net.forward(x, true);
    auto [loss, grad] = softmax_cross_entropy(logits, labels);
    net.zero_grads();
    net.backward(grad);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Table2ForwardBackward)->Unit(benchmark::kMillisecond);

void BM_TopK(benchmark::State& state) {
  static EmbeddingSpace space = [] {
    std::vector<char32_t> charset;
    for (char32_t c = 0x21; c <= 0x7E; ++c) charset.push_back(c);
    return build_ices(charset, dejavu());
  }();
  for (auto _ : state) {
    NeighborSet ns = top_k(space, U'o', 10);
    benchmark::DoNotOptimize(ns.neighbors.data());
  }
}
BENCHMARK(BM_TopK);

void BM_VpPerturb(benchmark::State& state) {
  static HSet hset = HSet::load(HGLAB_DATA_DIR "/hset/curated.json");
  std::string text;
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) text += static_cast<char>('a' + rng.below(26));
  AttackSpec spec{0.5, &hset, 11};
  for (auto _ : state) {
    std::string out = vp_perturb(text, spec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_VpPerturb);

}  // namespace

BENCHMARK_MAIN();
