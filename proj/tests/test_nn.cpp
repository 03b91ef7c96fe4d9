// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tivgan/errors.hpp"
#include "tivgan/nn/grad_check.hpp"
#include "tivgan/nn/layers.hpp"
#include "tivgan/nn/ops.hpp"
#include "tivgan/nn/optimizer.hpp"
#include "tivgan/util/config.hpp"
#include "tivgan/util/image_io.hpp"
#include "tivgan/util/rng.hpp"
#include "tivgan/util/serialize.hpp"

using namespace tivgan;
using namespace tivgan::nn;

namespace {

Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = scale * rng.normal();
  return t;
}

// Weighted sum so every output coordinate matters to the gradient.
Var<double> probe(Graph<double>& g, const Var<double>& y, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(y, g.constant(random_tensor(y.shape(), rng))));
}

constexpr double kTol = 1e-4;

}  // namespace

TEST_CASE("tensor shape checks") {
  Tensor<float> t({2, 3});
  CHECK(t.numel() == 6);
  CHECK_THROWS_AS(t.reshape({4, 2}), ShapeError);
  t.reshape({3, 2});
  CHECK(t.dim(0) == 3);
  CHECK_THROWS_AS(Tensor<float>({2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
}

TEST_CASE("conv2d matches a direct loop") {
  Rng rng(1);
  const auto x = random_tensor({2, 3, 6, 5}, rng);
  const auto w = random_tensor({4, 3, 3, 3}, rng);
  const auto b = random_tensor({4}, rng);
  Graph<double> g;
  const Conv2dOptions opt{2, 1};
  const auto y = conv2d(g.constant(x), g.constant(w), g.constant(b), opt).value();
  REQUIRE(y.shape() == Shape{2, 4, 3, 3});
  double worst = 0;
  for (int n = 0; n < 2; ++n)
    for (int o = 0; o < 4; ++o)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double acc = b[o];
          for (int c = 0; c < 3; ++c)
            for (int ki = 0; ki < 3; ++ki)
              for (int kj = 0; kj < 3; ++kj) {
                const int r = i * 2 - 1 + ki, s = j * 2 - 1 + kj;
                if (r < 0 || r >= 6 || s < 0 || s >= 5) continue;
                acc += w[((o * 3 + c) * 3 + ki) * 3 + kj] * x[((n * 3 + c) * 6 + r) * 5 + s];
              }
          worst = std::max(worst, std::abs(acc - y[((n * 4 + o) * 3 + i) * 3 + j]));
        }
  CHECK(worst < 1e-12);
}

TEST_CASE("conv_transpose2d matches a scatter loop") {
  Rng rng(2);
  const auto x = random_tensor({1, 2, 3, 3}, rng);
  const auto w = random_tensor({2, 3, 4, 4}, rng);
  Graph<double> g;
  const auto y = conv_transpose2d(g.constant(x), g.constant(w), Var<double>{}, Conv2dOptions{2, 1}).value();
  REQUIRE(y.shape() == Shape{1, 3, 6, 6});
  Tensor<double> ref({1, 3, 6, 6});
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int o = 0; o < 3; ++o)
          for (int ki = 0; ki < 4; ++ki)
            for (int kj = 0; kj < 4; ++kj) {
              const int r = i * 2 - 1 + ki, s = j * 2 - 1 + kj;
              if (r < 0 || r >= 6 || s < 0 || s >= 6) continue;
              ref[(o * 6 + r) * 6 + s] += x[(c * 3 + i) * 3 + j] * w[((c * 3 + o) * 4 + ki) * 4 + kj];
            }
  double worst = 0;
  for (std::int64_t i = 0; i < ref.numel(); ++i) worst = std::max(worst, std::abs(ref[i] - y[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("op gradients agree with central differences") {
  Rng rng(3);
  SUBCASE("elementwise") {
    const auto x = random_tensor({2, 5}, rng);
    CHECK(grad_check([](Graph<double>& g, const Var<double>& v) { return probe(g, sigmoid(v), 1); }, x, 1e-6) < kTol);
    CHECK(grad_check([](Graph<double>& g, const Var<double>& v) { return probe(g, tanh(v), 2); }, x, 1e-6) < kTol);
    CHECK(grad_check([](Graph<double>& g, const Var<double>& v) { return probe(g, leaky_relu(v, 0.2), 3); }, x,
                     1e-6) < kTol);
    CHECK(grad_check([](Graph<double>& g, const Var<double>& v) { return probe(g, log(affine(sigmoid(v), 1, 0.1)), 4); },
                     x, 1e-6) < kTol);
  }
  SUBCASE("convolutions") {
    const auto w = random_tensor({3, 2, 4, 4}, rng, 0.3);
    const auto x = random_tensor({2, 2, 8, 8}, rng);
    CHECK(grad_check([&](Graph<double>& g, const Var<double>& v) {
            return probe(g, conv2d(v, g.constant(w), Var<double>{}, Conv2dOptions{2, 1}), 5);
          }, x, 1e-6) < kTol);
    CHECK(grad_check([&](Graph<double>& g, const Var<double>& v) {
            return probe(g, conv2d(g.constant(x), v, Var<double>{}, Conv2dOptions{2, 1}), 6);
          }, w, 1e-6) < kTol);
    const auto wt = random_tensor({2, 3, 4, 4}, rng, 0.3);
    CHECK(grad_check([&](Graph<double>& g, const Var<double>& v) {
            return probe(g, conv_transpose2d(v, g.constant(wt), Var<double>{}, Conv2dOptions{2, 1}), 7);
          }, x, 1e-6) < kTol);
    const auto w3 = random_tensor({2, 2, 3, 3, 3}, rng, 0.3);
    const auto x3 = random_tensor({1, 2, 4, 6, 6}, rng);
    Conv3dOptions o3;
    o3.stride[0] = 1, o3.stride[1] = 2, o3.stride[2] = 2;
    o3.padding[0] = o3.padding[1] = o3.padding[2] = 1;
    CHECK(grad_check([&](Graph<double>& g, const Var<double>& v) {
            return probe(g, conv3d(v, g.constant(w3), Var<double>{}, o3), 8);
          }, x3, 1e-6) < kTol);
  }
  SUBCASE("normalization and reductions") {
    const auto x = random_tensor({2, 3, 4, 4}, rng);
    CHECK(grad_check([](Graph<double>& g, const Var<double>& v) { return probe(g, instance_norm(v), 9); }, x, 1e-6) <
          kTol);
    CHECK(grad_check([](Graph<double>& g, const Var<double>& v) { return probe(g, spatial_mean(v), 10); }, x, 1e-6) <
          kTol);
    CHECK(grad_check([](Graph<double>& g, const Var<double>& v) {
            return probe(g, index_select(reshape(v, {2, 48}), {1, 0, 1}), 11);
          }, x, 1e-6) < kTol);
    const auto p = random_tensor({2, 3}, rng);
    CHECK(grad_check([](Graph<double>& g, const Var<double>& v) { return probe(g, broadcast_spatial(v, 2, 3), 12); }, p,
                     1e-6) < kTol);
    CHECK(grad_check([&](Graph<double>& g, const Var<double>& v) {
            return probe(g, concat_channels<double>({v, g.constant(x)}), 13);
          }, x, 1e-6) < kTol);
    CHECK(grad_check([](Graph<double>&, const Var<double>& v) { return softmax_cross_entropy(v, {2, 0}); }, p, 1e-6) <
          kTol);
  }
}

TEST_CASE("layer parameter gradients") {
  Rng rng(4);
  IdAllocator ids;
  ParamFactory f(ids, rng);
  GruCell<double> gru("gru", 5, 4, f);
  Linear<double> lin("lin", 4, 3, f);
  const auto x = random_tensor({3, 5}, rng);
  const auto h = random_tensor({3, 4}, rng);
  std::vector<Parameter<double>*> params;
  gru.collect(params);
  lin.collect(params);
  const double err = grad_check_parameters(
      [&](Graph<double>& g) { return probe(g, lin.forward(g, gru.forward(g, g.constant(x), g.constant(h))), 14); },
      params, 1e-6);
  CHECK(err < kTol);
}

TEST_CASE("frozen parameters receive no gradient") {
  Rng rng(5);
  IdAllocator ids;
  ParamFactory f(ids, rng);
  Linear<double> a("a", 3, 3, f), b("b", 3, 1, f);
  std::vector<Parameter<double>*> pa, pb;
  a.collect(pa);
  b.collect(pb);
  Graph<double> g;
  g.freeze(pb);
  g.backward(sum(b.forward(g, a.forward(g, g.constant(random_tensor({2, 3}, rng))))));
  for (auto* p : pb)
    for (double v : p->grad.values()) CHECK(v == 0.0);
  double mag = 0;
  for (auto* p : pa)
    for (double v : p->grad.values()) mag += std::abs(v);
  CHECK(mag > 0);
}

TEST_CASE("adam follows the bias-corrected update") {
  Parameter<double> p("w", 1, Tensor<double>({1}, std::vector<double>{1.0}));
  Adam<double> opt(AdamConfig{0.1, 0.5, 0.999, 1e-8});
  std::vector<Parameter<double>*> ps{&p};
  double m = 0, v = 0, w = 1.0;
  for (int t = 1; t <= 3; ++t) {
    const double grad = 2.0 * w;
    p.grad[0] = grad;
    opt.step(ps);
    m = 0.5 * m + 0.5 * grad;
    v = 0.999 * v + 0.001 * grad * grad;
    const double mh = m / (1 - std::pow(0.5, t)), vh = v / (1 - std::pow(0.999, t));
    w -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p.value[0] == doctest::Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("rng state round-trips") {
  Rng a(42);
  a.normal();
  const auto s = a.state();
  const double x = a.normal(), y = a.uniform();
  Rng b;
  b.restore(s);
  CHECK(b.normal() == x);
  CHECK(b.uniform() == y);
  CHECK_THROWS_AS(b.restore("garbage"), FormatError);
}

TEST_CASE("byte reader reports truncation") {
  ByteWriter w;
  w.put<std::uint32_t>(7);
  w.put_string("abc");
  const auto bytes = w.take();
  ByteReader r(bytes.data(), bytes.size() - 1, "test");
  CHECK(r.get<std::uint32_t>() == 7);
  CHECK_THROWS_AS(r.get_string(), FormatError);
}

TEST_CASE("png round trip and gif header") {
  const auto dir = std::filesystem::temp_directory_path() / "tivgan_test_nn";
  std::filesystem::create_directories(dir);
  Rng rng(6);
  Tensor<float> frame({3, 5, 5});
  for (auto& v : frame.values()) v = static_cast<float>(rng.uniform(-1, 1));
  const auto img = frame_to_image(frame.values(), 3, 5, 5);
  write_png(dir / "f.png", img);
  const auto back = read_png(dir / "f.png");
  CHECK(back.pixels == img.pixels);
  Tensor<float> decoded({3, 5, 5});
  image_to_frame(back, 3, 5, decoded.values());
  for (std::int64_t i = 0; i < frame.numel(); ++i) CHECK(std::abs(decoded[i] - frame[i]) <= 1.0f / 255.0f + 1e-6f);
  const std::vector<Image8> frames{img, img};
  write_gif(dir / "a.gif", frames);
  std::ifstream gif(dir / "a.gif", std::ios::binary);
  char magic[6];
  gif.read(magic, 6);
  CHECK(std::string(magic, 6) == "GIF89a");
  CHECK_THROWS_AS(read_png(dir / "missing.png"), FormatError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("key value parsing") {
  const auto kv = KeyValues::parse("# comment\niters-stage1 = 10  # trailing\n\nseed=3\n");
  CHECK(kv.get("iters_stage1") == "10");
  CHECK(kv.get("seed") == "3");
  CHECK_THROWS_AS(KeyValues::parse("novalue\n"), FormatError);
}
