// SPDX-License-Identifier: Apache-2.0
#include "tivgan/eval/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tivgan/errors.hpp"
#include "tivgan/eval/metrics.hpp"
#include "tivgan/nn/optimizer.hpp"
#include "tivgan/util/serialize.hpp"

namespace tivgan::eval {

using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

Eigen::MatrixXd softmax_rows(const Tensor<float>& logits) {
  const auto N = logits.dim(0), K = logits.dim(1);
  Eigen::MatrixXd p(N, K);
  for (std::int64_t i = 0; i < N; ++i) {
    double mx = logits[i * K];
    for (std::int64_t j = 1; j < K; ++j) mx = std::max(mx, static_cast<double>(logits[i * K + j]));
    double z = 0.0;
    for (std::int64_t j = 0; j < K; ++j) z += (p(i, j) = std::exp(logits[i * K + j] - mx));
    p.row(i) /= z;
  }
  return p;
}

Tensor<float> slice_rows(const Tensor<float>& t, std::int64_t start, std::int64_t count) {
  auto shape = t.shape();
  const auto row = t.numel() / shape[0];
  shape[0] = count;
  Tensor<float> out(shape);
  std::copy(t.data() + start * row, t.data() + (start + count) * row, out.data());
  return out;
}

void shuffle(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
}

constexpr int kInferenceChunk = 32;

}  // namespace

Tensor<float> to_volume(const Tensor<float>& clips, int channels) {
  const auto N = clips.dim(0), TC = clips.dim(1), H = clips.dim(2), W = clips.dim(3);
  if (TC % channels) throw ShapeError("to_volume: " + nn::shape_string(clips.shape()) + " is not a multiple of " + std::to_string(channels) + " channels");
  const auto T = TC / channels;
  Tensor<float> out({N, channels, T, H, W});
  const auto plane = H * W;
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t t = 0; t < T; ++t)
      for (std::int64_t c = 0; c < channels; ++c) {
        const float* src = clips.data() + ((n * TC) + t * channels + c) * plane;
        std::copy(src, src + plane, out.data() + ((n * channels + c) * T + t) * plane);
      }
  return out;
}

Tensor<float> stack_clips(const data::DatasetIndex& index, const std::vector<int>& which) {
  const auto& first = index.clips.front();
  Tensor<float> out({static_cast<std::int64_t>(which.size()), first.length() * first.channels(), first.frame_size(), first.frame_size()});
  const auto n = first.frames.numel();
  for (std::size_t i = 0; i < which.size(); ++i) {
    const auto& src = index.clips[static_cast<std::size_t>(which[i])].frames;
    std::copy(src.data(), src.data() + n, out.data() + static_cast<std::int64_t>(i) * n);
  }
  return out;
}

FrameFeatureExtractor::FrameFeatureExtractor(int channels, int frame_size, int classes, int width, int feature_dim,
                                             Rng& rng)
    : feature_dim_(feature_dim) {
  nn::ParamFactory f(ids, rng);
  int in = channels;
  int out = width;
  for (int s = frame_size, l = 0; s > 4 && l < 4; s /= 2, ++l) {
    convs.emplace_back("fx.conv" + std::to_string(l), in, out, 4, nn::Conv2dOptions{2, 1}, f);
    in = out;
    out *= 2;
  }
  embed = nn::Linear<float>("fx.embed", in, feature_dim, f);
  head = nn::Linear<float>("fx.head", feature_dim, classes, f);
}

Var<float> FrameFeatureExtractor::forward_features(Graph<float>& g, const Var<float>& x) {
  auto h = x;
  for (auto& c : convs) h = nn::leaky_relu(c.forward(g, h), 0.2);
  return nn::leaky_relu(embed.forward(g, nn::spatial_mean(h)), 0.2);
}

std::vector<nn::Parameter<float>*> FrameFeatureExtractor::params() {
  std::vector<nn::Parameter<float>*> out;
  for (auto& c : convs) c.collect(out);
  embed.collect(out);
  head.collect(out);
  return out;
}

Eigen::MatrixXd FrameFeatureExtractor::features(const Tensor<float>& frames) {
  Eigen::MatrixXd out(frames.dim(0), feature_dim_);
  for (std::int64_t s = 0; s < frames.dim(0); s += kInferenceChunk) {
    const auto n = std::min<std::int64_t>(kInferenceChunk, frames.dim(0) - s);
    Graph<float> g;
    g.freeze(params());
    auto f = forward_features(g, g.constant(slice_rows(frames, s, n)));
    for (std::int64_t i = 0; i < n; ++i)
      for (int j = 0; j < feature_dim_; ++j) out(s + i, j) = f.value()[i * feature_dim_ + j];
  }
  return out;
}

Eigen::MatrixXd FrameFeatureExtractor::probabilities(const Tensor<float>& frames) {
  Eigen::MatrixXd out(frames.dim(0), head.weight.value.dim(0));
  for (std::int64_t s = 0; s < frames.dim(0); s += kInferenceChunk) {
    const auto n = std::min<std::int64_t>(kInferenceChunk, frames.dim(0) - s);
    Graph<float> g;
    g.freeze(params());
    auto logits = head.forward(g, forward_features(g, g.constant(slice_rows(frames, s, n))));
    out.middleRows(s, n) = softmax_rows(logits.value());
  }
  return out;
}

double FrameFeatureExtractor::train(const data::DatasetIndex& index, const ClassifierTraining& cfg) {
  Rng rng(cfg.seed);
  nn::Adam<float> opt(nn::AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  struct Ref {
    int clip, frame;
  };
  std::vector<Ref> refs;
  for (int c = 0; c < static_cast<int>(index.clips.size()); ++c)
    for (int t = 0; t < index.clips[static_cast<std::size_t>(c)].length(); ++t) refs.push_back({c, t});
  std::vector<int> order(refs.size());
  const auto& first = index.clips.front();
  const auto fn = first.frame_numel();
  double accuracy = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(cfg.batch_size)) {
      const auto n = std::min(order.size() - s, static_cast<std::size_t>(cfg.batch_size));
      Tensor<float> x({static_cast<std::int64_t>(n), first.channels(), first.frame_size(), first.frame_size()});
      std::vector<int> labels;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& r = refs[static_cast<std::size_t>(order[s + i])];
        const auto& clip = index.clips[static_cast<std::size_t>(r.clip)];
        const auto src = clip.frame(r.frame);
        std::copy(src.begin(), src.end(), x.data() + static_cast<std::int64_t>(i) * fn);
        labels.push_back(clip.caption.class_label);
      }
      Graph<float> g;
      auto logits = head.forward(g, forward_features(g, g.constant(std::move(x))));
      const auto p = softmax_rows(logits.value());
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(p.cols());
        for (Eigen::Index j = 0; j < p.cols(); ++j) row[static_cast<std::size_t>(j)] = p(static_cast<Eigen::Index>(i), j);
        hits += argmax(row) == labels[i];
      }
      auto ps = params();
      nn::zero_grads<float>(ps);
      g.backward(nn::softmax_cross_entropy(logits, labels));
      opt.step(ps);
    }
    accuracy = static_cast<double>(hits) / static_cast<double>(order.size());
  }
  return accuracy;
}

Clip3DClassifier::Clip3DClassifier(int channels, int frame_size, int classes, int width, Rng& rng) {
  nn::ParamFactory f(ids, rng);
  int in = channels;
  for (int s = frame_size, l = 0; s > 4 && l < 4; s /= 2, ++l) {
    const int out = width << l;
    nn::Conv3dOptions opt;
    // First layer keeps temporal resolution; later ones halve it.
    opt.stride[0] = l == 0 ? 1 : 2;
    opt.stride[1] = opt.stride[2] = 2;
    opt.padding[0] = 1;
    opt.padding[1] = opt.padding[2] = 1;
    convs.emplace_back("c3d.conv" + std::to_string(l), in, out, 3, 4, opt, f);
    in = out;
  }
  head = nn::Linear<float>("c3d.head", in, classes, f);
}

Var<float> Clip3DClassifier::logits(Graph<float>& g, const Var<float>& x) {
  auto h = x;
  for (auto& c : convs) h = nn::leaky_relu(c.forward(g, h), 0.2);
  return head.forward(g, nn::spatial_mean(h));
}

std::vector<nn::Parameter<float>*> Clip3DClassifier::params() {
  std::vector<nn::Parameter<float>*> out;
  for (auto& c : convs) c.collect(out);
  head.collect(out);
  return out;
}

Eigen::MatrixXd Clip3DClassifier::probabilities(const Tensor<float>& clips, int channels) {
  Eigen::MatrixXd out(clips.dim(0), head.weight.value.dim(0));
  constexpr std::int64_t kChunk = 8;
  for (std::int64_t s = 0; s < clips.dim(0); s += kChunk) {
    const auto n = std::min<std::int64_t>(kChunk, clips.dim(0) - s);
    Graph<float> g;
    g.freeze(params());
    auto l = logits(g, g.constant(to_volume(slice_rows(clips, s, n), channels)));
    out.middleRows(s, n) = softmax_rows(l.value());
  }
  return out;
}

double Clip3DClassifier::train(const data::DatasetIndex& index, const ClassifierTraining& cfg) {
  Rng rng(cfg.seed);
  nn::Adam<float> opt(nn::AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  std::vector<int> order(index.clips.size());
  double accuracy = 0.0;
  const int C = index.channels();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(cfg.batch_size)) {
      const auto n = std::min(order.size() - s, static_cast<std::size_t>(cfg.batch_size));
      std::vector<int> which(order.begin() + static_cast<std::ptrdiff_t>(s), order.begin() + static_cast<std::ptrdiff_t>(s + n));
      std::vector<int> labels;
      for (int c : which) labels.push_back(index.clips[static_cast<std::size_t>(c)].caption.class_label);
      Graph<float> g;
      auto l = logits(g, g.constant(to_volume(stack_clips(index, which), C)));
      const auto p = softmax_rows(l.value());
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(p.cols());
        for (Eigen::Index j = 0; j < p.cols(); ++j) row[static_cast<std::size_t>(j)] = p(static_cast<Eigen::Index>(i), j);
        hits += argmax(row) == labels[i];
      }
      auto ps = params();
      nn::zero_grads<float>(ps);
      g.backward(nn::softmax_cross_entropy(l, labels));
      opt.step(ps);
    }
    accuracy = static_cast<double>(hits) / static_cast<double>(order.size());
  }
  return accuracy;
}

double Clip3DClassifier::in_set_accuracy(const data::DatasetIndex& index) {
  std::vector<int> all(index.clips.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> labels;
  for (const auto& c : index.clips) labels.push_back(c.caption.class_label);
  return classification_accuracy(probabilities(stack_clips(index, all), index.channels()), labels);
}

namespace {
constexpr char kParamMagic[4] = {'T', 'I', 'V', 'E'};
}

void save_params(const std::filesystem::path& path, const std::vector<nn::Parameter<float>*>& params) {
  ByteWriter w;
  w.put_bytes(kParamMagic, 4);
  w.put<std::uint32_t>(1);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.put_string(p->name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p->value.rank()));
    for (auto d : p->value.shape()) w.put<std::int64_t>(d);
    w.put_array(p->value.data(), static_cast<std::size_t>(p->value.numel()));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

void load_params(const std::filesystem::path& path, const std::vector<nn::Parameter<float>*>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(bytes.data(), bytes.size(), path.string());
  char magic[4];
  r.get_bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kParamMagic)) throw FormatError(path.string() + ": not a classifier file");
  if (r.get<std::uint32_t>() != 1) throw FormatError(path.string() + ": unsupported classifier file version");
  if (r.get<std::uint32_t>() != params.size()) throw FormatError(path.string() + ": parameter count mismatch");
  for (auto* p : params) {
    const auto name = r.get_string();
    nn::Shape shape(r.get<std::uint32_t>());
    for (auto& d : shape) d = r.get<std::int64_t>();
    if (name != p->name || shape != p->value.shape()) throw FormatError(path.string() + ": parameter " + name + " does not match " + p->name);
    for (auto& v : p->value.values()) v = r.get<float>();
  }
}

}  // namespace tivgan::eval
