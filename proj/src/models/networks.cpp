// SPDX-License-Identifier: Apache-2.0
#include "tivgan/models/networks.hpp"

#include <algorithm>

#include "tivgan/errors.hpp"

namespace tivgan::models {

using nn::Graph;
using nn::Parameter;
using nn::Tensor;
using nn::Var;

int ArchConfig::levels() const {
  int levels = 0;
  for (int s = frame_size; s > 4; s /= 2) ++levels;
  return levels;
}

void ArchConfig::validate() const {
  if (frame_size < 8 || (frame_size & (frame_size - 1)) != 0)
    throw InvalidInput("arch: frame_size must be a power of two >= 8, got " + std::to_string(frame_size));
  if (channels < 1 || text_dim < 1 || z_dim < 1 || hidden < 1 || ngf < 1 || ndf < 1 || max_mult < 1)
    throw InvalidInput("arch: all sizes must be positive");
}

namespace {

int width(int base, int mult, int cap) { return base * std::min(mult, cap); }

std::string relabel(const std::string& name, const std::string& prefix) {
  const auto dot = name.find('.');
  return prefix + (dot == std::string::npos ? std::string() : name.substr(dot));
}

}  // namespace

template <typename S>
Generator<S>::Generator(const ArchConfig& a, nn::ParamFactory& f) : arch(a) {
  arch.validate();
  const int L = arch.levels();
  const int c0 = width(arch.ngf, 1 << (L - 1), arch.max_mult);
  project = nn::Linear<S>("g.project", arch.hidden, static_cast<std::int64_t>(c0) * 16, f);
  int in = c0;
  for (int l = 0; l < L; ++l) {
    const int out = l + 1 == L ? arch.channels : width(arch.ngf, 1 << (L - 2 - l), arch.max_mult);
    ups.emplace_back("g.up" + std::to_string(l), in, out, 4, nn::Conv2dOptions{2, 1}, f);
    in = out;
  }
}

template <typename S>
Var<S> Generator<S>::forward(Graph<S>& g, const Var<S>& latent) {
  if (latent.shape().size() != 2 || latent.shape()[1] != arch.hidden)
    throw ShapeError("generator: latent " + nn::shape_string(latent.shape()) + " expected [N, " +
                     std::to_string(arch.hidden) + "]");
  const auto n = latent.shape()[0];
  auto x = project.forward(g, latent);
  x = nn::relu(nn::instance_norm(nn::reshape(x, {n, x.shape()[1] / 16, 4, 4})));
  for (std::size_t l = 0; l < ups.size(); ++l) {
    x = ups[l].forward(g, x);
    x = l + 1 == ups.size() ? nn::tanh(x) : nn::relu(nn::instance_norm(x));
  }
  return x;
}

template <typename S>
void Generator<S>::collect(std::vector<Parameter<S>*>& out) {
  project.collect(out);
  for (auto& u : ups) u.collect(out);
}

template <typename S>
RecurrentUnit<S>::RecurrentUnit(const ArchConfig& a, nn::ParamFactory& f)
    : arch(a), cell("r.gru", a.text_dim + a.z_dim, a.hidden, f) {}

template <typename S>
Var<S> RecurrentUnit<S>::step(Graph<S>& g, const Var<S>& v_prev, const Var<S>& phi, const Var<S>& z) {
  return cell.forward(g, nn::concat<S>({phi, z}, 1), v_prev);
}

template <typename S>
void RecurrentUnit<S>::collect(std::vector<Parameter<S>*>& out) {
  cell.collect(out);
}

template <typename S>
Discriminator<S>::Discriminator(const ArchConfig& a, DiscriminatorKind k, int m, nn::ParamFactory& f)
    : arch(a), kind(k), step(k == DiscriminatorKind::image ? 0 : m) {
  arch.validate();
  if (kind == DiscriminatorKind::step && (m < 1 || m > 16))
    throw InvalidInput("step discriminator index " + std::to_string(m) + " out of range");
  const auto prefix = label();
  int in = in_channels();
  for (int l = 0; l < arch.levels(); ++l) {
    const int out = width(arch.ndf, 1 << l, arch.max_mult);
    trunk.emplace_back(prefix + ".conv" + std::to_string(l), in, out, 4, nn::Conv2dOptions{2, 1}, f);
    in = out;
  }
  cond_hidden = nn::Conv2d<S>(prefix + ".cond_hidden", in + arch.text_dim, in, 1, {}, f);
  // Spans the whole 4x4 map, so a small object's evidence is not averaged away.
  cond_out = nn::Conv2d<S>(prefix + ".cond_out", in, 1, 4, {}, f);
  patch_out = nn::Conv2d<S>(prefix + ".patch_out", in, 1, 1, {}, f);
}

template <typename S>
std::string Discriminator<S>::label() const {
  return kind == DiscriminatorKind::image ? "d_i" : "d_s" + std::to_string(step);
}

template <typename S>
int Discriminator<S>::feature_channels() const {
  return static_cast<int>(trunk.back().weight.value.dim(0));
}

template <typename S>
Var<S> Discriminator<S>::first_layer(Graph<S>& g, const Var<S>& x) {
  const auto& s = x.shape();
  if (s.size() != 4 || s[1] != in_channels() || s[2] != arch.frame_size || s[3] != arch.frame_size)
    throw ShapeError(label() + ": input " + nn::shape_string(s) + " expected [N, " + std::to_string(in_channels()) +
                     ", " + std::to_string(arch.frame_size) + ", " + std::to_string(arch.frame_size) + "]");
  return trunk.front().forward(g, x);
}

template <typename S>
Var<S> Discriminator<S>::features(Graph<S>& g, const Var<S>& x) {
  auto h = nn::leaky_relu(first_layer(g, x), 0.2);
  for (std::size_t l = 1; l < trunk.size(); ++l) h = nn::leaky_relu(nn::instance_norm(trunk[l].forward(g, h)), 0.2);
  return h;
}

template <typename S>
Var<S> Discriminator<S>::conditional_logit(Graph<S>& g, const Var<S>& feats, const Var<S>& phi) {
  if (phi.shape() != nn::Shape{feats.shape()[0], arch.text_dim})
    throw ShapeError(label() + ": text code " + nn::shape_string(phi.shape()) + " expected [" +
                     std::to_string(feats.shape()[0]) + ", " + std::to_string(arch.text_dim) + "]");
  auto joint = nn::concat_channels<S>({feats, nn::broadcast_spatial(phi, feats.shape()[2], feats.shape()[3])});
  auto h = nn::leaky_relu(cond_hidden.forward(g, joint), 0.2);
  return nn::spatial_mean(cond_out.forward(g, h));
}

template <typename S>
Var<S> Discriminator<S>::conditional(Graph<S>& g, const Var<S>& feats, const Var<S>& phi) {
  return nn::sigmoid(conditional_logit(g, feats, phi));
}

template <typename S>
Var<S> Discriminator<S>::patch_logit(Graph<S>& g, const Var<S>& feats) {
  return patch_out.forward(g, feats);
}

template <typename S>
Var<S> Discriminator<S>::patch(Graph<S>& g, const Var<S>& feats) {
  return nn::sigmoid(patch_logit(g, feats));
}

template <typename S>
void Discriminator<S>::collect(std::vector<Parameter<S>*>& out) {
  for (auto& c : trunk) c.collect(out);
  cond_hidden.collect(out);
  cond_out.collect(out);
  patch_out.collect(out);
}

template <typename S>
std::vector<Var<S>> latent_chain(Graph<S>& g, RecurrentUnit<S>& r, const Var<S>& phi, const Var<S>& z0,
                                 const std::vector<Var<S>>& zs) {
  if (zs.empty()) throw InvalidInput("latent_chain: frame count must be >= 1");
  std::vector<Var<S>> out;
  out.reserve(zs.size());
  Var<S> v = z0;
  for (const auto& z : zs) {
    v = r.step(g, v, phi, z);
    out.push_back(v);
  }
  return out;
}

template <typename S>
std::vector<Var<S>> latent_chain(Graph<S>& g, RecurrentUnit<S>& r, const Var<S>& phi, int k, Rng& rng) {
  if (k < 1) throw InvalidInput("latent_chain: frame count must be >= 1, got " + std::to_string(k));
  const auto n = phi.shape()[0];
  auto noise = [&](std::int64_t dim) {
    Tensor<S> t({n, dim});
    for (auto& v : t.values()) v = static_cast<S>(rng.normal());
    return g.constant(std::move(t));
  };
  auto z0 = noise(r.arch.hidden);
  std::vector<Var<S>> zs;
  for (int i = 0; i < k; ++i) zs.push_back(noise(r.arch.z_dim));
  return latent_chain(g, r, phi, z0, zs);
}

template <typename S>
Var<S> generate_frames(Graph<S>& g, Generator<S>& gen, const std::vector<Var<S>>& latents) {
  if (latents.empty()) throw InvalidInput("generate_frames: no latents");
  const auto K = static_cast<std::int64_t>(latents.size());
  const auto N = latents.front().shape()[0];
  // Sample-major rows (n * K + k) so the output reshapes to [N, K * C, H, W].
  std::vector<std::int64_t> rows;
  rows.reserve(static_cast<std::size_t>(N * K));
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t k = 0; k < K; ++k) rows.push_back(k * N + n);
  auto stacked = K == 1 ? latents.front() : nn::index_select(nn::concat(latents, 0), rows);
  auto frames = gen.forward(g, stacked);
  const auto& s = frames.shape();
  return nn::reshape(frames, {N, K * s[1], s[2], s[3]});
}

template <typename S>
Tensor<S> frame_of(const Tensor<S>& clip, int channels, int k) {
  const auto N = clip.dim(0), KC = clip.dim(1), H = clip.dim(2), W = clip.dim(3);
  if (KC % channels != 0 || k < 0 || k >= KC / channels)
    throw InvalidInput("frame_of: frame " + std::to_string(k) + " of " + nn::shape_string(clip.shape()));
  Tensor<S> out({N, channels, H, W});
  const auto plane = static_cast<std::size_t>(channels * H * W);
  for (std::int64_t n = 0; n < N; ++n) {
    const auto* src = clip.data() + n * KC * H * W + static_cast<std::int64_t>(k) * channels * H * W;
    std::copy(src, src + plane, out.data() + n * static_cast<std::int64_t>(plane));
  }
  return out;
}

template <typename S>
Var<S> discriminate_image(Graph<S>& g, Discriminator<S>& d, const Var<S>& pair, const std::optional<Var<S>>& phi) {
  if (d.kind != DiscriminatorKind::image) throw InvalidInput("discriminate_image: " + d.label() + " is a step discriminator");
  auto f = d.features(g, pair);
  return phi ? d.conditional(g, f, *phi) : d.patch(g, f);
}

template <typename S>
Var<S> discriminate_step(Graph<S>& g, Discriminator<S>& d, const Var<S>& clip, const std::optional<Var<S>>& phi) {
  if (d.kind != DiscriminatorKind::step) throw InvalidInput("discriminate_step: " + d.label() + " is not a step discriminator");
  auto f = d.features(g, clip);
  return phi ? d.conditional(g, f, *phi) : d.patch(g, f);
}

template <typename S>
Discriminator<S> init_step_discriminator(const Discriminator<S>& prev, nn::IdAllocator& ids) {
  const int C = prev.arch.channels;
  const auto& w = prev.trunk.front().weight.value;  // [Cout, Cin, k, k]
  if (w.dim(1) != prev.in_channels())
    throw InvalidInput("init_step_discriminator: first layer has " + std::to_string(w.dim(1)) + " input channels, expected " +
                       std::to_string(prev.in_channels()));

  // Previous first-layer weight as per-frame slices.
  int slices = prev.frames();
  Tensor<S> source = w;
  if (prev.kind == DiscriminatorKind::image) {
    // The pair's two slices act on one frame when it is paired with itself.
    slices = 1;
    source = Tensor<S>({w.dim(0), C, w.dim(2), w.dim(3)});
    const auto block = static_cast<std::int64_t>(C) * w.dim(2) * w.dim(3);
    for (std::int64_t o = 0; o < w.dim(0); ++o)
      for (std::int64_t j = 0; j < block; ++j)
        source.data()[o * block + j] = w.data()[o * 2 * block + j] + w.data()[o * 2 * block + block + j];
  }

  Discriminator<S> next = prev;
  next.kind = DiscriminatorKind::step;
  next.step = prev.kind == DiscriminatorKind::image ? 1 : prev.step + 1;
  const auto k2 = w.dim(2) * w.dim(3);
  const auto block = static_cast<std::int64_t>(C) * k2;
  Tensor<S> nw({w.dim(0), 2 * slices * C, w.dim(2), w.dim(3)});
  for (std::int64_t o = 0; o < w.dim(0); ++o)
    for (int i = 0; i < slices; ++i)
      for (int half = 0; half < 2; ++half)
        for (std::int64_t j = 0; j < block; ++j)
          nw.data()[(o * 2 * slices + 2 * i + half) * block + j] =
              source.data()[(o * slices + i) * block + j] / S{2};
  next.trunk.front().weight.value = std::move(nw);

  std::vector<Parameter<S>*> params;
  next.collect(params);
  const auto prefix = next.label();
  for (auto* p : params) {
    p->id = ids.take();
    p->name = relabel(p->name, prefix);
    p->grad = Tensor<S>(p->value.shape());
  }
  return next;
}

template <typename S>
Discriminator<S> inherit_step_discriminator(const Discriminator<S>& prev, int m, nn::IdAllocator& ids) {
  const int from = prev.kind == DiscriminatorKind::image ? 0 : prev.step;
  if (m <= from) throw InvalidInput("inherit_step_discriminator: step " + std::to_string(m) + " does not follow " + prev.label());
  Discriminator<S> d = init_step_discriminator(prev, ids);
  while (d.step < m) d = init_step_discriminator(d, ids);
  return d;
}

template <typename S>
Discriminator<S> fresh_step_discriminator(const ArchConfig& arch, int m, nn::IdAllocator& ids, Rng& rng) {
  nn::ParamFactory f(ids, rng);
  return Discriminator<S>(arch, DiscriminatorKind::step, m, f);
}

template <typename S>
ModelSet<S>::ModelSet(const ArchConfig& a, Rng& rng) : arch(a) {
  nn::ParamFactory f(ids, rng);
  generator = Generator<S>(arch, f);
  recurrent = RecurrentUnit<S>(arch, f);
  image_disc = Discriminator<S>(arch, DiscriminatorKind::image, 0, f);
}

template <typename S>
std::vector<Parameter<S>*> ModelSet<S>::generator_params() {
  std::vector<Parameter<S>*> out;
  generator.collect(out);
  recurrent.collect(out);
  return out;
}

template <typename S>
std::vector<Parameter<S>*> ModelSet<S>::image_disc_params() {
  std::vector<Parameter<S>*> out;
  image_disc.collect(out);
  return out;
}

template <typename S>
std::vector<Parameter<S>*> ModelSet<S>::step_disc_params() {
  std::vector<Parameter<S>*> out;
  if (step_disc) step_disc->collect(out);
  return out;
}

template <typename S>
std::vector<Parameter<S>*> ModelSet<S>::all_params() {
  auto out = generator_params();
  for (auto* p : image_disc_params()) out.push_back(p);
  for (auto* p : step_disc_params()) out.push_back(p);
  return out;
}

#define TIVGAN_INSTANTIATE_MODELS(S)                                                                              \
  template class Generator<S>;                                                                                    \
  template class RecurrentUnit<S>;                                                                                \
  template class Discriminator<S>;                                                                                \
  template struct ModelSet<S>;                                                                                    \
  template std::vector<Var<S>> latent_chain(Graph<S>&, RecurrentUnit<S>&, const Var<S>&, int, Rng&);             \
  template std::vector<Var<S>> latent_chain(Graph<S>&, RecurrentUnit<S>&, const Var<S>&, const Var<S>&,          \
                                            const std::vector<Var<S>>&);                                          \
  template Var<S> generate_frames(Graph<S>&, Generator<S>&, const std::vector<Var<S>>&);                          \
  template Tensor<S> frame_of(const Tensor<S>&, int, int);                                                        \
  template Var<S> discriminate_image(Graph<S>&, Discriminator<S>&, const Var<S>&, const std::optional<Var<S>>&);  \
  template Var<S> discriminate_step(Graph<S>&, Discriminator<S>&, const Var<S>&, const std::optional<Var<S>>&);   \
  template Discriminator<S> init_step_discriminator(const Discriminator<S>&, nn::IdAllocator&);                   \
  template Discriminator<S> inherit_step_discriminator(const Discriminator<S>&, int, nn::IdAllocator&);           \
  template Discriminator<S> fresh_step_discriminator(const ArchConfig&, int, nn::IdAllocator&, Rng&);

TIVGAN_INSTANTIATE_MODELS(float)
TIVGAN_INSTANTIATE_MODELS(double)

}  // namespace tivgan::models
