// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tivgan/nn/layers.hpp"

namespace tivgan::models {

/// Sizes shared by every network. Frame size must be 4 * 2^k with k >= 1.
struct ArchConfig {
  int channels = 3;
  int frame_size = 64;
  int text_dim = 60;
  int z_dim = 50;
  int hidden = 128;
  int ngf = 16;
  int ndf = 16;
  /// Channel multiplier cap for the widest layers.
  int max_mult = 8;

  /// Number of stride-2 layers between 4x4 and frame_size.
  int levels() const;
  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

/// Latent [N, hidden] -> frame [N, C, S, S] in [-1, 1].
/// Linear to a 4x4 map, stride-2 transposed convolutions with instance norm
/// and ReLU, tanh head.
template <typename S>
class Generator {
 public:
  Generator() = default;
  Generator(const ArchConfig& arch, nn::ParamFactory& f);

  nn::Var<S> forward(nn::Graph<S>& g, const nn::Var<S>& latent);
  void collect(std::vector<nn::Parameter<S>*>& out);

  ArchConfig arch;
  nn::Linear<S> project;
  std::vector<nn::ConvTranspose2d<S>> ups;
};

/// The single GRU cell shared by every frame: input [phi, z], hidden v.
template <typename S>
class RecurrentUnit {
 public:
  RecurrentUnit() = default;
  RecurrentUnit(const ArchConfig& arch, nn::ParamFactory& f);

  /// v_next = GRU(v_prev, concat(phi, z))
  nn::Var<S> step(nn::Graph<S>& g, const nn::Var<S>& v_prev, const nn::Var<S>& phi, const nn::Var<S>& z);
  void collect(std::vector<nn::Parameter<S>*>& out);

  ArchConfig arch;
  nn::GruCell<S> cell;
};

enum class DiscriminatorKind : std::uint8_t { image = 0, step = 1 };

/// Two-branch discriminator over channel-concatenated frames.
/// image: an (a, b) frame pair, 2C channels. step m: 2^m frames, C * 2^m
/// channels. A strided leaky-ReLU trunk reduces to a 4x4 map; the
/// conditional branch appends the spatially broadcast text code and scores
/// the match with one 4x4 kernel; the patch branch scores each location
/// without text.
template <typename S>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const ArchConfig& arch, DiscriminatorKind kind, int step, nn::ParamFactory& f);

  /// Frames expected in the input; 2 for the image discriminator.
  int frames() const { return kind == DiscriminatorKind::image ? 2 : 1 << step; }
  int in_channels() const { return frames() * arch.channels; }
  std::string label() const;

  /// Pre-activation of the first convolution.
  nn::Var<S> first_layer(nn::Graph<S>& g, const nn::Var<S>& x);
  /// Trunk features [N, F, 4, 4].
  nn::Var<S> features(nn::Graph<S>& g, const nn::Var<S>& x);
  /// Text-match score [N, 1] in (0, 1).
  nn::Var<S> conditional(nn::Graph<S>& g, const nn::Var<S>& features, const nn::Var<S>& phi);
  /// Patch score map [N, 1, 4, 4] in (0, 1).
  nn::Var<S> patch(nn::Graph<S>& g, const nn::Var<S>& features);
  /// Pre-sigmoid versions of the two heads.
  nn::Var<S> conditional_logit(nn::Graph<S>& g, const nn::Var<S>& features, const nn::Var<S>& phi);
  nn::Var<S> patch_logit(nn::Graph<S>& g, const nn::Var<S>& features);

  void collect(std::vector<nn::Parameter<S>*>& out);
  int feature_channels() const;

  ArchConfig arch;
  DiscriminatorKind kind = DiscriminatorKind::image;
  int step = 0;
  std::vector<nn::Conv2d<S>> trunk;  // trunk[0] is the first layer
  nn::Conv2d<S> cond_hidden;
  nn::Conv2d<S> cond_out;
  nn::Conv2d<S> patch_out;
};

/// Latents v_1..v_K for a batch: v_1 = R(z_0, (phi, z_1)) and
/// v_k = R(v_{k-1}, (phi, z_k)); z_0 [N, hidden] and every z_k [N, z_dim]
/// are fresh standard-normal draws, taken in that order.
template <typename S>
std::vector<nn::Var<S>> latent_chain(nn::Graph<S>& g, RecurrentUnit<S>& r, const nn::Var<S>& phi, int k, Rng& rng);

/// Same chain with caller-supplied noise (z0 [N, hidden], zs K x [N, z_dim]).
template <typename S>
std::vector<nn::Var<S>> latent_chain(nn::Graph<S>& g, RecurrentUnit<S>& r, const nn::Var<S>& phi,
                                     const nn::Var<S>& z0, const std::vector<nn::Var<S>>& zs);

/// Frame k of sample n from latents[k]; result [N, K * C, H, W] with frames
/// channel-concatenated in temporal order.
template <typename S>
nn::Var<S> generate_frames(nn::Graph<S>& g, Generator<S>& gen, const std::vector<nn::Var<S>>& latents);

/// Splits [N, K * C, H, W] into frame k as [N, C, H, W] (no gradient).
template <typename S>
nn::Tensor<S> frame_of(const nn::Tensor<S>& clip, int channels, int k);

/// Scores for an (a, b) pair tensor [N, 2C, H, W]; `phi` [N, d] optional.
template <typename S>
nn::Var<S> discriminate_image(nn::Graph<S>& g, Discriminator<S>& d, const nn::Var<S>& pair,
                              const std::optional<nn::Var<S>>& phi);

/// Scores for a clip [N, 2^m * C, H, W]; `phi` optional.
template <typename S>
nn::Var<S> discriminate_step(nn::Graph<S>& g, Discriminator<S>& d, const nn::Var<S>& clip,
                             const std::optional<nn::Var<S>>& phi);

/// Step discriminator m + 1 (or the first step discriminator when `prev` is
/// the image discriminator) built from `prev`: first-layer input slices are
/// split in two halves of the previous weight, everything else is copied.
/// For the image discriminator the two pair slices are first summed so that
/// a self-pair keeps its pre-activation. Fresh parameter ids come from `ids`.
template <typename S>
Discriminator<S> init_step_discriminator(const Discriminator<S>& prev, nn::IdAllocator& ids);

/// Step discriminator m from `prev`, doubling repeatedly over skipped steps.
template <typename S>
Discriminator<S> inherit_step_discriminator(const Discriminator<S>& prev, int m, nn::IdAllocator& ids);

/// Freshly initialized step discriminator m.
template <typename S>
Discriminator<S> fresh_step_discriminator(const ArchConfig& arch, int m, nn::IdAllocator& ids, Rng& rng);

/// G, R, D_I and the current step discriminator with one id space.
template <typename S>
struct ModelSet {
  ArchConfig arch;
  nn::IdAllocator ids;
  Generator<S> generator;
  RecurrentUnit<S> recurrent;
  Discriminator<S> image_disc;
  std::optional<Discriminator<S>> step_disc;

  ModelSet() = default;
  ModelSet(const ArchConfig& arch, Rng& rng);

  std::vector<nn::Parameter<S>*> generator_params();  // G and R
  std::vector<nn::Parameter<S>*> image_disc_params();
  std::vector<nn::Parameter<S>*> step_disc_params();
  std::vector<nn::Parameter<S>*> all_params();
};

}  // namespace tivgan::models
