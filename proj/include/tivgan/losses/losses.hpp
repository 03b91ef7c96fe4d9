// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "tivgan/models/networks.hpp"

namespace tivgan::losses {

/// Scores are clamped to [kScoreFloor, 1 - kScoreFloor] before any log.
inline constexpr double kScoreFloor = 1e-7;

/// The five batch-averaged log terms of one discriminator's objective.
struct LossBreakdown {
  double real_uncond = 0.0;
  double real_cond = 0.0;
  double fake_uncond = 0.0;
  double fake_cond = 0.0;
  double wrong_cond = 0.0;
  double total = 0.0;
};

/// Same terms as graph nodes; discriminators ascend `total`.
template <typename S>
struct LossTerms {
  nn::Var<S> real_uncond, real_cond, fake_uncond, fake_cond, wrong_cond, total;
  /// Throws NumericError when any term is non-finite.
  LossBreakdown values() const;
};

/// Five-term objective for any two-branch discriminator:
///   mean log D(real) + mean log D(real, phi) + mean log(1 - D(fake))
///   + mean log(1 - D(fake, phi)) + mean log(1 - D(real, wrong_phi)).
/// Patch-branch terms average over locations first.
template <typename S>
LossTerms<S> adversarial_terms(nn::Graph<S>& g, models::Discriminator<S>& d, const nn::Var<S>& real,
                               const nn::Var<S>& fake, const nn::Var<S>& phi, const nn::Var<S>& wrong_phi);

/// Image discriminator on (a, b) pairs [N, 2C, H, W].
template <typename S>
LossTerms<S> loss_image(nn::Graph<S>& g, models::Discriminator<S>& d_image, const nn::Var<S>& real_pair,
                        const nn::Var<S>& fake_pair, const nn::Var<S>& phi, const nn::Var<S>& wrong_phi);

/// Step discriminator m on clips [N, 2^m C, H, W].
template <typename S>
LossTerms<S> loss_step(nn::Graph<S>& g, models::Discriminator<S>& d_step, const nn::Var<S>& real_clip,
                       const nn::Var<S>& fake_clip, const nn::Var<S>& phi, const nn::Var<S>& wrong_phi);

/// Overall objective: image part plus the step part when present.
double loss_total(const LossBreakdown& image, const std::optional<LossBreakdown>& step);

/// What G and R minimize against one discriminator. Saturating: the two
/// fake terms, log(1 - D(fake)) + log(1 - D(fake, phi)). Non-saturating:
/// -log D(fake) - log D(fake, phi).
/// Computed from logits without the score clamp.
template <typename S>
nn::Var<S> generator_objective(nn::Graph<S>& g, models::Discriminator<S>& d, const nn::Var<S>& fake,
                               const nn::Var<S>& phi, bool non_saturating);

/// Two chains to position k with shared phi and noise from rng_a / rng_b;
/// the two k-th frames concatenated channel-wise, a first. k is 1-based.
template <typename S>
nn::Var<S> make_isp_fake_pair(nn::Graph<S>& g, models::Generator<S>& gen, models::RecurrentUnit<S>& r,
                              const nn::Var<S>& phi, int k, Rng& rng_a, Rng& rng_b);

/// Independent chains drawn one after another from `rng`.
template <typename S>
nn::Var<S> make_isp_fake_pair(nn::Graph<S>& g, models::Generator<S>& gen, models::RecurrentUnit<S>& r,
                              const nn::Var<S>& phi, int k, Rng& rng);

/// Tab-separated per-iteration log:
/// iteration stage disc real_uncond real_cond fake_uncond fake_cond wrong_cond total g_loss
class MetricsLog {
 public:
  MetricsLog() = default;
  /// Opens for append; keeps only the first `offset` bytes of an existing file
  /// so a resumed run continues where its checkpoint left off.
  void open(const std::filesystem::path& path, std::optional<std::uint64_t> offset = std::nullopt);
  void append(std::int64_t iteration, const std::string& stage, const std::string& disc, const LossBreakdown& b,
              double g_loss);
  std::uint64_t offset();
  bool is_open() const { return out_.is_open(); }
  static std::string header();

 private:
  std::ofstream out_;
};

}  // namespace tivgan::losses
