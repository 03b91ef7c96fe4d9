// SPDX-License-Identifier: Apache-2.0
#include "tivgan/losses/losses.hpp"

#include <cmath>
#include <cstdio>

#include "tivgan/errors.hpp"

namespace tivgan::losses {

using nn::Graph;
using nn::Var;

namespace {

template <typename S>
Var<S> mean_log(const Var<S>& score) {
  return nn::mean(nn::log(nn::clamp(score, kScoreFloor, 1.0 - kScoreFloor)));
}

template <typename S>
Var<S> mean_log_complement(const Var<S>& score) {
  return nn::mean(nn::log(nn::affine(nn::clamp(score, kScoreFloor, 1.0 - kScoreFloor), -1.0, 1.0)));
}

template <typename S>
double scalar(const Var<S>& v) {
  return static_cast<double>(v.value()[0]);
}

}  // namespace

template <typename S>
LossBreakdown LossTerms<S>::values() const {
  LossBreakdown b{scalar(real_uncond), scalar(real_cond), scalar(fake_uncond), scalar(fake_cond), scalar(wrong_cond),
                  scalar(total)};
  for (double v : {b.real_uncond, b.real_cond, b.fake_uncond, b.fake_cond, b.wrong_cond, b.total})
    if (!std::isfinite(v)) throw NumericError("adversarial loss is not finite");
  return b;
}

template <typename S>
LossTerms<S> adversarial_terms(Graph<S>& g, models::Discriminator<S>& d, const Var<S>& real, const Var<S>& fake,
                               const Var<S>& phi, const Var<S>& wrong_phi) {
  auto real_f = d.features(g, real);
  auto fake_f = d.features(g, fake);
  LossTerms<S> t;
  t.real_uncond = mean_log(d.patch(g, real_f));
  t.real_cond = mean_log(d.conditional(g, real_f, phi));
  t.fake_uncond = mean_log_complement(d.patch(g, fake_f));
  t.fake_cond = mean_log_complement(d.conditional(g, fake_f, phi));
  t.wrong_cond = mean_log_complement(d.conditional(g, real_f, wrong_phi));
  t.total = t.real_uncond + t.real_cond + t.fake_uncond + t.fake_cond + t.wrong_cond;
  return t;
}

template <typename S>
LossTerms<S> loss_image(Graph<S>& g, models::Discriminator<S>& d_image, const Var<S>& real_pair,
                        const Var<S>& fake_pair, const Var<S>& phi, const Var<S>& wrong_phi) {
  if (d_image.kind != models::DiscriminatorKind::image)
    throw InvalidInput("loss_image: " + d_image.label() + " is not the image discriminator");
  return adversarial_terms(g, d_image, real_pair, fake_pair, phi, wrong_phi);
}

template <typename S>
LossTerms<S> loss_step(Graph<S>& g, models::Discriminator<S>& d_step, const Var<S>& real_clip, const Var<S>& fake_clip,
                       const Var<S>& phi, const Var<S>& wrong_phi) {
  if (d_step.kind != models::DiscriminatorKind::step)
    throw InvalidInput("loss_step: " + d_step.label() + " is not a step discriminator");
  return adversarial_terms(g, d_step, real_clip, fake_clip, phi, wrong_phi);
}

double loss_total(const LossBreakdown& image, const std::optional<LossBreakdown>& step) {
  return image.total + (step ? step->total : 0.0);
}

template <typename S>
Var<S> generator_objective(Graph<S>& g, models::Discriminator<S>& d, const Var<S>& fake, const Var<S>& phi,
                           bool non_saturating) {
  // Works on logits: a clamped score would cut the gradient once D rejects a fake outright.
  auto f = d.features(g, fake);
  auto patch = d.patch_logit(g, f);
  auto cond = d.conditional_logit(g, f, phi);
  if (non_saturating) return nn::affine(nn::mean(nn::log_sigmoid(patch)) + nn::mean(nn::log_sigmoid(cond)), -1.0, 0.0);
  return nn::mean(nn::log_sigmoid(nn::affine(patch, -1.0, 0.0))) +
         nn::mean(nn::log_sigmoid(nn::affine(cond, -1.0, 0.0)));
}

template <typename S>
Var<S> make_isp_fake_pair(Graph<S>& g, models::Generator<S>& gen, models::RecurrentUnit<S>& r, const Var<S>& phi,
                          int k, Rng& rng_a, Rng& rng_b) {
  if (k < 1) throw InvalidInput("make_isp_fake_pair: frame position must be >= 1, got " + std::to_string(k));
  auto chain_a = models::latent_chain(g, r, phi, k, rng_a);
  auto chain_b = models::latent_chain(g, r, phi, k, rng_b);
  return nn::concat_channels<S>({gen.forward(g, chain_a.back()), gen.forward(g, chain_b.back())});
}

template <typename S>
Var<S> make_isp_fake_pair(Graph<S>& g, models::Generator<S>& gen, models::RecurrentUnit<S>& r, const Var<S>& phi,
                          int k, Rng& rng) {
  return make_isp_fake_pair(g, gen, r, phi, k, rng, rng);
}

void MetricsLog::open(const std::filesystem::path& path, std::optional<std::uint64_t> offset) {
  if (out_.is_open()) out_.close();
  const bool exists = std::filesystem::exists(path);
  if (exists && offset) std::filesystem::resize_file(path, std::min<std::uint64_t>(*offset, std::filesystem::file_size(path)));
  out_.open(path, std::ios::app | std::ios::binary);
  if (!out_) throw FormatError("cannot open metrics log " + path.string());
  out_.seekp(0, std::ios::end);
  if (out_.tellp() == 0) out_ << header() << '\n';
  out_.flush();
}

void MetricsLog::append(std::int64_t iteration, const std::string& stage, const std::string& disc,
                        const LossBreakdown& b, double g_loss) {
  if (!out_.is_open()) return;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld\t%s\t%s\t%.6g\t%.6g\t%.6g\t%.6g\t%.6g\t%.6g\t%.6g\n",
                static_cast<long long>(iteration), stage.c_str(), disc.c_str(), b.real_uncond, b.real_cond,
                b.fake_uncond, b.fake_cond, b.wrong_cond, b.total, g_loss);
  out_ << buf;
}

std::uint64_t MetricsLog::offset() {
  if (!out_.is_open()) return 0;
  out_.flush();
  return static_cast<std::uint64_t>(out_.tellp());
}

std::string MetricsLog::header() {
  return "iteration\tstage\tdisc\treal_uncond\treal_cond\tfake_uncond\tfake_cond\twrong_cond\ttotal\tg_loss";
}

#define TIVGAN_INSTANTIATE_LOSSES(S)                                                                               \
  template struct LossTerms<S>;                                                                                    \
  template LossTerms<S> adversarial_terms(Graph<S>&, models::Discriminator<S>&, const Var<S>&, const Var<S>&,      \
                                          const Var<S>&, const Var<S>&);                                           \
  template LossTerms<S> loss_image(Graph<S>&, models::Discriminator<S>&, const Var<S>&, const Var<S>&,             \
                                   const Var<S>&, const Var<S>&);                                                  \
  template LossTerms<S> loss_step(Graph<S>&, models::Discriminator<S>&, const Var<S>&, const Var<S>&,              \
                                  const Var<S>&, const Var<S>&);                                                   \
  template Var<S> generator_objective(Graph<S>&, models::Discriminator<S>&, const Var<S>&, const Var<S>&, bool);   \
  template Var<S> make_isp_fake_pair(Graph<S>&, models::Generator<S>&, models::RecurrentUnit<S>&, const Var<S>&,   \
                                     int, Rng&, Rng&);                                                             \
  template Var<S> make_isp_fake_pair(Graph<S>&, models::Generator<S>&, models::RecurrentUnit<S>&, const Var<S>&,   \
                                     int, Rng&);

TIVGAN_INSTANTIATE_LOSSES(float)
TIVGAN_INSTANTIATE_LOSSES(double)

}  // namespace tivgan::losses
