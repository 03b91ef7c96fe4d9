// SPDX-License-Identifier: Apache-2.0
#include "tivgan/curriculum/curriculum.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "tivgan/data/sampling.hpp"
#include "tivgan/errors.hpp"

namespace tivgan::curriculum {

using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw InvalidInput("config: " + key + " expects an integer, got '" + v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw InvalidInput("config: " + key + " expects a number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw InvalidInput("config: " + key + " expects true/false, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<int> parse_steps_mask(const std::string& text) {
  std::vector<int> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_int("steps_mask", item)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string format_steps_mask(const std::vector<int>& mask) {
  std::string out;
  for (std::size_t i = 0; i < mask.size(); ++i) out += (i ? "," : "") + std::to_string(mask[i]);
  return out;
}

CurriculumConfig CurriculumConfig::from_kv(const KeyValues& kv) {
  CurriculumConfig c;
  static const std::set<std::string> known{
      "n",        "iters_stage1", "iters_per_step", "batch_size",   "lr_g",           "lr_d",     "beta1",
      "beta2",    "channels",     "frame_size",     "text_dim",     "d",              "z_dim",    "hidden",
      "h",        "ngf",          "ndf",            "max_mult",     "raw_dim",        "use_eq1_init",
      "use_isp",  "non_saturating", "steps_mask",   "seed",         "checkpoint_every"};
  for (const auto& [k, v] : kv.entries()) {
    if (!known.contains(k)) throw InvalidInput("config: unknown key '" + k + "'");
    auto i = [&] { return parse_int(k, v); };
    if (k == "n") c.n = static_cast<int>(i());
    else if (k == "iters_stage1") c.iters_stage1 = i();
    else if (k == "iters_per_step") c.iters_per_step = i();
    else if (k == "batch_size") c.batch_size = static_cast<int>(i());
    else if (k == "lr_g") c.lr_g = parse_double(k, v);
    else if (k == "lr_d") c.lr_d = parse_double(k, v);
    else if (k == "beta1") c.beta1 = parse_double(k, v);
    else if (k == "beta2") c.beta2 = parse_double(k, v);
    else if (k == "channels") c.arch.channels = static_cast<int>(i());
    else if (k == "frame_size") c.arch.frame_size = static_cast<int>(i());
    else if (k == "text_dim" || k == "d") c.arch.text_dim = static_cast<int>(i());
    else if (k == "z_dim") c.arch.z_dim = static_cast<int>(i());
    else if (k == "hidden" || k == "h") c.arch.hidden = static_cast<int>(i());
    else if (k == "ngf") c.arch.ngf = static_cast<int>(i());
    else if (k == "ndf") c.arch.ndf = static_cast<int>(i());
    else if (k == "max_mult") c.arch.max_mult = static_cast<int>(i());
    else if (k == "raw_dim") c.raw_dim = static_cast<int>(i());
    else if (k == "use_eq1_init") c.use_eq1_init = parse_bool(k, v);
    else if (k == "use_isp") c.use_isp = parse_bool(k, v);
    else if (k == "non_saturating") c.non_saturating = parse_bool(k, v);
    else if (k == "steps_mask") c.steps_mask = parse_steps_mask(v);
    else if (k == "seed") c.seed = static_cast<std::uint64_t>(i());
    else if (k == "checkpoint_every") c.checkpoint_every = i();
  }
  return c;
}

KeyValues CurriculumConfig::to_kv() const {
  KeyValues kv;
  kv.set("n", std::to_string(n));
  kv.set("iters_stage1", std::to_string(iters_stage1));
  kv.set("iters_per_step", std::to_string(iters_per_step));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("lr_g", format_double(lr_g));
  kv.set("lr_d", format_double(lr_d));
  kv.set("beta1", format_double(beta1));
  kv.set("beta2", format_double(beta2));
  kv.set("channels", std::to_string(arch.channels));
  kv.set("frame_size", std::to_string(arch.frame_size));
  kv.set("text_dim", std::to_string(arch.text_dim));
  kv.set("z_dim", std::to_string(arch.z_dim));
  kv.set("hidden", std::to_string(arch.hidden));
  kv.set("ngf", std::to_string(arch.ngf));
  kv.set("ndf", std::to_string(arch.ndf));
  kv.set("max_mult", std::to_string(arch.max_mult));
  kv.set("raw_dim", std::to_string(raw_dim));
  kv.set("use_eq1_init", use_eq1_init ? "true" : "false");
  kv.set("use_isp", use_isp ? "true" : "false");
  kv.set("non_saturating", non_saturating ? "true" : "false");
  kv.set("steps_mask", format_steps_mask(steps_mask));
  kv.set("seed", std::to_string(seed));
  kv.set("checkpoint_every", std::to_string(checkpoint_every));
  return kv;
}

void CurriculumConfig::validate() const {
  arch.validate();
  if (n < 1 || n > 8) throw InvalidInput("config: n must be in 1..8, got " + std::to_string(n));
  if (iters_stage1 < 0 || iters_per_step < 0) throw InvalidInput("config: iteration budgets must be >= 0");
  if (batch_size < 1) throw InvalidInput("config: batch_size must be >= 1");
  if (lr_g <= 0 || lr_d <= 0) throw InvalidInput("config: learning rates must be positive");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) throw InvalidInput("config: betas must be in [0, 1)");
  if (raw_dim < arch.text_dim) throw InvalidInput("config: raw_dim must be >= text_dim");
  if (checkpoint_every < 0) throw InvalidInput("config: checkpoint_every must be >= 0");
  for (int s : steps_mask)
    if (s < 0 || s > n) throw InvalidInput("config: steps_mask entry " + std::to_string(s) + " outside 0.." + std::to_string(n));
  if (!steps_mask.empty() && !std::binary_search(steps_mask.begin(), steps_mask.end(), n))
    throw InvalidInput("config: steps_mask must include the last step " + std::to_string(n));
}

bool CurriculumConfig::executes(int stage) const {
  if (stage < 0 || stage > n) return false;
  return steps_mask.empty() || std::binary_search(steps_mask.begin(), steps_mask.end(), stage);
}

std::vector<int> CurriculumConfig::executed_stages() const {
  std::vector<int> out;
  for (int s = 0; s <= n; ++s)
    if (executes(s)) out.push_back(s);
  return out;
}

std::int64_t CurriculumConfig::budget(int stage) const {
  if (!executes(stage)) return 0;
  auto own = [&](int s) { return s == 0 ? iters_stage1 : iters_per_step; };
  std::int64_t total = own(stage);
  for (int s = stage - 1; s >= 0 && !executes(s); --s) total += own(s);
  return total;
}

std::int64_t CurriculumConfig::total_iterations() const {
  std::int64_t total = 0;
  for (int s = 0; s <= n; ++s) total += budget(s);
  return total;
}

text::PcaModel fit_caption_pca(const data::DatasetIndex& index, int d, int raw_dim) {
  std::vector<text::RawEmbedding> raws;
  raws.reserve(index.clips.size());
  for (const auto& clip : index.clips) raws.push_back(text::encode_caption(clip.caption, raw_dim));
  return text::fit_pca(raws, d);
}

TrainingData prepare_training_data(const data::DatasetIndex& index, const text::PcaModel& pca) {
  if (index.clips.empty()) throw InvalidInput("training: dataset is empty");
  TrainingData td;
  td.index = &index;
  for (int k = 0; k < index.num_classes(); ++k)
    td.class_codes.push_back(text::condition_code(pca, index.class_caption(k)));
  td.thresholds = data::dissimilarity_thresholds(index);
  return td;
}

CurriculumState initial_state(const CurriculumConfig& config, const data::DatasetIndex& index) {
  config.validate();
  if (index.clips.empty()) throw InvalidInput("training: dataset is empty");
  if (index.frame_size() != config.arch.frame_size || index.channels() != config.arch.channels)
    throw InvalidInput("training: dataset frames are " + std::to_string(index.channels()) + "x" +
                       std::to_string(index.frame_size()) + " px, config expects " + std::to_string(config.arch.channels) +
                       "x" + std::to_string(config.arch.frame_size));
  if (index.clip_length() < (1 << config.n))
    throw InvalidInput("training: clips have " + std::to_string(index.clip_length()) + " frames, need " +
                       std::to_string(1 << config.n));
  CurriculumState st;
  st.config = config;
  st.rng = Rng(config.seed);
  Rng init = st.rng.fork();
  st.models = models::ModelSet<float>(config.arch, init);
  nn::AdamConfig g_cfg{config.lr_g, config.beta1, config.beta2, 1e-8};
  nn::AdamConfig d_cfg{config.lr_d, config.beta1, config.beta2, 1e-8};
  st.opt_g = nn::Adam<float>(g_cfg);
  st.opt_image = nn::Adam<float>(d_cfg);
  st.opt_step = nn::Adam<float>(d_cfg);
  st.pca = fit_caption_pca(index, config.arch.text_dim, config.raw_dim);
  const int first = config.executed_stages().front();
  if (first > 0) advance_step(st, first);
  return st;
}

namespace {

void copy_into(Tensor<float>& dst, std::int64_t row, std::int64_t channel_offset, std::span<const float> src,
               std::int64_t channels) {
  const auto plane = dst.dim(2) * dst.dim(3);
  float* out = dst.data() + (row * dst.dim(1) + channel_offset) * plane;
  std::copy(src.begin(), src.begin() + channels * plane, out);
}

Tensor<float> codes_tensor(const std::vector<const text::EmbeddedText*>& codes) {
  const auto d = static_cast<std::int64_t>(codes.front()->values.size());
  Tensor<float> t({static_cast<std::int64_t>(codes.size()), d});
  for (std::size_t i = 0; i < codes.size(); ++i)
    for (std::int64_t j = 0; j < d; ++j) t[static_cast<std::int64_t>(i) * d + j] = static_cast<float>(codes[i]->values[static_cast<std::size_t>(j)]);
  return t;
}

}  // namespace

IterationReport train_iteration(CurriculumState& st, const TrainingData& data) {
  const auto& cfg = st.config;
  const auto& index = *data.index;
  auto& M = st.models;
  Rng& rng = st.rng;
  const int B = cfg.batch_size;
  const int C = cfg.arch.channels;
  const int S = cfg.arch.frame_size;
  const int K = st.frames_per_clip();
  const bool evolutionary = st.stage > 0;
  if (evolutionary && !M.step_disc) throw InvalidInput("training: step " + std::to_string(st.stage) + " has no step discriminator");
  if (index.clip_length() < K)
    throw InvalidInput("training: clips have " + std::to_string(index.clip_length()) + " frames, step needs " + std::to_string(K));

  // Real data, text codes and ISP frame positions.
  std::vector<const text::EmbeddedText*> codes, wrong_codes;
  Tensor<float> real_pair({B, 2 * C, S, S});
  Tensor<float> real_clip;
  if (evolutionary) real_clip = Tensor<float>({B, K * C, S, S});
  std::vector<std::int64_t> ks(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    const int ci = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(index.clips.size()) - 1));
    const auto& clip = index.clips[static_cast<std::size_t>(ci)];
    codes.push_back(&data.class_codes[static_cast<std::size_t>(clip.caption.class_label)]);
    const auto wrong = data::sample_wrong_caption(index, clip.caption.class_label, rng);
    wrong_codes.push_back(&data.class_codes[static_cast<std::size_t>(wrong.class_label)]);
    if (cfg.use_isp) {
      const auto pair = data::sample_real_dissimilar_pair(index, ci, data.thresholds, rng);
      copy_into(real_pair, b, 0, pair.a.values(), C);
      copy_into(real_pair, b, C, pair.b.values(), C);
    } else {
      const auto x = data::sample_real_frame(clip, rng);
      copy_into(real_pair, b, 0, x.values(), C);
      copy_into(real_pair, b, C, x.values(), C);
    }
    if (evolutionary) {
      const auto w = data::sample_consecutive(clip, K, rng);
      copy_into(real_clip, b, 0, w.frames.values(), K * C);
    }
    ks[static_cast<std::size_t>(b)] = rng.uniform_int(0, K - 1);
  }
  const auto phi = codes_tensor(codes);
  const auto wrong_phi = codes_tensor(wrong_codes);

  IterationReport report;
  Tensor<float> fake_pair_value, fake_clip_value;

  // G and R descend their objective against frozen discriminators.
  {
    Graph<float> g;
    g.freeze(M.image_disc_params());
    g.freeze(M.step_disc_params());
    auto phi_v = g.constant(phi);
    auto chain_a = models::latent_chain(g, M.recurrent, phi_v, K, rng);
    auto fake_clip = models::generate_frames(g, M.generator, chain_a);
    std::vector<std::int64_t> rows_a, rows_b;
    for (int b = 0; b < B; ++b) {
      rows_a.push_back(b * K + ks[static_cast<std::size_t>(b)]);
      rows_b.push_back(ks[static_cast<std::size_t>(b)] * B + b);
    }
    auto frame_a = nn::index_select(nn::reshape(fake_clip, {B * K, C, S, S}), rows_a);
    Var<float> fake_pair;
    if (cfg.use_isp) {
      auto chain_b = models::latent_chain(g, M.recurrent, phi_v, K, rng);
      auto latent_b = nn::index_select(K == 1 ? chain_b.front() : nn::concat(chain_b, 0), rows_b);
      fake_pair = nn::concat_channels<float>({frame_a, M.generator.forward(g, latent_b)});
    } else {
      fake_pair = nn::concat_channels<float>({frame_a, frame_a});
    }
    auto objective = losses::generator_objective(g, M.image_disc, fake_pair, phi_v, cfg.non_saturating);
    if (evolutionary)
      objective = objective + losses::generator_objective(g, *M.step_disc, fake_clip, phi_v, cfg.non_saturating);
    auto params = M.generator_params();
    nn::zero_grads<float>(params);
    g.backward(objective);
    st.opt_g.step(params);
    report.g_loss = objective.value()[0];
    fake_pair_value = fake_pair.value();
    fake_clip_value = fake_clip.value();
  }

  // Discriminators ascend their objectives on the same (now fixed) fakes.
  {
    Graph<float> g;
    auto terms = losses::loss_image(g, M.image_disc, g.constant(real_pair), g.constant(fake_pair_value),
                                    g.constant(phi), g.constant(wrong_phi));
    report.image = terms.values();
    auto params = M.image_disc_params();
    nn::zero_grads<float>(params);
    g.backward(nn::affine(terms.total, -1.0, 0.0));
    st.opt_image.step(params);
  }
  if (evolutionary) {
    Graph<float> g;
    auto terms = losses::loss_step(g, *M.step_disc, g.constant(real_clip), g.constant(fake_clip_value),
                                   g.constant(phi), g.constant(wrong_phi));
    report.step = terms.values();
    auto params = M.step_disc_params();
    nn::zero_grads<float>(params);
    g.backward(nn::affine(terms.total, -1.0, 0.0));
    st.opt_step.step(params);
  }
  return report;
}

namespace {

std::string stage_name(int stage) { return stage == 0 ? "I" : "E" + std::to_string(stage); }

// Runs the current stage until its budget or the hook's stop point.
void run_current(CurriculumState& st, const TrainingData& data, const Hooks& hooks) {
  const auto budget = st.config.budget(st.stage);
  while (st.stage_iteration < budget) {
    if (hooks.stop_at >= 0 && st.global_iteration >= hooks.stop_at) return;
    const auto report = train_iteration(st, data);
    ++st.stage_iteration;
    ++st.global_iteration;
    if (hooks.metrics) {
      hooks.metrics->append(st.global_iteration, stage_name(st.stage), "d_i", report.image, report.g_loss);
      if (report.step) hooks.metrics->append(st.global_iteration, stage_name(st.stage), st.models.step_disc->label(),
                                             *report.step, report.g_loss);
      st.metrics_offset = hooks.metrics->offset();
    }
    if (hooks.after_iteration) hooks.after_iteration(st);
  }
}

}  // namespace

void run_stage1(CurriculumState& st, const TrainingData& data, const Hooks& hooks) {
  if (data.index == nullptr || data.index->clips.empty()) throw InvalidInput("run_stage1: dataset is empty");
  if (st.stage != 0) throw InvalidInput("run_stage1: state is at step " + std::to_string(st.stage));
  run_current(st, data, hooks);
}

void advance_step(CurriculumState& st, int m) {
  if (m > st.config.n) throw InvalidInput("advance_step: step " + std::to_string(m) + " exceeds n = " + std::to_string(st.config.n));
  if (m <= st.stage) throw InvalidInput("advance_step: step " + std::to_string(m) + " does not follow stage " + std::to_string(st.stage));
  auto& M = st.models;
  const auto& prev = M.step_disc ? *M.step_disc : M.image_disc;
  auto next = st.config.use_eq1_init ? models::inherit_step_discriminator(prev, m, M.ids)
                                     : models::fresh_step_discriminator<float>(M.arch, m, M.ids, st.rng);
  M.step_disc = std::move(next);
  st.opt_step = nn::Adam<float>(st.opt_image.config());
  st.stage = m;
  st.stage_iteration = 0;
}

void run_step(CurriculumState& st, int m, const TrainingData& data, const Hooks& hooks) {
  if (st.stage != m) throw InvalidInput("run_step: state is at stage " + std::to_string(st.stage) + ", not step " + std::to_string(m));
  if (data.index->clip_length() < (1 << m))
    throw InvalidInput("run_step: clips have " + std::to_string(data.index->clip_length()) + " frames, step " +
                       std::to_string(m) + " needs " + std::to_string(1 << m));
  run_current(st, data, hooks);
}

void train(CurriculumState& st, const TrainingData& data, const Hooks& hooks) {
  for (;;) {
    if (st.stage == 0) run_stage1(st, data, hooks);
    else run_step(st, st.stage, data, hooks);
    if (st.stage_iteration < st.config.budget(st.stage)) return;  // stopped early
    if (hooks.at_boundary) hooks.at_boundary(st);
    int next = -1;
    for (int s : st.config.executed_stages())
      if (s > st.stage) {
        next = s;
        break;
      }
    if (next < 0) return;
    advance_step(st, next);
  }
}

CurriculumState train(const CurriculumConfig& config, const data::DatasetIndex& index, const Hooks& hooks) {
  auto st = initial_state(config, index);
  const auto data = prepare_training_data(index, st.pca);
  train(st, data, hooks);
  return st;
}

Tensor<float> generate_clips(models::ModelSet<float>& M, const text::EmbeddedText& code, int count, int frames, Rng& rng) {
  if (count < 1 || frames < 1) throw InvalidInput("generate_clips: count and frames must be >= 1");
  if (static_cast<int>(code.values.size()) != M.arch.text_dim)
    throw InvalidInput("generate_clips: text code has " + std::to_string(code.values.size()) + " dims, model expects " +
                       std::to_string(M.arch.text_dim));
  const int C = M.arch.channels, S = M.arch.frame_size;
  Tensor<float> out({count, frames * C, S, S});
  constexpr int kChunk = 16;
  const auto per_clip = static_cast<std::int64_t>(frames) * C * S * S;
  for (int start = 0; start < count; start += kChunk) {
    const int n = std::min(kChunk, count - start);
    Graph<float> g;
    g.freeze(M.generator_params());
    std::vector<const text::EmbeddedText*> codes(static_cast<std::size_t>(n), &code);
    auto phi = g.constant(codes_tensor(codes));
    auto clip = models::generate_frames(g, M.generator, models::latent_chain(g, M.recurrent, phi, frames, rng));
    std::copy(clip.value().data(), clip.value().data() + n * per_clip, out.data() + start * per_clip);
  }
  return out;
}

}  // namespace tivgan::curriculum
