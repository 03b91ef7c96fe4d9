// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tivgan/data/dataset.hpp"
#include "tivgan/losses/losses.hpp"
#include "tivgan/models/networks.hpp"
#include "tivgan/nn/optimizer.hpp"
#include "tivgan/text/pca.hpp"
#include "tivgan/util/config.hpp"
#include "tivgan/util/rng.hpp"

namespace tivgan::curriculum {

/// Training schedule and hyper-parameters. Stage index 0 is the single-image
/// stage; index m in 1..n is the step producing 2^m frames.
struct CurriculumConfig {
  int n = 4;
  std::int64_t iters_stage1 = 3000;
  std::int64_t iters_per_step = 1500;
  int batch_size = 8;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  models::ArchConfig arch;
  int raw_dim = text::kDefaultRawDim;
  bool use_eq1_init = true;
  bool use_isp = true;
  bool non_saturating = false;
  /// Executed stage indices; empty means all of 0..n. Must contain n.
  std::vector<int> steps_mask;
  std::uint64_t seed = 0;
  /// Also checkpoint every this many iterations (0: stage boundaries only).
  std::int64_t checkpoint_every = 0;

  static CurriculumConfig from_kv(const KeyValues& kv);
  KeyValues to_kv() const;
  void validate() const;

  bool executes(int stage) const;
  std::vector<int> executed_stages() const;
  /// Iterations for `stage`, including budgets of skipped stages right before it.
  std::int64_t budget(int stage) const;
  std::int64_t total_iterations() const;
};

/// "0,2,4" -> {0, 2, 4}
std::vector<int> parse_steps_mask(const std::string& text);
std::string format_steps_mask(const std::vector<int>& mask);

/// Everything a run needs to continue: schedule position, networks,
/// optimizer moments, random state and the text projection.
struct CurriculumState {
  CurriculumConfig config;
  /// 0: single-image stage; m: evolutionary step m.
  int stage = 0;
  /// Iterations finished within `stage`.
  std::int64_t stage_iteration = 0;
  std::int64_t global_iteration = 0;
  Rng rng;
  models::ModelSet<float> models;
  nn::Adam<float> opt_g;
  nn::Adam<float> opt_image;
  nn::Adam<float> opt_step;
  text::PcaModel pca;
  std::uint64_t metrics_offset = 0;

  int frames_per_clip() const { return 1 << stage; }
};

/// Per-class text codes and thresholds derived from a dataset.
struct TrainingData {
  const data::DatasetIndex* index = nullptr;
  std::vector<text::EmbeddedText> class_codes;
  std::vector<double> thresholds;
};

/// PCA over the training captions (one embedding per clip).
text::PcaModel fit_caption_pca(const data::DatasetIndex& index, int d, int raw_dim);
TrainingData prepare_training_data(const data::DatasetIndex& index, const text::PcaModel& pca);

/// Fresh networks, optimizers and PCA at the start of the first stage.
CurriculumState initial_state(const CurriculumConfig& config, const data::DatasetIndex& index);

struct Hooks {
  losses::MetricsLog* metrics = nullptr;
  /// Called after every iteration with the state.
  std::function<void(CurriculumState&)> after_iteration;
  /// Called when a stage finishes (before the next one starts).
  std::function<void(CurriculumState&)> at_boundary;
  /// Stop after this many global iterations (resume tests); negative: no limit.
  std::int64_t stop_at = -1;
};

/// Losses of one iteration.
struct IterationReport {
  losses::LossBreakdown image;
  std::optional<losses::LossBreakdown> step;
  double g_loss = 0.0;
};

/// One iteration at the state's stage: G and R update, then the image
/// discriminator, then the step discriminator when present.
IterationReport train_iteration(CurriculumState& state, const TrainingData& data);

/// Runs the single-image stage to its budget.
void run_stage1(CurriculumState& state, const TrainingData& data, const Hooks& hooks = {});

/// Replaces the step discriminator with one for step m: inherited from the
/// current step discriminator (or the image discriminator) when eq1 init is
/// on, else freshly initialized. Its optimizer restarts; everything else stays.
void advance_step(CurriculumState& state, int m);

/// Runs step m to its budget.
void run_step(CurriculumState& state, int m, const TrainingData& data, const Hooks& hooks = {});

/// Continues `state` through every remaining executed stage.
void train(CurriculumState& state, const TrainingData& data, const Hooks& hooks = {});

/// Convenience: initial state + full schedule.
CurriculumState train(const CurriculumConfig& config, const data::DatasetIndex& index, const Hooks& hooks = {});

/// Checkpoint: magic "TIVG", u32 version, then tagged sections.
inline constexpr std::uint32_t kCheckpointVersion = 1;
std::vector<std::uint8_t> serialize_checkpoint(const CurriculumState& state);
CurriculumState deserialize_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");
/// Writes atomically (temp file then rename).
void save_checkpoint(const CurriculumState& state, const std::filesystem::path& path);
CurriculumState load_checkpoint(const std::filesystem::path& path);

/// Order-independent checksum of parameter values (FNV over id and bytes).
std::uint64_t parameter_checksum(const std::vector<nn::Parameter<float>*>& params);

/// Generates `count` clips of `frames` frames for `code`: [count, frames*C, H, W].
nn::Tensor<float> generate_clips(models::ModelSet<float>& models, const text::EmbeddedText& code, int count,
                                 int frames, Rng& rng);

}  // namespace tivgan::curriculum
