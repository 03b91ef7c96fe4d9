// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tivgan/data/dataset.hpp"
#include "tivgan/nn/layers.hpp"

namespace tivgan::eval {

struct ClassifierTraining {
  int epochs = 12;
  int batch_size = 16;
  double learning_rate = 1e-3;
  int width = 8;
  std::uint64_t seed = 0;
};

/// Small 2-D conv classifier over single frames; its penultimate layer
/// (default 64 wide) is the feature space for FID.
class FrameFeatureExtractor {
 public:
  FrameFeatureExtractor() = default;
  FrameFeatureExtractor(int channels, int frame_size, int classes, int width, int feature_dim, Rng& rng);

  /// frames [N, C, H, W] -> [N, feature_dim]
  Eigen::MatrixXd features(const nn::Tensor<float>& frames);
  /// frames [N, C, H, W] -> class probabilities [N, K]
  Eigen::MatrixXd probabilities(const nn::Tensor<float>& frames);
  /// Trains on every frame of every clip; returns final-epoch training accuracy.
  double train(const data::DatasetIndex& index, const ClassifierTraining& cfg);

  int feature_dim() const { return feature_dim_; }
  std::vector<nn::Parameter<float>*> params();

  nn::IdAllocator ids;
  std::vector<nn::Conv2d<float>> convs;
  nn::Linear<float> embed;
  nn::Linear<float> head;

 private:
  nn::Var<float> forward_features(nn::Graph<float>& g, const nn::Var<float>& x);
  int feature_dim_ = 0;
};

/// 3-D conv classifier over clips [N, C, T, H, W]: up to four strided 3-D
/// convolutions (one per halving down to 4x4) and a linear head.
class Clip3DClassifier {
 public:
  Clip3DClassifier() = default;
  Clip3DClassifier(int channels, int frame_size, int classes, int width, Rng& rng);

  /// clips [N, T * C, H, W] (channel-concatenated frames) -> [N, K]
  Eigen::MatrixXd probabilities(const nn::Tensor<float>& clips, int channels);
  /// Trains on whole clips; returns final-epoch training accuracy.
  double train(const data::DatasetIndex& index, const ClassifierTraining& cfg);
  /// Accuracy on the dataset's own clips.
  double in_set_accuracy(const data::DatasetIndex& index);

  std::vector<nn::Parameter<float>*> params();

  nn::IdAllocator ids;
  std::vector<nn::Conv3d<float>> convs;
  nn::Linear<float> head;

 private:
  nn::Var<float> logits(nn::Graph<float>& g, const nn::Var<float>& x);
};

/// [N, T * C, H, W] -> [N, C, T, H, W]
nn::Tensor<float> to_volume(const nn::Tensor<float>& clips, int channels);
/// Every clip of the dataset as [N, T * C, H, W].
nn::Tensor<float> stack_clips(const data::DatasetIndex& index, const std::vector<int>& which);

/// Stores the parameter values of a classifier (magic "TIVE").
void save_params(const std::filesystem::path& path, const std::vector<nn::Parameter<float>*>& params);
/// Loads values into a classifier of identical structure.
void load_params(const std::filesystem::path& path, const std::vector<nn::Parameter<float>*>& params);

}  // namespace tivgan::eval
