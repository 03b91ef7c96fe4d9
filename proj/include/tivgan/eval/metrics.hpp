// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tivgan::eval {

/// Gaussian fit of a feature set.
struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Sample mean and unbiased covariance of `features` (one sample per row).
GaussianStats fit_stats(const Eigen::MatrixXd& features);

/// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)). The trace of the
/// square root comes from the eigenvalues of sqrt(S_a) S_b sqrt(S_a), which
/// is symmetric and shares its spectrum with S_a S_b.
double compute_fid(const GaussianStats& a, const GaussianStats& b);

struct InceptionScore {
  double mean = 0.0;
  double std = 0.0;
};

/// exp(mean_x KL(p(y|x) || p(y))) per split; mean and population std over
/// splits. Rows are split into `splits` contiguous, nearly equal parts.
InceptionScore inception_score(const Eigen::MatrixXd& probabilities, int splits = 10);

/// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> row);

/// Fraction of rows whose argmax equals the label.
double classification_accuracy(const Eigen::MatrixXd& probabilities, std::span<const int> labels);

struct Neighbor {
  int index = -1;
  double distance = 0.0;
};

/// Exhaustive pixel-L2 scan; ties go to the lowest index.
Neighbor nearest_neighbor(std::span<const float> query, std::span<const std::span<const float>> candidates);

/// Flat report: one `name<TAB>value<TAB>config_hash` line per metric.
void write_report(const std::filesystem::path& path, const std::vector<std::pair<std::string, double>>& metrics,
                  const std::string& config_hash);

}  // namespace tivgan::eval
