// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <span>

#include "tivgan/text/caption.hpp"

namespace tivgan::text {

inline constexpr int kDefaultTextDim = 60;

/// Principal subspace of the caption embeddings.
///
/// Rows of `components` are orthonormal principal directions ordered by
/// non-increasing `explained_variance`. Each row's largest-magnitude entry is
/// positive. Equal eigenvalues span a subspace whose basis is not unique;
/// ties keep the solver's index order.
struct PcaModel {
  Eigen::VectorXd mean;                // [D_raw]
  Eigen::MatrixXd components;          // [d, D_raw]
  Eigen::VectorXd explained_variance;  // [d]

  int input_dim() const { return static_cast<int>(mean.size()); }
  int output_dim() const { return static_cast<int>(components.rows()); }
};

/// Top-`d` eigenvectors of the sample covariance (divisor N - 1). With fewer
/// distinct samples than `d` the trailing components have zero variance.
PcaModel fit_pca(std::span<const RawEmbedding> embeddings, int d);
PcaModel fit_pca(const Eigen::MatrixXd& samples, int d);  // one sample per row

/// components * (raw - mean)
EmbeddedText project(const PcaModel& pca, const RawEmbedding& raw);

/// Convenience: encode then project.
EmbeddedText embed_caption(const PcaModel& pca, const Caption& caption);

/// Scales the r informative coordinates to variance d / r, so the code
/// carries the energy of a d-dimensional standard normal however few
/// distinct captions the PCA saw. Coordinates with variance below 1e-6 of
/// the leading one are uninformative and become 0.
EmbeddedText whiten(const PcaModel& pca, const EmbeddedText& code);

/// The code that conditions the networks: encode, project, whiten.
EmbeddedText condition_code(const PcaModel& pca, const Caption& caption);

}  // namespace tivgan::text
