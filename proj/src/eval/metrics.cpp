// SPDX-License-Identifier: Apache-2.0
#include "tivgan/eval/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tivgan/errors.hpp"

namespace tivgan::eval {

GaussianStats fit_stats(const Eigen::MatrixXd& features) {
  if (features.rows() < 2) throw InvalidInput("fit_stats: need at least 2 feature vectors, got " + std::to_string(features.rows()));
  if (!features.allFinite()) throw NumericError("fit_stats: non-finite features");
  GaussianStats s;
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.cov = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
  s.cov = 0.5 * (s.cov + s.cov.transpose());
  return s;
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> psd_eigen(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success) throw NumericError(std::string("compute_fid: eigendecomposition of ") + what + " failed");
  const auto& ev = es.eigenvalues();
  const double tol = 1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.size() > 0 && ev.minCoeff() < -tol)
    throw NumericError(std::string("compute_fid: ") + what + " is not positive semi-definite (eigenvalue " +
                       std::to_string(ev.minCoeff()) + ")");
  return es;
}

}  // namespace

double compute_fid(const GaussianStats& a, const GaussianStats& b) {
  const auto n = a.mean.size();
  if (b.mean.size() != n || a.cov.rows() != n || a.cov.cols() != n || b.cov.rows() != n || b.cov.cols() != n)
    throw InvalidInput("compute_fid: dimension mismatch");
  const auto ea = psd_eigen(a.cov, "covariance a");
  psd_eigen(b.cov, "covariance b");
  const Eigen::VectorXd root = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrt_a = ea.eigenvectors() * root.asDiagonal() * ea.eigenvectors().transpose();
  const Eigen::MatrixXd inner = sqrt_a * b.cov * sqrt_a;
  const auto ei = psd_eigen(inner, "the covariance product");
  const double tr_sqrt = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double fid = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, fid);
}

InceptionScore inception_score(const Eigen::MatrixXd& p, int splits) {
  const auto N = p.rows(), K = p.cols();
  if (N < 1 || K < 1) throw InvalidInput("inception_score: empty probability matrix");
  if (splits < 1 || splits > N)
    throw InvalidInput("inception_score: splits must be in 1.." + std::to_string(N) + ", got " + std::to_string(splits));
  for (Eigen::Index i = 0; i < N; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < K; ++j) {
      if (!std::isfinite(p(i, j)) || p(i, j) < 0.0) throw InvalidInput("inception_score: row " + std::to_string(i) + " has an invalid probability");
      sum += p(i, j);
    }
    if (std::abs(sum - 1.0) > 1e-6) throw InvalidInput("inception_score: row " + std::to_string(i) + " sums to " + std::to_string(sum));
  }
  std::vector<double> scores;
  Eigen::Index start = 0;
  for (int s = 0; s < splits; ++s) {
    const Eigen::Index len = N / splits + (s < N % splits ? 1 : 0);
    std::vector<long double> marginal(static_cast<std::size_t>(K), 0.0L);
    for (Eigen::Index i = start; i < start + len; ++i)
      for (Eigen::Index j = 0; j < K; ++j) marginal[static_cast<std::size_t>(j)] += p(i, j);
    for (auto& m : marginal) m /= static_cast<long double>(len);
    long double kl_sum = 0.0L;
    for (Eigen::Index i = start; i < start + len; ++i) {
      long double kl = 0.0L;
      for (Eigen::Index j = 0; j < K; ++j) {
        const long double q = p(i, j);
        if (q > 0.0L) kl += q * (std::log(q) - std::log(marginal[static_cast<std::size_t>(j)]));
      }
      kl_sum += std::max(0.0L, kl);
    }
    scores.push_back(static_cast<double>(std::exp(kl_sum / static_cast<long double>(len))));
    start += len;
  }
  InceptionScore out;
  for (double s : scores) out.mean += s;
  out.mean /= static_cast<double>(scores.size());
  for (double s : scores) out.std += (s - out.mean) * (s - out.mean);
  out.std = std::sqrt(out.std / static_cast<double>(scores.size()));
  return out;
}

int argmax(std::span<const double> row) {
  if (row.empty()) throw InvalidInput("argmax: empty row");
  int best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  return best;
}

double classification_accuracy(const Eigen::MatrixXd& p, std::span<const int> labels) {
  if (static_cast<std::size_t>(p.rows()) != labels.size())
    throw InvalidInput("classification_accuracy: " + std::to_string(p.rows()) + " rows for " + std::to_string(labels.size()) + " labels");
  if (labels.empty()) throw InvalidInput("classification_accuracy: no samples");
  std::size_t hits = 0;
  std::vector<double> row(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) row[static_cast<std::size_t>(j)] = p(i, j);
    hits += argmax(row) == labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Neighbor nearest_neighbor(std::span<const float> query, std::span<const std::span<const float>> candidates) {
  if (candidates.empty()) throw InvalidInput("nearest_neighbor: empty training set");
  Neighbor best;
  double best_sq = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.size() != query.size()) throw ShapeError("nearest_neighbor: candidate " + std::to_string(i) + " has a different size");
    double sq = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double d = static_cast<double>(query[j]) - c[j];
      sq += d * d;
    }
    if (best.index < 0 || sq < best_sq) {
      best.index = static_cast<int>(i);
      best_sq = sq;
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

void write_report(const std::filesystem::path& path, const std::vector<std::pair<std::string, double>>& metrics,
                  const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write report " + path.string());
  for (const auto& [name, value] : metrics) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    out << name << '\t' << buf << '\t' << config_hash << '\n';
  }
  if (!out) throw FormatError("failed writing report " + path.string());
}

}  // namespace tivgan::eval
