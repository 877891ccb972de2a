#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rfdna/errors.hpp"
#include "rfdna/featsel.hpp"

namespace rfdna {

/// Maps a full 204-feature fingerprint to the N_r inputs an SVM sees: either
/// a subset of feature indices or a linear projection (LDA / PCA).
struct FeatureMap {
  enum class Kind { Indices, Projection };

  Kind kind = Kind::Indices;
  std::vector<std::size_t> indices;
  Eigen::VectorXd mean;    // projection only
  Eigen::MatrixXd basis;   // projection only, N_f x N_r
  std::size_t input_dim = 0;

  static FeatureMap select(std::vector<std::size_t> idx, std::size_t input_dim) {
    FeatureMap m;
    m.kind = Kind::Indices;
    for (std::size_t i : idx)
      if (i >= input_dim) fail(ErrorCode::InvalidShape, "feature index out of range");
    m.indices = std::move(idx);
    m.input_dim = input_dim;
    return m;
  }

  static FeatureMap project(const ProjectionBasis& b, std::size_t n_components) {
    if (n_components == 0 || n_components > static_cast<std::size_t>(b.basis.cols()))
      fail(ErrorCode::InvalidCount, "projection truncated to an invalid component count");
    FeatureMap m;
    m.kind = Kind::Projection;
    m.mean = b.mean;
    m.basis = b.basis.leftCols(static_cast<Eigen::Index>(n_components));
    m.input_dim = static_cast<std::size_t>(b.basis.rows());
    return m;
  }

  std::size_t output_dim() const noexcept {
    return kind == Kind::Indices ? indices.size() : static_cast<std::size_t>(basis.cols());
  }

  Eigen::VectorXd apply(std::span<const double> f) const {
    if (f.size() != input_dim)
      fail(ErrorCode::InvalidShape, "fingerprint has " + std::to_string(f.size()) + " features, map expects " +
                                        std::to_string(input_dim));
    Eigen::VectorXd out(static_cast<Eigen::Index>(output_dim()));
    if (kind == Kind::Indices) {
      for (std::size_t k = 0; k < indices.size(); ++k) out(static_cast<Eigen::Index>(k)) = f[indices[k]];
    } else {
      const Eigen::Map<const Eigen::VectorXd> v(f.data(), static_cast<Eigen::Index>(f.size()));
      out = basis.transpose() * (v - mean);
    }
    return out;
  }

  /// Row-wise application to a matrix of full fingerprints.
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& F) const {
    if (static_cast<std::size_t>(F.cols()) != input_dim) fail(ErrorCode::InvalidShape, "feature matrix width mismatch");
    if (kind == Kind::Projection) return (F.rowwise() - mean.transpose()) * basis;
    Eigen::MatrixXd out(F.rows(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k)
      out.col(static_cast<Eigen::Index>(k)) = F.col(static_cast<Eigen::Index>(indices[k]));
    return out;
  }
};

}  // namespace rfdna
