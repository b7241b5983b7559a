#include "metadiag/arrowhead.hpp"

namespace metadiag {

ArrowheadMatrix::ArrowheadMatrix(Eigen::Index k, std::size_t n_blocks)
    : corner(Eigen::MatrixXd::Zero(k, k)),
      border(n_blocks, Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(k, 2)),
      blocks(n_blocks, Eigen::Matrix2d::Zero()) {}

Eigen::VectorXd ArrowheadMatrix::multiply(const Eigen::VectorXd& x) const {
  const Eigen::Index k = corner_size();
  Eigen::VectorXd y(dim());
  y.head(k) = corner * x.head(k);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Eigen::Index o = k + 2 * static_cast<Eigen::Index>(i);
    const Eigen::Vector2d xi = x.segment<2>(o);
    y.head(k) += border[i] * xi;
    y.segment<2>(o) = border[i].transpose() * x.head(k) + blocks[i] * xi;
  }
  return y;
}

Eigen::MatrixXd ArrowheadMatrix::to_dense() const {
  const Eigen::Index k = corner_size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim(), dim());
  out.topLeftCorner(k, k) = corner;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Eigen::Index o = k + 2 * static_cast<Eigen::Index>(i);
    out.block(0, o, k, 2) = border[i];
    out.block(o, 0, 2, k) = border[i].transpose();
    out.block<2, 2>(o, o) = blocks[i];
  }
  return out;
}

void ArrowheadMatrix::pin_corner(Eigen::Index j) {
  corner.row(j).setZero();
  corner.col(j).setZero();
  corner(j, j) = 1.0;
  for (auto& b : border) b.row(j).setZero();
}

ArrowheadCholesky::ArrowheadCholesky(const ArrowheadMatrix& m) : m_(&m) {
  const Eigen::Index k = m.corner_size();
  Eigen::MatrixXd schur = m.corner;
  block_inv_.resize(m.n_blocks());
  for (std::size_t i = 0; i < m.n_blocks(); ++i) {
    const Eigen::Matrix2d& d = m.blocks[i];
    const double det = d(0, 0) * d(1, 1) - d(0, 1) * d(1, 0);
    if (!(d(0, 0) > 0.0) || !(det > 0.0)) {
      ok_ = false;
      return;
    }
    Eigen::Matrix2d inv;
    inv << d(1, 1), -d(0, 1), -d(1, 0), d(0, 0);
    inv /= det;
    block_inv_[i] = inv;
    log_det_ += std::log(det);
    schur.noalias() -= m.border[i] * inv * m.border[i].transpose();
  }
  if (k > 0) {
    schur_.compute(schur);
    if (schur_.info() != Eigen::Success) {
      ok_ = false;
      return;
    }
    const auto& l = schur_.matrixLLT();
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!(l(j, j) > 0.0)) {
        ok_ = false;
        return;
      }
      log_det_ += 2.0 * std::log(l(j, j));
    }
  }
}

Eigen::VectorXd ArrowheadCholesky::solve(const Eigen::VectorXd& rhs) const {
  const auto& m = *m_;
  const Eigen::Index k = m.corner_size();
  Eigen::VectorXd reduced = rhs.head(k);
  for (std::size_t i = 0; i < m.n_blocks(); ++i) {
    const Eigen::Index o = k + 2 * static_cast<Eigen::Index>(i);
    reduced.noalias() -= m.border[i] * (block_inv_[i] * rhs.segment<2>(o));
  }
  Eigen::VectorXd out(rhs.size());
  if (k > 0) out.head(k) = schur_.solve(reduced);
  for (std::size_t i = 0; i < m.n_blocks(); ++i) {
    const Eigen::Index o = k + 2 * static_cast<Eigen::Index>(i);
    out.segment<2>(o) = block_inv_[i] * (rhs.segment<2>(o) - m.border[i].transpose() * out.head(k));
  }
  return out;
}

Eigen::MatrixXd ArrowheadCholesky::corner_inverse() const {
  const Eigen::Index k = m_->corner_size();
  return schur_.solve(Eigen::MatrixXd::Identity(k, k));
}

Eigen::Matrix2d ArrowheadCholesky::block_inverse(std::size_t i) const {
  // D^-1 + D^-1 B' S^-1 B D^-1
  const Eigen::Matrix<double, Eigen::Dynamic, 2> w = m_->border[i] * block_inv_[i];
  return block_inv_[i] + w.transpose() * schur_.solve(w);
}

}  // namespace metadiag
