#ifndef METADIAG_ARROWHEAD_HPP
#define METADIAG_ARROWHEAD_HPP

#include <Eigen/Dense>
#include <vector>

namespace metadiag {

/// Symmetric block-arrowhead matrix
///
///     [ A    B_1  B_2  ...  ]
///     [ B_1' D_1            ]
///     [ B_2'      D_2       ]
///     [ ...            ...  ]
///
/// with a dense k x k corner A and 2 x 2 diagonal blocks D_i. This is the
/// sparsity of the latent precision: fixed effects couple to every study, each
/// study's random-effect pair couples only to itself.
struct ArrowheadMatrix {
  Eigen::MatrixXd corner;                              // k x k
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 2>> border;  // k x 2 each
  std::vector<Eigen::Matrix2d> blocks;                 // 2 x 2 each

  ArrowheadMatrix() = default;
  ArrowheadMatrix(Eigen::Index k, std::size_t n_blocks);

  Eigen::Index corner_size() const { return corner.rows(); }
  std::size_t n_blocks() const { return blocks.size(); }
  Eigen::Index dim() const { return corner.rows() + 2 * static_cast<Eigen::Index>(blocks.size()); }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd to_dense() const;
  /// Replace row/column j of the corner by the identity row, decoupling
  /// coordinate j. The log determinant then equals that of the matrix with
  /// j removed.
  void pin_corner(Eigen::Index j);
};

/// Cholesky factorization through the Schur complement of the block diagonal.
class ArrowheadCholesky {
 public:
  explicit ArrowheadCholesky(const ArrowheadMatrix& m);

  /// False if any block or the Schur complement was not positive definite.
  bool ok() const noexcept { return ok_; }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  double log_det() const noexcept { return log_det_; }
  /// Top-left k x k block of the inverse (the fixed-effect covariance).
  Eigen::MatrixXd corner_inverse() const;
  /// Diagonal 2 x 2 block i of the inverse.
  Eigen::Matrix2d block_inverse(std::size_t i) const;

 private:
  const ArrowheadMatrix* m_;
  std::vector<Eigen::Matrix2d> block_inv_;
  Eigen::LLT<Eigen::MatrixXd> schur_;
  double log_det_ = 0.0;
  bool ok_ = true;
};

}  // namespace metadiag

#endif  // METADIAG_ARROWHEAD_HPP
