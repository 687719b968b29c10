#pragma once

#include "flagsim/types.hpp"

#include <vector>

namespace flagsim {

/// Square band matrix with equal lower/upper half-bandwidth, stored in LAPACK
/// general-band layout with room for the LU fill-in rows.
class BandMatrix {
public:
  BandMatrix() = default;
  BandMatrix(Eigen::Index n, int half_bandwidth);

  Eigen::Index size() const { return n_; }
  int half_bandwidth() const { return kb_; }

  void set_zero();
  bool in_band(Eigen::Index i, Eigen::Index j) const {
    return i - j <= kb_ && j - i <= kb_;
  }
  /// Accumulates into (i, j). Entries outside the band throw.
  void add(Eigen::Index i, Eigen::Index j, double v);
  double operator()(Eigen::Index i, Eigen::Index j) const;
  /// Accumulates a dense square block whose top-left corner sits at (start, start).
  template <typename Derived>
  void add_block(Eigen::Index start, const Eigen::MatrixBase<Derived>& block) {
    const Eigen::Index k = block.rows();
    if (block.cols() != k || k - 1 > kb_ || start < 0 || start + k > n_)
      throw InvalidInput("BandMatrix::add_block outside band");
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index i = 0; i < k; ++i) at(start + i, start + j) += block(i, j);
  }
  void add_diagonal(const VecX& d);

  VecX multiply(const VecX& x) const;
  MatX to_dense() const;

  /// Solves A x = b with partial pivoting. Returns false if A is singular.
  bool solve(const VecX& b, VecX& x) const;
  /// Multi right-hand-side variant; columns of B are overwritten with X.
  bool solve_in_place(MatX& rhs) const;

private:
  Eigen::Index n_ = 0;
  int kb_ = 0;
  int ldab_ = 0;
  std::vector<double> ab_;

  double& at(Eigen::Index i, Eigen::Index j) { return ab_[j * ldab_ + (2 * kb_ + i - j)]; }
  double at(Eigen::Index i, Eigen::Index j) const { return ab_[j * ldab_ + (2 * kb_ + i - j)]; }
};

} // namespace flagsim
