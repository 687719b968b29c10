#include "flagsim/banded.hpp"

#include <lapacke.h>

#include <string>

namespace flagsim {

BandMatrix::BandMatrix(Eigen::Index n, int half_bandwidth)
    : n_(n), kb_(half_bandwidth), ldab_(3 * half_bandwidth + 1),
      ab_(static_cast<std::size_t>(n * (3 * half_bandwidth + 1)), 0.0) {}

void BandMatrix::set_zero() { std::fill(ab_.begin(), ab_.end(), 0.0); }

void BandMatrix::add(Eigen::Index i, Eigen::Index j, double v) {
  if (!in_band(i, j))
    throw InvalidInput("BandMatrix::add outside band at (" + std::to_string(i) + ", " +
                       std::to_string(j) + ")");
  at(i, j) += v;
}

double BandMatrix::operator()(Eigen::Index i, Eigen::Index j) const {
  return in_band(i, j) ? at(i, j) : 0.0;
}

void BandMatrix::add_diagonal(const VecX& d) {
  for (Eigen::Index i = 0; i < n_; ++i) at(i, i) += d[i];
}

VecX BandMatrix::multiply(const VecX& x) const {
  VecX y = VecX::Zero(n_);
  for (Eigen::Index j = 0; j < n_; ++j) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, j - kb_);
    const Eigen::Index hi = std::min<Eigen::Index>(n_ - 1, j + kb_);
    for (Eigen::Index i = lo; i <= hi; ++i) y[i] += at(i, j) * x[j];
  }
  return y;
}

MatX BandMatrix::to_dense() const {
  MatX d = MatX::Zero(n_, n_);
  for (Eigen::Index j = 0; j < n_; ++j) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, j - kb_);
    const Eigen::Index hi = std::min<Eigen::Index>(n_ - 1, j + kb_);
    for (Eigen::Index i = lo; i <= hi; ++i) d(i, j) = at(i, j);
  }
  return d;
}

bool BandMatrix::solve(const VecX& b, VecX& x) const {
  MatX rhs = b;
  if (!solve_in_place(rhs)) return false;
  x = rhs.col(0);
  return true;
}

bool BandMatrix::solve_in_place(MatX& rhs) const {
  std::vector<double> lu = ab_;
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n_));
  const lapack_int info = LAPACKE_dgbsv(
      LAPACK_COL_MAJOR, static_cast<lapack_int>(n_), kb_, kb_,
      static_cast<lapack_int>(rhs.cols()), lu.data(), ldab_, ipiv.data(), rhs.data(),
      static_cast<lapack_int>(rhs.rows()));
  return info == 0;
}

} // namespace flagsim
