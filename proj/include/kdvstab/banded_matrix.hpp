#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kdvstab/error.hpp"

namespace kdvstab {

/// Square band matrix with equal lower and upper half-bandwidth.
///
/// Entry (i, j) with |i - j| <= b lives in diagonal d = j - i + b of a packed
/// (2b+1) x m array; everything outside the band is zero by construction.
/// Factorization is LU with scaled partial pivoting restricted to the b rows
/// below the diagonal, so the U factor needs 2b super-diagonals; the factors
/// live in their own storage and the original entries stay available for
/// products.
template <typename Scalar>
class BandedMatrix {
 public:
  using Index = Eigen::Index;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using DenseType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BandedMatrix() = default;

  BandedMatrix(Index dim, Index half_bandwidth)
      : dim_(dim), band_(half_bandwidth), data_(DenseType::Zero(2 * half_bandwidth + 1, dim)) {
    if (dim <= 0 || half_bandwidth < 0) {
      throw ConfigError("BandedMatrix: dimension must be positive and bandwidth non-negative");
    }
  }

  static BandedMatrix Identity(Index dim, Index half_bandwidth = 0) {
    BandedMatrix m(dim, half_bandwidth);
    for (Index i = 0; i < dim; ++i) m.coeffRef(i, i) = Scalar(1);
    return m;
  }

  Index rows() const { return dim_; }
  Index cols() const { return dim_; }
  Index half_bandwidth() const { return band_; }
  Index stored_diagonals() const { return data_.rows(); }
  bool in_band(Index i, Index j) const { return std::abs(i - j) <= band_; }
  bool is_factored() const { return factored_; }

  Scalar operator()(Index i, Index j) const {
    check_index(i, j);
    return in_band(i, j) ? data_(j - i + band_, i) : Scalar(0);
  }

  Scalar& coeffRef(Index i, Index j) {
    check_index(i, j);
    if (!in_band(i, j)) {
      throw ConfigError("BandedMatrix: entry (" + std::to_string(i) + "," + std::to_string(j) +
                        ") outside half-bandwidth " + std::to_string(band_));
    }
    invalidate();
    return data_(j - i + band_, i);
  }

  void add(Index i, Index j, Scalar value) { coeffRef(i, j) += value; }

  BandedMatrix& operator*=(Scalar s) {
    data_ *= s;
    invalidate();
    return *this;
  }

  BandedMatrix& operator+=(const BandedMatrix& other) {
    check_same_shape(other);
    if (other.band_ > band_) *this = widened(other.band_);
    for (Index i = 0; i < dim_; ++i) {
      for (Index j = std::max<Index>(0, i - other.band_); j <= std::min(dim_ - 1, i + other.band_); ++j) {
        data_(j - i + band_, i) += other(i, j);
      }
    }
    invalidate();
    return *this;
  }

  friend BandedMatrix operator+(BandedMatrix a, const BandedMatrix& b) { return a += b; }
  friend BandedMatrix operator*(Scalar s, BandedMatrix a) { return a *= s; }

  /// Copy with a larger half-bandwidth (extra diagonals are zero).
  BandedMatrix widened(Index half_bandwidth) const {
    BandedMatrix out(dim_, std::max(half_bandwidth, band_));
    for (Index i = 0; i < dim_; ++i) {
      for (Index j = std::max<Index>(0, i - band_); j <= std::min(dim_ - 1, i + band_); ++j) {
        out.data_(j - i + out.band_, i) = (*this)(i, j);
      }
    }
    return out;
  }

  VectorType operator*(const VectorType& x) const {
    if (x.size() != dim_) throw ConfigError("BandedMatrix: vector size mismatch in product");
    VectorType y = VectorType::Zero(dim_);
    for (Index i = 0; i < dim_; ++i) {
      const Index j0 = std::max<Index>(0, i - band_);
      const Index j1 = std::min(dim_ - 1, i + band_);
      Scalar acc(0);
      for (Index j = j0; j <= j1; ++j) acc += data_(j - i + band_, i) * x(j);
      y(i) = acc;
    }
    return y;
  }

  DenseType to_dense() const {
    DenseType d = DenseType::Zero(dim_, dim_);
    for (Index i = 0; i < dim_; ++i) {
      for (Index j = std::max<Index>(0, i - band_); j <= std::min(dim_ - 1, i + band_); ++j) {
        d(i, j) = (*this)(i, j);
      }
    }
    return d;
  }

  /// Max absolute row sum.
  Scalar norm_inf() const {
    Scalar best(0);
    for (Index i = 0; i < dim_; ++i) {
      Scalar row(0);
      for (Index d = 0; d < data_.rows(); ++d) row += std::abs(data_(d, i));
      best = std::max(best, row);
    }
    return best;
  }

  /// In-place LU factorization; a no-op when already factored.
  void factorize() {
    if (factored_) return;
    const Index kl = band_;
    const Index ku = 2 * band_;  // fill-in from row swaps
    const Index width = kl + ku + 1;
    // lu_(d, i) holds entry (i, i + d - kl), d in [0, width).
    lu_ = DenseType::Zero(width, dim_);
    for (Index i = 0; i < dim_; ++i) {
      for (Index j = std::max<Index>(0, i - band_); j <= std::min(dim_ - 1, i + band_); ++j) {
        lu_(j - i + kl, i) = (*this)(i, j);
      }
    }
    auto at = [&](Index i, Index j) -> Scalar& { return lu_(j - i + kl, i); };

    const Scalar tol = Scalar(1e-14) * norm_inf();
    std::vector<Scalar> scale(static_cast<std::size_t>(dim_));
    for (Index i = 0; i < dim_; ++i) {
      Scalar s(0);
      for (Index j = std::max<Index>(0, i - band_); j <= std::min(dim_ - 1, i + band_); ++j) {
        s = std::max(s, std::abs((*this)(i, j)));
      }
      scale[static_cast<std::size_t>(i)] = s;
    }

    pivots_.assign(static_cast<std::size_t>(dim_), 0);
    for (Index k = 0; k < dim_; ++k) {
      const Index last_row = std::min(dim_ - 1, k + kl);
      Index piv = k;
      Scalar best(-1);
      for (Index i = k; i <= last_row; ++i) {
        const Scalar s = scale[static_cast<std::size_t>(i)];
        const Scalar v = s > Scalar(0) ? std::abs(at(i, k)) / s : Scalar(0);
        if (v > best) {
          best = v;
          piv = i;
        }
      }
      pivots_[static_cast<std::size_t>(k)] = piv;
      const Index last_col = std::min(dim_ - 1, k + ku);
      if (piv != k) {
        for (Index j = k; j <= last_col; ++j) std::swap(at(k, j), at(piv, j));
        std::swap(scale[static_cast<std::size_t>(k)], scale[static_cast<std::size_t>(piv)]);
      }
      const Scalar pivot = at(k, k);
      if (!(std::abs(pivot) >= tol) || pivot == Scalar(0)) {
        lu_.resize(0, 0);
        throw SingularMatrixError("BandedMatrix: pivot " + std::to_string(static_cast<double>(pivot)) +
                                  " below tolerance at row " + std::to_string(k));
      }
      for (Index i = k + 1; i <= last_row; ++i) {
        Scalar& l = at(i, k);
        if (l == Scalar(0)) continue;
        l /= pivot;
        for (Index j = k + 1; j <= last_col; ++j) at(i, j) -= l * at(k, j);
      }
    }
    factored_ = true;
  }

  /// Solves A y = rhs, factorizing on first use.
  VectorType solve(const VectorType& rhs) {
    factorize();
    return solve_factored(rhs);
  }

  VectorType solve_factored(const VectorType& rhs) const {
    if (!factored_) throw ConfigError("BandedMatrix: solve_factored on an unfactored matrix");
    if (rhs.size() != dim_) throw ConfigError("BandedMatrix: rhs size mismatch");
    const Index kl = band_;
    const Index ku = 2 * band_;
    auto at = [&](Index i, Index j) { return lu_(j - i + kl, i); };
    VectorType y = rhs;
    for (Index k = 0; k < dim_; ++k) {
      const Index p = pivots_[static_cast<std::size_t>(k)];
      if (p != k) std::swap(y(k), y(p));
      for (Index i = k + 1; i <= std::min(dim_ - 1, k + kl); ++i) y(i) -= at(i, k) * y(k);
    }
    for (Index k = dim_ - 1; k >= 0; --k) {
      Scalar acc = y(k);
      for (Index j = k + 1; j <= std::min(dim_ - 1, k + ku); ++j) acc -= at(k, j) * y(j);
      y(k) = acc / at(k, k);
    }
    return y;
  }

 private:
  void check_index(Index i, Index j) const {
    if (i < 0 || j < 0 || i >= dim_ || j >= dim_) throw ConfigError("BandedMatrix: index out of range");
  }
  void check_same_shape(const BandedMatrix& o) const {
    if (o.dim_ != dim_) throw ConfigError("BandedMatrix: dimension mismatch");
  }
  void invalidate() {
    factored_ = false;
    lu_.resize(0, 0);
  }

  Index dim_ = 0;
  Index band_ = 0;
  DenseType data_;
  DenseType lu_;
  std::vector<Index> pivots_;
  bool factored_ = false;
};

/// I + alpha * A, the shape used by implicit time stepping.
template <typename Scalar>
BandedMatrix<Scalar> identity_plus(const BandedMatrix<Scalar>& a, Scalar alpha) {
  BandedMatrix<Scalar> out = alpha * a;
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.add(i, i, Scalar(1));
  return out;
}

/// Free-function form of BandedMatrix::solve.
template <typename Scalar>
typename BandedMatrix<Scalar>::VectorType banded_solve(BandedMatrix<Scalar>& a,
                                                       const typename BandedMatrix<Scalar>::VectorType& rhs) {
  return a.solve(rhs);
}

}  // namespace kdvstab
