#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ptn {

// Dense row-major matrix of doubles. Ranks in this library stay small
// (<= 64 bonds), so a tested triple loop is preferred over a BLAS
// dependency; the SVD is the one place a real backend is used.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);  // zero-initialized
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;
  double frobenius_norm() const noexcept;
  Matrix transposed() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Standard product. Throws shape_error on an inner-dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

inline Matrix operator*(const Matrix& a, const Matrix& b) { return matmul(a, b); }

struct SvdResult {
  Matrix u;                // m x k
  std::vector<double> s;   // k singular values, non-negative, descending
  Matrix vt;               // k x n
};

// Thin SVD with k = min(rows, cols). Throws numerical_error (with the
// matrix dimensions in the message) if the backend fails to converge.
SvdResult svd(const Matrix& m);

}  // namespace ptn
