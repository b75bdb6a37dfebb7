#include "ptn/matrix.hpp"

#include <cmath>
#include <string>

#include "ptn/errors.hpp"
#include "ptn/rng.hpp"

namespace ptn {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_)
    throw shape_error("Matrix: data length " + std::to_string(data_.size()) +
                      " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const noexcept {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

double Matrix::frobenius_norm() const noexcept {
  double acc = 0.0;
  for (double x : data_) acc += x * x;
  return std::sqrt(acc);
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw shape_error("matmul: inner dimensions differ, " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + " times " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()));
  Matrix out(a.rows(), b.cols());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.data().data();
  // i-k-j order keeps both b and out rows streaming.
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = od + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = ad[i * k + kk];
      if (aik == 0.0) continue;
      const double* brow = bd + kk * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

void fill_gaussian(Rng& rng, std::span<double> out, double stddev) {
  if (!(stddev > 0.0)) throw argument_error("fill_gaussian: stddev must be positive");
  for (double& x : out) x = rng.gaussian(stddev);
}

Matrix random_gaussian(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  Matrix m(rows, cols);
  fill_gaussian(rng, m.data(), stddev);
  return m;
}

}  // namespace ptn
