#include <Eigen/Dense>
#include <string>

#include "ptn/errors.hpp"
#include "ptn/matrix.hpp"

namespace ptn {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

SvdResult pack(const Eigen::BDCSVD<EigenRowMajor>& dec, std::size_t m, std::size_t n) {
  const std::size_t k = static_cast<std::size_t>(dec.singularValues().size());
  SvdResult out;
  out.u = Matrix(m, k);
  out.vt = Matrix(k, n);
  out.s.assign(dec.singularValues().data(), dec.singularValues().data() + k);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) out.u(i, j) = dec.matrixU()(i, j);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < n; ++j) out.vt(i, j) = dec.matrixV()(j, i);
  return out;
}

}  // namespace

SvdResult svd(const Matrix& mat) {
  const std::size_t m = mat.rows(), n = mat.cols();
  if (m == 0 || n == 0) throw shape_error("svd: empty matrix");
  Eigen::Map<const EigenRowMajor> view(mat.data().data(), static_cast<Eigen::Index>(m),
                                       static_cast<Eigen::Index>(n));
  Eigen::BDCSVD<EigenRowMajor> dec(view, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success)
    throw numerical_error("svd: decomposition of " + std::to_string(m) + "x" +
                          std::to_string(n) + " matrix did not converge");
  return pack(dec, m, n);
}

}  // namespace ptn
