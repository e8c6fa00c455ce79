#include "mrcner/kernels.hpp"

#include <string>

#include "mrcner/error.hpp"

namespace mrcner::kernels {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(std::string("shape mismatch in ") + what);
}

bool worth_parallel(std::size_t rows, std::size_t work) {
  return rows > 1 && work >= kParallelMinWork;
}

}  // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& out, std::span<const double> bias) {
  require(a.cols() == b.rows() && (bias.empty() || bias.size() == b.cols()), "matmul");
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t inner = a.cols(), cols = b.cols();
  if (out.rows() != a.rows() || out.cols() != cols) out = Matrix(a.rows(), cols);
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
#pragma omp parallel for schedule(static) if (worth_parallel(a.rows(), a.rows() * inner * cols))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double* c = C + i * cols;
    for (std::size_t j = 0; j < cols; ++j) c[j] = bias.empty() ? 0.0 : bias[j];
    const double* ai = A + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = ai[k];
      const double* bk = B + k * cols;
      for (std::size_t j = 0; j < cols; ++j) c[j] += aik * bk[j];
    }
  }
}

void matmul_at_b_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.rows() == b.rows() && out.rows() == a.cols() && out.cols() == b.cols(),
          "matmul_at_b_acc");
  const auto n = static_cast<std::ptrdiff_t>(a.cols());
  const std::size_t rows = a.rows(), acols = a.cols(), cols = b.cols();
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
#pragma omp parallel for schedule(static) if (worth_parallel(a.cols(), rows * acols * cols))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double* c = C + i * cols;
    for (std::size_t r = 0; r < rows; ++r) {
      const double ari = A[r * acols + i];
      const double* br = B + r * cols;
      for (std::size_t j = 0; j < cols; ++j) c[j] += ari * br[j];
    }
  }
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.cols() == b.cols(), "matmul_a_bt");
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t inner = a.cols(), cols = b.rows();
  if (out.rows() != a.rows() || out.cols() != cols) out = Matrix(a.rows(), cols);
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
#pragma omp parallel for schedule(static) if (worth_parallel(a.rows(), a.rows() * inner * cols))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* ai = A + i * inner;
    for (std::size_t j = 0; j < cols; ++j) {
      const double* bj = B + j * inner;
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += ai[k] * bj[k];
      C[i * cols + j] = s;
    }
  }
}

void column_sum_acc(const Matrix& a, std::span<double> out) {
  require(out.size() == a.cols(), "column_sum_acc");
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) out[c] += row[c];
  }
}

void add_inplace(Matrix& out, const Matrix& a) {
  require(out.same_shape(a), "add_inplace");
  auto& o = out.values();
  const auto& v = a.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += v[i];
}

namespace reference {

void matmul(const Matrix& a, const Matrix& b, Matrix& out, std::span<const double> bias) {
  require(a.cols() == b.rows() && (bias.empty() || bias.size() == b.cols()), "matmul");
  out = Matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = bias.empty() ? 0.0 : bias[j];
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
}

void matmul_at_b_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.rows() == b.rows() && out.rows() == a.cols() && out.cols() == b.cols(),
          "matmul_at_b_acc");
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = out(i, j);
      for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, i) * b(r, j);
      out(i, j) = s;
    }
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.cols() == b.cols(), "matmul_a_bt");
  out = Matrix(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
}

}  // namespace reference

}  // namespace mrcner::kernels
