#pragma once

#include <span>

#include "mrcner/matrix.hpp"

// Dense kernels used by the encoder and heads. The default versions split
// output rows across OpenMP threads; every output element is still summed by
// one thread in a fixed order, so results are bitwise identical to the
// serial versions in kernels::reference for any thread count.
namespace mrcner::kernels {

// out = a * b (+ bias broadcast over rows when non-empty)
void matmul(const Matrix& a, const Matrix& b, Matrix& out, std::span<const double> bias = {});
// out += a^T * b
void matmul_at_b_acc(const Matrix& a, const Matrix& b, Matrix& out);
// out = a * b^T
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out);
// out[c] += sum_r a(r, c)
void column_sum_acc(const Matrix& a, std::span<double> out);
// out += a (same shape)
void add_inplace(Matrix& out, const Matrix& a);

// Rows handled per parallel chunk below which kernels stay serial.
inline constexpr std::size_t kParallelMinWork = 1 << 14;

namespace reference {

void matmul(const Matrix& a, const Matrix& b, Matrix& out, std::span<const double> bias = {});
void matmul_at_b_acc(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out);

}  // namespace reference

}  // namespace mrcner::kernels
