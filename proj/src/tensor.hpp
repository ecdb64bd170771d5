#pragma once
// Dense row-major matrix of doubles — the only tensor shape the project
// needs. Vectors are n×1 matrices, scalars are 1×1.

#include <cstddef>
#include <string>
#include <vector>

namespace densreg {

struct Matrix {
  size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(size_t i, size_t j) { return data[i * cols + j]; }
  double at(size_t i, size_t j) const { return data[i * cols + j]; }
  size_t size() const { return data.size(); }
  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a · bᵀ
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // aᵀ · b
Matrix transpose(const Matrix& a);

bool all_finite(const Matrix& a);
// Throws a numeric error naming `context` when a holds a NaN or infinity.
void ensure_finite(const Matrix& a, const std::string& context);

}  // namespace densreg
