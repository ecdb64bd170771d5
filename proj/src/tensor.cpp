#include "tensor.hpp"

#include <cmath>

#include "util.hpp"

namespace densreg {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    fail(Status::invalid_argument,
         "matmul: inner dimensions disagree (" + std::to_string(a.rows) + "x" +
             std::to_string(a.cols) + " times " + std::to_string(b.rows) + "x" +
             std::to_string(b.cols) + ")");
  }
  Matrix out(a.rows, b.cols);
  for (size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    double* orow = &out.data[i * out.cols];
    for (size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      for (size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) {
    fail(Status::invalid_argument, "matmul_nt: column counts disagree");
  }
  Matrix out(a.rows, b.rows);
  for (size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    for (size_t j = 0; j < b.rows; ++j) {
      const double* brow = &b.data[j * b.cols];
      double acc = 0.0;
      for (size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      out.at(i, j) = acc;
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) {
    fail(Status::invalid_argument, "matmul_tn: row counts disagree");
  }
  Matrix out(a.cols, b.cols);
  for (size_t k = 0; k < a.rows; ++k) {
    const double* arow = &a.data[k * a.cols];
    const double* brow = &b.data[k * b.cols];
    for (size_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* orow = &out.data[i * out.cols];
      for (size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (size_t i = 0; i < a.rows; ++i)
    for (size_t j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

bool all_finite(const Matrix& a) {
  for (double v : a.data)
    if (!std::isfinite(v)) return false;
  return true;
}

void ensure_finite(const Matrix& a, const std::string& context) {
  if (!all_finite(a)) {
    fail(Status::numeric_error, "non-finite value in " + context);
  }
}

}  // namespace densreg
