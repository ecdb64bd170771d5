#pragma once
// Reverse-mode automatic differentiation over Matrix values. A Tape records
// primitive operations as they execute (define-by-run); backward() walks the
// record in reverse and accumulates adjoints. Node ids are indices into the
// tape, so topological order holds by construction.
//
// A tape is single-writer: one training thread builds and differentiates it.

#include <cstddef>
#include <vector>

#include "tensor.hpp"

namespace densreg {

class Tape {
 public:
  // Leaves: parameters and constant inputs. Gradients are computed for every
  // node; callers simply ignore adjoints of constants.
  int leaf(Matrix value);

  int matmul(int a, int b);          // (n×k)·(k×m)
  int add(int a, int b);             // same shape
  int sub(int a, int b);             // same shape
  int mul(int a, int b);             // elementwise, same shape
  int div(int a, int b);             // elementwise, same shape
  int scale(int a, double c);        // c * a
  int add_const(int a, double c);    // a + c
  int bias_add(int a, int b);        // (n×d) + (1×d) row broadcast
  int colmul(int a, int b);          // (n×1) scaling each row of (n×d)
  int sadd(int a, int b);            // a + s, s a 1×1 node broadcast
  int smul(int a, int b);            // a * s, s a 1×1 node broadcast
  int relu(int a);                   // subgradient at 0 is 0
  int tanh(int a);
  int exp(int a);
  int log(int a);
  int sqrt(int a);
  int square(int a);
  int softplus(int a);
  int mean(int a);                   // full reduction to 1×1
  int row_sum(int a);                // (n×d) → (n×1)
  int select_cols(int a, size_t j0, size_t j1);  // columns [j0, j1)
  int merge_cols(int a, int b);      // horizontal concat, same rows

  // Seeds the adjoint of `root` (must be 1×1) with 1 and sweeps backward.
  // Gradients of earlier backward() calls are discarded.
  void backward(int root);

  const Matrix& value(int id) const;
  const Matrix& grad(int id) const;  // valid after backward()
  size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    leaf, matmul, add, sub, mul, div, scale, add_const, bias_add, colmul,
    sadd, smul, relu, tanh, exp, log, sqrt, square, softplus, mean, row_sum,
    select_cols, merge_cols,
  };

  struct Node {
    Op op;
    int a = -1, b = -1;
    double c = 0.0;        // scalar constant for scale / add_const
    size_t j0 = 0, j1 = 0; // column range for select_cols / split for merge_cols
    Matrix value;
  };

  int push(Node node);
  const Matrix& val(int id) const { return nodes_[size_t(id)].value; }
  void check(int id, const char* where) const;
  void propagate(int id);

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
};

}  // namespace densreg
