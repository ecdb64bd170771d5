#include "tape.hpp"

#include <cmath>
#include <string>

#include "util.hpp"

namespace densreg {

void Tape::check(int id, const char* where) const {
  if (id < 0 || size_t(id) >= nodes_.size()) {
    fail(Status::invalid_argument, std::string(where) + ": node id out of range");
  }
}

int Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return int(nodes_.size()) - 1;
}

int Tape::leaf(Matrix value) {
  Node n;
  n.op = Op::leaf;
  n.value = std::move(value);
  return push(std::move(n));
}

int Tape::matmul(int a, int b) {
  check(a, "matmul");
  check(b, "matmul");
  Node n;
  n.op = Op::matmul;
  n.a = a;
  n.b = b;
  n.value = densreg::matmul(val(a), val(b));
  return push(std::move(n));
}

#define DENSREG_BINARY_SAME_SHAPE(NAME, EXPR)                                  \
  int Tape::NAME(int a, int b) {                                              \
    check(a, #NAME);                                                          \
    check(b, #NAME);                                                          \
    const Matrix& A = val(a);                                                 \
    const Matrix& B = val(b);                                                 \
    if (!A.same_shape(B)) fail(Status::invalid_argument, #NAME ": shape mismatch"); \
    Node n;                                                                   \
    n.op = Op::NAME;                                                          \
    n.a = a;                                                                  \
    n.b = b;                                                                  \
    n.value = Matrix(A.rows, A.cols);                                         \
    for (size_t i = 0; i < A.size(); ++i) {                                   \
      const double x = A.data[i];                                             \
      const double y = B.data[i];                                             \
      (void)x;                                                                \
      (void)y;                                                                \
      n.value.data[i] = (EXPR);                                               \
    }                                                                         \
    return push(std::move(n));                                                \
  }

DENSREG_BINARY_SAME_SHAPE(add, x + y)
DENSREG_BINARY_SAME_SHAPE(sub, x - y)
DENSREG_BINARY_SAME_SHAPE(mul, x * y)
DENSREG_BINARY_SAME_SHAPE(div, x / y)

#undef DENSREG_BINARY_SAME_SHAPE

int Tape::scale(int a, double c) {
  check(a, "scale");
  Node n;
  n.op = Op::scale;
  n.a = a;
  n.c = c;
  const Matrix& A = val(a);
  n.value = Matrix(A.rows, A.cols);
  for (size_t i = 0; i < A.size(); ++i) n.value.data[i] = c * A.data[i];
  return push(std::move(n));
}

int Tape::add_const(int a, double c) {
  check(a, "add_const");
  Node n;
  n.op = Op::add_const;
  n.a = a;
  n.c = c;
  const Matrix& A = val(a);
  n.value = Matrix(A.rows, A.cols);
  for (size_t i = 0; i < A.size(); ++i) n.value.data[i] = A.data[i] + c;
  return push(std::move(n));
}

int Tape::bias_add(int a, int b) {
  check(a, "bias_add");
  check(b, "bias_add");
  const Matrix& A = val(a);
  const Matrix& B = val(b);
  if (B.rows != 1 || B.cols != A.cols) {
    fail(Status::invalid_argument, "bias_add: bias must be 1x(cols of input)");
  }
  Node n;
  n.op = Op::bias_add;
  n.a = a;
  n.b = b;
  n.value = Matrix(A.rows, A.cols);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t j = 0; j < A.cols; ++j) n.value.at(i, j) = A.at(i, j) + B.at(0, j);
  return push(std::move(n));
}

int Tape::colmul(int a, int b) {
  check(a, "colmul");
  check(b, "colmul");
  const Matrix& A = val(a);
  const Matrix& B = val(b);
  if (A.cols != 1 || A.rows != B.rows) {
    fail(Status::invalid_argument, "colmul: expects (n×1) times (n×d)");
  }
  Node n;
  n.op = Op::colmul;
  n.a = a;
  n.b = b;
  n.value = Matrix(B.rows, B.cols);
  for (size_t i = 0; i < B.rows; ++i)
    for (size_t j = 0; j < B.cols; ++j) n.value.at(i, j) = A.at(i, 0) * B.at(i, j);
  return push(std::move(n));
}

int Tape::sadd(int a, int b) {
  check(a, "sadd");
  check(b, "sadd");
  const Matrix& A = val(a);
  const Matrix& B = val(b);
  if (B.rows != 1 || B.cols != 1) fail(Status::invalid_argument, "sadd: b must be 1x1");
  Node n;
  n.op = Op::sadd;
  n.a = a;
  n.b = b;
  n.value = Matrix(A.rows, A.cols);
  const double s = B.data[0];
  for (size_t i = 0; i < A.size(); ++i) n.value.data[i] = A.data[i] + s;
  return push(std::move(n));
}

int Tape::smul(int a, int b) {
  check(a, "smul");
  check(b, "smul");
  const Matrix& A = val(a);
  const Matrix& B = val(b);
  if (B.rows != 1 || B.cols != 1) fail(Status::invalid_argument, "smul: b must be 1x1");
  Node n;
  n.op = Op::smul;
  n.a = a;
  n.b = b;
  n.value = Matrix(A.rows, A.cols);
  const double s = B.data[0];
  for (size_t i = 0; i < A.size(); ++i) n.value.data[i] = A.data[i] * s;
  return push(std::move(n));
}

#define DENSREG_UNARY(NAME, EXPR)                          \
  int Tape::NAME(int a) {                                  \
    check(a, #NAME);                                       \
    Node n;                                                \
    n.op = Op::NAME;                                       \
    n.a = a;                                               \
    const Matrix& A = val(a);                              \
    n.value = Matrix(A.rows, A.cols);                      \
    for (size_t i = 0; i < A.size(); ++i) {                \
      const double x = A.data[i];                          \
      n.value.data[i] = (EXPR);                            \
    }                                                      \
    return push(std::move(n));                             \
  }

DENSREG_UNARY(relu, x > 0.0 ? x : 0.0)
DENSREG_UNARY(tanh, std::tanh(x))
DENSREG_UNARY(exp, std::exp(x))
DENSREG_UNARY(log, std::log(x))
DENSREG_UNARY(sqrt, std::sqrt(x))
DENSREG_UNARY(square, x * x)
DENSREG_UNARY(softplus, stable_softplus(x))

#undef DENSREG_UNARY

int Tape::mean(int a) {
  check(a, "mean");
  const Matrix& A = val(a);
  if (A.size() == 0) fail(Status::invalid_argument, "mean: empty input");
  Node n;
  n.op = Op::mean;
  n.a = a;
  double acc = 0.0;
  for (double v : A.data) acc += v;
  n.value = Matrix(1, 1, acc / double(A.size()));
  return push(std::move(n));
}

int Tape::row_sum(int a) {
  check(a, "row_sum");
  const Matrix& A = val(a);
  Node n;
  n.op = Op::row_sum;
  n.a = a;
  n.value = Matrix(A.rows, 1);
  for (size_t i = 0; i < A.rows; ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < A.cols; ++j) acc += A.at(i, j);
    n.value.at(i, 0) = acc;
  }
  return push(std::move(n));
}

int Tape::select_cols(int a, size_t j0, size_t j1) {
  check(a, "select_cols");
  const Matrix& A = val(a);
  if (j0 >= j1 || j1 > A.cols) {
    fail(Status::invalid_argument, "select_cols: bad column range");
  }
  Node n;
  n.op = Op::select_cols;
  n.a = a;
  n.j0 = j0;
  n.j1 = j1;
  n.value = Matrix(A.rows, j1 - j0);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t j = j0; j < j1; ++j) n.value.at(i, j - j0) = A.at(i, j);
  return push(std::move(n));
}

int Tape::merge_cols(int a, int b) {
  check(a, "merge_cols");
  check(b, "merge_cols");
  const Matrix& A = val(a);
  const Matrix& B = val(b);
  if (A.rows != B.rows) fail(Status::invalid_argument, "merge_cols: row counts disagree");
  Node n;
  n.op = Op::merge_cols;
  n.a = a;
  n.b = b;
  n.j0 = A.cols;  // split point, used by backward
  n.value = Matrix(A.rows, A.cols + B.cols);
  for (size_t i = 0; i < A.rows; ++i) {
    for (size_t j = 0; j < A.cols; ++j) n.value.at(i, j) = A.at(i, j);
    for (size_t j = 0; j < B.cols; ++j) n.value.at(i, A.cols + j) = B.at(i, j);
  }
  return push(std::move(n));
}

void Tape::backward(int root) {
  check(root, "backward");
  const Matrix& r = val(root);
  if (r.rows != 1 || r.cols != 1) {
    fail(Status::invalid_argument, "backward: root must be a 1x1 scalar");
  }
  grads_.assign(nodes_.size(), Matrix());
  for (size_t i = 0; i <= size_t(root); ++i) {
    grads_[i] = Matrix(nodes_[i].value.rows, nodes_[i].value.cols);
  }
  grads_[size_t(root)].data[0] = 1.0;
  for (int i = root; i >= 0; --i) propagate(i);
}

void Tape::propagate(int id) {
  const Node& n = nodes_[size_t(id)];
  const Matrix& g = grads_[size_t(id)];
  switch (n.op) {
    case Op::leaf:
      return;
    case Op::matmul: {
      const Matrix& A = val(n.a);
      const Matrix& B = val(n.b);
      Matrix ga = matmul_nt(g, B);  // g · Bᵀ
      Matrix gb = matmul_tn(A, g);  // Aᵀ · g
      Matrix& accA = grads_[size_t(n.a)];
      Matrix& accB = grads_[size_t(n.b)];
      for (size_t i = 0; i < ga.size(); ++i) accA.data[i] += ga.data[i];
      for (size_t i = 0; i < gb.size(); ++i) accB.data[i] += gb.data[i];
      return;
    }
    case Op::add: {
      Matrix& ga = grads_[size_t(n.a)];
      Matrix& gb = grads_[size_t(n.b)];
      for (size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += g.data[i];
        gb.data[i] += g.data[i];
      }
      return;
    }
    case Op::sub: {
      Matrix& ga = grads_[size_t(n.a)];
      Matrix& gb = grads_[size_t(n.b)];
      for (size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += g.data[i];
        gb.data[i] -= g.data[i];
      }
      return;
    }
    case Op::mul: {
      const Matrix& A = val(n.a);
      const Matrix& B = val(n.b);
      Matrix& ga = grads_[size_t(n.a)];
      Matrix& gb = grads_[size_t(n.b)];
      for (size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += g.data[i] * B.data[i];
        gb.data[i] += g.data[i] * A.data[i];
      }
      return;
    }
    case Op::div: {
      const Matrix& A = val(n.a);
      const Matrix& B = val(n.b);
      Matrix& ga = grads_[size_t(n.a)];
      Matrix& gb = grads_[size_t(n.b)];
      for (size_t i = 0; i < g.size(); ++i) {
        const double inv = 1.0 / B.data[i];
        ga.data[i] += g.data[i] * inv;
        gb.data[i] -= g.data[i] * A.data[i] * inv * inv;
      }
      return;
    }
    case Op::scale: {
      Matrix& ga = grads_[size_t(n.a)];
      for (size_t i = 0; i < g.size(); ++i) ga.data[i] += n.c * g.data[i];
      return;
    }
    case Op::add_const: {
      Matrix& ga = grads_[size_t(n.a)];
      for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
      return;
    }
    case Op::bias_add: {
      Matrix& ga = grads_[size_t(n.a)];
      Matrix& gb = grads_[size_t(n.b)];
      for (size_t i = 0; i < n.value.rows; ++i)
        for (size_t j = 0; j < n.value.cols; ++j) {
          const double gij = g.at(i, j);
          ga.at(i, j) += gij;
          gb.at(0, j) += gij;
        }
      return;
    }
    case Op::colmul: {
      const Matrix& A = val(n.a);  // n×1
      const Matrix& B = val(n.b);  // n×d
      Matrix& ga = grads_[size_t(n.a)];
      Matrix& gb = grads_[size_t(n.b)];
      for (size_t i = 0; i < B.rows; ++i) {
        double acc = 0.0;
        for (size_t j = 0; j < B.cols; ++j) {
          const double gij = g.at(i, j);
          acc += gij * B.at(i, j);
          gb.at(i, j) += gij * A.at(i, 0);
        }
        ga.at(i, 0) += acc;
      }
      return;
    }
    case Op::sadd: {
      Matrix& ga = grads_[size_t(n.a)];
      Matrix& gb = grads_[size_t(n.b)];
      double acc = 0.0;
      for (size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += g.data[i];
        acc += g.data[i];
      }
      gb.data[0] += acc;
      return;
    }
    case Op::smul: {
      const Matrix& A = val(n.a);
      const double s = val(n.b).data[0];
      Matrix& ga = grads_[size_t(n.a)];
      Matrix& gb = grads_[size_t(n.b)];
      double acc = 0.0;
      for (size_t i = 0; i < g.size(); ++i) {
        ga.data[i] += s * g.data[i];
        acc += g.data[i] * A.data[i];
      }
      gb.data[0] += acc;
      return;
    }
    case Op::relu: {
      const Matrix& A = val(n.a);
      Matrix& ga = grads_[size_t(n.a)];
      for (size_t i = 0; i < g.size(); ++i)
        if (A.data[i] > 0.0) ga.data[i] += g.data[i];
      return;
    }
    case Op::tanh: {
      Matrix& ga = grads_[size_t(n.a)];
      for (size_t i = 0; i < g.size(); ++i) {
        const double t = n.value.data[i];
        ga.data[i] += g.data[i] * (1.0 - t * t);
      }
      return;
    }
    case Op::exp: {
      Matrix& ga = grads_[size_t(n.a)];
      for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * n.value.data[i];
      return;
    }
    case Op::log: {
      const Matrix& A = val(n.a);
      Matrix& ga = grads_[size_t(n.a)];
      for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] / A.data[i];
      return;
    }
    case Op::sqrt: {
      Matrix& ga = grads_[size_t(n.a)];
      for (size_t i = 0; i < g.size(); ++i)
        ga.data[i] += g.data[i] * 0.5 / n.value.data[i];
      return;
    }
    case Op::square: {
      const Matrix& A = val(n.a);
      Matrix& ga = grads_[size_t(n.a)];
      for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * 2.0 * A.data[i];
      return;
    }
    case Op::softplus: {
      const Matrix& A = val(n.a);
      Matrix& ga = grads_[size_t(n.a)];
      for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * sigmoid(A.data[i]);
      return;
    }
    case Op::mean: {
      const Matrix& A = val(n.a);
      Matrix& ga = grads_[size_t(n.a)];
      const double share = g.data[0] / double(A.size());
      for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += share;
      return;
    }
    case Op::row_sum: {
      const Matrix& A = val(n.a);
      Matrix& ga = grads_[size_t(n.a)];
      for (size_t i = 0; i < A.rows; ++i) {
        const double gi = g.at(i, 0);
        for (size_t j = 0; j < A.cols; ++j) ga.at(i, j) += gi;
      }
      return;
    }
    case Op::select_cols: {
      Matrix& ga = grads_[size_t(n.a)];
      for (size_t i = 0; i < n.value.rows; ++i)
        for (size_t j = 0; j < n.value.cols; ++j) ga.at(i, n.j0 + j) += g.at(i, j);
      return;
    }
    case Op::merge_cols: {
      Matrix& ga = grads_[size_t(n.a)];
      Matrix& gb = grads_[size_t(n.b)];
      const size_t split = n.j0;
      for (size_t i = 0; i < n.value.rows; ++i) {
        for (size_t j = 0; j < split; ++j) ga.at(i, j) += g.at(i, j);
        for (size_t j = split; j < n.value.cols; ++j) gb.at(i, j - split) += g.at(i, j);
      }
      return;
    }
  }
}

const Matrix& Tape::value(int id) const {
  check(id, "value");
  return nodes_[size_t(id)].value;
}

const Matrix& Tape::grad(int id) const {
  check(id, "grad");
  if (size_t(id) >= grads_.size() || grads_[size_t(id)].size() == 0) {
    fail(Status::invalid_argument, "grad: backward() has not covered this node");
  }
  return grads_[size_t(id)];
}

}  // namespace densreg
