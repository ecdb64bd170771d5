#include <functional>
#include <vector>

#include "doctest.h"
#include "mlp.hpp"
#include "support.hpp"
#include "tape.hpp"
#include "util.hpp"

using namespace densreg;
using namespace densreg::testing;

namespace {

using BuildLoss = std::function<int(Tape&, const std::vector<int>&)>;

// Checks the tape gradient of every input against central finite differences
// (h = 1e-5, max relative error < 1e-4).
void check_gradients(std::vector<Matrix*> inputs, const BuildLoss& build) {
  Tape tape;
  std::vector<int> ids;
  for (Matrix* m : inputs) ids.push_back(tape.leaf(*m));
  const int loss = build(tape, ids);
  tape.backward(loss);
  for (size_t k = 0; k < inputs.size(); ++k) {
    const Matrix analytic = tape.grad(ids[k]);
    const Matrix fd = finite_difference(*inputs[k], [&]() {
      Tape probe;
      std::vector<int> probe_ids;
      for (Matrix* m : inputs) probe_ids.push_back(probe.leaf(*m));
      return probe.value(build(probe, probe_ids)).data[0];
    });
    CHECK(max_rel_error(analytic, fd) < 1e-4);
  }
}

int squared_mean(Tape& t, int node) { return t.mean(t.square(node)); }

}  // namespace

TEST_SUITE("tape") {

TEST_CASE("gradient: matmul") {
  Rng rng(101);
  Matrix a = random_matrix(3, 4, rng);
  Matrix b = random_matrix(4, 2, rng);
  check_gradients({&a, &b}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.matmul(in[0], in[1]));
  });
}

TEST_CASE("gradient: add, sub, mul") {
  Rng rng(102);
  Matrix a = random_matrix(3, 3, rng);
  Matrix b = random_matrix(3, 3, rng);
  check_gradients({&a, &b}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.add(in[0], in[1]));
  });
  check_gradients({&a, &b}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.sub(in[0], in[1]));
  });
  check_gradients({&a, &b}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.mul(in[0], in[1]));
  });
}

TEST_CASE("gradient: div") {
  Rng rng(103);
  Matrix a = random_matrix(3, 3, rng);
  Matrix b = random_matrix(3, 3, rng, 0.5, 2.0);
  check_gradients({&a, &b}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.div(in[0], in[1]));
  });
}

TEST_CASE("gradient: scale and add_const") {
  Rng rng(104);
  Matrix a = random_matrix(2, 5, rng);
  check_gradients({&a}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.scale(in[0], -1.7));
  });
  check_gradients({&a}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.add_const(in[0], 0.63));
  });
}

TEST_CASE("gradient: bias_add") {
  Rng rng(105);
  Matrix a = random_matrix(4, 3, rng);
  Matrix b = random_matrix(1, 3, rng);
  check_gradients({&a, &b}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.bias_add(in[0], in[1]));
  });
}

TEST_CASE("gradient: colmul") {
  Rng rng(106);
  Matrix a = random_matrix(4, 1, rng);
  Matrix b = random_matrix(4, 3, rng);
  check_gradients({&a, &b}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.colmul(in[0], in[1]));
  });
}

TEST_CASE("gradient: sadd and smul") {
  Rng rng(107);
  Matrix a = random_matrix(3, 4, rng);
  Matrix s = random_matrix(1, 1, rng, 0.3, 1.5);
  check_gradients({&a, &s}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.sadd(in[0], in[1]));
  });
  check_gradients({&a, &s}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.smul(in[0], in[1]));
  });
}

TEST_CASE("gradient: elementwise unaries") {
  Rng rng(108);
  Matrix off_zero = random_matrix_off_zero(3, 3, rng);
  check_gradients({&off_zero}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.relu(in[0]));
  });
  Matrix a = random_matrix(3, 3, rng);
  check_gradients({&a}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.tanh(in[0]));
  });
  check_gradients({&a}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.exp(in[0]));
  });
  Matrix positive = random_matrix(3, 3, rng, 0.5, 2.0);
  check_gradients({&positive}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.log(in[0]));
  });
  check_gradients({&positive}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.sqrt(in[0]));
  });
  check_gradients({&a}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.square(in[0]));
  });
  Matrix wide = random_matrix(3, 3, rng, -3.0, 3.0);
  check_gradients({&wide}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.softplus(in[0]));
  });
}

TEST_CASE("gradient: reductions and column ops") {
  Rng rng(109);
  Matrix a = random_matrix(4, 5, rng);
  check_gradients({&a}, [](Tape& t, const std::vector<int>& in) {
    return t.square(t.mean(in[0]));
  });
  check_gradients({&a}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.row_sum(in[0]));
  });
  check_gradients({&a}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.select_cols(in[0], 1, 4));
  });
  Matrix b = random_matrix(4, 2, rng);
  check_gradients({&a, &b}, [](Tape& t, const std::vector<int>& in) {
    return squared_mean(t, t.merge_cols(in[0], in[1]));
  });
}

TEST_CASE("relu forward handles sign cases and zero") {
  Tape t;
  Matrix a(1, 3);
  a.at(0, 0) = -1.0;
  a.at(0, 1) = 0.0;
  a.at(0, 2) = 2.0;
  const int out = t.relu(t.leaf(a));
  CHECK(t.value(out).at(0, 0) == 0.0);
  CHECK(t.value(out).at(0, 1) == 0.0);
  CHECK(t.value(out).at(0, 2) == 2.0);
}

TEST_CASE("relu subgradient at zero is zero") {
  Tape t;
  Matrix a(1, 1, 0.0);
  const int leaf = t.leaf(a);
  const int loss = t.mean(t.relu(leaf));
  t.backward(loss);
  CHECK(t.grad(leaf).at(0, 0) == 0.0);
}

TEST_CASE("backward of a linear sum gives ones") {
  Tape t;
  Rng rng(110);
  Matrix w = random_matrix(3, 4, rng);
  const int leaf = t.leaf(w);
  const int loss = t.scale(t.mean(leaf), double(w.size()));  // = sum(w)
  t.backward(loss);
  for (double g : t.grad(leaf).data) CHECK(g == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("backward of (w·w)/2 at w=3 gives 3") {
  Tape t;
  Matrix w(1, 1, 3.0);
  const int leaf = t.leaf(w);
  const int loss = t.scale(t.mul(leaf, leaf), 0.5);
  t.backward(loss);
  CHECK(t.grad(leaf).at(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("backward rejects non-scalar roots") {
  Tape t;
  Matrix a(2, 2, 1.0);
  const int leaf = t.leaf(a);
  CHECK_THROWS_AS(t.backward(leaf), Error);
}

TEST_CASE("an MLP loss gradient matches finite differences") {
  Rng rng(111);
  Mlp net = make_mlp({3, 6, 6, 2}, Mlp::Activation::relu, true, rng);
  Matrix x = random_matrix(5, 3, rng);
  Matrix y = random_matrix(5, 2, rng);

  auto loss_value = [&]() {
    Tape t;
    const MlpTapeNodes nodes = mlp_forward_tape(t, t.leaf(x), net);
    const int target = t.leaf(y);
    return t.value(t.mean(t.square(t.sub(nodes.output, target)))).data[0];
  };

  Tape t;
  const MlpTapeNodes nodes = mlp_forward_tape(t, t.leaf(x), net);
  const int loss = t.mean(t.square(t.sub(nodes.output, t.leaf(y))));
  t.backward(loss);

  std::vector<Matrix*> params = net.params();
  for (size_t k = 0; k < params.size(); ++k) {
    const Matrix analytic = t.grad(nodes.param_ids[k]);
    const Matrix fd = finite_difference(*params[k], loss_value);
    CHECK(max_rel_error(analytic, fd) < 1e-4);
  }
}

TEST_CASE("replaying a tape is bit-identical") {
  Rng rng(112);
  Matrix x = random_matrix(6, 4, rng);
  Matrix w = random_matrix(4, 3, rng);

  auto run = [&](Matrix& grad_out) {
    Tape t;
    const int xi = t.leaf(x);
    const int wi = t.leaf(w);
    const int loss = t.mean(t.square(t.tanh(t.matmul(xi, wi))));
    t.backward(loss);
    grad_out = t.grad(wi);
    return t.value(loss).data[0];
  };

  Matrix g1, g2;
  const double l1 = run(g1);
  const double l2 = run(g2);
  CHECK(l1 == l2);
  REQUIRE(g1.size() == g2.size());
  for (size_t i = 0; i < g1.size(); ++i) CHECK(g1.data[i] == g2.data[i]);
}

}  // TEST_SUITE
