#include <cmath>
#include <vector>

#include "doctest.h"
#include "rng.hpp"

using namespace densreg;

TEST_SUITE("rng") {

TEST_CASE("same seed reproduces the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 64; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("different seeds give different streams") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next() == b.next()) ++same;
  CHECK(same == 0);
}

TEST_CASE("derive depends on the label, not on draw position") {
  Rng root(7);
  const Rng before = root.derive("stage1");
  root.next();
  root.next();
  Rng after = root.derive("stage1");
  Rng copy = before;
  for (int i = 0; i < 16; ++i) CHECK(copy.next() == after.next());

  Rng other = root.derive("stage2");
  Rng again = root.derive("stage1");
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (other.next() == again.next()) ++same;
  CHECK(same == 0);
}

TEST_CASE("uniform stays in [0,1)") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal draws have roughly standard moments") {
  Rng rng(11);
  const int n = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.05);
  CHECK(std::fabs(std::sqrt(var) - 1.0) < 0.05);
}

TEST_CASE("shuffle is a deterministic permutation") {
  std::vector<int> a{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> b = a;
  Rng r1(5), r2(5);
  shuffle(a, r1);
  shuffle(b, r2);
  CHECK(a == b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}

}  // TEST_SUITE
