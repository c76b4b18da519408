#include <doctest.h>

#include "core/ops.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "testutil.hpp"

using cet::Shape4;
using cet::Tape;
using cet::Tensor;

// ---------------------------------------------------------------------------
// Tensor basics
// ---------------------------------------------------------------------------

TEST_CASE("tensor: storage size always matches shape") {
  Tensor<float> t = Tensor<float>::zeros({2, 3, 4, 5});
  CHECK(t.numel() == 120);
  CHECK(t.vec().size() == 120);
  CHECK_THROWS_AS(Tensor<float>::from_vector({2, 2, 2, 2}, std::vector<float>(15)),
                  cet::DimensionError);
}

TEST_CASE("tensor: grad buffer matches shape and is shared across copies") {
  Tensor<double> t = Tensor<double>::zeros({1, 2, 3, 1});
  t.set_requires_grad(true);
  CHECK_FALSE(t.has_grad());
  t.grad()[0] = 7.0;
  Tensor<double> copy = t;
  CHECK(copy.grad().size() == static_cast<std::size_t>(t.numel()));
  CHECK(copy.grad()[0] == 7.0);
  t.zero_grad();
  CHECK(copy.grad()[0] == 0.0);
}

TEST_CASE("tensor: at() indexes row-major") {
  Tensor<float> t = Tensor<float>::from_vector({1, 2, 2, 2},
                                               {0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(t.at(0, 1, 0, 1) == 5.0f);
  CHECK(t.at(0, 0, 1, 0) == 2.0f);
}

// ---------------------------------------------------------------------------
// Tape mechanics
// ---------------------------------------------------------------------------

TEST_CASE("tape: loss = sum(x*x) gives grad 2x") {
  cet::Rng rng(1);
  Tensor<double> x = testutil::rand_tensor<double>(rng, {1, 1, 2, 3});
  x.set_requires_grad(true);
  Tape<double> tape;
  Tensor<double> loss = cet::sum_all(&tape, cet::mul(&tape, x, x));
  tape.backward(loss);
  for (std::int64_t i = 0; i < x.numel(); ++i)
    CHECK(x.grad()[static_cast<std::size_t>(i)] == doctest::Approx(2.0 * x.data()[i]).epsilon(1e-12));
}

TEST_CASE("tape: fan-out accumulates (y used twice -> grad 2)") {
  Tensor<double> y = Tensor<double>::full({1, 1, 1, 4}, 3.0);
  y.set_requires_grad(true);
  Tape<double> tape;
  Tensor<double> loss = cet::sum_all(&tape, cet::add(&tape, y, y));
  tape.backward(loss);
  for (double g : y.grad()) CHECK(g == 2.0);
}

TEST_CASE("tape: backward on non-scalar is a usage error") {
  Tensor<double> x = Tensor<double>::full({1, 1, 1, 3}, 1.0);
  x.set_requires_grad(true);
  Tape<double> tape;
  Tensor<double> y = cet::scale(&tape, x, 2.0);
  CHECK_THROWS_AS(tape.backward(y), cet::UsageError);
}

TEST_CASE("tape: second backward without re-taping is a usage error") {
  Tensor<double> x = Tensor<double>::full({1, 1, 1, 1}, 2.0);
  x.set_requires_grad(true);
  Tape<double> tape;
  Tensor<double> loss = cet::mul(&tape, x, x);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), cet::UsageError);
}

TEST_CASE("tape: loss from another tape is rejected") {
  Tensor<double> x = Tensor<double>::full({1, 1, 1, 1}, 2.0);
  x.set_requires_grad(true);
  Tape<double> t1;
  Tensor<double> loss = cet::mul(&t1, x, x);
  Tape<double> t2;
  CHECK_THROWS_AS(t2.backward(loss), cet::UsageError);
}

TEST_CASE("tape: leaves off the loss path get zero gradient") {
  Tensor<double> a = Tensor<double>::full({1, 1, 1, 2}, 1.0);
  Tensor<double> b = Tensor<double>::full({1, 1, 1, 2}, 5.0);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  Tape<double> tape;
  Tensor<double> loss = cet::sum_all(&tape, cet::scale(&tape, a, 3.0));
  cet::scale(&tape, b, 2.0);  // recorded but disconnected from the loss
  tape.backward(loss);
  for (double g : a.grad()) CHECK(g == 3.0);
  for (double g : b.grad()) CHECK(g == 0.0);
}

TEST_CASE("tape: requires_grad=false inputs never produce nodes") {
  Tensor<float> x = Tensor<float>::full({1, 1, 2, 2}, 1.0f);
  Tape<float> tape;
  Tensor<float> y = cet::add(&tape, x, x);
  CHECK_FALSE(y.requires_grad());
  CHECK(tape.size() == 0);
}

TEST_CASE("tape: ops without a tape never mark outputs differentiable") {
  Tensor<float> x = Tensor<float>::full({1, 1, 2, 2}, 1.0f);
  x.set_requires_grad(true);
  Tensor<float> y = cet::scale<float>(nullptr, x, 2.0f);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("tape: two identical replays produce bitwise-identical gradients") {
  auto run = [](std::vector<double>& grads_out) {
    cet::Rng rng(99);
    Tensor<double> x = testutil::rand_tensor<double>(rng, {2, 2, 3, 3});
    Tensor<double> w = testutil::rand_tensor<double>(rng, {2, 2, 3, 3});
    x.set_requires_grad(true);
    w.set_requires_grad(true);
    Tape<double> tape;
    Tensor<double> h = cet::mul(&tape, x, w);
    Tensor<double> s = cet::gelu(&tape, h);
    Tensor<double> loss = cet::sum_all(&tape, cet::mul(&tape, s, s));
    tape.backward(loss);
    grads_out = x.grad();
    grads_out.insert(grads_out.end(), w.grad().begin(), w.grad().end());
  };
  std::vector<double> g1, g2;
  run(g1);
  run(g2);
  REQUIRE(g1.size() == g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("tape: gradients flow through aliased reshapes used twice") {
  Tensor<double> x = Tensor<double>::from_vector({1, 1, 2, 2}, {1, 2, 3, 4});
  x.set_requires_grad(true);
  Tape<double> tape;
  Tensor<double> flat = cet::reshape(&tape, x, {1, 1, 4, 1});
  Tensor<double> col = cet::reshape(&tape, x, {4, 1, 1, 1});
  Tensor<double> s1 = cet::sum_all(&tape, flat);
  Tensor<double> s2 = cet::sum_all(&tape, cet::mul(&tape, col, col));
  Tensor<double> loss = cet::add(&tape, s1, s2);
  tape.backward(loss);
  // d/dx [sum(x) + sum(x*x)] = 1 + 2x
  for (std::int64_t i = 0; i < 4; ++i)
    CHECK(x.grad()[static_cast<std::size_t>(i)] ==
          doctest::Approx(1.0 + 2.0 * x.data()[i]).epsilon(1e-12));
}
