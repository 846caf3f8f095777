#include <doctest.h>

#include "support.hpp"
#include "tsvforge/autodiff.hpp"
#include "tsvforge/error.hpp"
#include "tsvforge/ops.hpp"

using namespace tsvforge;
using support::random_tensor;

TEST_CASE("tensor construction checks the element count") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.shape() == Shape{2, 3});
  CHECK(m(1, 2) == 6);
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK_THROWS(m.item());
}

TEST_CASE("conv1d_dilated examples") {
  const Tensor x = Tensor::matrix({{1, 2, 3, 4}});
  const Tensor center({1, 1, 3}, {0, 1, 0});
  CHECK(ops::conv1d_dilated(x, center, 1, false) == x);
  CHECK(ops::conv1d_dilated(x, center, 1, true) == Tensor::matrix({{0, 1, 2, 3}}));

  const Tensor ones = Tensor::matrix({{1, 1, 1, 1}});
  CHECK(ops::conv1d_dilated(ones, Tensor({1, 1, 3}, {1, 1, 1}), 1, true) == Tensor::matrix({{1, 2, 3, 3}}));

  // Tap 0 of a causal kernel looks (K-1)*d = 4 steps back.
  const Tensor impulse = Tensor::matrix({{1, 0, 0, 0, 0}});
  CHECK(ops::conv1d_dilated(impulse, Tensor({1, 1, 3}, {1, 0, 0}), 2, true) ==
        Tensor::matrix({{0, 0, 0, 0, 1}}));

  CHECK_THROWS_AS(ops::conv1d_dilated(Tensor({2, 4}), Tensor({1, 3, 3}), 1, true), DimensionError);
  CHECK_THROWS_AS(ops::conv1d_dilated(x, center, 0, true), ContractViolation);
}

TEST_CASE("conv1d_dilated matches a nested-loop oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cin = support::random_size(rng, 1, 4), cout = support::random_size(rng, 1, 4);
    const std::size_t T = support::random_size(rng, 1, 20);
    const int d = static_cast<int>(support::random_size(rng, 1, 5));
    const bool causal = trial % 2 == 0;
    const Tensor x = random_tensor({cin, T}, rng), k = random_tensor({cout, cin, 3}, rng);
    const Tensor fast = ops::conv1d_dilated(x, k, d, causal);
    const Tensor slow = support::brute_conv(x, k, d, causal);
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
  }
}

TEST_CASE("causal convolution never reads the future") {
  Rng rng(3);
  const Tensor k = random_tensor({2, 2, 3}, rng);
  const Tensor base = random_tensor({2, 32}, rng);
  for (const int d : {1, 2, 4}) {
    const Tensor y0 = ops::conv1d_dilated(base, k, d, true);
    for (std::size_t pos = 0; pos < 32; ++pos) {
      Tensor x = base;
      x(0, pos) += 1.0;
      x(1, pos) -= 2.0;
      const Tensor y = ops::conv1d_dilated(x, k, d, true);
      for (std::size_t t = 0; t < pos; ++t)
        for (std::size_t c = 0; c < 2; ++c) REQUIRE(y(c, t) == y0(c, t));
    }
  }
}

TEST_CASE("maxpool1d_time examples") {
  CHECK(ops::maxpool1d_time(Tensor::matrix({{1, 3, 2, 5}}), 2) == Tensor::matrix({{3, 5}}));
  CHECK(ops::maxpool1d_time(Tensor::matrix({{7}}), 2) == Tensor::matrix({{7}}));
  CHECK(ops::maxpool1d_time(Tensor::matrix({{-1, -4, -2}}), 2) == Tensor::matrix({{-1, -2}}));
  Rng rng(5);
  const Tensor x = random_tensor({3, 9}, rng);
  CHECK(ops::maxpool1d_time(x, 1) == x);
  CHECK(ops::maxpool1d_time(ops::maxpool1d_time(x, 1), 1) == x);
}

TEST_CASE("gelu is the exact erf form") {
  CHECK(ops::gelu(0.0) == 0.0);
  CHECK(ops::gelu(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CHECK(ops::gelu(-1.0) == doctest::Approx(-0.15865525393145707).epsilon(1e-14));
  for (const double x : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
    const double fd = (ops::gelu(x + 1e-6) - ops::gelu(x - 1e-6)) / 2e-6;
    CHECK(ops::gelu_derivative(x) == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("backward examples") {
  Rng rng(1);
  SUBCASE("sum gives ones") {
    Tape tape;
    const Var p = tape.parameter(random_tensor({2, 3}, rng));
    const Gradients g = tape.backward(ad::sum(tape, p));
    CHECK(g[p] == Tensor({2, 3}, 1.0));
  }
  SUBCASE("dot(p, p)") {
    Tape tape;
    const Var p = tape.parameter(Tensor::vector({1, 2}));
    const Gradients g = tape.backward(ad::dot(tape, p, p));
    CHECK(g[p] == Tensor::vector({2, 4}));
  }
  SUBCASE("unused parameters get zeros") {
    Tape tape;
    const Var p = tape.parameter(Tensor::vector({1, 2}));
    const Var unused = tape.parameter(Tensor::matrix({{1, 2}, {3, 4}}));
    const Gradients g = tape.backward(ad::sum(tape, p));
    CHECK(g[unused] == Tensor({2, 2}, 0.0));
  }
  SUBCASE("non-scalar loss is rejected") {
    Tape tape;
    const Var p = tape.parameter(Tensor::vector({1, 2}));
    CHECK_THROWS_AS(tape.backward(p), ContractViolation);
  }
  SUBCASE("constants have no gradient entry") {
    Tape tape;
    const Var c = tape.constant(Tensor::vector({1, 2}));
    const Var p = tape.parameter(Tensor::vector({3, 4}));
    const Gradients g = tape.backward(ad::dot(tape, c, p));
    CHECK(g[p] == Tensor::vector({1, 2}));
    CHECK_THROWS_AS(g[c], LookupError);
  }
  SUBCASE("shared subexpressions accumulate") {
    Tape tape;
    const Var p = tape.parameter(Tensor::vector({3}));
    const Var twice = ad::add(tape, p, p);
    const Gradients g = tape.backward(ad::dot(tape, twice, p)); // 2 p^2
    CHECK(g[p][0] == doctest::Approx(12.0));
  }
}

// Every primitive against central differences on a random readout.
TEST_CASE("primitive gradients match finite differences") {
  Rng rng(2024);
  auto readout = [&](Shape shape) {
    return random_tensor(shape, rng);
  };

  SUBCASE("conv1d_dilated input and kernel") {
    for (const bool causal : {true, false}) {
      const Tensor x = random_tensor({3, 10}, rng), k = random_tensor({2, 3, 3}, rng);
      const Tensor w = readout({2, 10});
      const auto wrt_x = [&](Tape& t, Var v) {
        return ad::dot(t, ad::conv1d_dilated(t, v, t.constant(k), 2, causal), t.constant(w));
      };
      const auto wrt_k = [&](Tape& t, Var v) {
        return ad::dot(t, ad::conv1d_dilated(t, t.constant(x), v, 2, causal), t.constant(w));
      };
      CHECK(support::tape_fd_error(wrt_x, x) < 1e-6);
      CHECK(support::tape_fd_error(wrt_k, k) < 1e-6);
    }
  }
  SUBCASE("linear_time, bias and gelu") {
    const Tensor W = random_tensor({4, 3}, rng), b = random_tensor({4}, rng), x = random_tensor({3, 6}, rng);
    const Tensor w = readout({4, 6});
    auto net = [&](Tape& t, Var Wv, Var bv, Var xv) {
      return ad::dot(t, ad::gelu(t, ad::linear_time(t, Wv, bv, xv)), t.constant(w));
    };
    CHECK(support::tape_fd_error([&](Tape& t, Var v) { return net(t, v, t.constant(b), t.constant(x)); }, W) < 1e-6);
    CHECK(support::tape_fd_error([&](Tape& t, Var v) { return net(t, t.constant(W), v, t.constant(x)); }, b) < 1e-6);
    CHECK(support::tape_fd_error([&](Tape& t, Var v) { return net(t, t.constant(W), t.constant(b), v); }, x) < 1e-6);
    const auto biased = [&](Tape& t, Var v) {
      return ad::dot(t, ad::add_channel_bias(t, t.constant(x), v), t.constant(random_tensor({3, 6}, rng)));
    };
    const Tensor b3 = random_tensor({3}, rng);
    CHECK(support::tape_gradient(biased, b3).size() == 3);
  }
  SUBCASE("mask, slice, scale, stack and maxpool") {
    const Tensor x = random_tensor({3, 8}, rng);
    const std::vector<bool> mask{true, false, false, true, false, true, false, false};
    const Tensor w = readout({2, 5, 3});
    const auto f = [&](Tape& t, Var v) {
      const Var masked = ad::mask_columns(t, v, mask);
      const Var a = ad::slice_time(t, masked, 1, 6);
      const Var b = ad::scale(t, ad::slice_time(t, v, 3, 8), -0.5);
      const std::vector<Var> items{a, b};
      const Var stacked = ad::stack_btc(t, items);
      return ad::dot(t, stacked, t.constant(w));
    };
    CHECK(support::tape_fd_error(f, x) < 1e-6);

    const Tensor y = random_tensor({2, 7, 3}, rng);
    const Tensor wp = readout({2, 4, 3});
    const auto pool = [&](Tape& t, Var v) { return ad::dot(t, ad::maxpool_axis(t, v, 1, 2), t.constant(wp)); };
    CHECK(support::tape_fd_error(pool, y) < 1e-6);
  }
}
