#include <doctest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"
#include "tsvforge/error.hpp"
#include "tsvforge/objectives.hpp"

using namespace tsvforge;
using support::random_tensor;

namespace {

ViewPair random_pair(Rng& rng, std::size_t B, std::size_t T, std::size_t C) {
  return {random_tensor({B, T, C}, rng), random_tensor({B, T, C}, rng)};
}

} // namespace

TEST_CASE("losses match nested-loop oracles on random small instances") {
  Rng rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t B = support::random_size(rng, 1, 4), T = support::random_size(rng, 1, 4),
                      C = support::random_size(rng, 1, 4);
    const ViewPair p = random_pair(rng, B, T, C);
    CHECK(std::abs(temporal_loss(p) - support::brute_temporal(p.r, p.r_prime)) < 1e-12);
    CHECK(std::abs(instance_loss(p) - support::brute_instance(p.r, p.r_prime)) < 1e-12);
    CHECK(std::abs(dual_loss(p) - (support::brute_temporal(p.r, p.r_prime) +
                                   support::brute_instance(p.r, p.r_prime))) < 1e-12);
    CHECK(std::abs(hierarchical_loss(p) - support::brute_hierarchical(p.r, p.r_prime)) < 1e-12);
    CHECK(dual_loss(p) == temporal_loss(p) + instance_loss(p));
    CHECK(temporal_loss(p) >= 0.0);
    CHECK(instance_loss(p) >= 0.0);
  }
}

TEST_CASE("collapse cases are exactly zero") {
  Rng rng(7);
  CHECK(instance_loss(random_pair(rng, 1, 5, 3)) == 0.0);
  CHECK(temporal_loss(random_pair(rng, 4, 1, 3)) == 0.0);
  CHECK(dual_loss(random_pair(rng, 1, 1, 3)) == 0.0);
  CHECK(combined_loss(1.7, 3.2, 0.0) == 1.7);
  CHECK(combined_loss(1.7, 3.2, 1.0) == 3.2);
  CHECK(combined_loss(2.0, 4.0, 0.25) == 2.5);
  CHECK_THROWS_AS(combined_loss(1, 1, 1.1), ContractViolation);
  CHECK_THROWS_AS(combined_loss(1, 1, -0.1), ContractViolation);
}

TEST_CASE("temporal loss by hand for B=1, T=2") {
  const Tensor r({1, 2, 2}, {1.0, 0.5, -0.3, 0.8});
  const Tensor rp({1, 2, 2}, {0.2, 0.1, 0.4, -0.6});
  const double r0r0p = 1.0 * 0.2 + 0.5 * 0.1, r0r1p = 1.0 * 0.4 + 0.5 * -0.6, r0r1 = 1.0 * -0.3 + 0.5 * 0.8;
  const double r1r1p = -0.3 * 0.4 + 0.8 * -0.6, r1r0p = -0.3 * 0.2 + 0.8 * 0.1;
  const double l0 = -std::log(std::exp(r0r0p) / (std::exp(r0r0p) + std::exp(r0r1p) + std::exp(r0r1)));
  const double l1 = -std::log(std::exp(r1r1p) / (std::exp(r1r0p) + std::exp(r1r1p) + std::exp(r0r1)));
  CHECK(temporal_loss({r, rp}) == doctest::Approx((l0 + l1) / 2).epsilon(1e-14));
}

TEST_CASE("temporal loss falls as one-hot timestamps separate") {
  double previous = INFINITY;
  for (const double scale : {1.0, 5.0, 10.0}) {
    Tensor r({1, 3, 3}, 0.0);
    for (std::size_t t = 0; t < 3; ++t) r(0, t, t) = std::sqrt(scale);
    const double loss = temporal_loss({r, r});
    CHECK(loss < previous);
    previous = loss;
  }
  CHECK(previous < 1e-3);
}

TEST_CASE("instance loss closed form for orthogonal instances") {
  const Tensor r({2, 1, 2}, {1, 0, 0, 1});
  const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + 2.0));
  CHECK(instance_loss({r, r}) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("instance loss is invariant to permuting instances") {
  Rng rng(3);
  const ViewPair p = random_pair(rng, 4, 3, 2);
  ViewPair q{Tensor({4, 3, 2}), Tensor({4, 3, 2})};
  const std::size_t perm[4] = {2, 0, 3, 1};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t c = 0; c < 2; ++c) {
        q.r(i, t, c) = p.r(perm[i], t, c);
        q.r_prime(i, t, c) = p.r_prime(perm[i], t, c);
      }
  CHECK(instance_loss(q) == doctest::Approx(instance_loss(p)).epsilon(1e-14));
}

TEST_CASE("hierarchy levels") {
  CHECK(hierarchy_levels(1) == 1);
  CHECK(hierarchy_levels(2) == 2);
  CHECK(hierarchy_levels(8) == 4);
  CHECK(hierarchy_levels(5) == 4); // 5 -> 3 -> 2 -> 1
  for (std::size_t k = 0; k < 10; ++k) CHECK(hierarchy_levels(std::size_t{1} << k) == k + 1);

  Rng rng(12);
  const ViewPair one = random_pair(rng, 3, 1, 2);
  CHECK(hierarchical_loss(one) == instance_loss(one));

  const ViewPair two = random_pair(rng, 3, 2, 2);
  ViewPair pooled{Tensor({3, 1, 2}), Tensor({3, 1, 2})};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 2; ++c) {
      pooled.r(i, 0, c) = std::max(two.r(i, 0, c), two.r(i, 1, c));
      pooled.r_prime(i, 0, c) = std::max(two.r_prime(i, 0, c), two.r_prime(i, 1, c));
    }
  CHECK(hierarchical_loss(two) == doctest::Approx((dual_loss(two) + instance_loss(pooled)) / 2).epsilon(1e-14));
}

TEST_CASE("msm loss") {
  const Tensor x = Tensor::matrix({{1, 2}});
  CHECK(msm_loss(x, x, {true, true}) == 0.0);
  CHECK(msm_loss(x, Tensor::matrix({{5, 9}}), {false, false}) == 0.0);
  CHECK(msm_loss(x, Tensor::matrix({{1, 4}}), {false, true}) == 4.0);
  CHECK_THROWS_AS(msm_loss(x, Tensor::matrix({{1, 4, 5}}), {false, true}), DimensionError);
}

TEST_CASE("lambda schedule") {
  MsmConfig cfg;
  CHECK(lambda_schedule(0, 100, cfg) == 0.0);
  CHECK(lambda_schedule(25, 100, cfg) == doctest::Approx(0.25));
  CHECK(lambda_schedule(50, 100, cfg) == 0.5);
  CHECK(lambda_schedule(100, 100, cfg) == 0.5);
  double prev = 0.0;
  for (long i = 0; i <= 100; ++i) {
    const double l = lambda_schedule(i, 100, cfg);
    CHECK(l >= prev);
    CHECK(l <= cfg.lambda_max);
    prev = l;
  }
  MsmConfig bad;
  bad.lambda_max = 2.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("dot products are clamped before exponentiation") {
  Tensor r({2, 2, 1}, {100, -100, 80, 90});
  const ViewPair p{r, r};
  CHECK(std::isfinite(temporal_loss(p)));
  CHECK(std::isfinite(instance_loss(p)));
  CHECK(std::isfinite(hierarchical_loss(p)));
}

TEST_CASE("tape losses agree with the plain losses and with finite differences") {
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const ViewPair p = random_pair(rng, 2 + trial % 3, 2 + trial % 4, 3);
    const Tensor rp = p.r_prime;
    using Builder = Var (*)(Tape&, Var, Var);
    const std::pair<Builder, double (*)(const ViewPair&)> losses[] = {
        {ad::temporal_loss, temporal_loss},
        {ad::instance_loss, instance_loss},
        {ad::dual_loss, dual_loss},
        {ad::hierarchical_loss, hierarchical_loss}};
    for (const auto& [build, plain] : losses) {
      const auto f = [&](Tape& t, Var v) { return build(t, v, t.constant(rp)); };
      CHECK(support::tape_value(f, p.r) == doctest::Approx(plain(p)).epsilon(1e-13));
      CHECK(support::tape_fd_error(f, p.r) < 1e-6);
      const auto g = [&](Tape& t, Var v) { return build(t, t.constant(p.r), v); };
      CHECK(support::tape_fd_error(g, rp) < 1e-6);
    }
  }
  // Temporal loss on a random 2x3x4 pair.
  const ViewPair p = random_pair(rng, 2, 3, 4);
  const auto f = [&](Tape& t, Var v) { return ad::temporal_loss(t, v, t.constant(p.r_prime)); };
  CHECK(support::tape_fd_error(f, p.r) < 1e-4);
}

TEST_CASE("msm and combined loss gradients") {
  Rng rng(8);
  const Tensor x = random_tensor({2, 6}, rng), recon = random_tensor({2, 6}, rng);
  const std::vector<bool> mask{true, false, true, true, false, false};
  const auto m = [&](Tape& t, Var v) { return ad::msm_loss(t, x, v, mask); };
  CHECK(support::tape_value(m, recon) == doctest::Approx(msm_loss(x, recon, mask)).epsilon(1e-14));
  CHECK(support::tape_fd_error(m, recon) < 1e-6);

  const ViewPair p = random_pair(rng, 3, 4, 2);
  for (const double lambda : {0.0, 0.3, 1.0}) {
    const auto wrt_r = [&](Tape& t, Var v) {
      const Var contrastive = ad::hierarchical_loss(t, v, t.constant(p.r_prime));
      return ad::combined_loss(t, contrastive, ad::msm_loss(t, x, t.constant(recon), mask), lambda);
    };
    const auto wrt_recon = [&](Tape& t, Var v) {
      const Var contrastive = ad::hierarchical_loss(t, t.constant(p.r), t.constant(p.r_prime));
      return ad::combined_loss(t, contrastive, ad::msm_loss(t, x, v, mask), lambda);
    };
    if (lambda < 1.0) CHECK(support::tape_fd_error(wrt_r, p.r) < 1e-6);
    if (lambda > 0.0) CHECK(support::tape_fd_error(wrt_recon, recon) < 1e-6);
    CHECK(support::tape_value(wrt_r, p.r) ==
          combined_loss(hierarchical_loss(p), msm_loss(x, recon, mask), lambda));
  }
}
