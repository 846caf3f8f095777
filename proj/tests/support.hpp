#pragma once

// Independent oracles and helpers shared by the unit tests and the acceptance
// binary. Nothing here calls into the library code it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "tsvforge/autodiff.hpp"
#include "tsvforge/random.hpp"
#include "tsvforge/tensor.hpp"

namespace support {

using tsvforge::Rng;
using tsvforge::Shape;
using tsvforge::Tape;
using tsvforge::Tensor;
using tsvforge::Var;

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.data()) v = tsvforge::uniform(rng, lo, hi);
  return t;
}

inline std::size_t random_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

using TapeFn = std::function<Var(Tape&, Var)>;

inline double tape_value(const TapeFn& build, const Tensor& x) {
  Tape tape;
  const Var p = tape.parameter(x);
  return tape.value(build(tape, p)).item();
}

inline Tensor tape_gradient(const TapeFn& build, const Tensor& x) {
  Tape tape;
  const Var p = tape.parameter(x);
  const Var loss = build(tape, p);
  return tape.backward(loss)[p];
}

/// Largest elementwise relative error between `analytic` and central
/// differences of f, with an absolute floor for entries that are ~0.
inline double finite_difference_error(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                      const Tensor& analytic, double step = 1e-5, double floor = 1e-7) {
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + step;
    const double up = f(probe);
    probe[i] = saved - step;
    const double down = f(probe);
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), floor});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
  }
  return worst;
}

inline double tape_fd_error(const TapeFn& build, const Tensor& x) {
  return finite_difference_error([&](const Tensor& p) { return tape_value(build, p); }, x, tape_gradient(build, x));
}

// ---- contrastive loss oracles: straight transcription with nested loops ----

inline double dotp(const Tensor& a, std::size_t i, std::size_t t, const Tensor& b, std::size_t j, std::size_t s) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.dim(2); ++c) acc += a(i, t, c) * b(j, s, c);
  return acc;
}

inline double brute_temporal(const Tensor& r, const Tensor& rp) {
  const std::size_t B = r.dim(0), T = r.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t t = 0; t < T; ++t) {
      const double num = std::exp(dotp(r, i, t, rp, i, t));
      double den = 0.0;
      for (std::size_t s = 0; s < T; ++s) {
        den += std::exp(dotp(r, i, t, rp, i, s));
        if (s != t) den += std::exp(dotp(r, i, t, r, i, s));
      }
      total += -std::log(num / den);
    }
  return total / static_cast<double>(B * T);
}

inline double brute_instance(const Tensor& r, const Tensor& rp) {
  const std::size_t B = r.dim(0), T = r.dim(1);
  double total = 0.0;
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t t = 0; t < T; ++t) {
      const double num = std::exp(dotp(r, i, t, rp, i, t));
      double den = 0.0;
      for (std::size_t j = 0; j < B; ++j) {
        den += std::exp(dotp(r, i, t, rp, j, t));
        if (j != i) den += std::exp(dotp(r, i, t, r, j, t));
      }
      total += -std::log(num / den);
    }
  return total / static_cast<double>(B * T);
}

inline Tensor brute_pool_time(const Tensor& x) {
  const std::size_t B = x.dim(0), T = x.dim(1), C = x.dim(2);
  const std::size_t out_t = (T + 1) / 2;
  Tensor out({B, out_t, C});
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t s = 0; s < out_t; ++s)
      for (std::size_t c = 0; c < C; ++c) {
        double m = x(i, 2 * s, c);
        if (2 * s + 1 < T) m = std::max(m, x(i, 2 * s + 1, c));
        out(i, s, c) = m;
      }
  return out;
}

inline double brute_hierarchical(Tensor r, Tensor rp) {
  double total = 0.0;
  int levels = 0;
  while (r.dim(1) > 1) {
    total += brute_temporal(r, rp) + brute_instance(r, rp);
    ++levels;
    r = brute_pool_time(r);
    rp = brute_pool_time(rp);
  }
  total += brute_instance(r, rp);
  ++levels;
  return total / levels;
}

// ---- convolution oracle ----

inline Tensor brute_conv(const Tensor& x, const Tensor& k, int dilation, bool causal) {
  const std::size_t cin = x.dim(0), T = x.dim(1), cout = k.dim(0), K = k.dim(2);
  const long shift = causal ? static_cast<long>((K - 1) * dilation) : static_cast<long>((K - 1) / 2 * dilation);
  Tensor y({cout, T});
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t t = 0; t < T; ++t) {
      double acc = 0.0;
      for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t j = 0; j < K; ++j) {
          const long src = static_cast<long>(t) - shift + static_cast<long>(j) * dilation;
          if (src >= 0 && src < static_cast<long>(T)) acc += k(o, c, j) * x(c, static_cast<std::size_t>(src));
        }
      y(o, t) = acc;
    }
  return y;
}

// ---- ridge oracle: full-batch gradient descent on the same objective ----
//
// Minimizes 0.5 * ||Xs W + 1 b^T - Y||^2 + 0.5 * alpha * ||W||^2 on the
// standardized features, with the step size set from the largest eigenvalue.
struct GdRidge {
  Eigen::MatrixXd W;
  Eigen::RowVectorXd b;
};

inline GdRidge gradient_descent_ridge(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Y, double alpha,
                                      int max_iters = 200000, double tol = 1e-13) {
  const Eigen::Index n = Xs.rows(), f = Xs.cols();
  Eigen::MatrixXd A(f + 1, f + 1);
  A.topLeftCorner(f, f) = Xs.transpose() * Xs;
  A.topLeftCorner(f, f).diagonal().array() += alpha;
  A.topRightCorner(f, 1) = Xs.transpose() * Eigen::VectorXd::Ones(n);
  A.bottomLeftCorner(1, f) = A.topRightCorner(f, 1).transpose();
  A(f, f) = static_cast<double>(n);
  const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().maxCoeff();
  const double lr = 1.0 / lmax;

  GdRidge out{Eigen::MatrixXd::Zero(f, Y.cols()), Eigen::RowVectorXd::Zero(Y.cols())};
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::MatrixXd resid = (Xs * out.W).rowwise() + out.b - Y;
    const Eigen::MatrixXd gW = Xs.transpose() * resid + alpha * out.W;
    const Eigen::RowVectorXd gb = resid.colwise().sum();
    out.W -= lr * gW;
    out.b -= lr * gb;
    if (std::sqrt(gW.squaredNorm() + gb.squaredNorm()) < tol) break;
  }
  return out;
}

// ---- ensemble oracle ----

inline double objective_loop(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  double se = 0.0, ae = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      const double e = pred(i, j) - truth(i, j);
      se += e * e;
      ae += std::abs(e);
    }
  const double n = static_cast<double>(pred.size());
  return std::sqrt(se / n) + ae / n;
}

} // namespace support
