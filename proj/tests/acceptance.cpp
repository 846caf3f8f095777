// Runs every primary acceptance criterion and prints one PASS/FAIL line each.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "tsvforge/checkpoint.hpp"
#include "tsvforge/encoder.hpp"
#include "tsvforge/ensemble.hpp"
#include "tsvforge/experiment.hpp"
#include "tsvforge/objectives.hpp"
#include "tsvforge/ridge.hpp"
#include "tsvforge/synth.hpp"

using namespace tsvforge;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
  std::ostringstream out;
  out.precision(3);
  out << v;
  return out.str();
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

ViewPair random_pair(Rng& rng, std::size_t B, std::size_t T, std::size_t C) {
  return {support::random_tensor({B, T, C}, rng), support::random_tensor({B, T, C}, rng)};
}

Outcome gradient_correctness() {
  const auto start = Clock::now();
  Rng rng(1);
  double worst = 0.0;
  using Builder = Var (*)(Tape&, Var, Var);
  const Builder losses[] = {ad::temporal_loss, ad::instance_loss, ad::dual_loss, ad::hierarchical_loss};
  for (int trial = 0; trial < 5; ++trial) {
    const ViewPair p = random_pair(rng, 2 + trial % 3, 3 + trial, 4);
    for (const Builder build : losses) {
      const auto wrt_r = [&](Tape& t, Var v) { return build(t, v, t.constant(p.r_prime)); };
      const auto wrt_rp = [&](Tape& t, Var v) { return build(t, t.constant(p.r), v); };
      worst = std::max({worst, support::tape_fd_error(wrt_r, p.r), support::tape_fd_error(wrt_rp, p.r_prime)});
    }
  }
  // MSM reconstruction and the combined objective.
  const Tensor x = support::random_tensor({2, 6}, rng), recon = support::random_tensor({2, 6}, rng);
  const std::vector<bool> mask{true, false, true, false, false, true};
  const ViewPair p = random_pair(rng, 3, 4, 2);
  for (const double lambda : {0.0, 0.4, 1.0}) {
    const auto wrt_r = [&](Tape& t, Var v) {
      return ad::combined_loss(t, ad::hierarchical_loss(t, v, t.constant(p.r_prime)),
                               ad::msm_loss(t, x, t.constant(recon), mask), lambda);
    };
    const auto wrt_recon = [&](Tape& t, Var v) {
      return ad::combined_loss(t, ad::hierarchical_loss(t, t.constant(p.r), t.constant(p.r_prime)),
                               ad::msm_loss(t, x, v, mask), lambda);
    };
    if (lambda < 1.0) worst = std::max(worst, support::tape_fd_error(wrt_r, p.r));
    if (lambda > 0.0) worst = std::max(worst, support::tape_fd_error(wrt_recon, recon));
  }

  // Reduced encoder: D=2, T=8, depth 2, masked, every parameter tensor.
  EncoderConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dim = 4;
  cfg.output_dim = 5;
  cfg.depth = 2;
  const EncoderParams params = EncoderParams::initialize(cfg, 12);
  const Tensor xe = support::random_tensor({2, 8}, rng), readout = support::random_tensor({5, 8}, rng);
  const std::vector<bool> emask{false, true, false, false, true, false, false, false};
  const auto loss_of = [&](const EncoderParams& q) {
    Tape tape;
    const EncoderVars vars = EncoderVars::record(tape, q);
    return tape.value(ad::dot(tape, encode_on_tape(tape, vars, tape.constant(xe), &emask), tape.constant(readout)))
        .item();
  };
  Tape tape;
  const EncoderVars vars = EncoderVars::record(tape, params);
  const Gradients grads =
      tape.backward(ad::dot(tape, encode_on_tape(tape, vars, tape.constant(xe), &emask), tape.constant(readout)));
  const auto order = vars.ordered();
  const auto named = params.named();
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto f = [&](const Tensor& probe) {
      EncoderParams q = params;
      *q.named()[k].second = probe;
      return loss_of(q);
    };
    worst = std::max(worst, support::finite_difference_error(f, *named[k].second, grads[order[k]]));
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && elapsed < 60.0, "max relative error " + num(worst) + ", " + num(elapsed) + " s"};
}

Outcome loss_oracles() {
  Rng rng(100);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ViewPair p = random_pair(rng, support::random_size(rng, 1, 4), support::random_size(rng, 1, 4),
                                   support::random_size(rng, 1, 4));
    const double t = support::brute_temporal(p.r, p.r_prime), i = support::brute_instance(p.r, p.r_prime);
    worst = std::max({worst, std::abs(temporal_loss(p) - t), std::abs(instance_loss(p) - i),
                      std::abs(dual_loss(p) - (t + i))});
  }
  return {worst <= 1e-12, "max abs deviation " + num(worst) + " over 100 instances"};
}

Outcome collapse_identities() {
  Rng rng(7);
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t T = support::random_size(rng, 1, 6), B = support::random_size(rng, 1, 6);
    ok = ok && instance_loss(random_pair(rng, 1, T, 3)) == 0.0;
    ok = ok && temporal_loss(random_pair(rng, B, 1, 3)) == 0.0;
    const double c = hierarchical_loss(random_pair(rng, B, T, 2));
    const double m = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
    ok = ok && combined_loss(c, m, 0.0) == c && combined_loss(c, m, 1.0) == m;
  }
  return {ok, "B=1, |Omega|=1 and lambda in {0, 1} on 20 random draws"};
}

Outcome ridge_oracle() {
  Rng rng(31);
  double worst_gap = 0.0, worst_residual = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<Eigen::Index>(support::random_size(rng, 8, 40));
    const auto f = static_cast<Eigen::Index>(support::random_size(rng, 1, 6));
    const auto out = static_cast<Eigen::Index>(support::random_size(rng, 1, 3));
    const double alpha = std::vector<double>{0.1, 1.0, 10.0, 100.0}[trial % 4];
    const Matrix X = random_matrix(n, f, rng, 2.0).array() + 1.5;
    const Matrix Y = random_matrix(n, out, rng);
    const RidgeHead head = ridge_fit(X, Y, alpha);
    const Matrix Xs = head.standardize(X);
    const support::GdRidge gd = support::gradient_descent_ridge(Xs, Y, alpha);
    const Matrix gd_pred = (Xs * gd.W).rowwise() + gd.b;
    worst_gap = std::max(worst_gap, (head.predict(X) - gd_pred).cwiseAbs().maxCoeff());
    worst_gap = std::max(worst_gap, (head.weights().topRows(f) - gd.W).cwiseAbs().maxCoeff());
    worst_residual = std::max(worst_residual, normal_equation_residual(head, X, Y));
  }
  return {worst_gap < 1e-6 && worst_residual < 1e-8,
          "max gap to descent " + num(worst_gap) + ", max normal-equation residual " + num(worst_residual)};
}

Outcome weight_selection() {
  Rng rng(77);
  const WeightGrid grid = WeightGrid::standard();
  int matches = 0, ties = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(support::random_size(rng, 1, 12));
    const auto d = static_cast<Eigen::Index>(support::random_size(rng, 1, 4));
    const Matrix truth = random_matrix(n, d, rng);
    const Matrix pa = truth + 0.5 * random_matrix(n, d, rng);
    const Matrix pb = trial % 5 == 0 ? pa : Matrix(truth + 0.5 * random_matrix(n, d, rng));
    ties += trial % 5 == 0;
    const WeightSelection sel = select_weights(pa, pb, truth, grid);

    // Independent exhaustive evaluation in grid order; strict improvement keeps the larger w1 on ties.
    int best_k = -1;
    double best = 0.0;
    for (int k = 0; k < 17; ++k) {
      const double w1 = (18 - k) / 20.0;
      Matrix blended(n, d);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) blended(i, j) = pb(i, j) + w1 * (pa(i, j) - pb(i, j));
      const double s = support::objective_loop(blended, truth);
      if (best_k < 0 || s < best) {
        best = s;
        best_k = k;
      }
    }
    const double w1 = (18 - best_k) / 20.0;
    matches += sel.weights.w1 == w1 && sel.weights.w2 == 1.0 - w1;
  }
  return {matches == 100, std::to_string(matches) + "/100 exact matches (" + std::to_string(ties) + " all-tie instances)"};
}

Outcome causality() {
  const EncoderConfig cfg;
  const EncoderParams p = EncoderParams::initialize(cfg, 17);
  Rng rng(64);
  const Tensor base = support::random_tensor({1, 64}, rng);
  const Tensor y0 = encode(base, p, cfg, false);
  int good = 0;
  for (std::size_t pos = 0; pos < 64; ++pos) {
    Tensor x = base;
    x(0, pos) += 0.5;
    const Tensor y = encode(x, p, cfg, false);
    bool earlier_same = true, here_changed = false;
    for (std::size_t c = 0; c < y.dim(0); ++c) {
      for (std::size_t t = 0; t < pos; ++t) earlier_same = earlier_same && y(c, t) == y0(c, t);
      here_changed = here_changed || y(c, pos) != y0(c, pos);
    }
    good += earlier_same && here_changed;
  }

  // Impulse response of the full encoder with zero biases: gelu(0) = 0, so
  // exactly the positions inside the receptive field become nonzero.
  EncoderParams z = EncoderParams::initialize(cfg, 5);
  for (auto& [name, t] : z.named())
    if (name.ends_with("bias")) std::fill(t->data().begin(), t->data().end(), 0.0);
  const std::size_t T = 4200;
  Tensor impulse({1, T}, 0.0);
  impulse(0, 0) = 1.0;
  const Tensor y = encode(impulse, z, cfg, false);
  std::size_t last = 0;
  for (std::size_t c = 0; c < y.dim(0); ++c)
    for (std::size_t t = 0; t < T; ++t)
      if (y(c, t) != 0.0) last = std::max(last, t);
  const std::size_t measured = last + 1;
  return {good == 64 && measured == 4093,
          std::to_string(good) + "/64 positions causal, measured receptive field " + std::to_string(measured)};
}

SeriesDataset synthetic_split(std::size_t T, double noise, double weekly, std::uint64_t seed) {
  SynthSpec spec;
  spec.length = T;
  spec.noise_sd = noise;
  spec.weekly_amp = weekly;
  spec.seed = seed;
  return normalize(split_by_ratio(synth_series(spec)));
}

Outcome end_to_end() {
  const auto start = Clock::now();
  PipelineConfig pc;
  pc.pretrain.n_iters = 100;
  const std::vector<std::size_t> h24{24};
  const PipelineResult clean = run_pipeline(synthetic_split(2000, 0.0, 0.0, 0), h24, pc);
  const double test_mse = clean.horizons[0].mse;
  const double elapsed = seconds_since(start);

  // Noisy data, same encoder: recompute the validation objective of every
  // candidate from the stored heads and compare with the chosen pair.
  const SeriesDataset noisy = synthetic_split(2000, 0.1, 0.0, 1);
  const PipelineResult r = run_pipeline(noisy, h24, pc, &clean.encoder);
  const HorizonHeads& heads = r.model.at(24);
  const Tensor reps = encode_series(noisy, r.encoder, r.encoder_config, pc.pad);
  const Matrix time = time_features(TimeIndex::from_timestamps(noisy.timestamps));
  const SplitBounds& s = noisy.split_bounds();
  const ForecastExamples val = build_forecast_examples(reps, noisy.values, 24, &time, s.train_end, s.val_end);
  const Matrix pa = heads.head_a.predict(val.X.leftCols(reps.dim(0))), pb = heads.head_b.predict(val.X);
  const auto objective = [&](double w1) {
    Matrix blended = pb + w1 * (pa - pb);
    return support::objective_loop(blended, val.Y);
  };
  const double chosen = objective(heads.weights.w1);
  bool dominates = true;
  for (int k = 0; k < 17; ++k) dominates = dominates && chosen <= objective((18 - k) / 20.0) + 1e-12;

  return {test_mse < 0.01 && elapsed < 600.0 && dominates,
          "noiseless h=24 test MSE " + num(test_mse) + " in " + num(elapsed) + " s (100 pretraining steps); noisy run w1=" +
              num(heads.weights.w1) + ", val objective " + num(chosen) + (dominates ? " <= " : " > ") +
              "every candidate"};
}

Outcome ablation_ordering() {
  PipelineConfig pc;
  pc.pretrain.n_iters = 20;
  pc.pretrain.max_train_length = 256;
  const std::vector<std::size_t> horizons{24, 168};
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    pc.pretrain.seed = seed;
    const PipelineResult r = run_pipeline(synthetic_split(2000, 0.3, 0.5, seed), horizons, pc);
    const HorizonOutcome& o = r.horizons.back();
    wins += o.mse <= o.baseline_mse;
    detail += (detail.empty() ? "" : " ") + num(o.mse / o.baseline_mse);
  }
  return {wins >= 8, std::to_string(wins) + "/10 seeds with ensemble <= Model A at h=168; MSE ratios " + detail};
}

Outcome determinism() {
  ExperimentConfig cfg;
  SynthSpec spec;
  spec.length = 800;
  spec.noise_sd = 0.2;
  spec.weekly_amp = 0.3;
  cfg.datasets = {{"synthetic", std::nullopt, spec}};
  cfg.split.kind = SplitKind::ratio;
  cfg.horizons = {24, 48};
  cfg.methods = parse_methods("all");
  cfg.seed = 3;
  cfg.pretrain.n_iters = 5;
  cfg.pretrain.max_train_length = 128;
  cfg.boosting.n_trees = 20;

  const auto bytes = [&] {
    const AblationResult r = run_ablation(cfg);
    std::string all = r.report.to_csv() + r.report.to_json_text();
    for (const auto& [stem, ckpt] : r.checkpoints) all += stem + serialize_checkpoint(ckpt);
    return all;
  };
  const std::string first = bytes(), second = bytes(), third = bytes();
  return {first == second && second == third,
          "three runs, " + std::to_string(first.size()) + " bytes of reports and checkpoints" +
              (first == second && second == third ? ", identical" : ", differ")};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient_correctness", gradient_correctness},
      {"loss_oracles", loss_oracles},
      {"collapse_identities", collapse_identities},
      {"ridge_oracle", ridge_oracle},
      {"weight_selection", weight_selection},
      {"causality", causality},
      {"end_to_end_synthetic", end_to_end},
      {"ablation_ordering", ablation_ordering},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
