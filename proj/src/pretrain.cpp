#include "tsvforge/pretrain.hpp"

#include <cmath>
#include <ostream>

#include <json.hpp>

#include "tsvforge/error.hpp"
#include "tsvforge/ops.hpp"

namespace tsvforge {

namespace {

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Tensor instance(const Tensor& batch, std::size_t b, std::size_t begin, std::size_t end) {
  const std::size_t dims = batch.dim(1);
  Tensor out({dims, end - begin});
  for (std::size_t d = 0; d < dims; ++d)
    for (std::size_t t = begin; t < end; ++t) out(d, t - begin) = batch(b, d, t);
  return out;
}

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = uniform(rng, -bound, bound);
  return t;
}

} // namespace

void PretrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (n_iters < 1) throw ConfigError("n_iters must be >= 1");
  if (max_train_length < 2) throw ConfigError("max_train_length must be >= 2");
  if (msm) msm->validate();
}

CropWindow sample_crops(std::size_t length, Rng& rng) {
  if (length < 2) throw ContractViolation("sample_crops needs T >= 2");
  CropWindow w;
  const std::size_t overlap = uniform_index(rng, 1, length);
  w.a2 = uniform_index(rng, 0, length - overlap);
  w.b1 = w.a2 + overlap;
  w.a1 = uniform_index(rng, 0, w.a2);
  w.b2 = uniform_index(rng, w.b1, length);
  return w;
}

Adam::Adam(double lr, std::span<const Tensor* const> params, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const Tensor* p : params) {
    m_.emplace_back(p->shape());
    v_.emplace_back(p->shape());
  }
}

void Adam::step(std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ContractViolation("optimizer parameter count changed between steps");
  ++steps_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k]->data();
    const auto g = grads[k]->data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / correction1) / (std::sqrt(v[i] / correction2) + eps_);
    }
  }
}

MsmDecoderParams MsmDecoderParams::initialize(std::size_t in_dim, std::size_t hidden1, std::size_t hidden2,
                                              std::size_t out_dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xDEC));
  auto bound = [](std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
  MsmDecoderParams p;
  p.w1 = uniform_tensor({hidden1, in_dim}, bound(in_dim), rng);
  p.b1 = uniform_tensor({hidden1}, bound(in_dim), rng);
  p.w2 = uniform_tensor({hidden2, hidden1}, bound(hidden1), rng);
  p.b2 = uniform_tensor({hidden2}, bound(hidden1), rng);
  p.w3 = uniform_tensor({out_dim, hidden2}, bound(hidden2), rng);
  p.b3 = uniform_tensor({out_dim}, bound(hidden2), rng);
  return p;
}

std::vector<std::pair<std::string, Tensor*>> MsmDecoderParams::named() {
  return {{"decoder.w1", &w1}, {"decoder.b1", &b1}, {"decoder.w2", &w2},
          {"decoder.b2", &b2}, {"decoder.w3", &w3}, {"decoder.b3", &b3}};
}

Pretrainer::Pretrainer(EncoderConfig encoder, PretrainConfig config, EncoderParams initial)
    : encoder_(std::move(encoder)), config_(std::move(config)), params_(std::move(initial)),
      rng_(derive_seed(config_.seed, 0x57E9)) {
  encoder_.validate();
  config_.validate();
  if (config_.msm)
    decoder_ = MsmDecoderParams::initialize(encoder_.output_dim, config_.msm->decoder_hidden1,
                                            config_.msm->decoder_hidden2, encoder_.input_dim, config_.seed);
  const auto params = trainable();
  std::vector<const Tensor*> view(params.begin(), params.end());
  optimizer_.emplace(config_.lr, view);
}

std::vector<Tensor*> Pretrainer::trainable() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : params_.named()) out.push_back(t);
  if (decoder_)
    for (auto& [name, t] : decoder_->named()) out.push_back(t);
  return out;
}

StepResult Pretrainer::train_step(const Tensor& batch) {
  if (batch.rank() != 3 || batch.dim(1) != encoder_.input_dim)
    throw DimensionError("train_step expects [B x " + std::to_string(encoder_.input_dim) + " x T], got " +
                         to_string(batch.shape()));
  const std::size_t batch_size = batch.dim(0);
  const CropWindow crop = sample_crops(batch.dim(2), rng_);

  Tape tape;
  const EncoderVars vars = EncoderVars::record(tape, params_);
  std::vector<Var> decoder_vars;
  if (decoder_)
    for (auto& [name, t] : decoder_->named()) decoder_vars.push_back(tape.parameter(*t));

  std::vector<Var> overlap1, overlap2, msm_terms;
  for (std::size_t b = 0; b < batch_size; ++b) {
    const Tensor view1 = instance(batch, b, crop.a1, crop.b1);
    const Tensor view2 = instance(batch, b, crop.a2, crop.b2);
    const auto mask1 = draw_timestamp_mask(view1.dim(1), encoder_.mask_prob, rng_());
    const auto mask2 = draw_timestamp_mask(view2.dim(1), encoder_.mask_prob, rng_());
    const Var out1 = encode_on_tape(tape, vars, tape.constant(view1), &mask1);
    const Var out2 = encode_on_tape(tape, vars, tape.constant(view2), &mask2);
    overlap1.push_back(ad::slice_time(tape, out1, crop.a2 - crop.a1, crop.b1 - crop.a1));
    overlap2.push_back(ad::slice_time(tape, out2, 0, crop.b1 - crop.a2));

    if (decoder_) {
      const auto& d = decoder_vars;
      for (const auto& [out, view, mask] : {std::tie(out1, view1, mask1), std::tie(out2, view2, mask2)}) {
        Var h = ad::gelu(tape, ad::linear_time(tape, d[0], d[1], out));
        h = ad::gelu(tape, ad::linear_time(tape, d[2], d[3], h));
        const Var recon = ad::linear_time(tape, d[4], d[5], h);
        msm_terms.push_back(ad::msm_loss(tape, view, recon, mask));
      }
    }
  }

  const Var r = ad::stack_btc(tape, overlap1);
  const Var r_prime = ad::stack_btc(tape, overlap2);
  const Var contrastive = ad::hierarchical_loss(tape, r, r_prime);

  StepResult result;
  result.contrastive = tape.value(contrastive).item();
  Var loss = contrastive;
  if (decoder_) {
    Var msm = msm_terms.front();
    for (std::size_t i = 1; i < msm_terms.size(); ++i) msm = ad::add(tape, msm, msm_terms[i]);
    msm = ad::scale(tape, msm, 1.0 / static_cast<double>(msm_terms.size()));
    result.lambda = lambda_schedule(step_, static_cast<long>(config_.n_iters), *config_.msm);
    result.msm = tape.value(msm).item();
    loss = ad::combined_loss(tape, contrastive, msm, result.lambda);
  }
  result.loss = tape.value(loss).item();
  if (!std::isfinite(result.loss))
    throw DivergenceError("non-finite training loss at step " + std::to_string(step_) +
                          " (contrastive=" + std::to_string(result.contrastive) +
                          ", msm=" + std::to_string(result.msm) + ")");

  const Gradients grads = tape.backward(loss);
  std::vector<Var> order = vars.ordered();
  order.insert(order.end(), decoder_vars.begin(), decoder_vars.end());
  std::vector<const Tensor*> grad_ptrs;
  for (Var v : order) grad_ptrs.push_back(&grads[v]);
  optimizer_->step(trainable(), grad_ptrs);
  ++step_;
  return result;
}

Tensor sample_windows(const Tensor& series, std::size_t batch, std::size_t window, Rng& rng) {
  if (series.rank() != 2 || window < 1 || window > series.dim(1))
    throw ContractViolation("cannot draw windows of length " + std::to_string(window) + " from " +
                            to_string(series.shape()));
  const std::size_t dims = series.dim(0);
  Tensor out({batch, dims, window});
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t start = uniform_index(rng, 0, series.dim(1) - window);
    for (std::size_t d = 0; d < dims; ++d)
      for (std::size_t t = 0; t < window; ++t) out(b, d, t) = series(d, start + t);
  }
  return out;
}

PretrainResult pretrain(const SeriesDataset& dataset, const EncoderConfig& encoder, const PretrainConfig& config) {
  config.validate();
  if (dataset.dims() != encoder.input_dim)
    throw DimensionError("dataset has " + std::to_string(dataset.dims()) + " channels, encoder expects " +
                         std::to_string(encoder.input_dim));
  const std::size_t train_end = dataset.split_bounds().train_end;
  if (train_end < 2) throw DataError("training split is shorter than 2 steps");
  const Tensor train = ops::slice_time(dataset.values, 0, train_end);

  Pretrainer trainer(encoder, config, EncoderParams::initialize(encoder, config.seed));
  Rng window_rng(derive_seed(config.seed, 0xBA7C));
  const std::size_t window = std::min(config.max_train_length, train_end);

  PretrainResult result;
  for (std::size_t it = 0; it < config.n_iters; ++it) {
    const Tensor batch = sample_windows(train, config.batch_size, window, window_rng);
    const StepResult step = trainer.train_step(batch);
    result.log.push_back({static_cast<long>(it), step.loss, step.lambda});
  }
  result.params = trainer.params();
  return result;
}

void write_training_log(std::ostream& out, std::span<const TrainingLogEntry> log) {
  for (const auto& e : log)
    out << nlohmann::json{{"step", e.step}, {"loss", e.loss}, {"lambda", e.lambda}}.dump() << '\n';
}

} // namespace tsvforge
