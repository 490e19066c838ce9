#pragma once

// One-dimensional Fully Convolutional Network for time series classification:
//   3 x [conv (stride 1, "same" zero padding) -> batch norm -> ReLU]
//   -> global average pooling over time -> dense -> softmax
// with exact backpropagation, Adam and a cross-entropy trainer. Everything runs
// in 64-bit floating point.

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"
#include "errors.hpp"

namespace tsct {

/// Layer sizes and batch-norm constants. The default is the 128/256/128 network
/// with kernels 8/5/3; tests use smaller filter counts.
struct Architecture {
  std::array<std::size_t, 3> filters{128, 256, 128};
  std::array<std::size_t, 3> kernels{8, 5, 3};
  double bn_epsilon = 1e-3;
  double bn_momentum = 0.99;

  std::size_t in_channels(std::size_t block) const { return block == 0 ? 1 : filters[block - 1]; }
  std::size_t feature_count() const { return filters[2]; }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ConvBlock {
  /// out x (in * kernel); column c_in * kernel + k holds tap k of input channel c_in.
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
  std::size_t kernel = 0;
};

struct FcnModel {
  Architecture arch;
  std::size_t class_count = 0;
  std::array<ConvBlock, 3> blocks;
  /// features x classes
  Eigen::MatrixXd head_weight;
  Eigen::VectorXd head_bias;

  /// Trainable tensors in a fixed order: per block weight, bias, gamma, beta; then head weight, head bias.
  std::vector<std::span<double>> trainable() {
    std::vector<std::span<double>> out;
    for (auto& b : blocks) {
      out.emplace_back(b.weight.data(), static_cast<std::size_t>(b.weight.size()));
      for (auto* t : {&b.bias, &b.gamma, &b.beta}) { out.emplace_back(t->data(), static_cast<std::size_t>(t->size())); }
    }
    out.emplace_back(head_weight.data(), static_cast<std::size_t>(head_weight.size()));
    out.emplace_back(head_bias.data(), static_cast<std::size_t>(head_bias.size()));
    return out;
  }
};

struct BlockGradients {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
};

struct FcnGradients {
  std::array<BlockGradients, 3> blocks;
  Eigen::MatrixXd head_weight;
  Eigen::VectorXd head_bias;

  /// Same order as FcnModel::trainable().
  std::vector<std::span<double>> tensors() {
    std::vector<std::span<double>> out;
    for (auto& b : blocks) {
      out.emplace_back(b.weight.data(), static_cast<std::size_t>(b.weight.size()));
      for (auto* t : {&b.bias, &b.gamma, &b.beta}) { out.emplace_back(t->data(), static_cast<std::size_t>(t->size())); }
    }
    out.emplace_back(head_weight.data(), static_cast<std::size_t>(head_weight.size()));
    out.emplace_back(head_bias.data(), static_cast<std::size_t>(head_bias.size()));
    return out;
  }
};

enum class Mode { train, eval };

// ---------------------------------------------------------------------------
// Initialisation

/// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
inline double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

namespace detail {

  inline void fill_uniform(Eigen::MatrixXd& m, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    // row-major draw order keeps the stream independent of the storage order
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) { m(r, c) = dist(rng); }
    }
  }

  inline void init_head(FcnModel& model, std::size_t class_count, std::mt19937_64& rng) {
    const std::size_t features = model.arch.feature_count();
    model.class_count = class_count;
    model.head_weight.resize(static_cast<Eigen::Index>(features), static_cast<Eigen::Index>(class_count));
    fill_uniform(model.head_weight, glorot_bound(features, class_count), rng);
    model.head_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(class_count));
  }

} // namespace detail

/// Fresh network: Glorot-uniform conv and dense weights, zero biases, identity batch norm.
inline FcnModel build_model(std::size_t class_count, std::uint64_t seed, const Architecture& arch = {}) {
  if (class_count < 2) { throw DataError("a classifier needs at least two classes"); }
  FcnModel model;
  model.arch = arch;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < 3; ++l) {
    auto& b = model.blocks[l];
    const auto in = arch.in_channels(l);
    const auto out = arch.filters[l];
    const auto k = arch.kernels[l];
    if (in == 0 || out == 0 || k == 0) { throw PreconditionError("architecture sizes must be positive"); }
    b.kernel = k;
    b.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in * k));
    detail::fill_uniform(b.weight, glorot_bound(in * k, out * k), rng);
    const auto n = static_cast<Eigen::Index>(out);
    b.bias = Eigen::VectorXd::Zero(n);
    b.gamma = Eigen::VectorXd::Ones(n);
    b.beta = Eigen::VectorXd::Zero(n);
    b.running_mean = Eigen::VectorXd::Zero(n);
    b.running_var = Eigen::VectorXd::Ones(n);
  }
  detail::init_head(model, class_count, rng);
  return model;
}

/// Bitwise equality of every tensor and the hyperparameters.
inline bool identical(const FcnModel& a, const FcnModel& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() &&
           std::equal(x.data(), x.data() + x.size(), y.data(),
                      [](double p, double q) { return std::bit_cast<std::uint64_t>(p) == std::bit_cast<std::uint64_t>(q); });
  };
  if (!(a.arch == b.arch) || a.class_count != b.class_count) { return false; }
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& x = a.blocks[l];
    const auto& y = b.blocks[l];
    if (x.kernel != y.kernel || !same(x.weight, y.weight) || !same(x.bias, y.bias) || !same(x.gamma, y.gamma) ||
        !same(x.beta, y.beta) || !same(x.running_mean, y.running_mean) || !same(x.running_var, y.running_var)) {
      return false;
    }
  }
  return same(a.head_weight, b.head_weight) && same(a.head_bias, b.head_bias);
}

// ---------------------------------------------------------------------------
// Layer primitives. Activations are channels x (batch * length) matrices whose
// column b * length + t holds time step t of sample b.

namespace ops {

  using Eigen::Index;

  /// Left zero padding for a kernel; the remainder goes on the right (8 -> 4/3, 5 -> 2/2, 3 -> 1/1).
  inline Index pad_left(Index kernel) { return kernel / 2; }

  inline Eigen::MatrixXd im2col(const Eigen::MatrixXd& x, Index length, Index kernel) {
    const Index channels = x.rows();
    const Index columns = x.cols();
    const Index pad = pad_left(kernel);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(channels * kernel, columns);
    for (Index col = 0; col < columns; ++col) {
      const Index base = col - col % length;
      const Index t = col % length;
      for (Index k = 0; k < kernel; ++k) {
        const Index src = t + k - pad;
        if (src < 0 || src >= length) { continue; }
        for (Index c = 0; c < channels; ++c) { out(c * kernel + k, col) = x(c, base + src); }
      }
    }
    return out;
  }

  /// Adjoint of im2col.
  inline Eigen::MatrixXd col2im(const Eigen::MatrixXd& cols, Index channels, Index length, Index kernel) {
    const Index columns = cols.cols();
    const Index pad = pad_left(kernel);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(channels, columns);
    for (Index col = 0; col < columns; ++col) {
      const Index base = col - col % length;
      const Index t = col % length;
      for (Index k = 0; k < kernel; ++k) {
        const Index src = t + k - pad;
        if (src < 0 || src >= length) { continue; }
        for (Index c = 0; c < channels; ++c) { out(c, base + src) += cols(c * kernel + k, col); }
      }
    }
    return out;
  }

  /// Stride-1 convolution with "same" zero padding: output length equals input length.
  inline Eigen::MatrixXd conv_forward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& weight,
                                      const Eigen::VectorXd& bias, Index length, Index kernel) {
    Eigen::MatrixXd z = weight * im2col(x, length, kernel);
    z.colwise() += bias;
    return z;
  }

  struct BatchNormCache {
    Eigen::VectorXd mean;
    Eigen::VectorXd var;
    Eigen::ArrayXd inv_std;
    Eigen::MatrixXd xhat;
  };

  /// Normalise each row with its own batch statistics (population variance).
  inline BatchNormCache batch_norm_train(const Eigen::MatrixXd& z, double epsilon) {
    BatchNormCache c;
    c.mean = z.rowwise().mean();
    Eigen::MatrixXd centered = z.colwise() - c.mean;
    c.var = centered.array().square().rowwise().mean().matrix();
    c.inv_std = (c.var.array() + epsilon).rsqrt();
    c.xhat = (centered.array().colwise() * c.inv_std).matrix();
    return c;
  }

  inline Eigen::MatrixXd affine_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& scale, const Eigen::VectorXd& shift) {
    Eigen::MatrixXd y = (x.array().colwise() * scale.array()).matrix();
    y.colwise() += shift;
    return y;
  }

  /// Per-sample mean over time: channels x batch.
  inline Eigen::MatrixXd global_average_pool(const Eigen::MatrixXd& a, Index length) {
    const Index batch = a.cols() / length;
    Eigen::MatrixXd g(a.rows(), batch);
    for (Index b = 0; b < batch; ++b) { g.col(b) = a.middleCols(b * length, length).rowwise().mean(); }
    return g;
  }

  /// Column-wise softmax of a classes x batch logit matrix.
  inline Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p(logits.rows(), logits.cols());
    for (Index b = 0; b < logits.cols(); ++b) {
      const double mx = logits.col(b).maxCoeff();
      Eigen::ArrayXd e = (logits.col(b).array() - mx).exp();
      p.col(b) = (e / e.sum()).matrix();
    }
    return p;
  }

  /// Argmax with ties to the lowest index.
  inline Label argmax(const Eigen::Ref<const Eigen::VectorXd>& v) {
    Index best = 0;
    for (Index i = 1; i < v.size(); ++i) {
      if (v(i) > v(best)) { best = i; }
    }
    return static_cast<Label>(best);
  }

} // namespace ops

namespace detail {

  inline std::size_t common_length(std::span<const TimeSeries> batch) {
    if (batch.empty()) { throw PreconditionError("empty batch"); }
    const std::size_t length = batch.front().size();
    for (const auto& s : batch) {
      if (s.size() != length) { throw PreconditionError("all series in a batch must share one length"); }
    }
    return length;
  }

  inline Eigen::MatrixXd pack(std::span<const TimeSeries> batch, std::size_t length) {
    Eigen::MatrixXd x(1, static_cast<Eigen::Index>(batch.size() * length));
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (std::size_t t = 0; t < length; ++t) { x(0, static_cast<Eigen::Index>(b * length + t)) = batch[b][t]; }
    }
    return x;
  }

  inline void check_model(const FcnModel& model) {
    if (model.class_count < 2 || model.head_weight.cols() != static_cast<Eigen::Index>(model.class_count)) {
      throw PreconditionError("model head does not match its class count");
    }
  }

} // namespace detail

/// Batch statistics produced by a train-mode pass, one entry per block.
struct BatchStatistics {
  std::array<Eigen::VectorXd, 3> mean;
  std::array<Eigen::VectorXd, 3> var;
};

/// Fold batch statistics into the running estimates: new = momentum * old + (1 - momentum) * batch.
inline void update_running_statistics(FcnModel& model, const BatchStatistics& stats) {
  const double m = model.arch.bn_momentum;
  for (std::size_t l = 0; l < 3; ++l) {
    auto& b = model.blocks[l];
    b.running_mean = m * b.running_mean + (1.0 - m) * stats.mean[l];
    b.running_var = m * b.running_var + (1.0 - m) * stats.var[l];
  }
}

namespace detail {

  struct ForwardTrace {
    std::size_t length = 0;
    std::array<Eigen::MatrixXd, 3> cols;
    std::array<ops::BatchNormCache, 3> bn;
    std::array<Eigen::MatrixXd, 3> pre_relu;
    Eigen::MatrixXd pooled;
    Eigen::MatrixXd logits;
  };

  inline ForwardTrace forward_batch_stats(const FcnModel& model, std::span<const TimeSeries> batch) {
    ForwardTrace tr;
    tr.length = common_length(batch);
    const auto length = static_cast<Eigen::Index>(tr.length);
    Eigen::MatrixXd x = pack(batch, tr.length);
    for (std::size_t l = 0; l < 3; ++l) {
      const auto& blk = model.blocks[l];
      tr.cols[l] = ops::im2col(x, length, static_cast<Eigen::Index>(blk.kernel));
      Eigen::MatrixXd z = blk.weight * tr.cols[l];
      z.colwise() += blk.bias;
      tr.bn[l] = ops::batch_norm_train(z, model.arch.bn_epsilon);
      tr.pre_relu[l] = ops::affine_rows(tr.bn[l].xhat, blk.gamma, blk.beta);
      x = tr.pre_relu[l].cwiseMax(0.0);
    }
    tr.pooled = ops::global_average_pool(x, length);
    tr.logits = model.head_weight.transpose() * tr.pooled;
    tr.logits.colwise() += model.head_bias;
    return tr;
  }

  inline Eigen::MatrixXd logits_eval(const FcnModel& model, std::span<const TimeSeries> batch) {
    const std::size_t len = common_length(batch);
    const auto length = static_cast<Eigen::Index>(len);
    Eigen::MatrixXd x = pack(batch, len);
    for (const auto& blk : model.blocks) {
      Eigen::MatrixXd z = ops::conv_forward(x, blk.weight, blk.bias, length, static_cast<Eigen::Index>(blk.kernel));
      const Eigen::VectorXd scale =
          (blk.gamma.array() * (blk.running_var.array() + model.arch.bn_epsilon).rsqrt()).matrix();
      const Eigen::VectorXd shift = blk.beta - (scale.array() * blk.running_mean.array()).matrix();
      x = ops::affine_rows(z, scale, shift).cwiseMax(0.0);
    }
    Eigen::MatrixXd logits = model.head_weight.transpose() * ops::global_average_pool(x, length);
    logits.colwise() += model.head_bias;
    return logits;
  }

} // namespace detail

/// Class probabilities, batch x classes. Train mode normalises with batch
/// statistics and folds them into the running estimates; eval mode uses the
/// running estimates and leaves the model untouched.
inline Eigen::MatrixXd forward(FcnModel& model, std::span<const TimeSeries> batch, Mode mode) {
  detail::check_model(model);
  if (mode == Mode::eval) { return ops::softmax_columns(detail::logits_eval(model, batch)).transpose(); }
  auto tr = detail::forward_batch_stats(model, batch);
  BatchStatistics stats;
  for (std::size_t l = 0; l < 3; ++l) {
    stats.mean[l] = tr.bn[l].mean;
    stats.var[l] = tr.bn[l].var;
  }
  update_running_statistics(model, stats);
  return ops::softmax_columns(tr.logits).transpose();
}

/// Eval-mode probabilities, batch x classes.
inline Eigen::MatrixXd predict_proba(const FcnModel& model, std::span<const TimeSeries> batch) {
  detail::check_model(model);
  return ops::softmax_columns(detail::logits_eval(model, batch)).transpose();
}

struct LossAndGradients {
  double loss = 0.0;
  FcnGradients gradients;
  BatchStatistics stats;
  /// Samples whose train-mode argmax equals the label.
  std::size_t correct = 0;
};

/// Mean cross-entropy of a train-mode pass and its exact gradient with respect
/// to every trainable tensor. The model is not modified; the batch statistics
/// are returned for the caller to fold into the running estimates.
inline LossAndGradients loss_and_gradients(const FcnModel& model, std::span<const LabeledSeries> batch) {
  using Eigen::Index;
  detail::check_model(model);
  std::vector<TimeSeries> series = series_of(batch);
  for (const auto& item : batch) {
    if (item.label >= model.class_count) { throw PreconditionError("label out of range for the model head"); }
  }
  auto tr = detail::forward_batch_stats(model, series);
  const auto length = static_cast<Index>(tr.length);
  const auto n = static_cast<Index>(batch.size());

  LossAndGradients out;
  Eigen::MatrixXd dlogits = ops::softmax_columns(tr.logits);
  for (Index b = 0; b < n; ++b) {
    const auto y = static_cast<Index>(batch[static_cast<std::size_t>(b)].label);
    const double mx = tr.logits.col(b).maxCoeff();
    const double lse = mx + std::log((tr.logits.col(b).array() - mx).exp().sum());
    out.loss += lse - tr.logits(y, b);
    if (ops::argmax(tr.logits.col(b)) == static_cast<Label>(y)) { ++out.correct; }
    dlogits(y, b) -= 1.0;
  }
  out.loss /= static_cast<double>(n);
  dlogits /= static_cast<double>(n);

  auto& g = out.gradients;
  g.head_weight = tr.pooled * dlogits.transpose();
  g.head_bias = dlogits.rowwise().sum();
  const Eigen::MatrixXd dpooled = model.head_weight * dlogits;

  Eigen::MatrixXd dact(dpooled.rows(), n * length);
  for (Index b = 0; b < n; ++b) {
    dact.middleCols(b * length, length) = (dpooled.col(b) / static_cast<double>(length)).replicate(1, length);
  }

  for (std::size_t li = 3; li-- > 0;) {
    const auto& blk = model.blocks[li];
    const auto& bn = tr.bn[li];
    auto& gb = g.blocks[li];
    const double count = static_cast<double>(dact.cols());

    Eigen::MatrixXd dy = (tr.pre_relu[li].array() > 0.0).select(dact, 0.0);
    gb.gamma = (dy.array() * bn.xhat.array()).rowwise().sum().matrix();
    gb.beta = dy.rowwise().sum();

    Eigen::ArrayXXd dxhat = dy.array().colwise() * blk.gamma.array();
    const Eigen::ArrayXd sum_dxhat = dxhat.rowwise().sum();
    const Eigen::ArrayXd sum_dxhat_xhat = (dxhat * bn.xhat.array()).rowwise().sum();
    Eigen::ArrayXXd dz = count * dxhat;
    dz.colwise() -= sum_dxhat;
    dz -= bn.xhat.array().colwise() * sum_dxhat_xhat;
    dz.colwise() *= bn.inv_std / count;
    const Eigen::MatrixXd dzm = dz.matrix();

    gb.weight = dzm * tr.cols[li].transpose();
    gb.bias = dzm.rowwise().sum();
    if (li > 0) {
      const Eigen::MatrixXd dcols = blk.weight.transpose() * dzm;
      dact = ops::col2im(dcols, static_cast<Index>(model.arch.in_channels(li)), length,
                         static_cast<Index>(blk.kernel));
    }
  }
  for (std::size_t l = 0; l < 3; ++l) {
    out.stats.mean[l] = tr.bn[l].mean;
    out.stats.var[l] = tr.bn[l].var;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimisation

struct TrainConfig {
  std::size_t epochs = 2000;
  std::size_t batch_size = 16;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

struct AdamState {
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;
  std::size_t step = 0;
};

/// Zero moments shaped like the model's trainable tensors.
inline AdamState make_adam_state(FcnModel& model) {
  AdamState s;
  for (auto t : model.trainable()) {
    s.m.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.size())));
    s.v.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.size())));
  }
  return s;
}

/// One bias-corrected Adam update. Advances state.step before applying it.
inline void adam_step(FcnModel& model, FcnGradients& gradients, AdamState& state, const TrainConfig& config) {
  auto params = model.trainable();
  auto grads = gradients.tensors();
  if (params.size() != state.m.size() || grads.size() != params.size()) {
    throw PreconditionError("optimizer state does not match the model");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].size() != params[k].size() || static_cast<std::size_t>(state.m[k].size()) != params[k].size()) {
      throw PreconditionError("gradient shape mismatch");
    }
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double gi = grads[k][i];
      m(ii) = config.beta1 * m(ii) + (1.0 - config.beta1) * gi;
      v(ii) = config.beta2 * v(ii) + (1.0 - config.beta2) * gi * gi;
      const double mhat = m(ii) / c1;
      const double vhat = v(ii) / c2;
      params[k][i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

struct EpochRecord {
  double loss;
  double accuracy;
  double seconds;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  /// First epoch (1-based) whose train accuracy reaches `threshold`.
  std::optional<std::size_t> epochs_to_accuracy(double threshold) const {
    for (std::size_t e = 0; e < epochs.size(); ++e) {
      if (epochs[e].accuracy >= threshold) { return e + 1; }
    }
    return std::nullopt;
  }
};

struct TrainResult {
  /// Weights after the epoch with the lowest train loss.
  FcnModel model;
  TrainHistory history;
  /// 1-based epoch of `model`; 0 when no epoch ran.
  std::size_t best_epoch = 0;
};

/// Batch boundaries for n samples. A trailing batch of one sample joins the previous batch.
inline std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size) {
  if (batch_size == 0) { throw PreconditionError("batch size must be positive"); }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t begin = 0; begin < n; begin += batch_size) { out.emplace_back(begin, std::min(n, begin + batch_size)); }
  if (out.size() >= 2 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

/// Mini-batch Adam on mean cross-entropy. Each epoch reshuffles with a generator
/// seeded from config.seed. Returns the lowest-train-loss checkpoint.
inline TrainResult train(FcnModel model, std::span<const LabeledSeries> split, const TrainConfig& config) {
  if (split.empty()) { throw PreconditionError("cannot train on an empty split"); }
  detail::check_model(model);
  const std::size_t length = split.front().series.size();
  for (const auto& item : split) {
    if (item.series.size() != length) { throw PreconditionError("training series must share one length"); }
    if (item.label >= model.class_count) { throw PreconditionError("label out of range for the model head"); }
  }

  TrainResult result{model, {}, 0};
  if (config.epochs == 0) { return result; }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(split.size());
  for (std::size_t i = 0; i < order.size(); ++i) { order[i] = i; }
  const auto ranges = batch_ranges(split.size(), config.batch_size);
  AdamState adam = make_adam_state(model);
  double best_loss = std::numeric_limits<double>::infinity();

  std::vector<LabeledSeries> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (auto [begin, end] : ranges) {
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) { batch.push_back(split[order[i]]); }
      auto step = loss_and_gradients(model, batch);
      loss_sum += step.loss * static_cast<double>(batch.size());
      correct += step.correct;
      adam_step(model, step.gradients, adam, config);
      update_running_statistics(model, step.stats);
    }
    const double n = static_cast<double>(split.size());
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.epochs.push_back({loss_sum / n, static_cast<double>(correct) / n, seconds});
    if (loss_sum / n < best_loss) {
      best_loss = loss_sum / n;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

/// Eval-mode predicted labels, processed in chunks of `chunk` series.
inline std::vector<Label> predict(const FcnModel& model, std::span<const TimeSeries> series, std::size_t chunk = 64) {
  std::vector<Label> out;
  out.reserve(series.size());
  for (std::size_t begin = 0; begin < series.size(); begin += chunk) {
    const auto part = series.subspan(begin, std::min(chunk, series.size() - begin));
    const Eigen::MatrixXd p = predict_proba(model, part);
    for (Eigen::Index b = 0; b < p.rows(); ++b) { out.push_back(ops::argmax(p.row(b).transpose())); }
  }
  return out;
}

/// Fraction of correctly classified samples under eval-mode inference.
inline double evaluate(const FcnModel& model, std::span<const LabeledSeries> split) {
  if (split.empty()) { throw PreconditionError("cannot evaluate on an empty split"); }
  const auto series = series_of(split);
  const auto labels = predict(model, series);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (labels[i] == split[i].label) { ++correct; }
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

} // namespace tsct
