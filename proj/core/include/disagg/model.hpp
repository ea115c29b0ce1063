#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "disagg/types.hpp"

namespace disagg {

struct ResNetHyper {
  std::size_t n_inputs = 0;  // ICA components (n_classes + 1 in the ICA pipeline)
  std::size_t d_model = 64;
  std::size_t n_blocks = 15;
  std::size_t n_classes = 0;
  // ReLU after the residual add: h <- relu(h + L2(relu(L1(h)))). When false
  // the block is h <- h + L2(relu(L1(h))).
  bool outer_relu = true;
  double threshold = 0.5;

  /// n_in*d + d + n_blocks*2*(d^2 + d) + d*n_classes + n_classes
  std::size_t parameter_count() const noexcept;
  void validate() const;
};

struct ResidualBlock {
  Matrix w1;  // d_model x d_model
  Vector b1;
  Matrix w2;
  Vector b2;
};

struct ResNetParams {
  Matrix proj_w;  // d_model x n_inputs
  Vector proj_b;
  std::vector<ResidualBlock> blocks;
  Matrix head_w;  // n_classes x d_model
  Vector head_b;

  static ResNetParams zeros(const ResNetHyper& h);

  /// Contiguous storage of every tensor, in a fixed order
  /// (proj_w, proj_b, blocks..., head_w, head_b).
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::size_t size() const;
  bool all_finite() const;
};

/// Activations kept by a forward pass for the backward pass.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> block_in;   // h entering each block
  std::vector<Matrix> inner_pre;  // L1(h), before the inner ReLU
  std::vector<Matrix> inner_act;  // relu(L1(h))
  std::vector<Matrix> sum_pre;    // h + L2(...), before the outer ReLU
  Matrix last_hidden;
  Matrix logits;
  Matrix scores;
};

/// Projection + residual feed-forward blocks + sigmoid head.
class ResNetFFN {
 public:
  /// All parameters zero.
  explicit ResNetFFN(ResNetHyper hyper);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static ResNetFFN initialized(ResNetHyper hyper, std::uint64_t seed);

  const ResNetHyper& hyper() const noexcept { return hyper_; }
  ResNetParams& params() noexcept { return params_; }
  const ResNetParams& params() const noexcept { return params_; }
  ResNetParams& grads() noexcept { return grads_; }
  const ResNetParams& grads() const noexcept { return grads_; }

  /// Scores in (0, 1), one row per input row. Throws std::invalid_argument
  /// on a column-count mismatch.
  Matrix forward(const Matrix& X) const;
  ForwardCache forward_cached(const Matrix& X) const;

  /// Writes d(mean BCE)/d(params) into grads(). The gradient is that of the
  /// unclamped loss, i.e. (scores - targets) / (n * n_classes) at the
  /// logits.
  void backward(const ForwardCache& cache, const BinaryMatrix& targets);

  /// Forward + backward; returns the (clamped) BCE loss.
  double loss_and_gradient(const Matrix& X, const BinaryMatrix& targets);

 private:
  void check_input(const Matrix& X) const;

  ResNetHyper hyper_;
  ResNetParams params_;
  ResNetParams grads_;
};

inline constexpr double kScoreClamp = 1e-7;

/// Mean over samples and classes of -[y log s + (1-y) log(1-s)], with s
/// clamped to [1e-7, 1 - 1e-7].
double bce_loss(const Matrix& scores, const BinaryMatrix& targets);

/// scores >= threshold, element-wise.
BinaryMatrix predict(const Matrix& scores, double threshold = 0.5);

nlohmann::json to_json(const ResNetFFN& model);
ResNetFFN resnet_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Gradient check

struct GradientCheckOptions {
  std::size_t n_params = 200;
  double step = 1e-5;
  // Denominator floor for the relative error, so parameters with vanishing
  // gradients (dead ReLUs) do not divide roundoff by ~0.
  double abs_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  // Parameters whose +/- step flipped a ReLU; central differences are
  // invalid across the kink, so another parameter is drawn instead.
  std::size_t skipped = 0;
};

/// Fills model.grads() for (X, Y).
using GradientFn = std::function<void(ResNetFFN&, const Matrix&, const BinaryMatrix&)>;

/// Compares the analytic gradient (model backward pass unless `analytic` is
/// given) with central differences over randomly chosen parameters.
GradientCheckResult gradient_check(const ResNetFFN& model, const Matrix& X, const BinaryMatrix& Y,
                                   const GradientCheckOptions& opts = {},
                                   const GradientFn& analytic = {});

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::size_t patience = 10;  // early stop on validation loss; 0 disables
  std::uint64_t seed = 0;     // batch shuffling

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_f1 = 0.0;
  double val_f1 = 0.0;
};

struct TrainResult {
  ResNetFFN model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

struct LabelledSet {
  const Matrix& X;
  const BinaryMatrix& Y;
};

/// Mini-batch Adam on the BCE loss. When a validation set is given the
/// parameters of the best validation epoch are returned and training stops
/// after `patience` epochs without improvement. Throws NumericalError on a
/// non-finite loss or parameter, naming the epoch and batch.
TrainResult train(ResNetFFN model, LabelledSet train_set, std::optional<LabelledSet> val_set,
                  const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// k-NN multi-label baseline

struct KnnModel {
  Matrix features;
  BinaryMatrix labels;
  std::size_t k = 5;
};

/// Per class, the fraction of the k nearest (Euclidean) training rows that
/// carry the label. Distance ties resolve to the lower training index.
Matrix knn_scores(const KnnModel& model, const Matrix& queries);

/// Label c is predicted iff more than k/2 neighbours carry it.
BinaryMatrix knn_predict(const KnnModel& model, const Matrix& queries);

std::vector<std::uint8_t> knn_predict(const Matrix& train_features,
                                      const BinaryMatrix& train_labels,
                                      std::span<const double> query, std::size_t k);

nlohmann::json to_json(const KnnModel& model);
KnnModel knn_from_json(const nlohmann::json& j);

}  // namespace disagg
