#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "disagg/errors.hpp"
#include "disagg/eval.hpp"
#include "disagg/model.hpp"
#include "disagg/rng.hpp"

namespace disagg {
namespace {

// First and second moment estimates, laid out like ResNetParams::tensors().
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  explicit AdamState(const ResNetParams& p) {
    for (const auto& t : p.tensors()) {
      m.emplace_back(t.size(), 0.0);
      v.emplace_back(t.size(), 0.0);
    }
  }

  void apply(ResNetParams& params, const ResNetParams& grads, const TrainConfig& cfg) {
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    auto p = params.tensors();
    const auto g = grads.tensors();
    for (std::size_t t = 0; t < p.size(); ++t) {
      for (std::size_t i = 0; i < p[t].size(); ++i) {
        const double gi = g[t][i];
        m[t][i] = cfg.beta1 * m[t][i] + (1.0 - cfg.beta1) * gi;
        v[t][i] = cfg.beta2 * v[t][i] + (1.0 - cfg.beta2) * gi * gi;
        const double m_hat = m[t][i] / bc1;
        const double v_hat = v[t][i] / bc2;
        p[t][i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      }
    }
  }
};

template <typename M>
M gather_rows(const M& src, std::span<const std::size_t> rows) {
  M out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0) ||
      !(epsilon > 0.0) || batch_size == 0 || epochs == 0) {
    throw std::invalid_argument(
        "TrainConfig: need lr >= 0, betas in (0,1), epsilon > 0, batch_size and epochs > 0");
  }
}

TrainResult train(ResNetFFN model, LabelledSet train_set, std::optional<LabelledSet> val_set,
                  const TrainConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(train_set.X.rows());
  if (n == 0 || train_set.Y.rows() != train_set.X.rows()) {
    throw std::invalid_argument("train: empty training set or label/feature row mismatch");
  }
  if (static_cast<std::size_t>(train_set.Y.cols()) != model.hyper().n_classes) {
    throw std::invalid_argument("train: label width does not match n_classes");
  }

  Rng rng(derive_seed(cfg.seed, "batching"));
  AdamState adam(model.params());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result{model, {}, 0, false};
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  const double threshold = model.hyper().threshold;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::span<const std::size_t> rows(order.data() + start,
                                              std::min(cfg.batch_size, n - start));
      const Matrix xb = gather_rows(train_set.X, rows);
      const BinaryMatrix yb = gather_rows(train_set.Y, rows);
      const double loss = model.loss_and_gradient(xb, yb);
      if (!std::isfinite(loss)) {
        throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index));
      }
      adam.apply(model.params(), model.grads(), cfg);
      if (!model.params().all_finite()) {
        throw NumericalError("train: non-finite parameter after epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index));
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const Matrix train_scores = model.forward(train_set.X);
    rec.train_loss = bce_loss(train_scores, train_set.Y);
    rec.train_f1 = f1_samples(train_set.Y, predict(train_scores, threshold));
    if (val_set) {
      const Matrix val_scores = model.forward(val_set->X);
      rec.val_loss = bce_loss(val_scores, val_set->Y);
      rec.val_f1 = f1_samples(val_set->Y, predict(val_scores, threshold));
    }
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw NumericalError("train: non-finite epoch loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(rec);

    if (!val_set) {
      result.best_epoch = epoch;
      continue;
    }
    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  if (!val_set) result.model = std::move(model);
  return result;
}

}  // namespace disagg
