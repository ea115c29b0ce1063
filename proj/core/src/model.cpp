#include "disagg/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "disagg/errors.hpp"
#include "disagg/rng.hpp"
#include "disagg/serialization.hpp"

namespace disagg {
namespace {

Matrix affine(const Matrix& X, const Matrix& W, const Vector& b) {
  Matrix out = X * W.transpose();
  out.rowwise() += b.transpose();
  return out;
}

Matrix relu(const Matrix& X) { return X.cwiseMax(0.0); }

Matrix relu_mask(const Matrix& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

void fill_uniform(std::span<double> values, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : values) v = dist(rng);
}

template <typename M>
std::span<double> span_of(M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
template <typename M>
std::span<const double> span_of(const M& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

// Signs of every ReLU input; a change means a perturbation crossed a kink.
std::vector<bool> relu_pattern(const ForwardCache& cache, bool outer) {
  std::vector<bool> bits;
  for (std::size_t b = 0; b < cache.inner_pre.size(); ++b) {
    const Matrix& a = cache.inner_pre[b];
    for (Eigen::Index i = 0; i < a.size(); ++i) bits.push_back(a.data()[i] > 0.0);
    if (outer) {
      const Matrix& s = cache.sum_pre[b];
      for (Eigen::Index i = 0; i < s.size(); ++i) bits.push_back(s.data()[i] > 0.0);
    }
  }
  return bits;
}

}  // namespace

std::size_t ResNetHyper::parameter_count() const noexcept {
  const std::size_t d = d_model;
  return n_inputs * d + d + n_blocks * 2 * (d * d + d) + d * n_classes + n_classes;
}

void ResNetHyper::validate() const {
  if (n_inputs == 0 || d_model == 0 || n_classes == 0) {
    throw std::invalid_argument("ResNetFFN: n_inputs, d_model and n_classes must be positive");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("ResNetFFN: threshold must lie in (0, 1)");
  }
}

ResNetParams ResNetParams::zeros(const ResNetHyper& h) {
  const auto d = static_cast<Eigen::Index>(h.d_model);
  ResNetParams p;
  p.proj_w = Matrix::Zero(d, static_cast<Eigen::Index>(h.n_inputs));
  p.proj_b = Vector::Zero(d);
  p.blocks.resize(h.n_blocks);
  for (auto& b : p.blocks) {
    b.w1 = Matrix::Zero(d, d);
    b.b1 = Vector::Zero(d);
    b.w2 = Matrix::Zero(d, d);
    b.b2 = Vector::Zero(d);
  }
  p.head_w = Matrix::Zero(static_cast<Eigen::Index>(h.n_classes), d);
  p.head_b = Vector::Zero(static_cast<Eigen::Index>(h.n_classes));
  return p;
}

std::vector<std::span<double>> ResNetParams::tensors() {
  std::vector<std::span<double>> t{span_of(proj_w), span_of(proj_b)};
  for (auto& b : blocks) {
    t.push_back(span_of(b.w1));
    t.push_back(span_of(b.b1));
    t.push_back(span_of(b.w2));
    t.push_back(span_of(b.b2));
  }
  t.push_back(span_of(head_w));
  t.push_back(span_of(head_b));
  return t;
}

std::vector<std::span<const double>> ResNetParams::tensors() const {
  std::vector<std::span<const double>> t{span_of(proj_w), span_of(proj_b)};
  for (const auto& b : blocks) {
    t.push_back(span_of(b.w1));
    t.push_back(span_of(b.b1));
    t.push_back(span_of(b.w2));
    t.push_back(span_of(b.b2));
  }
  t.push_back(span_of(head_w));
  t.push_back(span_of(head_b));
  return t;
}

std::size_t ResNetParams::size() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

bool ResNetParams::all_finite() const {
  for (const auto& t : tensors()) {
    if (!std::all_of(t.begin(), t.end(), [](double v) { return std::isfinite(v); })) return false;
  }
  return true;
}

ResNetFFN::ResNetFFN(ResNetHyper hyper)
    : hyper_(hyper), params_(ResNetParams::zeros(hyper)), grads_(ResNetParams::zeros(hyper)) {
  hyper_.validate();
}

ResNetFFN ResNetFFN::initialized(ResNetHyper hyper, std::uint64_t seed) {
  ResNetFFN model(hyper);
  Rng rng(derive_seed(seed, "init"));
  auto& p = model.params_;
  const double proj_bound = 1.0 / std::sqrt(static_cast<double>(hyper.n_inputs));
  const double hidden_bound = 1.0 / std::sqrt(static_cast<double>(hyper.d_model));
  fill_uniform(span_of(p.proj_w), proj_bound, rng);
  fill_uniform(span_of(p.proj_b), proj_bound, rng);
  for (auto& b : p.blocks) {
    fill_uniform(span_of(b.w1), hidden_bound, rng);
    fill_uniform(span_of(b.b1), hidden_bound, rng);
    fill_uniform(span_of(b.w2), hidden_bound, rng);
    fill_uniform(span_of(b.b2), hidden_bound, rng);
  }
  fill_uniform(span_of(p.head_w), hidden_bound, rng);
  fill_uniform(span_of(p.head_b), hidden_bound, rng);
  return model;
}

void ResNetFFN::check_input(const Matrix& X) const {
  if (static_cast<std::size_t>(X.cols()) != hyper_.n_inputs) {
    throw std::invalid_argument("ResNetFFN: input has " + std::to_string(X.cols()) +
                                " columns, model expects " + std::to_string(hyper_.n_inputs));
  }
}

ForwardCache ResNetFFN::forward_cached(const Matrix& X) const {
  check_input(X);
  ForwardCache c;
  c.input = X;
  Matrix h = affine(X, params_.proj_w, params_.proj_b);
  for (const auto& block : params_.blocks) {
    c.block_in.push_back(h);
    c.inner_pre.push_back(affine(h, block.w1, block.b1));
    c.inner_act.push_back(relu(c.inner_pre.back()));
    Matrix s = h + affine(c.inner_act.back(), block.w2, block.b2);
    h = hyper_.outer_relu ? relu(s) : s;
    c.sum_pre.push_back(std::move(s));
  }
  c.last_hidden = std::move(h);
  c.logits = affine(c.last_hidden, params_.head_w, params_.head_b);
  c.scores = (1.0 / (1.0 + (-c.logits.array()).exp())).matrix();
  return c;
}

Matrix ResNetFFN::forward(const Matrix& X) const {
  check_input(X);
  Matrix h = affine(X, params_.proj_w, params_.proj_b);
  for (const auto& block : params_.blocks) {
    Matrix s = h + affine(relu(affine(h, block.w1, block.b1)), block.w2, block.b2);
    h = hyper_.outer_relu ? relu(s) : std::move(s);
  }
  const Matrix logits = affine(h, params_.head_w, params_.head_b);
  return (1.0 / (1.0 + (-logits.array()).exp())).matrix();
}

void ResNetFFN::backward(const ForwardCache& cache, const BinaryMatrix& targets) {
  if (targets.rows() != cache.scores.rows() || targets.cols() != cache.scores.cols()) {
    throw std::invalid_argument("backward: target shape does not match scores");
  }
  const double scale = 1.0 / static_cast<double>(cache.scores.size());
  const Matrix d_logits = (cache.scores - targets.cast<double>()) * scale;

  grads_.head_w.noalias() = d_logits.transpose() * cache.last_hidden;
  grads_.head_b = d_logits.colwise().sum().transpose();
  Matrix d_hidden = d_logits * params_.head_w;

  for (std::size_t b = params_.blocks.size(); b-- > 0;) {
    const auto& block = params_.blocks[b];
    auto& g = grads_.blocks[b];
    const Matrix d_sum = hyper_.outer_relu
                             ? Matrix(d_hidden.cwiseProduct(relu_mask(cache.sum_pre[b])))
                             : d_hidden;
    g.w2.noalias() = d_sum.transpose() * cache.inner_act[b];
    g.b2 = d_sum.colwise().sum().transpose();
    const Matrix d_inner = (d_sum * block.w2).cwiseProduct(relu_mask(cache.inner_pre[b]));
    g.w1.noalias() = d_inner.transpose() * cache.block_in[b];
    g.b1 = d_inner.colwise().sum().transpose();
    d_hidden = d_sum + d_inner * block.w1;
  }

  grads_.proj_w.noalias() = d_hidden.transpose() * cache.input;
  grads_.proj_b = d_hidden.colwise().sum().transpose();
}

double ResNetFFN::loss_and_gradient(const Matrix& X, const BinaryMatrix& targets) {
  const ForwardCache cache = forward_cached(X);
  backward(cache, targets);
  return bce_loss(cache.scores, targets);
}

double bce_loss(const Matrix& scores, const BinaryMatrix& targets) {
  if (scores.rows() != targets.rows() || scores.cols() != targets.cols()) {
    throw std::invalid_argument("bce_loss: scores and targets differ in shape");
  }
  if (scores.size() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      const double s = std::clamp(scores(i, c), kScoreClamp, 1.0 - kScoreClamp);
      total -= targets(i, c) ? std::log(s) : std::log(1.0 - s);
    }
  }
  return total / static_cast<double>(scores.size());
}

BinaryMatrix predict(const Matrix& scores, double threshold) {
  return (scores.array() >= threshold).cast<std::uint8_t>().matrix();
}

nlohmann::json to_json(const ResNetFFN& model) {
  const auto& h = model.hyper();
  const auto& p = model.params();
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : p.blocks) {
    blocks.push_back({{"w1", matrix_to_json(b.w1)},
                      {"b1", vector_to_json(b.b1)},
                      {"w2", matrix_to_json(b.w2)},
                      {"b2", vector_to_json(b.b2)}});
  }
  return {
      {"hyper",
       {{"n_inputs", h.n_inputs},
        {"d_model", h.d_model},
        {"n_blocks", h.n_blocks},
        {"n_classes", h.n_classes},
        {"outer_relu", h.outer_relu},
        {"threshold", h.threshold},
        {"parameter_count", h.parameter_count()}}},
      {"proj_w", matrix_to_json(p.proj_w)},
      {"proj_b", vector_to_json(p.proj_b)},
      {"blocks", std::move(blocks)},
      {"head_w", matrix_to_json(p.head_w)},
      {"head_b", vector_to_json(p.head_b)},
  };
}

ResNetFFN resnet_from_json(const nlohmann::json& j) {
  const auto& jh = j.at("hyper");
  ResNetHyper h;
  h.n_inputs = jh.at("n_inputs").get<std::size_t>();
  h.d_model = jh.at("d_model").get<std::size_t>();
  h.n_blocks = jh.at("n_blocks").get<std::size_t>();
  h.n_classes = jh.at("n_classes").get<std::size_t>();
  h.outer_relu = jh.at("outer_relu").get<bool>();
  h.threshold = jh.at("threshold").get<double>();
  ResNetFFN model(h);
  auto& p = model.params();
  p.proj_w = matrix_from_json(j.at("proj_w"));
  p.proj_b = vector_from_json(j.at("proj_b"));
  const auto& blocks = j.at("blocks");
  if (blocks.size() != h.n_blocks) throw DataError("checkpoint: block count mismatch");
  for (std::size_t b = 0; b < h.n_blocks; ++b) {
    p.blocks[b].w1 = matrix_from_json(blocks[b].at("w1"));
    p.blocks[b].b1 = vector_from_json(blocks[b].at("b1"));
    p.blocks[b].w2 = matrix_from_json(blocks[b].at("w2"));
    p.blocks[b].b2 = vector_from_json(blocks[b].at("b2"));
  }
  p.head_w = matrix_from_json(j.at("head_w"));
  p.head_b = vector_from_json(j.at("head_b"));
  if (p.size() != h.parameter_count()) {
    throw DataError("checkpoint: parameter tensors do not match the stored hyperparameters");
  }
  return model;
}

GradientCheckResult gradient_check(const ResNetFFN& model, const Matrix& X, const BinaryMatrix& Y,
                                   const GradientCheckOptions& opts, const GradientFn& analytic) {
  ResNetFFN work = model;
  if (analytic) {
    analytic(work, X, Y);
  } else {
    work.loss_and_gradient(X, Y);
  }
  const ResNetParams grads = work.grads();

  auto params = work.params().tensors();
  const auto grad_tensors = grads.tensors();
  std::vector<std::pair<std::size_t, std::size_t>> index;  // (tensor, offset)
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t o = 0; o < params[t].size(); ++o) index.emplace_back(t, o);
  }
  Rng rng(derive_seed(opts.seed, "gradcheck"));
  std::shuffle(index.begin(), index.end(), rng);

  const bool outer = work.hyper().outer_relu;
  const auto base_pattern = relu_pattern(work.forward_cached(X), outer);

  GradientCheckResult result;
  for (const auto& [t, o] : index) {
    if (result.checked >= opts.n_params) break;
    double& p = params[t][o];
    const double saved = p;
    p = saved + opts.step;
    const ForwardCache plus = work.forward_cached(X);
    p = saved - opts.step;
    const ForwardCache minus = work.forward_cached(X);
    p = saved;
    if (relu_pattern(plus, outer) != base_pattern || relu_pattern(minus, outer) != base_pattern) {
      ++result.skipped;
      continue;
    }
    const double numeric =
        (bce_loss(plus.scores, Y) - bce_loss(minus.scores, Y)) / (2.0 * opts.step);
    const double exact = grad_tensors[t][o];
    const double denom = std::max({std::abs(numeric), std::abs(exact), opts.abs_floor});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(numeric - exact) / denom);
    ++result.checked;
  }
  return result;
}

}  // namespace disagg
