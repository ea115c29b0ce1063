#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "disagg/errors.hpp"
#include "disagg/model.hpp"
#include "disagg/serialization.hpp"

namespace disagg {
namespace {

void check_model(const Matrix& features, const BinaryMatrix& labels, std::size_t k) {
  if (features.rows() != labels.rows()) {
    throw std::invalid_argument("knn: feature and label row counts differ");
  }
  if (k == 0 || k > static_cast<std::size_t>(features.rows())) {
    throw std::invalid_argument("knn: k = " + std::to_string(k) + " must lie in [1, " +
                                std::to_string(features.rows()) + "]");
  }
}

// Label vote counts of the k nearest rows; ties go to the lower index.
Eigen::VectorXi neighbour_votes(const Matrix& features, const BinaryMatrix& labels,
                                const RowVector& query, std::size_t k,
                                std::vector<std::size_t>& order, Eigen::VectorXd& dist) {
  dist = (features.rowwise() - query).rowwise().squaredNorm();
  std::iota(order.begin(), order.end(), 0);
  const auto kk = static_cast<std::ptrdiff_t>(k);
  std::partial_sort(order.begin(), order.begin() + kk, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double da = dist(static_cast<Eigen::Index>(a));
                      const double db = dist(static_cast<Eigen::Index>(b));
                      return da < db || (da == db && a < b);
                    });
  Eigen::VectorXi votes = Eigen::VectorXi::Zero(labels.cols());
  for (std::ptrdiff_t j = 0; j < kk; ++j) {
    votes += labels.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(j)]))
                 .cast<int>()
                 .transpose();
  }
  return votes;
}

}  // namespace

Matrix knn_scores(const KnnModel& model, const Matrix& queries) {
  check_model(model.features, model.labels, model.k);
  if (queries.cols() != model.features.cols()) {
    throw std::invalid_argument("knn: query width does not match the feature bank");
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(model.features.rows()));
  Eigen::VectorXd dist;
  Matrix scores(queries.rows(), model.labels.cols());
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const Eigen::VectorXi votes =
        neighbour_votes(model.features, model.labels, queries.row(q), model.k, order, dist);
    scores.row(q) = votes.cast<double>().transpose() / static_cast<double>(model.k);
  }
  return scores;
}

BinaryMatrix knn_predict(const KnnModel& model, const Matrix& queries) {
  check_model(model.features, model.labels, model.k);
  if (queries.cols() != model.features.cols()) {
    throw std::invalid_argument("knn: query width does not match the feature bank");
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(model.features.rows()));
  Eigen::VectorXd dist;
  BinaryMatrix out(queries.rows(), model.labels.cols());
  const auto k = static_cast<int>(model.k);
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    const Eigen::VectorXi votes =
        neighbour_votes(model.features, model.labels, queries.row(q), model.k, order, dist);
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(q, c) = 2 * votes(c) > k ? 1 : 0;
  }
  return out;
}

std::vector<std::uint8_t> knn_predict(const Matrix& train_features,
                                      const BinaryMatrix& train_labels,
                                      std::span<const double> query, std::size_t k) {
  const KnnModel model{train_features, train_labels, k};
  const Matrix q = Eigen::Map<const RowVector>(query.data(), static_cast<Eigen::Index>(query.size()));
  const BinaryMatrix pred = knn_predict(model, q);
  return std::vector<std::uint8_t>(pred.data(), pred.data() + pred.size());
}

nlohmann::json to_json(const KnnModel& model) {
  std::vector<int> labels(model.labels.data(), model.labels.data() + model.labels.size());
  return {{"k", model.k},
          {"features", matrix_to_json(model.features)},
          {"labels", {{"rows", model.labels.rows()}, {"cols", model.labels.cols()}, {"data", labels}}}};
}

KnnModel knn_from_json(const nlohmann::json& j) {
  KnnModel m;
  m.k = j.at("k").get<std::size_t>();
  m.features = matrix_from_json(j.at("features"));
  const auto& jl = j.at("labels");
  const auto rows = jl.at("rows").get<Eigen::Index>();
  const auto cols = jl.at("cols").get<Eigen::Index>();
  const auto data = jl.at("data").get<std::vector<int>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols || rows != m.features.rows()) {
    throw DataError("knn checkpoint: label bank has wrong size");
  }
  m.labels.resize(rows, cols);
  for (Eigen::Index i = 0; i < m.labels.size(); ++i) {
    m.labels.data()[i] = static_cast<std::uint8_t>(data[static_cast<std::size_t>(i)]);
  }
  check_model(m.features, m.labels, m.k);
  return m;
}

}  // namespace disagg
