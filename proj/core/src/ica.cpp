#include "disagg/ica.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "disagg/errors.hpp"
#include "disagg/rng.hpp"
#include "disagg/serialization.hpp"

namespace disagg {
namespace {

constexpr double kEigenClamp = 1e-12;
constexpr double kRankTolerance = 1e-10;

}  // namespace

std::string to_string(Nonlinearity g) {
  return g == Nonlinearity::logcosh ? "logcosh" : "cube";
}

Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "logcosh" || name == "tanh") return Nonlinearity::logcosh;
  if (name == "cube") return Nonlinearity::cube;
  throw ConfigError("unknown ICA nonlinearity '" + std::string(name) + "' (logcosh|cube)");
}

UnmixingModel UnmixingModel::from_parts(Vector mean, Matrix whitening_transform, Matrix rotation) {
  if (whitening_transform.cols() != mean.size() ||
      rotation.rows() != whitening_transform.rows() || rotation.cols() != rotation.rows()) {
    throw std::invalid_argument("UnmixingModel: inconsistent part shapes");
  }
  UnmixingModel m;
  m.whitening.mean = std::move(mean);
  m.whitening.transform = std::move(whitening_transform);
  m.rotation = std::move(rotation);
  m.unmixing = m.rotation * m.whitening.transform;
  return m;
}

WhiteningModel fit_whitening(const Matrix& X, std::size_t n_components) {
  const auto n = X.rows();
  const auto dim = X.cols();
  const auto k = static_cast<Eigen::Index>(n_components);
  if (k < 1 || k > dim) {
    throw std::invalid_argument("whitening: need 1 <= n_components <= input dimension (" +
                                std::to_string(dim) + ")");
  }
  if (n <= k) {
    throw std::invalid_argument("whitening: need more samples (" + std::to_string(n) +
                                ") than components (" + std::to_string(k) + ")");
  }
  WhiteningModel w;
  w.mean = X.colwise().mean().transpose();
  const Matrix centred = X.rowwise() - w.mean.transpose();
  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("whitening: eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double largest = values(dim - 1);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (values(i) > kRankTolerance * std::max(largest, 0.0)) ++rank;
  }
  if (largest <= 0.0) rank = 0;
  if (rank < k) {
    throw DataError("whitening: covariance rank " + std::to_string(rank) + " is below the " +
                    std::to_string(k) + " requested components");
  }
  w.transform.resize(k, dim);
  for (Eigen::Index r = 0; r < k; ++r) {
    const Eigen::Index col = dim - 1 - r;
    w.transform.row(r) = eig.eigenvectors().col(col).transpose() / std::sqrt(values(col));
  }
  return w;
}

Matrix symmetric_decorrelation(const Matrix& W) {
  const Eigen::MatrixXd gram = W * W.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("decorrelation: eigendecomposition failed");
  const Eigen::VectorXd inv_sqrt =
      eig.eigenvalues().cwiseMax(kEigenClamp).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd& V = eig.eigenvectors();
  return V * inv_sqrt.asDiagonal() * V.transpose() * W;
}

UnmixingModel fit_ica(const Matrix& X, const IcaOptions& opts) {
  if (!(opts.tol > 0.0) || opts.max_iter < 1) {
    throw std::invalid_argument("fit_ica: tol and max_iter must be positive");
  }
  WhiteningModel whitening = fit_whitening(X, opts.n_components);
  const Matrix Z = (X.rowwise() - whitening.mean.transpose()) * whitening.transform.transpose();
  const auto n = static_cast<double>(Z.rows());
  const auto k = Z.cols();

  Rng rng(derive_seed(opts.seed, "ica-init"));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix W(k, k);
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = normal(rng);
  W = symmetric_decorrelation(W);

  UnmixingModel model;
  model.nonlinearity = opts.nonlinearity;
  model.tol = opts.tol;
  model.max_iter = opts.max_iter;

  Matrix G(Z.rows(), k);
  Vector mean_dg(k);
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Matrix proj = Z * W.transpose();  // n x k, column i = w_i^T z
    if (opts.nonlinearity == Nonlinearity::logcosh) {
      G = proj.array().tanh().matrix();
      mean_dg = (1.0 - G.array().square()).colwise().mean().transpose();
    } else {
      G = proj.array().cube().matrix();
      mean_dg = (3.0 * proj.array().square()).colwise().mean().transpose();
    }
    Matrix W_next = (G.transpose() * Z) / n - mean_dg.asDiagonal() * W;
    W_next = symmetric_decorrelation(W_next);
    if (!W_next.allFinite()) {
      throw NumericalError("fit_ica: non-finite unmixing iterate at iteration " +
                           std::to_string(it));
    }
    const double change =
        ((W_next * W.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    W = std::move(W_next);
    model.iterations = it;
    if (change < opts.tol) {
      model.converged = true;
      break;
    }
  }

  model.whitening = std::move(whitening);
  model.rotation = std::move(W);
  model.unmixing = model.rotation * model.whitening.transform;
  return model;
}

Matrix ica_transform(const UnmixingModel& model, const Matrix& X) {
  if (static_cast<std::size_t>(X.cols()) != model.input_dim()) {
    throw std::invalid_argument("ica_transform: input has " + std::to_string(X.cols()) +
                                " columns, model expects " + std::to_string(model.input_dim()));
  }
  return (X.rowwise() - model.whitening.mean.transpose()) * model.unmixing.transpose();
}

nlohmann::json to_json(const UnmixingModel& model) {
  return {
      {"n_components", model.n_components()},
      {"input_dim", model.input_dim()},
      {"mean", vector_to_json(model.whitening.mean)},
      {"whitening", matrix_to_json(model.whitening.transform)},
      {"rotation", matrix_to_json(model.rotation)},
      {"nonlinearity", to_string(model.nonlinearity)},
      {"tol", model.tol},
      {"max_iter", model.max_iter},
      {"iterations", model.iterations},
      {"converged", model.converged},
  };
}

UnmixingModel unmixing_from_json(const nlohmann::json& j) {
  UnmixingModel m = UnmixingModel::from_parts(vector_from_json(j.at("mean")),
                                              matrix_from_json(j.at("whitening")),
                                              matrix_from_json(j.at("rotation")));
  m.nonlinearity = parse_nonlinearity(j.at("nonlinearity").get<std::string>());
  m.tol = j.at("tol").get<double>();
  m.max_iter = j.at("max_iter").get<int>();
  m.iterations = j.at("iterations").get<int>();
  m.converged = j.at("converged").get<bool>();
  if (m.n_components() != j.at("n_components").get<std::size_t>() ||
      m.input_dim() != j.at("input_dim").get<std::size_t>()) {
    throw DataError("unmixing model: stored shape disagrees with payload");
  }
  return m;
}

}  // namespace disagg
