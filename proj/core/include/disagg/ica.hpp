#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "disagg/types.hpp"

namespace disagg {

/// Contrast function for the fixed-point update. logcosh uses g = tanh.
enum class Nonlinearity { logcosh, cube };

std::string to_string(Nonlinearity g);
Nonlinearity parse_nonlinearity(std::string_view name);

struct IcaOptions {
  std::size_t n_components = 0;
  Nonlinearity nonlinearity = Nonlinearity::logcosh;
  double tol = 1e-4;
  int max_iter = 200;
  std::uint64_t seed = 0;
};

/// PCA whitening: z = transform * (x - mean), with unit covariance on the
/// fitting data (covariance normalised by n).
struct WhiteningModel {
  Vector mean;       // length input_dim
  Matrix transform;  // n_components x input_dim
};

/// Whitening + orthogonal rotation. unmixing = rotation * whitening.transform
/// maps a centred window to n_components activations.
struct UnmixingModel {
  WhiteningModel whitening;
  Matrix rotation;   // n_components x n_components, orthogonal
  Matrix unmixing;   // n_components x input_dim

  Nonlinearity nonlinearity = Nonlinearity::logcosh;
  double tol = 1e-4;
  int max_iter = 200;
  int iterations = 0;
  bool converged = false;

  std::size_t n_components() const noexcept { return static_cast<std::size_t>(unmixing.rows()); }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(unmixing.cols()); }

  /// Assembles a model from explicit parts; unmixing is recomputed.
  static UnmixingModel from_parts(Vector mean, Matrix whitening_transform, Matrix rotation);
};

/// Keeps the n_components leading eigenvectors of the sample covariance.
/// Throws DataError when the covariance rank is below n_components.
WhiteningModel fit_whitening(const Matrix& X, std::size_t n_components);

/// (W W^T)^(-1/2) W via a symmetric eigendecomposition; eigenvalues are
/// clamped at 1e-12.
Matrix symmetric_decorrelation(const Matrix& W);

/// Symmetric FastICA. Rows of X are observations. Iterates the fixed-point
/// update w <- E[z g(w^T z)] - E[g'(w^T z)] w on all rows followed by
/// symmetric decorrelation until max_i |1 - |<w_new_i, w_old_i>|| < tol.
/// When max_iter is reached the last iterate is returned with
/// converged == false.
UnmixingModel fit_ica(const Matrix& X, const IcaOptions& opts);

/// (X - mean) * unmixing^T, row for row. Throws std::invalid_argument on a
/// column-count mismatch.
Matrix ica_transform(const UnmixingModel& model, const Matrix& X);

nlohmann::json to_json(const UnmixingModel& model);
UnmixingModel unmixing_from_json(const nlohmann::json& j);

}  // namespace disagg
