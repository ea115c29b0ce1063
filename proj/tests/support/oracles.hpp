#pragma once

// Independent reference computations for tests. Nothing here calls the
// library routine it is used to check.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "disagg/model.hpp"
#include "disagg/types.hpp"

namespace disagg::oracle {

/// Normalised Amari index of a square matrix P = W * A; 0 iff P is a scaled
/// permutation, at most 1.
double amari_index(const Matrix& P);

/// Per-sample set intersection F1, averaged.
double f1_set_oracle(const BinaryMatrix& y_true, const BinaryMatrix& y_pred);

/// Random binary label matrix; every row has at least one positive when
/// `nonempty_rows`.
BinaryMatrix random_labels(std::size_t rows, std::size_t cols, double p, std::mt19937_64& rng,
                           bool nonempty_rows = true);

/// Scalar-loop re-implementation of the ResNetFFN forward pass.
Matrix naive_forward(const ResNetFFN& model, const Matrix& X);

/// Exhaustive k-NN with std::sort over (distance, index).
std::vector<std::uint8_t> knn_oracle(const Matrix& features, const BinaryMatrix& labels,
                                     const std::vector<double>& query, std::size_t k);

/// Accuracy of a one-vs-rest least-squares linear classifier trained on
/// (train_x, train_y) and scored on (test_x, test_y).
double linear_classifier_accuracy(const Matrix& train_x, const std::vector<int>& train_y,
                                  const Matrix& test_x, const std::vector<int>& test_y,
                                  int n_classes);

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0);

/// Fresh, empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string read_file(const std::filesystem::path& p);

}  // namespace disagg::oracle
