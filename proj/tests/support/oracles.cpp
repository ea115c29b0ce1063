#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Dense>

namespace disagg::oracle {

double amari_index(const Matrix& P) {
  const auto n = P.rows();
  const Matrix A = P.cwiseAbs();
  double rows = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) rows += A.row(i).sum() / A.row(i).maxCoeff() - 1.0;
  double cols = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) cols += A.col(j).sum() / A.col(j).maxCoeff() - 1.0;
  return (rows + cols) / (2.0 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double f1_set_oracle(const BinaryMatrix& y_true, const BinaryMatrix& y_pred) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y_true.rows(); ++i) {
    std::set<Eigen::Index> t;
    std::set<Eigen::Index> p;
    for (Eigen::Index c = 0; c < y_true.cols(); ++c) {
      if (y_true(i, c)) t.insert(c);
      if (y_pred(i, c)) p.insert(c);
    }
    std::vector<Eigen::Index> both;
    std::set_intersection(t.begin(), t.end(), p.begin(), p.end(), std::back_inserter(both));
    total += (t.empty() && p.empty())
                 ? 1.0
                 : 2.0 * static_cast<double>(both.size()) / static_cast<double>(t.size() + p.size());
  }
  return total / static_cast<double>(y_true.rows());
}

BinaryMatrix random_labels(std::size_t rows, std::size_t cols, double p, std::mt19937_64& rng,
                           bool nonempty_rows) {
  std::bernoulli_distribution bit(p);
  std::uniform_int_distribution<std::size_t> pick(0, cols - 1);
  BinaryMatrix y(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    bool any = false;
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      y(i, c) = bit(rng) ? 1 : 0;
      any = any || y(i, c);
    }
    if (nonempty_rows && !any) y(i, static_cast<Eigen::Index>(pick(rng))) = 1;
  }
  return y;
}

Matrix naive_forward(const ResNetFFN& model, const Matrix& X) {
  const auto& p = model.params();
  const auto& h = model.hyper();
  const std::size_t d = h.d_model;
  Matrix out(X.rows(), static_cast<Eigen::Index>(h.n_classes));
  auto lin = [](const Matrix& W, const Vector& b, const std::vector<double>& in) {
    std::vector<double> o(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      double acc = b(r);
      for (Eigen::Index c = 0; c < W.cols(); ++c) acc += W(r, c) * in[static_cast<std::size_t>(c)];
      o[static_cast<std::size_t>(r)] = acc;
    }
    return o;
  };
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<double> x(X.row(i).data(), X.row(i).data() + X.cols());
    std::vector<double> hid = lin(p.proj_w, p.proj_b, x);
    for (const auto& blk : p.blocks) {
      std::vector<double> a = lin(blk.w1, blk.b1, hid);
      for (double& v : a) v = v > 0.0 ? v : 0.0;
      const std::vector<double> b = lin(blk.w2, blk.b2, a);
      for (std::size_t j = 0; j < d; ++j) {
        const double s = hid[j] + b[j];
        hid[j] = h.outer_relu ? std::max(s, 0.0) : s;
      }
    }
    const std::vector<double> z = lin(p.head_w, p.head_b, hid);
    for (std::size_t c = 0; c < z.size(); ++c) {
      out(i, static_cast<Eigen::Index>(c)) = 1.0 / (1.0 + std::exp(-z[c]));
    }
  }
  return out;
}

std::vector<std::uint8_t> knn_oracle(const Matrix& features, const BinaryMatrix& labels,
                                     const std::vector<double>& query, std::size_t k) {
  std::vector<std::pair<double, Eigen::Index>> d;
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      const double diff = features(r, c) - query[static_cast<std::size_t>(c)];
      s += diff * diff;
    }
    d.emplace_back(s, r);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::uint8_t> out(static_cast<std::size_t>(labels.cols()));
  for (Eigen::Index c = 0; c < labels.cols(); ++c) {
    std::size_t votes = 0;
    for (std::size_t j = 0; j < k; ++j) votes += labels(d[j].second, c);
    out[static_cast<std::size_t>(c)] = 2 * votes > k ? 1 : 0;
  }
  return out;
}

double linear_classifier_accuracy(const Matrix& train_x, const std::vector<int>& train_y,
                                  const Matrix& test_x, const std::vector<int>& test_y,
                                  int n_classes) {
  const auto n = train_x.rows();
  Eigen::MatrixXd A(n, train_x.cols() + 1);
  A.leftCols(train_x.cols()) = train_x;
  A.col(train_x.cols()).setOnes();
  Eigen::MatrixXd T = Eigen::MatrixXd::Constant(n, n_classes, -1.0);
  for (Eigen::Index i = 0; i < n; ++i) T(i, train_y[static_cast<std::size_t>(i)]) = 1.0;
  const Eigen::MatrixXd W = A.colPivHouseholderQr().solve(T);

  Eigen::MatrixXd B(test_x.rows(), test_x.cols() + 1);
  B.leftCols(test_x.cols()) = test_x;
  B.col(test_x.cols()).setOnes();
  const Eigen::MatrixXd scores = B * W;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);
    correct += best == test_y[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(test_x.rows());
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("disagg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace disagg::oracle
