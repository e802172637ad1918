#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nonsmooth/common.hpp"

namespace nonsmooth {

/// Least-squares piecewise-affine regression data. Row s of `x` is the
/// feature vector x_s. The model is g(x) = max_i w_i^T x with the weights
/// w_i stored as the rows of a k x n matrix W.
struct LsparDataset {
  Mat x;
  Vec y;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::string model = "max4";

  Eigen::Index size() const { return x.rows(); }
  Eigen::Index features() const { return x.cols(); }
};

/// Rows (1, 1), (1, -1), (-2, 1), (-2, -1).
Mat lspar_true_weights();

/// x_s uniform on [-1, 1]^2, y_s = max4(x_s) + eps_s with eps_s ~ N(0, sigma^2).
/// Throws kInvalidArgument for N < 1 or sigma < 0.
LsparDataset gen_lspar_data(Eigen::Index n_samples, double noise_sigma, std::uint64_t seed);

/// Model outputs g_s(W) = max_i w_i^T x_s.
Vec lspar_predict(const LsparDataset& data, const Mat& w);

/// f(W) = (1/2N) sum_s (g_s(W) - y_s)^2.
double lspar_objective(const LsparDataset& data, const Mat& w);

/// Indices i with w_i^T x_s within tol (1 + |g_s|) of the max, per sample.
std::vector<std::vector<int>> lspar_active_sets(const LsparDataset& data, const Mat& w, double tol);

/// G_i = (1/N) sum_s (g_s - y_s) x_s [i is the smallest argmax for s].
Mat lspar_pseudo_subgradient(const LsparDataset& data, const Mat& w);

}  // namespace nonsmooth
