#include "nonsmooth/lspar.hpp"

#include <cmath>

#include "nonsmooth/rng.hpp"

namespace nonsmooth {

namespace {

void check_shape(const LsparDataset& data, const Mat& w, const char* where) {
  require_dim(w.cols(), data.features(), where);
  if (w.rows() < 1) throw Error(ErrorCode::kInvalidArgument, std::string(where) + ": W has no rows");
}

}  // namespace

Mat lspar_true_weights() { return (Mat(4, 2) << 1, 1, 1, -1, -2, 1, -2, -1).finished(); }

LsparDataset gen_lspar_data(Eigen::Index n_samples, double noise_sigma, std::uint64_t seed) {
  if (n_samples < 1) throw Error(ErrorCode::kInvalidArgument, "gen_lspar_data: N must be at least 1");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "gen_lspar_data: sigma must be >= 0");
  CounterRng features(CounterRng(seed).split(0));
  CounterRng noise(CounterRng(seed).split(1));
  LsparDataset d;
  d.seed = seed;
  d.noise_sigma = noise_sigma;
  d.x.resize(n_samples, 2);
  d.y.resize(n_samples);
  const Mat w = lspar_true_weights();
  for (Eigen::Index s = 0; s < n_samples; ++s) {
    d.x(s, 0) = features.uniform(-1.0, 1.0);
    d.x(s, 1) = features.uniform(-1.0, 1.0);
    d.y[s] = (w * d.x.row(s).transpose()).maxCoeff();
    if (noise_sigma > 0.0) d.y[s] += noise_sigma * noise.normal();
  }
  return d;
}

Vec lspar_predict(const LsparDataset& data, const Mat& w) {
  check_shape(data, w, "lspar_predict");
  return (data.x * w.transpose()).rowwise().maxCoeff();
}

double lspar_objective(const LsparDataset& data, const Mat& w) {
  const Vec r = lspar_predict(data, w) - data.y;
  return 0.5 * r.squaredNorm() / static_cast<double>(data.size());
}

std::vector<std::vector<int>> lspar_active_sets(const LsparDataset& data, const Mat& w, double tol) {
  check_shape(data, w, "lspar_active_sets");
  const Mat scores = data.x * w.transpose();
  std::vector<std::vector<int>> out(static_cast<std::size_t>(data.size()));
  for (Eigen::Index s = 0; s < data.size(); ++s) {
    const double best = scores.row(s).maxCoeff();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      if (best - scores(s, i) <= tol * (1.0 + std::abs(best))) out[s].push_back(static_cast<int>(i));
    }
  }
  return out;
}

Mat lspar_pseudo_subgradient(const LsparDataset& data, const Mat& w) {
  check_shape(data, w, "lspar_pseudo_subgradient");
  const Mat scores = data.x * w.transpose();
  Mat g = Mat::Zero(w.rows(), w.cols());
  for (Eigen::Index s = 0; s < data.size(); ++s) {
    Eigen::Index i = 0;
    const double best = scores.row(s).maxCoeff(&i);  // first maximum
    g.row(i) += (best - data.y[s]) * data.x.row(s);
  }
  return g / static_cast<double>(data.size());
}

}  // namespace nonsmooth
