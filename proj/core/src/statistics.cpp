#include "gil/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gil/error.hpp"

namespace gil {

std::string to_string(EstimateMethod m) { return m == EstimateMethod::Chain ? "chain" : "oracle"; }

Estimate scalar_estimate(double value, double std_error, double n_effective, EstimateMethod method) {
  Estimate e;
  e.value = Eigen::MatrixXd::Constant(1, 1, value);
  e.std_error = Eigen::MatrixXd::Constant(1, 1, std_error);
  e.n_effective = n_effective;
  e.method = method;
  return e;
}

double ComplexEstimate::modulus_error() const {
  const double r = std::abs(value);
  const double combined = std::hypot(std_error_re, std_error_im);
  if (r <= combined) return combined;
  return std::hypot(value.real() * std_error_re, value.imag() * std_error_im) / r;
}

BatchMeans::BatchMeans(int batches_per_chain) : batches_per_chain_(batches_per_chain) {
  if (batches_per_chain < 20) throw PreconditionViolation("batch means needs at least 20 batches");
}

void BatchMeans::add_chain(const Eigen::MatrixXd& series) {
  const auto n = static_cast<std::size_t>(series.rows());
  if (n < static_cast<std::size_t>(batches_per_chain_)) {
    throw PreconditionViolation("chain shorter than the number of batches");
  }
  if (sum_.size() == 0) {
    sum_ = Eigen::VectorXd::Zero(series.cols());
    sum_sq_ = Eigen::VectorXd::Zero(series.cols());
  } else if (sum_.size() != series.cols()) {
    throw PreconditionViolation("observable dimension changed between chains");
  }
  const std::size_t per = n / batches_per_chain_;
  for (int b = 0; b < batches_per_chain_; ++b) {
    const std::size_t lo = b * per;
    const std::size_t len = (b + 1 == batches_per_chain_) ? n - lo : per;
    Eigen::VectorXd m = series.middleRows(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(len))
                            .colwise()
                            .mean()
                            .transpose();
    batch_means_.push_back(m);
    batch_weights_.push_back(static_cast<double>(len));
  }
  sum_ += series.colwise().sum().transpose();
  sum_sq_ += series.array().square().colwise().sum().matrix().transpose();
  n_samples_ += n;
}

Eigen::VectorXd BatchMeans::mean() const {
  if (n_samples_ == 0) throw PreconditionViolation("no samples");
  return sum_ / static_cast<double>(n_samples_);
}

Eigen::VectorXd BatchMeans::std_error() const {
  const Eigen::VectorXd m = mean();
  const auto b = static_cast<double>(batch_means_.size());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(m.size());
  for (const auto& bm : batch_means_) acc += (bm - m).array().square().matrix();
  return (acc / (b * (b - 1.0))).array().sqrt().matrix();
}

double BatchMeans::n_effective(int component) const {
  const double n = static_cast<double>(n_samples_);
  const double m = sum_[component] / n;
  const double var = std::max(0.0, sum_sq_[component] / n - m * m) * n / (n - 1.0);
  const double se = std_error()[component];
  if (se <= 0.0) return n;
  return std::min(n, var / (se * se));
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

JackknifeResult neg_log_mean_exp(std::span<const double> log_weights, int blocks) {
  const std::size_t n = log_weights.size();
  if (blocks < 2 || n < static_cast<std::size_t>(blocks)) {
    throw PreconditionViolation("jackknife needs at least one sample per block");
  }
  const double m = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(m)) throw DegenerateEstimate("all importance weights underflow");
  std::vector<double> block_sum(blocks, 0.0);
  std::vector<std::size_t> block_n(blocks, 0);
  double total = 0.0;
  double total_sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = std::exp(log_weights[k] - m);
    const std::size_t b = std::min<std::size_t>(k * blocks / n, blocks - 1);
    block_sum[b] += w;
    ++block_n[b];
    total += w;
    total_sq += w * w;
  }
  JackknifeResult r;
  r.ess = total * total / total_sq;
  r.value = -(m + std::log(total / static_cast<double>(n)));
  std::vector<double> loo(blocks);
  double loo_mean = 0.0;
  for (int b = 0; b < blocks; ++b) {
    const double s = total - block_sum[b];
    const double cnt = static_cast<double>(n - block_n[b]);
    loo[b] = -(m + std::log(s / cnt));
    loo_mean += loo[b];
  }
  loo_mean /= blocks;
  double acc = 0.0;
  for (double v : loo) acc += (v - loo_mean) * (v - loo_mean);
  r.std_error = std::sqrt(acc * (blocks - 1.0) / blocks);
  return r;
}

}  // namespace gil
