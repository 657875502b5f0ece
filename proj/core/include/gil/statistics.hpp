#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gil {

enum class EstimateMethod { Chain, Oracle };

std::string to_string(EstimateMethod m);

/// Point estimate with its standard error (same shape as value).
struct Estimate {
  Eigen::MatrixXd value;
  Eigen::MatrixXd std_error;
  double n_effective = 0.0;
  EstimateMethod method = EstimateMethod::Chain;

  double scalar() const { return value(0, 0); }
  double scalar_error() const { return std_error(0, 0); }
};

Estimate scalar_estimate(double value, double std_error, double n_effective, EstimateMethod method);

struct ComplexEstimate {
  std::complex<double> value;
  double std_error_re = 0.0;
  double std_error_im = 0.0;
  double n_effective = 0.0;

  /// Standard error of |value| (delta method, falling back to the
  /// combined error when the modulus is within noise of zero).
  double modulus_error() const;
};

/// Batch-means estimator for the mean of a vector-valued series. Each chain
/// is cut into `batches_per_chain` equal batches; batch means from all chains
/// are pooled.
class BatchMeans {
 public:
  explicit BatchMeans(int batches_per_chain = 20);

  /// Adds one chain: rows are samples, columns are observable components.
  void add_chain(const Eigen::MatrixXd& series);

  std::size_t samples() const { return n_samples_; }
  std::size_t batches() const { return batch_means_.size(); }

  Eigen::VectorXd mean() const;
  Eigen::VectorXd std_error() const;
  /// Effective sample size of one component: sample variance / SE^2.
  double n_effective(int component = 0) const;

 private:
  int batches_per_chain_;
  std::size_t n_samples_ = 0;
  std::vector<Eigen::VectorXd> batch_means_;
  std::vector<double> batch_weights_;
  Eigen::VectorXd sum_;
  Eigen::VectorXd sum_sq_;
};

/// -log of the mean of exp(w_k), evaluated with a max shift, and its
/// delete-one-block jackknife error.
struct JackknifeResult {
  double value = 0.0;
  double std_error = 0.0;
  double ess = 0.0;  // (sum e^w)^2 / sum e^{2w}
};
JackknifeResult neg_log_mean_exp(std::span<const double> log_weights, int blocks = 20);

/// log(sum_k exp(x_k)).
double log_sum_exp(std::span<const double> x);

}  // namespace gil
