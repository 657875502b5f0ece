#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "gil/lattice.hpp"
#include "gil/potential.hpp"
#include "gil/statistics.hpp"

namespace gil {

/// Smooth target exp(-beta * energy) over the free (non-origin) coordinates.
struct Target {
  std::function<double(const Eigen::VectorXd&)> energy;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  double beta = 1.0;
  /// Upper bound on the per-edge curvature; sets the default step size.
  double edge_curvature = 1.0;
  /// Lattice dimension d (each site touches 2d edges).
  int lattice_dim = 1;
  std::size_t dof = 0;
};

/// exp(-beta H(u, .)) on the torus.
Target gibbs_target(const Torus& t, const Tilt& u, const Potential& p, double beta);

/// 0.5 / sqrt(beta (2 d curvature + 1)).
double default_step_size(const Target& target);

struct ChainConfig {
  /// MALA step; the default is derived from the target.
  std::optional<double> step_size;
  std::size_t n_steps = 20000;
  std::size_t burn_in = 2000;
  std::size_t thinning = 1;
  int n_chains = 1;
  std::uint64_t seed = 1;
  /// Step-size adaptation during burn-in toward 57.4% acceptance.
  bool adapt = true;
  /// Raise when post-burn-in acceptance leaves [10%, 95%].
  bool enforce_acceptance = true;
  int threads = 1;

  void validate() const;
  std::size_t retained_per_chain() const { return (n_steps - burn_in) / thinning; }
};

/// Seed of chain `index` derived from the master seed.
std::uint64_t chain_seed(std::uint64_t seed, int index);

struct ChainStats {
  double acceptance_rate = 0.0;
  double step_size = 0.0;
  std::size_t retained = 0;
};

using Observable = std::function<Eigen::VectorXd(const Eigen::VectorXd& state)>;
using SampleCallback = std::function<void(const Eigen::VectorXd& state)>;

/// One MALA chain; `on_sample` sees every retained (thinned, post-burn-in)
/// state. Deterministic given the seed and chain index.
ChainStats run_chain(const Target& target, const Eigen::VectorXd& start, const ChainConfig& cfg, int chain_index,
                     const SampleCallback& on_sample);

/// Observable series of every chain (rows: retained samples).
struct ChainRun {
  std::vector<Eigen::MatrixXd> series;
  std::vector<ChainStats> stats;
};

/// Runs cfg.n_chains independent chains in parallel, recording `obs`.
ChainRun run_chains(const Target& target, const Eigen::VectorXd& start, const ChainConfig& cfg, const Observable& obs);

/// Batch-means estimate of the mean of `obs` from a finished run.
Estimate mean_estimate(const ChainRun& run);

/// D^2 f = <D_u^2 H> - var D_u H at beta = 1, split into its two terms.
struct FluctuationResult {
  Estimate hessian;
  Estimate mean_curvature;
  Estimate variance_term;
  std::vector<ChainStats> stats;
};

/// Requires a unit-scaled potential (c1 = 1, beta = 1).
FluctuationResult fluctuation_hessian(const Tilt& u, const Potential& p, const Torus& t, const ChainConfig& cfg);

/// A(k) = <exp(i k grad_i theta(x))> from a recorded series of grad_i theta(x)
/// values. A(-k) is the conjugate of A(k) by construction.
std::vector<ComplexEstimate> characteristic_from_series(const std::vector<Eigen::VectorXd>& eta_by_chain,
                                                        const std::vector<double>& k_grid);

/// A(k) under `target` (typically the induced H1) for one edge (x, axis).
std::vector<ComplexEstimate> characteristic_A(const std::vector<double>& k_grid, int axis, std::size_t site,
                                              const Torus& t, const Target& target, const ChainConfig& cfg);

/// Symmetric grid on [-K, K], K = 4 (12 d cbar)^(1/2).
std::vector<double> default_k_grid(int d, double cbar, int points = 401);

struct FourierPoint {
  std::size_t site = 0;
  int axis = 0;
  double k = 0.0;
  double modulus = 0.0;
  double std_error = 0.0;
  double envelope = 0.0;  // min(1, 12 d cbar / k^2)
  bool ok = true;
};

struct FourierEdgeSummary {
  std::size_t site = 0;
  int axis = 0;
  double integral = 0.0;  // trapezoid over the grid plus analytic tail
  double integral_se = 0.0;
  double integral_bound = 0.0;  // 4 (12 d cbar)^(1/2)
  bool integral_ok = true;
  /// <g0''(u_i + grad_i psi(x) + grad_i theta(x))> against its L1 bound,
  /// for h = g0'' with the full norm and h = min(g0'', 0) with the
  /// negative-part norm.
  double mean_h_full = 0.0;
  double mean_h_full_se = 0.0;
  double bound_h_full = 0.0;
  double mean_h_neg = 0.0;
  double mean_h_neg_se = 0.0;
  double bound_h_neg = 0.0;
  bool h_ok = true;
};

struct FourierReport {
  double cbar = 1.0;
  double lambda = 0.5;
  std::vector<FourierPoint> points;
  std::vector<FourierEdgeSummary> edges;
  bool pointwise_ok = true;
  bool integral_ok = true;
  bool h_ok = true;
  bool all_ok() const { return pointwise_ok && integral_ok && h_ok; }
  std::vector<ChainStats> stats;
};

/// Samples the induced H1 at (u, psi, lambda) and checks the characteristic
/// function envelope, its integral, and the L1 averaging bound on every edge,
/// each with a 4 SE allowance. `p` must be unit-scaled.
FourierReport verify_l1norm_bounds(const Potential& p, const Torus& t, const Tilt& u, const Field& psi, double lambda,
                                   const std::vector<double>& k_grid, const ChainConfig& cfg);

/// Observable with its gradient in the free coordinates.
struct GradientObservable {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

/// Linear observable (v, phi) on the free coordinates.
GradientObservable linear_observable(const Eigen::VectorXd& v);

struct PoincareReport {
  double variance = 0.0;
  double variance_se = 0.0;
  double bound = 0.0;  // (1/delta) <|DG|^2>
  double bound_se = 0.0;
  bool holds = true;   // variance <= bound + 4 combined SE
};

/// var G <= (1/delta) <|DG|^2> for a target with D^2(beta H) >= delta Id.
PoincareReport poincare_variance_check(const Target& target, const GradientObservable& g, double delta,
                                       const ChainConfig& cfg);

/// Covariance of grad_axis phi between sites, averaged over translations and
/// grouped by torus L1 distance (index = distance). Diagnostic only.
std::vector<double> gradient_covariance_by_distance(const Torus& t, const ChainRun& field_run, int axis = 0);

}  // namespace gil
