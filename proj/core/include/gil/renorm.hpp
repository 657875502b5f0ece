#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gil/lattice.hpp"
#include "gil/potential.hpp"
#include "gil/quadrature.hpp"
#include "gil/sampler.hpp"
#include "gil/statistics.hpp"

namespace gil {

/// lambda split of the Gaussian reference measure for a unit-scaled
/// potential. lambda defaults to 1/(2 cbar).
struct DecompositionPlan {
  Torus torus{1, 2};
  Potential potential = Potential::gaussian();
  double cbar = 1.0;
  double lambda = 0.5;

  /// lambda in (0, 1]; values above 1/(2 cbar) are allowed for adversarial
  /// checks and flagged by in_hypothesis().
  static DecompositionPlan make(const Torus& t, const Potential& scaled, std::optional<double> lambda = std::nullopt);

  bool in_hypothesis() const { return lambda <= 1.0 / (2.0 * cbar) * (1.0 + 1e-12); }
};

/// H1(theta) = G(u, psi + theta) + ||grad theta||^2 / (2 lambda) in the free
/// coordinates of theta.
class InducedH1 {
 public:
  InducedH1(const DecompositionPlan& plan, const Tilt& u, const Field& psi);

  double energy(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd hessian_apply(const Eigen::VectorXd& theta, const Eigen::VectorXd& dir) const;
  double hessian_form(const Eigen::VectorXd& theta, const Eigen::VectorXd& dir) const;

  /// Sampling target at beta = 1.
  Target target() const;

  const Torus& torus() const { return plan_.torus; }

 private:
  Eigen::VectorXd combined(const Eigen::VectorXd& theta) const;

  DecompositionPlan plan_;
  Tilt u_;
  Field psi_;
};

struct ConvexityCertificate {
  int probes = 0;
  /// min over probes of (theta_dot, D^2 H1 theta_dot) / ||grad theta_dot||^2
  double min_rayleigh = 0.0;
  /// min over probes of form - cbar ||grad theta_dot||^2
  double min_margin_gradient = 0.0;
  /// min over probes of form - cbar delta_M ||theta_dot||^2
  double min_margin_poincare = 0.0;
  double delta_m = 0.0;
  bool passed = true;
  /// First failing probe, when any.
  std::optional<Eigen::VectorXd> witness_theta;
  std::optional<Eigen::VectorXd> witness_direction;
};

/// Random probes with log-uniform amplitudes; passes iff both margins are
/// >= -tolerance on every probe.
ConvexityCertificate certify_h1_convexity(const DecompositionPlan& plan, const Tilt& u, const Field& psi, int n_probes,
                                          std::uint64_t seed, double tolerance = 1e-8);

enum class R1Method { Oracle, MonteCarlo };

struct MonteCarloConfig {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  int blocks = 20;
};

/// R1 G(u, psi). Monte Carlo draws theta from lambda C exactly and reports a
/// jackknife error; DegenerateEstimate is raised when the effective sample
/// size drops below 10.
Estimate estimate_r1g(const DecompositionPlan& plan, const Tilt& u, const Field& psi, R1Method method,
                      const QuadratureSpec& q, const MonteCarloConfig& mc = {});

struct CurvatureCheck {
  Tilt u_dot;
  Eigen::VectorXd psi_dot;  // free coordinates
  double second_derivative = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  bool passed = true;
};

struct CurvatureReport {
  std::vector<CurvatureCheck> checks;
  bool all_passed() const;
};

/// D^2 R1G(u, psi) along (u_dot, psi_dot) against
/// -(|T| |u_dot|^2 + ||grad psi_dot||^2) / 2, allowance 1e-6.
CurvatureReport verify_c6(const DecompositionPlan& plan, const Tilt& u, const Field& psi,
                          const std::vector<std::pair<Tilt, Eigen::VectorXd>>& directions, const QuadratureSpec& q);

/// D^2 R2R1G(u, 0)(u_dot, 0) against -|T| |u_dot|^2 / 2, allowance 1e-6.
CurvatureReport verify_c7(const DecompositionPlan& plan, const Tilt& u, const std::vector<Tilt>& directions,
                          const QuadratureSpec& q);

enum class Verdict { Pass, Fail, OutOfHypothesis };
std::string to_string(Verdict v);

struct TheoremRow {
  Tilt u;
  double hessian_min_eig = 0.0;
  double bound = 0.0;  // (c1 / 2) M^d
  double margin = 0.0;
  EstimateMethod method = EstimateMethod::Oracle;
  double std_error = 0.0;
  Verdict verdict = Verdict::Pass;
};

struct TheoremOptions {
  QuadratureSpec quadrature;
  ChainConfig chain;
  /// Use the oracle whenever the system fits the dof cap.
  bool prefer_oracle = true;
  double tolerance = 1e-4;
  double fd_step = 1e-3;
};

struct TheoremReport {
  double beta = 1.0;
  bool in_hypothesis = true;
  std::vector<TheoremRow> rows;
  bool all_passed() const;
};

/// Hessian of the free energy at each u against (c1/2) M^d Id. Outside the
/// smallness hypothesis rows are computed and labeled, never judged. Chain
/// rows are judged with an extra allowance of 4 standard errors.
TheoremReport verify_theorem(const Potential& p, double beta, int d, int m, const std::vector<Tilt>& u_grid,
                             const TheoremOptions& opts);

/// CSV with columns u_1..u_d, hessian_min_eig, bound, margin, method,
/// std_error, verdict.
std::string theorem_csv(const TheoremReport& r, int d);

}  // namespace gil
