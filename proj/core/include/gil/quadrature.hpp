#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gil/edge_convolution.hpp"
#include "gil/lattice.hpp"
#include "gil/potential.hpp"

namespace gil {

enum class QuadratureRule {
  Auto,             // EdgeConvolution in d = 1, GaussHermite otherwise
  GaussHermite,     // tensor product against the pinned Gaussian envelope
  EdgeConvolution,  // gradient coordinates, FFT convolution (d = 1 only)
};

std::string to_string(QuadratureRule r);

struct QuadratureSpec {
  int nodes_per_dim = 8;
  int max_nodes = 128;
  /// Envelope curvature kappa in exp(-kappa ||grad phi||^2 / 2); 0 selects
  /// beta * c1.
  double envelope_scale = 0.0;
  int max_dof = 5;
  double tolerance = 1e-8;
  QuadratureRule rule = QuadratureRule::Auto;
  double weight_cutoff = 1e-14;
  int threads = 1;

  void validate() const;
};

struct OracleResult {
  double value = 0.0;
  /// Gauss-Hermite order per dimension, or grid points per edge.
  int node_order = 0;
  bool converged = false;
  QuadratureRule method = QuadratureRule::GaussHermite;
};

/// Probabilists' Gauss-Hermite rule: nodes and weights for E[f(Z)], Z ~ N(0,1).
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};
HermiteRule gauss_hermite(int n);

/// Integral of exp(-beta H(u, .)) over pinned fields. Converged when doubling
/// the resolution changes the result by less than q.tolerance.
OracleResult log_partition(const Tilt& u, const Potential& p, const Torus& t, double beta, const QuadratureSpec& q);

/// -(1/beta) log Z.
OracleResult free_energy(const Tilt& u, const Potential& p, const Torus& t, double beta, const QuadratureSpec& q);

/// Free energy at a discretization frozen at an anchor tilt, so that finite
/// differences see a smooth function of u.
class FreeEnergyOracle {
 public:
  FreeEnergyOracle(const Potential& p, const Torus& t, double beta, const QuadratureSpec& q, const Tilt& anchor);

  double operator()(const Tilt& u) const;
  const OracleResult& anchor() const { return anchor_; }

 private:
  Potential potential_;
  Torus torus_;
  double beta_;
  QuadratureSpec spec_;
  OracleResult anchor_;
  ConvolutionGrid grid_;
};

/// Central second differences on the 2d^2 + 1 point stencil, one Richardson
/// step (h and h/2), symmetrized.
Eigen::MatrixXd hessian_fd(const std::function<double(const Tilt&)>& f, const Tilt& u, double h = 1e-3,
                           bool richardson = true);

/// Second derivative of a scalar function at 0 by the same scheme.
double second_derivative_fd(const std::function<double(double)>& f, double h = 1e-3, bool richardson = true);

/// f(u, field) with the field given as a full-site array.
using FieldFunctional = std::function<double(const Tilt& u, std::span<const double> sites)>;

/// R f(u, a) = -log int exp(-f(u, a + b)) dmu(b) where mu is the normalized
/// pinned Gaussian with density ~ exp(-||grad b||^2 / (2 variance_scale)).
/// Tensor Gauss-Hermite in the modes of the pinned form.
OracleResult renorm_apply(const FieldFunctional& f, double variance_scale, const Tilt& u, const Field& a,
                          const Torus& t, const QuadratureSpec& q);
/// Same at a fixed Gauss-Hermite order.
double renorm_apply_fixed(const FieldFunctional& f, double variance_scale, const Tilt& u, const Field& a,
                          const Torus& t, int order, const QuadratureSpec& q);

/// Oracle for the one-step decomposition of G(u, phi) = sum g(u_i + grad_i phi(x))
/// with a unit-scaled potential (c1 = 1):
///   R1G(u, psi) with mu1 = lambda C, R2R1G(u) at psi = 0 with mu2 = (1 - lambda) C,
/// and the joint double integral over (theta, psi).
class RenormOracle {
 public:
  RenormOracle(const Torus& t, const Potential& scaled, double lambda, const QuadratureSpec& q);

  /// Converged R1G. In d = 1 uses the edge convolution, else Gauss-Hermite.
  OracleResult r1g(const Tilt& u, const Field& psi) const;
  /// R1G at the discretization frozen by freeze().
  double r1g_frozen(const Tilt& u, const Field& psi) const;
  /// Fixes the inner discretization at (u, psi).
  void freeze(const Tilt& u, const Field& psi);

  /// Iterated composition R2(R1 G)(u, 0), outer Gauss-Hermite.
  OracleResult r2r1g(const Tilt& u);
  double r2r1g_fixed(const Tilt& u, int outer_order) const;

  /// -log of the double integral of exp(-G(u, psi + theta)) against
  /// mu1(dtheta) mu2(dpsi), evaluated as one joint quadrature.
  OracleResult joint_r2r1g(const Tilt& u) const;

  double lambda() const { return lambda_; }
  const Torus& torus() const { return torus_; }

 private:
  double r1g_on_grid(const Tilt& u, const Field& psi, const ConvolutionGrid& g) const;
  std::vector<NegLogKernel> r1_kernels(const Tilt& u, const Field& psi, bool gaussian_only) const;
  ConvolutionGrid initial_grid(const Tilt& u) const;

  Torus torus_;
  Potential potential_;
  double lambda_;
  QuadratureSpec spec_;
  bool frozen_ = false;
  ConvolutionGrid frozen_grid_;
  int frozen_order_ = 0;
};

}  // namespace gil
