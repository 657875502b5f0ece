#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gil/lattice.hpp"

namespace gil {

/// Eigenvalues of the torus Laplacian, one per Fourier mode in site order.
struct Spectrum {
  std::vector<double> values;
  std::size_t zero_mode = 0;  // index of the k = 0 mode
};

/// mu_k = sum_i 4 sin^2(pi k_i / M).
Spectrum spectrum(const Torus& t);

/// delta_M: smallest Rayleigh quotient ||grad eta||^2 / ||eta||^2 over
/// pinned eta.
struct PoincareConstant {
  double delta_m = 0.0;
};

/// Dense eigensolve of the pinned form; volume limited to 4096.
PoincareConstant poincare_constant(const Torus& t);

/// Matrix of ||grad phi||^2 on the non-origin coordinates.
Eigen::MatrixXd pinned_dirichlet_form(const Torus& t);

/// Covariance C with (C^-1 phi, phi) = ||grad phi||^2 on pinned fields,
/// diagonalized by the discrete Fourier transform. Immutable and shareable;
/// sampling calls own their RNG.
class SpectralCovariance {
 public:
  explicit SpectralCovariance(const Torus& t);

  const Torus& torus() const { return torus_; }
  /// Laplacian eigenvalues in site order (zero mode included at index 0).
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }

  /// sum_k mu_k |phi_k|^2 with orthonormal modes; equals ||grad phi||^2.
  double mode_energy(std::span<const double> phi) const;

  /// Pinned Gaussian field with covariance variance_scale * C.
  Field sample(double variance_scale, std::mt19937_64& rng) const;

  /// Var(grad_i phi(x)) under the unit-scale measure (independent of x).
  double gradient_variance(int axis) const;

  /// Dense pinned covariance (inverse of pinned_dirichlet_form).
  Eigen::MatrixXd pinned_covariance() const;

 private:
  struct Plans;

  Torus torus_;
  std::vector<double> eigenvalues_;
  std::vector<double> half_eigenvalues_;  // r2c layout
  std::shared_ptr<const Plans> plans_;
};

/// Convenience wrapper matching the free-function form.
Field sample_gff(const SpectralCovariance& sc, double variance_scale, std::mt19937_64& rng);

}  // namespace gil
