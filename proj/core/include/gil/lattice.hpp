#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gil/potential.hpp"

namespace gil {

/// Tilt vector u in R^d (also used for tilt directions).
using Tilt = Eigen::VectorXd;

/// Periodic lattice (Z/MZ)^d with row-major site indexing; the origin is
/// site 0.
class Torus {
 public:
  Torus(int d, int m);

  int dim() const { return d_; }
  int side() const { return m_; }
  std::size_t volume() const { return volume_; }
  /// Number of free coordinates of a pinned field.
  std::size_t dof() const { return volume_ - 1; }

  std::size_t forward(std::size_t x, int axis) const { return fwd_[x * d_ + axis]; }
  std::size_t backward(std::size_t x, int axis) const { return bwd_[x * d_ + axis]; }

  std::vector<int> coords(std::size_t x) const;
  std::size_t index(std::span<const int> coords) const;

  friend bool operator==(const Torus& a, const Torus& b) { return a.d_ == b.d_ && a.m_ == b.m_; }

 private:
  int d_;
  int m_;
  std::size_t volume_;
  std::vector<std::size_t> fwd_;
  std::vector<std::size_t> bwd_;
};

/// Real configuration on the torus with phi(origin) = 0. The origin is not a
/// degree of freedom: it cannot be written, and constructors pin it.
class Field {
 public:
  Field() = default;
  explicit Field(const Torus& t) : values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.volume()))) {}

  /// Pins an arbitrary configuration by subtracting its origin value.
  static Field pinned(std::span<const double> sites);
  /// Builds a field from its volume - 1 free coordinates.
  static Field from_dof(std::span<const double> dof);
  static Field from_dof(const Eigen::VectorXd& dof);

  std::size_t volume() const { return static_cast<std::size_t>(values_.size()); }
  std::span<const double> sites() const { return {values_.data(), volume()}; }
  Eigen::VectorXd dof() const { return values_.tail(values_.size() - 1); }
  double operator[](std::size_t x) const { return values_[static_cast<Eigen::Index>(x)]; }
  /// Writes a non-origin site.
  void set(std::size_t x, double v);

  friend bool operator==(const Field& a, const Field& b) { return a.values_ == b.values_; }

 private:
  Eigen::VectorXd values_;
};

/// phi(x + e_axis) - phi(x).
double grad(const Torus& t, std::span<const double> phi, std::size_t x, int axis);

/// ||grad phi||^2 = sum over sites and axes of (grad_i phi(x))^2.
double gradient_norm_sq(const Torus& t, std::span<const double> phi);

/// sum_{x,i} f(u_i + grad_i phi(x)).
double edge_energy(const Torus& t, const Tilt& u, std::span<const double> phi, const ScalarFn& f);
/// Gradient of edge_energy with respect to the non-origin sites.
Eigen::VectorXd edge_gradient(const Torus& t, const Tilt& u, std::span<const double> phi, const ScalarFn& f);
/// Hessian of edge_energy applied to a pinned direction (non-origin sites).
Eigen::VectorXd edge_hessian_apply(const Torus& t, const Tilt& u, std::span<const double> phi,
                                   std::span<const double> dir, const ScalarFn& f);
/// (dir, Hess dir) = sum_{x,i} f''(u_i + grad_i phi(x)) (grad_i dir(x))^2.
double edge_hessian_form(const Torus& t, const Tilt& u, std::span<const double> phi,
                         std::span<const double> dir, const ScalarFn& f);

ScalarFn potential_fn(const Potential& p);
/// g = V - s^2/2, the non-Gaussian remainder.
ScalarFn remainder_fn(const Potential& p);

/// H(u, phi) = sum_{x,i} V(grad_i phi(x) + u_i). beta is not folded in.
double hamiltonian(const Torus& t, const Tilt& u, std::span<const double> phi, const Potential& p);
Eigen::VectorXd grad_H(const Torus& t, const Tilt& u, std::span<const double> phi, const Potential& p);
Eigen::VectorXd hess_H_apply(const Torus& t, const Tilt& u, std::span<const double> phi, const Potential& p,
                             std::span<const double> dir);

/// Splitting H = gauss_part + g_part for a potential with c1 = 1:
/// gauss_part = |T||u|^2/2 + ||grad phi||^2/2, g_part = G(u, phi).
struct GaussianSplit {
  double gauss_part = 0.0;
  double g_part = 0.0;
};
GaussianSplit separate(const Torus& t, const Tilt& u, std::span<const double> phi, const Potential& p);

/// Tilt derivatives D_u H (length d) and the diagonal of D_u^2 H.
struct TiltDerivatives {
  Eigen::VectorXd first;
  Eigen::VectorXd second_diag;
};
TiltDerivatives tilt_derivatives(const Torus& t, const Tilt& u, std::span<const double> phi, const Potential& p);

}  // namespace gil
