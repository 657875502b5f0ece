#include "gil/lattice.hpp"

#include <cmath>

#include "gil/error.hpp"

namespace gil {

Torus::Torus(int d, int m) : d_(d), m_(m), volume_(1) {
  if (d < 1) throw PreconditionViolation("torus dimension must be >= 1");
  if (m < 2) throw PreconditionViolation("torus side must be >= 2");
  for (int k = 0; k < d; ++k) volume_ *= static_cast<std::size_t>(m);
  fwd_.resize(volume_ * d);
  bwd_.resize(volume_ * d);
  std::vector<std::size_t> stride(d);
  std::size_t s = 1;
  for (int k = d - 1; k >= 0; --k) {
    stride[k] = s;
    s *= static_cast<std::size_t>(m);
  }
  for (std::size_t x = 0; x < volume_; ++x) {
    for (int i = 0; i < d; ++i) {
      const std::size_t c = (x / stride[i]) % m;
      const std::size_t up = (c + 1 == static_cast<std::size_t>(m)) ? x - c * stride[i] : x + stride[i];
      const std::size_t down = (c == 0) ? x + (m - 1) * stride[i] : x - stride[i];
      fwd_[x * d + i] = up;
      bwd_[x * d + i] = down;
    }
  }
}

std::vector<int> Torus::coords(std::size_t x) const {
  std::vector<int> c(d_);
  for (int k = d_ - 1; k >= 0; --k) {
    c[k] = static_cast<int>(x % m_);
    x /= m_;
  }
  return c;
}

std::size_t Torus::index(std::span<const int> coords) const {
  if (coords.size() != static_cast<std::size_t>(d_)) throw PreconditionViolation("coordinate rank mismatch");
  std::size_t x = 0;
  for (int c : coords) x = x * m_ + static_cast<std::size_t>(((c % m_) + m_) % m_);
  return x;
}

Field Field::pinned(std::span<const double> sites) {
  if (sites.empty()) throw PreconditionViolation("empty field");
  Field f;
  f.values_.resize(static_cast<Eigen::Index>(sites.size()));
  for (std::size_t x = 0; x < sites.size(); ++x) f.values_[static_cast<Eigen::Index>(x)] = sites[x] - sites[0];
  return f;
}

Field Field::from_dof(std::span<const double> dof) {
  Field f;
  f.values_.resize(static_cast<Eigen::Index>(dof.size() + 1));
  f.values_[0] = 0.0;
  for (std::size_t k = 0; k < dof.size(); ++k) f.values_[static_cast<Eigen::Index>(k + 1)] = dof[k];
  return f;
}

Field Field::from_dof(const Eigen::VectorXd& dof) {
  return from_dof(std::span<const double>(dof.data(), static_cast<std::size_t>(dof.size())));
}

void Field::set(std::size_t x, double v) {
  if (x == 0) throw PreconditionViolation("the origin of a pinned field is fixed at 0");
  values_[static_cast<Eigen::Index>(x)] = v;
}

namespace {

void check_shapes(const Torus& t, const Tilt& u, std::span<const double> phi) {
  if (phi.size() != t.volume()) throw PreconditionViolation("field size does not match torus volume");
  if (u.size() != t.dim()) throw PreconditionViolation("tilt dimension does not match torus");
}

}  // namespace

double grad(const Torus& t, std::span<const double> phi, std::size_t x, int axis) {
  return phi[t.forward(x, axis)] - phi[x];
}

double gradient_norm_sq(const Torus& t, std::span<const double> phi) {
  double s = 0.0;
  for (std::size_t x = 0; x < t.volume(); ++x)
    for (int i = 0; i < t.dim(); ++i) {
      const double g = phi[t.forward(x, i)] - phi[x];
      s += g * g;
    }
  return s;
}

double edge_energy(const Torus& t, const Tilt& u, std::span<const double> phi, const ScalarFn& f) {
  check_shapes(t, u, phi);
  double e = 0.0;
  for (std::size_t x = 0; x < t.volume(); ++x)
    for (int i = 0; i < t.dim(); ++i) e += f(u[i] + phi[t.forward(x, i)] - phi[x], 0);
  return e;
}

Eigen::VectorXd edge_gradient(const Torus& t, const Tilt& u, std::span<const double> phi, const ScalarFn& f) {
  check_shapes(t, u, phi);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.volume()));
  for (std::size_t x = 0; x < t.volume(); ++x)
    for (int i = 0; i < t.dim(); ++i) {
      const std::size_t y = t.forward(x, i);
      const double fp = f(u[i] + phi[y] - phi[x], 1);
      full[static_cast<Eigen::Index>(y)] += fp;
      full[static_cast<Eigen::Index>(x)] -= fp;
    }
  return full.tail(full.size() - 1);
}

Eigen::VectorXd edge_hessian_apply(const Torus& t, const Tilt& u, std::span<const double> phi,
                                   std::span<const double> dir, const ScalarFn& f) {
  check_shapes(t, u, phi);
  if (dir.size() != t.volume()) throw PreconditionViolation("direction size does not match torus volume");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.volume()));
  for (std::size_t x = 0; x < t.volume(); ++x)
    for (int i = 0; i < t.dim(); ++i) {
      const std::size_t y = t.forward(x, i);
      const double w = f(u[i] + phi[y] - phi[x], 2) * (dir[y] - dir[x]);
      full[static_cast<Eigen::Index>(y)] += w;
      full[static_cast<Eigen::Index>(x)] -= w;
    }
  return full.tail(full.size() - 1);
}

double edge_hessian_form(const Torus& t, const Tilt& u, std::span<const double> phi, std::span<const double> dir,
                         const ScalarFn& f) {
  check_shapes(t, u, phi);
  double q = 0.0;
  for (std::size_t x = 0; x < t.volume(); ++x)
    for (int i = 0; i < t.dim(); ++i) {
      const std::size_t y = t.forward(x, i);
      const double g = dir[y] - dir[x];
      q += f(u[i] + phi[y] - phi[x], 2) * g * g;
    }
  return q;
}

ScalarFn potential_fn(const Potential& p) {
  return [p](double s, int order) { return p.eval(s, order); };
}

ScalarFn remainder_fn(const Potential& p) {
  return [p](double s, int order) { return p.remainder(s, order); };
}

double hamiltonian(const Torus& t, const Tilt& u, std::span<const double> phi, const Potential& p) {
  return edge_energy(t, u, phi, potential_fn(p));
}

Eigen::VectorXd grad_H(const Torus& t, const Tilt& u, std::span<const double> phi, const Potential& p) {
  return edge_gradient(t, u, phi, potential_fn(p));
}

Eigen::VectorXd hess_H_apply(const Torus& t, const Tilt& u, std::span<const double> phi, const Potential& p,
                             std::span<const double> dir) {
  return edge_hessian_apply(t, u, phi, dir, potential_fn(p));
}

GaussianSplit separate(const Torus& t, const Tilt& u, std::span<const double> phi, const Potential& p) {
  if (std::abs(p.constants().c1 - 1.0) > 1e-12) {
    throw PreconditionViolation("separate requires a potential scaled to c1 = 1");
  }
  check_shapes(t, u, phi);
  GaussianSplit s;
  s.gauss_part = 0.5 * static_cast<double>(t.volume()) * u.squaredNorm() + 0.5 * gradient_norm_sq(t, phi);
  s.g_part = edge_energy(t, u, phi, remainder_fn(p));
  return s;
}

TiltDerivatives tilt_derivatives(const Torus& t, const Tilt& u, std::span<const double> phi, const Potential& p) {
  check_shapes(t, u, phi);
  TiltDerivatives out{Eigen::VectorXd::Zero(t.dim()), Eigen::VectorXd::Zero(t.dim())};
  for (std::size_t x = 0; x < t.volume(); ++x)
    for (int i = 0; i < t.dim(); ++i) {
      const double s = u[i] + phi[t.forward(x, i)] - phi[x];
      out.first[i] += p.eval(s, 1);
      out.second_diag[i] += p.eval(s, 2);
    }
  return out;
}

}  // namespace gil
