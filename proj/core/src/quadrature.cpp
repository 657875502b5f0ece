#include "gil/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "gil/conditions.hpp"
#include "gil/error.hpp"
#include "gil/gaussian.hpp"
#include "gil/parallel.hpp"

namespace gil {

std::string to_string(QuadratureRule r) {
  switch (r) {
    case QuadratureRule::Auto: return "auto";
    case QuadratureRule::GaussHermite: return "gauss_hermite";
    case QuadratureRule::EdgeConvolution: return "edge_convolution";
  }
  return "unknown";
}

void QuadratureSpec::validate() const {
  if (nodes_per_dim < 8) throw PreconditionViolation("nodes_per_dim must be >= 8");
  if (max_nodes < nodes_per_dim) throw PreconditionViolation("max_nodes must be >= nodes_per_dim");
  if (max_dof < 1 || max_dof > 5) throw PreconditionViolation("max_dof must lie in [1, 5]");
  if (!(tolerance > 0.0)) throw PreconditionViolation("tolerance must be positive");
  if (envelope_scale < 0.0) throw PreconditionViolation("envelope_scale must be >= 0");
  if (!(weight_cutoff >= 0.0 && weight_cutoff < 1.0)) throw PreconditionViolation("weight_cutoff must lie in [0, 1)");
}

HermiteRule gauss_hermite(int n) {
  if (n < 1) throw PreconditionViolation("Gauss-Hermite order must be >= 1");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    J(k, k - 1) = std::sqrt(static_cast<double>(k));
    J(k - 1, k) = J(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  HermiteRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    r.nodes[k] = es.eigenvalues()(k);
    const double v = es.eigenvectors()(0, k);
    r.weights[k] = v * v;
    total += r.weights[k];
  }
  for (double& w : r.weights) w /= total;
  // exact symmetry
  for (int k = 0; k < n / 2; ++k) {
    const double x = 0.5 * (r.nodes[n - 1 - k] - r.nodes[k]);
    const double w = 0.5 * (r.weights[k] + r.weights[n - 1 - k]);
    r.nodes[k] = -x;
    r.nodes[n - 1 - k] = x;
    r.weights[k] = r.weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

namespace {

struct PinnedModes {
  Eigen::MatrixXd basis;  // columns are orthonormal eigenvectors
  Eigen::VectorXd eigenvalues;
};

PinnedModes pinned_modes(const Torus& t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pinned_dirichlet_form(t));
  return {es.eigenvectors(), es.eigenvalues()};
}

struct LseAccumulator {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;

  void add(double x) {
    if (x == -std::numeric_limits<double>::infinity()) return;
    if (x > max) {
      sum = sum * std::exp(max - x) + 1.0;
      max = x;
    } else {
      sum += std::exp(x - max);
    }
  }
  void merge(const LseAccumulator& o) {
    if (o.sum == 0.0) return;
    if (sum == 0.0) {
      *this = o;
      return;
    }
    if (o.max > max) {
      sum = sum * std::exp(max - o.max) + o.sum;
      max = o.max;
    } else {
      sum += o.sum * std::exp(o.max - max);
    }
  }
  double value() const { return sum == 0.0 ? -std::numeric_limits<double>::infinity() : max + std::log(sum); }
};

// log E[exp(log_f(Z))] for Z standard normal in `dim` dimensions, tensor rule
// with pruning of points whose weight is below cutoff * (max weight)^dim.
double gh_log_expectation(int dim, int order, double cutoff, int threads,
                          const std::function<double(const Eigen::VectorXd&)>& log_f) {
  const HermiteRule rule = gauss_hermite(order);
  std::vector<double> logw(order);
  for (int k = 0; k < order; ++k) logw[k] = std::log(rule.weights[k]);
  const double logw_max = *std::max_element(logw.begin(), logw.end());
  const double floor = cutoff > 0.0 ? std::log(cutoff) + dim * logw_max : -std::numeric_limits<double>::infinity();

  std::vector<LseAccumulator> parts(order);
  parallel_for(static_cast<std::size_t>(order), threads, [&](std::size_t first) {
    Eigen::VectorXd z(dim);
    LseAccumulator acc;
    // remaining dimensions can contribute at most logw_max each
    std::function<void(int, double)> rec = [&](int k, double lw) {
      if (lw + (dim - k) * logw_max < floor) return;
      if (k == dim) {
        acc.add(lw + log_f(z));
        return;
      }
      for (int j = 0; j < order; ++j) {
        z[k] = rule.nodes[j];
        rec(k + 1, lw + logw[j]);
      }
    };
    z[0] = rule.nodes[first];
    rec(1, logw[first]);
    parts[first] = acc;
  });
  LseAccumulator total;
  for (const auto& p : parts) total.merge(p);
  return total.value();
}

QuadratureRule resolve_rule(const QuadratureSpec& q, const Torus& t) {
  if (q.rule == QuadratureRule::Auto) return t.dim() == 1 ? QuadratureRule::EdgeConvolution : QuadratureRule::GaussHermite;
  if (q.rule == QuadratureRule::EdgeConvolution && t.dim() != 1) {
    throw PreconditionViolation("edge convolution is available in d = 1 only");
  }
  return q.rule;
}

void check_oracle_size(const Torus& t, const QuadratureSpec& q) {
  q.validate();
  if (t.dof() > static_cast<std::size_t>(q.max_dof)) {
    throw PreconditionViolation("system exceeds the quadrature dof cap");
  }
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// log Z in d = 1 on a fixed grid: gradients eta_x = grad phi(x) with
// sum_x eta_x = 0 parametrize pinned fields with unit Jacobian.
double log_partition_conv(double u, const Potential& p, const Torus& t, double beta, const ConvolutionGrid& g) {
  NegLogKernel e = [&p, u, beta](double eta) { return beta * p.eval(u + eta, 0); };
  return log_constrained_integral_power(e, t.side(), g);
}

ConvolutionResult converge_partition_conv(double u, const Potential& p, const Torus& t, double beta, double tol) {
  const CurvatureConstants c = p.constants();
  const double width = 1.0 / std::sqrt(beta * c.c2);
  const double step = std::min(width, p.feature_scale()) / 16.0;
  const double radius = std::abs(u) + max_abs(p.breakpoints()) + 14.0 / std::sqrt(beta * c.c1);
  NegLogKernel e = [&p, u, beta](double eta) { return beta * p.eval(u + eta, 0); };
  std::vector<NegLogKernel> ks{e};
  return refine_grid([&](const ConvolutionGrid& g) { return log_partition_conv(u, p, t, beta, g); }, ks,
                     ConvolutionGrid::make(step, radius), tol);
}

double kappa_for(const Potential& p, double beta, const QuadratureSpec& q) {
  return q.envelope_scale > 0.0 ? q.envelope_scale : beta * p.constants().c1;
}

double log_partition_gh(const Tilt& u, const Potential& p, const Torus& t, double beta, const QuadratureSpec& q,
                        const PinnedModes& modes, int order) {
  const double kappa = kappa_for(p, beta, q);
  const auto dof = static_cast<int>(t.dof());
  const Eigen::VectorXd scale = (kappa * modes.eigenvalues.array()).rsqrt().matrix();
  const double lse = gh_log_expectation(dof, order, q.weight_cutoff, q.threads, [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd phi = modes.basis * scale.cwiseProduct(z);
    const Field f = Field::from_dof(phi);
    // exp(-beta H) / envelope, envelope exp(-|z|^2/2)
    return -beta * hamiltonian(t, u, f.sites(), p) + 0.5 * z.squaredNorm();
  });
  return 0.5 * dof * std::log(2.0 * std::numbers::pi / kappa) - 0.5 * modes.eigenvalues.array().log().sum() + lse;
}

template <class Eval>
OracleResult converge_order(const QuadratureSpec& q, Eval eval) {
  OracleResult r;
  r.method = QuadratureRule::GaussHermite;
  int n = q.nodes_per_dim;
  double prev = eval(n);
  while (2 * n <= q.max_nodes) {
    const double v = eval(2 * n);
    n *= 2;
    if (std::abs(v - prev) < q.tolerance) {
      r.value = v;
      r.node_order = n;
      r.converged = true;
      return r;
    }
    prev = v;
  }
  throw QuadratureFailure("Gauss-Hermite did not converge at the node cap");
}

void check_tilt(const Tilt& u, const Torus& t) {
  if (u.size() != t.dim()) throw PreconditionViolation("tilt dimension does not match torus");
  if (!u.allFinite()) throw PreconditionViolation("tilt must be finite");
}

}  // namespace

OracleResult log_partition(const Tilt& u, const Potential& p, const Torus& t, double beta, const QuadratureSpec& q) {
  check_oracle_size(t, q);
  check_tilt(u, t);
  if (!(beta > 0.0)) throw PreconditionViolation("beta must be positive");
  const QuadratureRule rule = resolve_rule(q, t);
  if (rule == QuadratureRule::EdgeConvolution) {
    const ConvolutionResult c = converge_partition_conv(u[0], p, t, beta, q.tolerance * 1e-2);
    if (!c.converged) throw QuadratureFailure("edge convolution did not converge at the point cap");
    return {c.value, static_cast<int>(c.grid.points()), true, rule};
  }
  const PinnedModes modes = pinned_modes(t);
  return converge_order(q, [&](int n) { return log_partition_gh(u, p, t, beta, q, modes, n); });
}

OracleResult free_energy(const Tilt& u, const Potential& p, const Torus& t, double beta, const QuadratureSpec& q) {
  OracleResult r = log_partition(u, p, t, beta, q);
  r.value = -r.value / beta;
  return r;
}

FreeEnergyOracle::FreeEnergyOracle(const Potential& p, const Torus& t, double beta, const QuadratureSpec& q,
                                   const Tilt& anchor)
    : potential_(p), torus_(t), beta_(beta), spec_(q) {
  check_oracle_size(t, q);
  check_tilt(anchor, t);
  const QuadratureRule rule = resolve_rule(q, t);
  if (rule == QuadratureRule::EdgeConvolution) {
    const ConvolutionResult c = converge_partition_conv(anchor[0], p, t, beta, q.tolerance * 1e-2);
    if (!c.converged) throw QuadratureFailure("edge convolution did not converge at the point cap");
    // keep room for stencil and grid tilts around the anchor
    grid_ = ConvolutionGrid::make(c.grid.step, c.grid.radius + 1.0 / std::sqrt(beta * p.constants().c1));
    anchor_ = {-c.value / beta, static_cast<int>(grid_.points()), true, rule};
  } else {
    anchor_ = log_partition(anchor, p, t, beta, q);
    anchor_.value = -anchor_.value / beta;
  }
  spec_.rule = rule;
}

double FreeEnergyOracle::operator()(const Tilt& u) const {
  check_tilt(u, torus_);
  if (spec_.rule == QuadratureRule::EdgeConvolution) {
    return -log_partition_conv(u[0], potential_, torus_, beta_, grid_) / beta_;
  }
  const PinnedModes modes = pinned_modes(torus_);
  return -log_partition_gh(u, potential_, torus_, beta_, spec_, modes, anchor_.node_order) / beta_;
}

namespace {

Eigen::MatrixXd hessian_stencil(const std::function<double(const Tilt&)>& f, const Tilt& u, double h) {
  const auto d = u.size();
  Eigen::MatrixXd H(d, d);
  const double f0 = f(u);
  auto at = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
    Tilt v = u;
    v[i] += si * h;
    if (j >= 0) v[j] += sj * h;
    return f(v);
  };
  for (Eigen::Index i = 0; i < d; ++i) {
    H(i, i) = (at(i, 1, -1, 0) - 2.0 * f0 + at(i, -1, -1, 0)) / (h * h);
    for (Eigen::Index j = i + 1; j < d; ++j) {
      H(i, j) = (at(i, 1, j, 1) - at(i, 1, j, -1) - at(i, -1, j, 1) + at(i, -1, j, -1)) / (4.0 * h * h);
      H(j, i) = H(i, j);
    }
  }
  return H;
}

}  // namespace

Eigen::MatrixXd hessian_fd(const std::function<double(const Tilt&)>& f, const Tilt& u, double h, bool richardson) {
  if (!(h > 0.0)) throw PreconditionViolation("finite-difference step must be positive");
  Eigen::MatrixXd H = hessian_stencil(f, u, h);
  if (richardson) H = (4.0 * hessian_stencil(f, u, h / 2.0) - H) / 3.0;
  return 0.5 * (H + H.transpose());
}

double second_derivative_fd(const std::function<double(double)>& f, double h, bool richardson) {
  if (!(h > 0.0)) throw PreconditionViolation("finite-difference step must be positive");
  const double f0 = f(0.0);
  auto d2 = [&](double s) { return (f(s) - 2.0 * f0 + f(-s)) / (s * s); };
  const double coarse = d2(h);
  return richardson ? (4.0 * d2(h / 2.0) - coarse) / 3.0 : coarse;
}

namespace {

double renorm_gh(const FieldFunctional& f, double variance_scale, const Tilt& u, const Field& a, const Torus& t,
                 const PinnedModes& modes, int order, const QuadratureSpec& q) {
  const auto dof = static_cast<int>(t.dof());
  const Eigen::VectorXd scale = (modes.eigenvalues.array() / variance_scale).rsqrt().matrix();
  const Eigen::VectorXd base = a.dof();
  const double lse = gh_log_expectation(dof, order, q.weight_cutoff, q.threads, [&](const Eigen::VectorXd& z) {
    const Field shifted = Field::from_dof(Eigen::VectorXd(base + modes.basis * scale.cwiseProduct(z)));
    return -f(u, shifted.sites());
  });
  return -lse;
}

void check_renorm_args(double variance_scale, const Field& a, const Torus& t) {
  if (!(variance_scale > 0.0 && variance_scale <= 1.0)) throw PreconditionViolation("variance scale must lie in (0, 1]");
  if (a.volume() != t.volume()) throw PreconditionViolation("field size does not match torus volume");
}

}  // namespace

OracleResult renorm_apply(const FieldFunctional& f, double variance_scale, const Tilt& u, const Field& a,
                          const Torus& t, const QuadratureSpec& q) {
  check_oracle_size(t, q);
  check_renorm_args(variance_scale, a, t);
  const PinnedModes modes = pinned_modes(t);
  return converge_order(q, [&](int n) { return renorm_gh(f, variance_scale, u, a, t, modes, n, q); });
}

double renorm_apply_fixed(const FieldFunctional& f, double variance_scale, const Tilt& u, const Field& a,
                          const Torus& t, int order, const QuadratureSpec& q) {
  check_oracle_size(t, q);
  check_renorm_args(variance_scale, a, t);
  return renorm_gh(f, variance_scale, u, a, t, pinned_modes(t), order, q);
}

RenormOracle::RenormOracle(const Torus& t, const Potential& scaled, double lambda, const QuadratureSpec& q)
    : torus_(t), potential_(scaled), lambda_(lambda), spec_(q) {
  check_oracle_size(t, q);
  if (std::abs(scaled.constants().c1 - 1.0) > 1e-12) {
    throw PreconditionViolation("renormalization oracle requires a potential scaled to c1 = 1");
  }
  if (!(lambda > 0.0 && lambda < 1.0)) throw PreconditionViolation("lambda must lie in (0, 1)");
  spec_.rule = resolve_rule(q, t);
}

std::vector<NegLogKernel> RenormOracle::r1_kernels(const Tilt& u, const Field& psi, bool gaussian_only) const {
  std::vector<NegLogKernel> ks;
  const double inv = 1.0 / (2.0 * lambda_);
  for (std::size_t x = 0; x < torus_.volume(); ++x) {
    const double shift = u[0] + grad(torus_, psi.sites(), x, 0);
    if (gaussian_only) {
      ks.emplace_back([inv](double eta) { return inv * eta * eta; });
    } else {
      const Potential& p = potential_;
      ks.emplace_back([&p, shift, inv](double eta) { return p.remainder(shift + eta, 0) + inv * eta * eta; });
    }
  }
  return ks;
}

ConvolutionGrid RenormOracle::initial_grid(const Tilt&) const {
  const double width = std::sqrt(lambda_);
  const double step = std::min(width, potential_.feature_scale()) / 16.0;
  return ConvolutionGrid::make(step, 14.0 * width);
}

double RenormOracle::r1g_on_grid(const Tilt& u, const Field& psi, const ConvolutionGrid& g) const {
  const auto ks = r1_kernels(u, psi, false);
  // closed-form normalization of the Gaussian edge measure
  const double m = torus_.side();
  const double gauss = 0.5 * m * std::log(2.0 * std::numbers::pi * lambda_) -
                       0.5 * std::log(2.0 * std::numbers::pi * m * lambda_);
  return -(log_constrained_integral(ks, g, FftPrecision::Double) - gauss);
}

OracleResult RenormOracle::r1g(const Tilt& u, const Field& psi) const {
  check_tilt(u, torus_);
  if (spec_.rule == QuadratureRule::EdgeConvolution) {
    const auto ks = r1_kernels(u, psi, false);
    const ConvolutionResult c = refine_grid([&](const ConvolutionGrid& g) { return r1g_on_grid(u, psi, g); }, ks,
                                            initial_grid(u), spec_.tolerance * 1e-2);
    if (!c.converged) throw QuadratureFailure("edge convolution did not converge at the point cap");
    return {c.value, static_cast<int>(c.grid.points()), true, spec_.rule};
  }
  const Potential& p = potential_;
  const Torus& t = torus_;
  FieldFunctional G = [&p, &t](const Tilt& v, std::span<const double> s) {
    return edge_energy(t, v, s, remainder_fn(p));
  };
  return renorm_apply(G, lambda_, u, psi, torus_, spec_);
}

void RenormOracle::freeze(const Tilt& u, const Field& psi) {
  if (spec_.rule == QuadratureRule::EdgeConvolution) {
    const auto ks = r1_kernels(u, psi, false);
    const ConvolutionResult c = refine_grid([&](const ConvolutionGrid& g) { return r1g_on_grid(u, psi, g); }, ks,
                                            initial_grid(u), spec_.tolerance * 1e-2);
    if (!c.converged) throw QuadratureFailure("edge convolution did not converge at the point cap");
    frozen_grid_ = c.grid;
  } else {
    frozen_order_ = r1g(u, psi).node_order;
  }
  frozen_ = true;
}

double RenormOracle::r1g_frozen(const Tilt& u, const Field& psi) const {
  if (!frozen_) throw PreconditionViolation("freeze() must be called before frozen evaluation");
  if (spec_.rule == QuadratureRule::EdgeConvolution) return r1g_on_grid(u, psi, frozen_grid_);
  const Potential& p = potential_;
  const Torus& t = torus_;
  FieldFunctional G = [&p, &t](const Tilt& v, std::span<const double> s) {
    return edge_energy(t, v, s, remainder_fn(p));
  };
  return renorm_apply_fixed(G, lambda_, u, psi, torus_, frozen_order_, spec_);
}

double RenormOracle::r2r1g_fixed(const Tilt& u, int outer_order) const {
  FieldFunctional inner = [this](const Tilt& v, std::span<const double> s) {
    return r1g_frozen(v, Field::pinned(s));
  };
  return renorm_apply_fixed(inner, 1.0 - lambda_, u, Field(torus_), torus_, outer_order, spec_);
}

OracleResult RenormOracle::r2r1g(const Tilt& u) {
  check_tilt(u, torus_);
  if (!frozen_) freeze(u, Field(torus_));
  OracleResult r = converge_order(spec_, [&](int n) { return r2r1g_fixed(u, n); });
  r.method = spec_.rule;
  return r;
}

OracleResult RenormOracle::joint_r2r1g(const Tilt& u) const {
  check_tilt(u, torus_);
  const Potential& p = potential_;
  if (spec_.rule != QuadratureRule::EdgeConvolution) {
    // both Gaussian fields in mode coordinates, 2 * dof dimensional tensor rule
    const PinnedModes modes = pinned_modes(torus_);
    const auto dof = static_cast<int>(torus_.dof());
    const Eigen::VectorXd s1 = (modes.eigenvalues.array() / lambda_).rsqrt().matrix();
    const Eigen::VectorXd s2 = (modes.eigenvalues.array() / (1.0 - lambda_)).rsqrt().matrix();
    const Torus& t = torus_;
    QuadratureSpec q = spec_;
    auto eval = [&](int n) {
      return -gh_log_expectation(2 * dof, n, q.weight_cutoff, q.threads, [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd phi = modes.basis * (s1.cwiseProduct(z.head(dof)) + s2.cwiseProduct(z.tail(dof)));
        return -edge_energy(t, u, Field::from_dof(phi).sites(), remainder_fn(p));
      });
    };
    return converge_order(q, eval);
  }
  // d = 1: per edge, a = grad theta(x) and s = grad (theta + psi)(x); the map
  // (theta, psi) -> (a, s) has unit Jacobian and both sums vanish.
  const double l1 = lambda_;
  const double l2 = 1.0 - lambda_;
  const double shift = u[0];
  const int m = torus_.side();
  std::vector<NegLogKernel2> full(m, [&p, shift, l1, l2](double a, double s) {
    const double b = s - a;
    return p.remainder(shift + s, 0) + a * a / (2.0 * l1) + b * b / (2.0 * l2);
  });
  std::vector<NegLogKernel2> gauss(m, [l1, l2](double a, double s) {
    const double b = s - a;
    return a * a / (2.0 * l1) + b * b / (2.0 * l2);
  });
  const double reach = std::abs(shift) + max_abs(p.breakpoints());
  const ConvolutionGrid ga = ConvolutionGrid::make(std::sqrt(l1 * l2) / 4.0, 12.0 * std::sqrt(l1) + l1 * reach);
  auto eval = [&](const ConvolutionGrid& a_grid, const ConvolutionGrid& s_grid) {
    return -(log_constrained_integral_2d(full, a_grid, s_grid) - log_constrained_integral_2d(gauss, a_grid, s_grid));
  };
  const double s_radius = 12.0 + reach;
  double step = std::min(1.0, p.feature_scale()) / 16.0;
  const double tol = spec_.tolerance * 1e-1;
  double prev = eval(ga, ConvolutionGrid::make(step, s_radius));
  OracleResult r;
  r.method = QuadratureRule::EdgeConvolution;
  for (;;) {
    step /= 2.0;
    const ConvolutionGrid gs = ConvolutionGrid::make(step, s_radius);
    if (gs.points() > (std::size_t{1} << 15)) throw QuadratureFailure("joint quadrature did not converge");
    const double v = eval(ga, gs);
    if (std::abs(v - prev) < tol) {
      // the Gaussian direction must be resolved as well
      const double check = eval(ConvolutionGrid::make(ga.step / 2.0, ga.radius), gs);
      if (std::abs(check - v) >= tol) throw QuadratureFailure("joint quadrature unresolved in the Gaussian direction");
      r.value = v;
      r.node_order = static_cast<int>(gs.points());
      r.converged = true;
      return r;
    }
    prev = v;
  }
}

}  // namespace gil
