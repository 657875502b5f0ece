#include "gil/renorm.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gil/conditions.hpp"
#include "gil/error.hpp"
#include "gil/gaussian.hpp"
#include "gil/serialization.hpp"

namespace gil {

namespace {

std::vector<double> with_origin(const Eigen::VectorXd& dof) {
  std::vector<double> s(static_cast<std::size_t>(dof.size()) + 1, 0.0);
  std::copy(dof.data(), dof.data() + dof.size(), s.begin() + 1);
  return s;
}

// s^2 / 2 and its derivatives
double half_square(double s, int order) {
  switch (order) {
    case 0: return 0.5 * s * s;
    case 1: return s;
    default: return 1.0;
  }
}

void require_unit(const Potential& p) {
  if (std::abs(p.constants().c1 - 1.0) > 1e-12) {
    throw PreconditionViolation("the decomposition requires a potential scaled to c1 = 1");
  }
}

}  // namespace

DecompositionPlan DecompositionPlan::make(const Torus& t, const Potential& scaled, std::optional<double> lambda) {
  require_unit(scaled);
  DecompositionPlan plan;
  plan.torus = t;
  plan.potential = scaled;
  plan.cbar = gil::cbar(scaled.constants());
  if (plan.cbar < 1.0) throw InvalidConstants("cbar must be >= 1");
  plan.lambda = lambda ? *lambda : 1.0 / (2.0 * plan.cbar);
  if (!(plan.lambda > 0.0 && plan.lambda <= 1.0)) throw PreconditionViolation("lambda must lie in (0, 1]");
  return plan;
}

InducedH1::InducedH1(const DecompositionPlan& plan, const Tilt& u, const Field& psi) : plan_(plan), u_(u), psi_(psi) {
  require_unit(plan.potential);
  if (u.size() != plan.torus.dim()) throw PreconditionViolation("tilt dimension does not match torus");
  if (psi.volume() != plan.torus.volume()) throw PreconditionViolation("field size does not match torus volume");
}

Eigen::VectorXd InducedH1::combined(const Eigen::VectorXd& theta) const { return psi_.dof() + theta; }

double InducedH1::energy(const Eigen::VectorXd& theta) const {
  const Torus& t = plan_.torus;
  return edge_energy(t, u_, with_origin(combined(theta)), remainder_fn(plan_.potential)) +
         gradient_norm_sq(t, with_origin(theta)) / (2.0 * plan_.lambda);
}

Eigen::VectorXd InducedH1::gradient(const Eigen::VectorXd& theta) const {
  const Torus& t = plan_.torus;
  const Tilt zero = Tilt::Zero(t.dim());
  return edge_gradient(t, u_, with_origin(combined(theta)), remainder_fn(plan_.potential)) +
         edge_gradient(t, zero, with_origin(theta), half_square) / plan_.lambda;
}

Eigen::VectorXd InducedH1::hessian_apply(const Eigen::VectorXd& theta, const Eigen::VectorXd& dir) const {
  const Torus& t = plan_.torus;
  const Tilt zero = Tilt::Zero(t.dim());
  const auto d = with_origin(dir);
  return edge_hessian_apply(t, u_, with_origin(combined(theta)), d, remainder_fn(plan_.potential)) +
         edge_hessian_apply(t, zero, with_origin(theta), d, half_square) / plan_.lambda;
}

double InducedH1::hessian_form(const Eigen::VectorXd& theta, const Eigen::VectorXd& dir) const {
  const Torus& t = plan_.torus;
  const auto d = with_origin(dir);
  return edge_hessian_form(t, u_, with_origin(combined(theta)), d, remainder_fn(plan_.potential)) +
         gradient_norm_sq(t, d) / plan_.lambda;
}

Target InducedH1::target() const {
  const InducedH1 self = *this;
  Target tg;
  tg.energy = [self](const Eigen::VectorXd& x) { return self.energy(x); };
  tg.gradient = [self](const Eigen::VectorXd& x) { return self.gradient(x); };
  tg.beta = 1.0;
  tg.edge_curvature = std::max(0.0, plan_.potential.constants().c2 - 1.0) + 1.0 / plan_.lambda;
  tg.lattice_dim = plan_.torus.dim();
  tg.dof = plan_.torus.dof();
  return tg;
}

ConvexityCertificate certify_h1_convexity(const DecompositionPlan& plan, const Tilt& u, const Field& psi, int n_probes,
                                          std::uint64_t seed, double tolerance) {
  if (n_probes < 1) throw PreconditionViolation("need at least one probe");
  const InducedH1 h1(plan, u, psi);
  const Torus& t = plan.torus;
  ConvexityCertificate c;
  c.delta_m = poincare_constant(t).delta_m;
  c.probes = n_probes;
  c.min_rayleigh = std::numeric_limits<double>::infinity();
  c.min_margin_gradient = std::numeric_limits<double>::infinity();
  c.min_margin_poincare = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> log_amp(std::log(1e-3), std::log(10.0));
  const auto dof = static_cast<Eigen::Index>(t.dof());
  for (int k = 0; k < n_probes; ++k) {
    const double amp = std::exp(log_amp(rng));
    Eigen::VectorXd theta(dof), dir(dof);
    for (Eigen::Index j = 0; j < dof; ++j) theta[j] = amp * normal(rng);
    for (Eigen::Index j = 0; j < dof; ++j) dir[j] = normal(rng);
    const double form = h1.hessian_form(theta, dir);
    const double gn = gradient_norm_sq(t, with_origin(dir));
    const double mg = form - plan.cbar * gn;
    const double mp = form - plan.cbar * c.delta_m * dir.squaredNorm();
    c.min_rayleigh = std::min(c.min_rayleigh, form / gn);
    c.min_margin_gradient = std::min(c.min_margin_gradient, mg);
    c.min_margin_poincare = std::min(c.min_margin_poincare, mp);
    if ((mg < -tolerance || mp < -tolerance) && c.passed) {
      c.passed = false;
      c.witness_theta = theta;
      c.witness_direction = dir;
    }
  }
  return c;
}

Estimate estimate_r1g(const DecompositionPlan& plan, const Tilt& u, const Field& psi, R1Method method,
                      const QuadratureSpec& q, const MonteCarloConfig& mc) {
  if (method == R1Method::Oracle) {
    const RenormOracle oracle(plan.torus, plan.potential, plan.lambda, q);
    const OracleResult r = oracle.r1g(u, psi);
    return scalar_estimate(r.value, q.tolerance, 0.0, EstimateMethod::Oracle);
  }
  if (mc.samples < static_cast<std::size_t>(mc.blocks)) throw PreconditionViolation("too few Monte Carlo samples");
  const Torus& t = plan.torus;
  const SpectralCovariance sc(t);
  std::mt19937_64 rng(mc.seed);
  const ScalarFn g = remainder_fn(plan.potential);
  const Eigen::VectorXd base = psi.dof();
  std::vector<double> logw(mc.samples);
  for (std::size_t k = 0; k < mc.samples; ++k) {
    const Field theta = sc.sample(plan.lambda, rng);
    logw[k] = -edge_energy(t, u, with_origin(Eigen::VectorXd(base + theta.dof())), g);
  }
  const JackknifeResult j = neg_log_mean_exp(logw, mc.blocks);
  if (j.ess < 10.0) throw DegenerateEstimate("importance weights degenerate (ESS < 10); rescale the problem");
  return scalar_estimate(j.value, j.std_error, j.ess, EstimateMethod::Chain);
}

bool CurvatureReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

CurvatureReport verify_c6(const DecompositionPlan& plan, const Tilt& u, const Field& psi,
                          const std::vector<std::pair<Tilt, Eigen::VectorXd>>& directions, const QuadratureSpec& q) {
  RenormOracle oracle(plan.torus, plan.potential, plan.lambda, q);
  oracle.freeze(u, psi);
  const Torus& t = plan.torus;
  const double volume = static_cast<double>(t.volume());
  const Eigen::VectorXd base = psi.dof();
  CurvatureReport rep;
  for (const auto& [u_dot, psi_dot] : directions) {
    if (u_dot.size() != t.dim() || psi_dot.size() != static_cast<Eigen::Index>(t.dof())) {
      throw PreconditionViolation("direction has the wrong shape");
    }
    CurvatureCheck c;
    c.u_dot = u_dot;
    c.psi_dot = psi_dot;
    c.second_derivative = second_derivative_fd([&](double s) {
      return oracle.r1g_frozen(u + s * u_dot, Field::from_dof(Eigen::VectorXd(base + s * psi_dot)));
    });
    c.bound = -0.5 * (volume * u_dot.squaredNorm() + gradient_norm_sq(t, with_origin(psi_dot)));
    c.margin = c.second_derivative - c.bound;
    c.passed = c.margin >= -1e-6;
    rep.checks.push_back(c);
  }
  return rep;
}

CurvatureReport verify_c7(const DecompositionPlan& plan, const Tilt& u, const std::vector<Tilt>& directions,
                          const QuadratureSpec& q) {
  RenormOracle oracle(plan.torus, plan.potential, plan.lambda, q);
  const int order = oracle.r2r1g(u).node_order;
  const double volume = static_cast<double>(plan.torus.volume());
  CurvatureReport rep;
  for (const auto& u_dot : directions) {
    if (u_dot.size() != plan.torus.dim()) throw PreconditionViolation("direction has the wrong shape");
    CurvatureCheck c;
    c.u_dot = u_dot;
    c.psi_dot = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(plan.torus.dof()));
    c.second_derivative = second_derivative_fd([&](double s) { return oracle.r2r1g_fixed(u + s * u_dot, order); });
    c.bound = -0.5 * volume * u_dot.squaredNorm();
    c.margin = c.second_derivative - c.bound;
    c.passed = c.margin >= -1e-6;
    rep.checks.push_back(c);
  }
  return rep;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::OutOfHypothesis: return "out_of_hypothesis";
  }
  return "unknown";
}

bool TheoremReport::all_passed() const {
  for (const auto& r : rows)
    if (r.verdict == Verdict::Fail) return false;
  return true;
}

TheoremReport verify_theorem(const Potential& p, double beta, int d, int m, const std::vector<Tilt>& u_grid,
                             const TheoremOptions& opts) {
  const Torus t(d, m);
  const ConditionReport cond = check_fcond(beta, d, p, norms(p));
  TheoremReport rep;
  rep.beta = beta;
  rep.in_hypothesis = cond.fcond_satisfied;
  const double c1 = p.constants().c1;
  const double bound = 0.5 * c1 * static_cast<double>(t.volume());
  const bool oracle = opts.prefer_oracle && t.dof() <= static_cast<std::size_t>(opts.quadrature.max_dof);
  for (const Tilt& u : u_grid) {
    if (u.size() != d) throw PreconditionViolation("tilt dimension does not match torus");
    TheoremRow row;
    row.u = u;
    row.bound = bound;
    Eigen::MatrixXd H;
    if (oracle) {
      const FreeEnergyOracle f(p, t, beta, opts.quadrature, u);
      H = hessian_fd([&f](const Tilt& v) { return f(v); }, u, opts.fd_step);
      // Richardson correction size as the discretization error indicator
      const Eigen::MatrixXd coarse = hessian_fd([&f](const Tilt& v) { return f(v); }, u, opts.fd_step / 2.0, false);
      row.std_error = (H - coarse).cwiseAbs().maxCoeff();
      row.method = EstimateMethod::Oracle;
    } else {
      const UnitScaling us = scale_to_unit(p, beta);
      const FluctuationResult fr = fluctuation_hessian(us.tilt_scale * u, us.potential, t, opts.chain);
      H = c1 * fr.hessian.value;
      row.std_error = c1 * fr.hessian.std_error.maxCoeff();
      row.method = EstimateMethod::Chain;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
    row.hessian_min_eig = es.eigenvalues()(0);
    row.margin = row.hessian_min_eig - bound;
    if (!rep.in_hypothesis) {
      row.verdict = Verdict::OutOfHypothesis;
    } else {
      const double allowance = opts.tolerance + (row.method == EstimateMethod::Chain ? 4.0 * row.std_error : 0.0);
      row.verdict = row.margin >= -allowance ? Verdict::Pass : Verdict::Fail;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

std::string theorem_csv(const TheoremReport& r, int d) {
  std::ostringstream os;
  for (int i = 0; i < d; ++i) os << "u_" << (i + 1) << ',';
  os << "hessian_min_eig,bound,margin,method,std_error,verdict\n";
  for (const auto& row : r.rows) {
    for (int i = 0; i < d; ++i) os << format_double(row.u[i]) << ',';
    os << format_double(row.hessian_min_eig) << ',' << format_double(row.bound) << ',' << format_double(row.margin)
       << ',' << to_string(row.method) << ',' << format_double(row.std_error) << ',' << to_string(row.verdict) << '\n';
  }
  return os.str();
}

}  // namespace gil
