#include "gil/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gil/error.hpp"

namespace gil {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// lhs = k * beta^power; returns the beta at which lhs == target.
double solve_power(double k, double power, double target) {
  if (k == 0.0) return kInf;
  if (!std::isfinite(k)) return 0.0;
  return std::pow(target / k, 1.0 / power);
}

double times_power(double k, double beta, double power) {
  if (k == 0.0) return 0.0;
  return k * std::pow(beta, power);
}

}  // namespace

double cbar(double c0, double c1, double c2) {
  if (!(c1 > 0.0)) throw InvalidConstants("c1 must be positive");
  if (!(c0 >= 0.0)) throw InvalidConstants("c0 must be nonnegative");
  if (!(c2 >= c1)) throw InvalidConstants("c2 must be at least c1");
  return std::max({c0 / c1, c2 / c1 - 1.0, 1.0});
}

double cbar(const CurvatureConstants& c) { return cbar(c.c0, c.c1, c.c2); }

ConditionReport evaluate_conditions(double beta, int d, const Potential& p, const NormReport& nr) {
  if (!(beta > 0.0)) throw PreconditionViolation("beta must be positive");
  if (d < 1) throw PreconditionViolation("dimension must be at least 1");

  ConditionReport r;
  r.beta = beta;
  r.d = d;
  r.constants = p.constants();
  r.norms = nr;
  const double c1 = r.constants.c1;
  const double cb = cbar(r.constants);
  r.cbar = cb;
  const double dd = static_cast<double>(d);
  const double eps = nr.quadrature_error;

  // lhs_fcond = kf * beta^{1/2}
  const double pref_f = 4.0 / std::numbers::pi * std::sqrt(12.0 * dd * cb) * std::sqrt(c1) / c1;
  // lhs_9 = k9 * beta^{3/4}
  const double pref_9 = 50.0 / std::sqrt(2.0 * std::numbers::pi) * dd * cb * std::pow(c1, 0.75) / c1;
  // lhs_11 = k11 * beta^{3/2}
  const double c11 = 2500.0 / (2.0 * std::numbers::pi);
  const double pref_11 = c11 * dd * dd * cb * cb * cb * std::pow(c1, 1.5) / c1;

  const double kf = pref_f * nr.l1_g0pp;
  const double k9 = pref_9 * nr.l2_g0p;
  const double k11 = pref_11 * nr.l1_g0;

  r.lhs_fcond = times_power(kf, beta, 0.5);
  r.lhs_9 = times_power(k9, beta, 0.75);
  r.lhs_11 = times_power(k11, beta, 1.5);
  r.lhs_fcond_pessimistic = times_power(pref_f * (nr.l1_g0pp + eps), beta, 0.5);
  r.lhs_9_pessimistic = times_power(pref_9 * (nr.l2_g0p + eps), beta, 0.75);
  r.lhs_11_pessimistic = times_power(pref_11 * (nr.l1_g0 + eps), beta, 1.5);

  r.beta_max_fcond = solve_power(kf, 0.5, 0.5);
  r.beta_max_9 = solve_power(k9, 0.75, 0.5);
  r.beta_max_11 = solve_power(k11, 1.5, 0.25);

  r.fcond_satisfied = r.lhs_fcond <= 0.5;
  r.alt9_satisfied = r.lhs_9 <= 0.5;
  r.alt11_satisfied = r.lhs_11 <= 0.25;
  r.fcond_satisfied_pessimistic = r.lhs_fcond_pessimistic <= 0.5;
  r.alt9_satisfied_pessimistic = r.lhs_9_pessimistic <= 0.5;
  r.alt11_satisfied_pessimistic = r.lhs_11_pessimistic <= 0.25;
  return r;
}

ConditionReport check_fcond(double beta, int d, const Potential& p, const NormReport& nr) {
  return evaluate_conditions(beta, d, p, nr);
}

AltConditionLhs check_alt(double beta, int d, const Potential& p, const NormReport& nr) {
  const auto r = evaluate_conditions(beta, d, p, nr);
  return {r.lhs_9, r.lhs_11};
}

UnitScaling scale_to_unit(const Potential& p, double beta) {
  if (!(beta > 0.0)) throw PreconditionViolation("beta must be positive");
  const double c1 = p.constants().c1;
  return UnitScaling{p.scaled(beta), std::sqrt(beta * c1)};
}

}  // namespace gil
