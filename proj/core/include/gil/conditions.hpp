#pragma once

#include <limits>

#include "gil/potential.hpp"

namespace gil {

/// max(c0/c1, c2/c1 - 1, 1). Throws InvalidConstants unless c1 > 0,
/// c0 >= 0 and c2 >= c1.
double cbar(double c0, double c1, double c2);
double cbar(const CurvatureConstants& c);

/// Smallness conditions of the convexity theorem at inverse temperature beta
/// in dimension d. Every left-hand side is reported twice: with the nominal
/// norms, and with norms inflated by their quadrature error (pessimistic).
struct ConditionReport {
  // input echo
  double beta = 0.0;
  int d = 1;
  CurvatureConstants constants;
  NormReport norms;

  double cbar = 1.0;
  double lhs_fcond = 0.0;
  double lhs_9 = 0.0;
  double lhs_11 = 0.0;
  double lhs_fcond_pessimistic = 0.0;
  double lhs_9_pessimistic = 0.0;
  double lhs_11_pessimistic = 0.0;
  /// beta at which each condition holds with equality (+inf when the norm
  /// vanishes, 0 when it diverges).
  double beta_max_fcond = std::numeric_limits<double>::infinity();
  double beta_max_9 = std::numeric_limits<double>::infinity();
  double beta_max_11 = std::numeric_limits<double>::infinity();

  bool fcond_satisfied = true;  // lhs_fcond <= 1/2
  bool alt9_satisfied = true;   // lhs_9 <= 1/2
  bool alt11_satisfied = true;  // lhs_11 <= 1/4
  bool fcond_satisfied_pessimistic = true;
  bool alt9_satisfied_pessimistic = true;
  bool alt11_satisfied_pessimistic = true;
};

/// Full report; check_fcond and check_alt are views of it.
ConditionReport evaluate_conditions(double beta, int d, const Potential& p, const NormReport& norms);

ConditionReport check_fcond(double beta, int d, const Potential& p, const NormReport& norms);

struct AltConditionLhs {
  double lhs_9 = 0.0;
  double lhs_11 = 0.0;
};
AltConditionLhs check_alt(double beta, int d, const Potential& p, const NormReport& norms);

/// Result of the reduction to beta = 1, c1 = 1.
struct UnitScaling {
  Potential potential;
  /// sqrt(beta c1): tilts and fields map as u~ = tilt_scale * u.
  double tilt_scale = 1.0;
};

UnitScaling scale_to_unit(const Potential& p, double beta);

}  // namespace gil
