#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gil {

/// Scalar function of one variable evaluated together with its first two
/// derivatives; `order` selects which one is returned.
using ScalarFn = std::function<double(double s, int order)>;

enum class Family { Gaussian, ExampleA, ExampleB, ExampleC, Custom };

std::string to_string(Family f);

/// Curvature constants: -c0 <= g0'' , c1 <= V0'' <= c2.
struct CurvatureConstants {
  double c0 = 0.0;
  double c1 = 1.0;
  double c2 = 1.0;
};

/// Uniform grid used for curvature certification and growth checks.
struct GridRange {
  double lo = -50.0;
  double hi = 50.0;
  int points = 10000;

  double at(int k) const { return lo + (hi - lo) * k / (points - 1); }
};

/// Integral norms of the perturbation g0. Divergent norms are +inf.
///
/// `l1_g0pp` is the L1 norm of the negative part of g0'' (the part that
/// breaks convexity); `l1_g0pp_abs` is the L1 norm of |g0''|. They coincide
/// whenever g0'' <= 0 everywhere.
struct NormReport {
  double l1_g0pp = 0.0;
  double l1_g0pp_abs = 0.0;
  double l2_g0p = 0.0;
  double l1_g0 = 0.0;
  double quadrature_error = 0.0;
};

/// Extremes of the sampled curvatures on a grid.
struct CurvatureCertificate {
  double v0pp_min = 0.0;
  double v0pp_max = 0.0;
  double g0pp_min = 0.0;
  double g0pp_max = 0.0;
  /// -c0 <= g0'' and c1 <= V0'' <= c2 on every grid point.
  bool lower_bounds_hold = false;
  /// g0'' <= 0 on every grid point.
  bool g0pp_nonpositive = false;
};

/// Affine change of variables applied by the unit-scaling reduction:
/// V~(s) = beta V(s / sqrt(beta c1)).
struct ScalingRecord {
  double beta = 1.0;
  double c1 = 1.0;
  double length() const;  // sqrt(beta c1)
};

/// Interaction potential V = V0 + g0 with V0 uniformly convex and g0 a
/// bounded-curvature perturbation. Immutable and cheap to copy.
class Potential {
 public:
  static Potential gaussian();
  /// V(s) = s^2 + a - log(s^2 + a), 0 < a < 1; V0 = s^2.
  static Potential example_a(double a);
  /// V(s) = s^2/2 - 4 delta^-4 s^3 (delta - s)^3 on [0, delta], s^2/2 elsewhere.
  static Potential example_b(double delta);
  /// V(s) = -log(p e^{-k1 s^2/2} + (1-p) e^{-k2 s^2/2}), 0 < p < 1, 0 < k2 < k1.
  static Potential example_c(double p, double k1, double k2);
  /// User potential. Without declared constants they are grid-certified.
  static Potential custom(ScalarFn v0, ScalarFn g0,
                          std::optional<CurvatureConstants> declared = std::nullopt,
                          std::vector<double> breakpoints = {}, double feature_scale = 1.0);

  /// V^(order)(s) = V0^(order)(s) + g0^(order)(s); throws DomainError if not finite.
  double eval(double s, int order) const;
  double v0(double s, int order) const;
  double g0(double s, int order) const;
  /// Step-2 remainder g = V - s^2/2 (= V1 + g0 once c1 = 1).
  double remainder(double s, int order) const;

  /// Closed-form constants for built-ins, grid-certified for custom potentials.
  CurvatureConstants constants() const;

  Family family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  /// Present when this potential was produced by the unit-scaling reduction.
  const std::optional<ScalingRecord>& scaling() const { return scaling_; }
  /// The unscaled potential this one was derived from (self if unscaled).
  const Potential& base() const;

  /// Points where g0'' changes sign or is not smooth (quadrature hints).
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  /// Length scale of the narrowest feature of V (grid-resolution hint).
  double feature_scale() const { return feature_scale_; }

  /// Stated closed-form L1 value (or bound) for the negative curvature of
  /// g0, when one exists for the family. Transformed under scaling.
  std::optional<double> stated_l1_curvature_norm() const;

  /// beta V(s / sqrt(beta c1)) split into the same V0/g0 pieces.
  Potential scaled(double beta) const;

  std::string describe() const;

 private:
  Potential() = default;

  Family family_ = Family::Custom;
  std::vector<double> params_;
  ScalarFn v0_;
  ScalarFn g0_;
  ScalarFn total_;
  std::optional<CurvatureConstants> constants_;
  std::vector<double> breakpoints_;
  double feature_scale_ = 1.0;
  std::optional<ScalingRecord> scaling_;
  std::shared_ptr<const Potential> base_;
  struct CertCache;
  std::shared_ptr<CertCache> cert_cache_;
  CurvatureConstants certify_constants() const;
};

/// Grid scan of V0'' and g0'' against the potential's constants.
CurvatureCertificate certify_curvature(const Potential& p, const CurvatureConstants& c,
                                       GridRange grid = {});

/// Integral norms of g0 by adaptive quadrature with tail doubling.
/// Throws DivergentNorm when the curvature norm does not converge.
NormReport norms(const Potential& p, double tol = 1e-9);

/// True iff V(s) >= a_coef s^2 - b_coef at every grid point.
bool validate_growth(const Potential& p, double a_coef, double b_coef, GridRange grid = {});

}  // namespace gil
