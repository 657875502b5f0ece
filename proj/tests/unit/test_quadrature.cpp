#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "gil/conditions.hpp"
#include "gil/error.hpp"
#include "gil/gaussian.hpp"
#include "gil/quadrature.hpp"

using namespace gil;
using std::numbers::pi;

namespace {

Tilt tilt(double a) {
  Tilt u(1);
  u << a;
  return u;
}

QuadratureSpec with_rule(QuadratureRule r) {
  QuadratureSpec q;
  q.rule = r;
  return q;
}

}  // namespace

TEST(GaussHermite, MomentsOfTheStandardNormal) {
  for (int n : {8, 16, 33}) {
    const auto r = gauss_hermite(n);
    ASSERT_EQ(r.nodes.size(), static_cast<std::size_t>(n));
    double m0 = 0, m1 = 0, m2 = 0, m4 = 0, m6 = 0;
    for (int k = 0; k < n; ++k) {
      const double x = r.nodes[k], w = r.weights[k];
      m0 += w;
      m1 += w * x;
      m2 += w * x * x;
      m4 += w * std::pow(x, 4);
      m6 += w * std::pow(x, 6);
      EXPECT_NEAR(x, -r.nodes[n - 1 - k], 1e-12);
    }
    EXPECT_NEAR(m0, 1.0, 1e-13);
    EXPECT_NEAR(m1, 0.0, 1e-13);
    EXPECT_NEAR(m2, 1.0, 1e-12);
    EXPECT_NEAR(m4, 3.0, 1e-11);
    EXPECT_NEAR(m6, 15.0, 1e-10);
  }
}

TEST(QuadratureSpec, Validation) {
  QuadratureSpec q;
  EXPECT_NO_THROW(q.validate());
  q.max_dof = 6;
  EXPECT_THROW(q.validate(), PreconditionViolation);
  q = QuadratureSpec{};
  q.nodes_per_dim = 4;
  EXPECT_THROW(q.validate(), PreconditionViolation);
}

TEST(LogPartition, GaussianThreeSiteRing) {
  const Torus t(1, 3);
  const double exact = std::log(2 * pi / std::sqrt(3.0));
  for (auto rule : {QuadratureRule::GaussHermite, QuadratureRule::EdgeConvolution}) {
    const auto r = log_partition(Tilt::Zero(1), Potential::gaussian(), t, 1.0, with_rule(rule));
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.method, rule);
    EXPECT_NEAR(r.value, exact, 1e-10) << to_string(rule);
  }
}

TEST(LogPartition, GaussianTiltDependence) {
  for (auto [d, m] : {std::pair{1, 3}, std::pair{1, 5}, std::pair{2, 2}}) {
    const Torus t(d, m);
    const auto p = Potential::gaussian();
    const QuadratureSpec q;
    const double z0 = log_partition(Tilt::Zero(d), p, t, 1.0, q).value;
    const Tilt u = Tilt::Constant(d, 0.7);
    const double z = log_partition(u, p, t, 1.0, q).value;
    EXPECT_NEAR(z - z0, -0.5 * static_cast<double>(t.volume()) * u.squaredNorm(), 1e-8);
    // the determinant of the pinned form is M^(d M^d - ...) in general; compare directly
    const double logdet = std::log(pinned_dirichlet_form(t).determinant());
    EXPECT_NEAR(z0, 0.5 * static_cast<double>(t.dof()) * std::log(2 * pi) - 0.5 * logdet, 1e-8);
  }
}

TEST(LogPartition, ExampleBRegressionValue) {
  // Reference from an independent adaptive double integral over the two
  // free gradients, frozen here.
  const double reference = 1.278719217761641;
  const auto r = log_partition(tilt(0.1), Potential::example_b(0.5), Torus(1, 3), 1.0, QuadratureSpec{});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.method, QuadratureRule::EdgeConvolution);
  EXPECT_NEAR(r.value, reference, 1e-9);
}

TEST(LogPartition, GaussHermiteAgreesWithConvolution) {
  const Torus t(1, 3);
  for (const auto& p : {Potential::example_a(0.5), Potential::example_c(0.05, 2.0, 1.0)}) {
    const auto gh = log_partition(tilt(0.5), p, t, 1.0, with_rule(QuadratureRule::GaussHermite));
    const auto cv = log_partition(tilt(0.5), p, t, 1.0, with_rule(QuadratureRule::EdgeConvolution));
    EXPECT_TRUE(gh.converged);
    EXPECT_NEAR(gh.value, cv.value, 1e-8);
  }
  // log(s^2 + a) has branch points at +-i sqrt(a); against an envelope of
  // width 1/sqrt(2 beta) the Hermite series converges too slowly
  EXPECT_THROW(log_partition(tilt(0.5), Potential::example_a(0.5), t, 1e-3, with_rule(QuadratureRule::GaussHermite)),
               QuadratureFailure);
  // piecewise polynomial remainder with kinks
  EXPECT_THROW(log_partition(tilt(0.1), Potential::example_b(0.5), t, 1.0, with_rule(QuadratureRule::GaussHermite)),
               QuadratureFailure);
}

TEST(LogPartition, DofCapAndRuleChecks) {
  EXPECT_THROW(log_partition(Tilt::Zero(2), Potential::gaussian(), Torus(2, 3), 1.0, QuadratureSpec{}),
               PreconditionViolation);
  EXPECT_THROW(log_partition(Tilt::Zero(2), Potential::gaussian(), Torus(2, 2), 1.0,
                             with_rule(QuadratureRule::EdgeConvolution)),
               PreconditionViolation);
}

TEST(FreeEnergy, GaussianDifferenceIndependentOfBeta) {
  const Torus t(1, 4);
  const auto p = Potential::gaussian();
  for (double beta : {1.0, 2.0, 0.5}) {
    const QuadratureSpec q;
    const double f0 = free_energy(Tilt::Zero(1), p, t, beta, q).value;
    const double f1 = free_energy(tilt(1.0), p, t, beta, q).value;
    EXPECT_NEAR(f1 - f0, 2.0, 1e-8 / beta) << beta;
  }
}

TEST(FreeEnergy, ScalingIdentity) {
  const auto p = Potential::example_a(0.5);
  const Torus t(1, 3);
  const double beta = 1e-3;
  QuadratureSpec q;
  q.tolerance = 1e-12;
  const auto us = scale_to_unit(p, beta);
  const double f0 = free_energy(Tilt::Zero(1), p, t, beta, q).value;
  const double g0 = free_energy(Tilt::Zero(1), us.potential, t, 1.0, q).value;
  for (double a : {0.5, 1.0}) {
    const double lhs = free_energy(tilt(a), p, t, beta, q).value - f0;
    const double rhs = (free_energy(tilt(us.tilt_scale * a), us.potential, t, 1.0, q).value - g0) / beta;
    EXPECT_NEAR(lhs, rhs, 1e-6 * std::abs(lhs)) << a;
  }
}

TEST(FreeEnergyOracle, FrozenDiscretizationIsSmooth) {
  const auto p = Potential::example_b(0.5);
  const Torus t(1, 3);
  const FreeEnergyOracle f(p, t, 1.0, QuadratureSpec{}, tilt(0.25));
  EXPECT_TRUE(f.anchor().converged);
  EXPECT_NEAR(f(tilt(0.25)), free_energy(tilt(0.25), p, t, 1.0, QuadratureSpec{}).value, 1e-8);
  const double h = hessian_fd([&](const Tilt& u) { return f(u); }, tilt(0.25))(0, 0);
  const double coarse = hessian_fd([&](const Tilt& u) { return f(u); }, tilt(0.25), 2e-3)(0, 0);
  EXPECT_NEAR(h, coarse, 5e-5);
  EXPECT_GT(h, 1.5);
}

TEST(HessianFd, Quadratics) {
  const double vol = 9.0;
  auto f = [vol](const Tilt& u) { return 0.5 * vol * u.squaredNorm(); };
  const auto h = hessian_fd(f, Tilt::Constant(2, 0.3));
  EXPECT_LT((h - vol * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-6);
  auto g = [](const Tilt& u) { return u[0] * u[0] * u[1] + std::sin(u[0]) * u[1] * u[1]; };
  Tilt u(2);
  u << 0.4, -0.7;
  const auto hg = hessian_fd(g, u);
  EXPECT_NEAR(hg(0, 1), hg(1, 0), 1e-15);
  EXPECT_NEAR(hg(0, 1), 2 * u[0] + 2 * std::cos(u[0]) * u[1], 1e-8);
  EXPECT_NEAR(hg(0, 0), 2 * u[1] - std::sin(u[0]) * u[1] * u[1], 1e-8);
  EXPECT_NEAR(hg(1, 1), 2 * std::sin(u[0]), 1e-8);
}

TEST(HessianFd, Quartic) {
  auto f = [](const Tilt& u) { return std::pow(u[0], 4); };
  EXPECT_NEAR(hessian_fd(f, tilt(1.0), 1e-3, false)(0, 0), 12.0, 1e-4);
  EXPECT_NEAR(hessian_fd(f, tilt(1.0))(0, 0), 12.0, 1e-9);
  EXPECT_NEAR(second_derivative_fd([](double s) { return std::cos(s); }), -1.0, 1e-9);
}

TEST(RenormApply, ConstantFunctional) {
  const Torus t(1, 4);
  FieldFunctional f = [](const Tilt&, std::span<const double>) { return 2.5; };
  const auto r = renorm_apply(f, 0.3, tilt(0.1), Field(t), t, QuadratureSpec{});
  EXPECT_NEAR(r.value, 2.5, 1e-13);
}

TEST(RenormApply, LinearFunctionalMatchesMomentGenerator) {
  const Torus t(1, 4);
  Eigen::VectorXd c(4);
  c << 0.0, 0.8, -0.3, 0.5;  // origin entry unused
  FieldFunctional f = [&c](const Tilt&, std::span<const double> s) {
    double v = 0.0;
    for (std::size_t x = 0; x < s.size(); ++x) v += c[static_cast<Eigen::Index>(x)] * s[x];
    return v;
  };
  const double lambda = 0.4;
  std::vector<double> a_sites{0.0, 0.2, -0.1, 0.4};
  const Field a = Field::pinned(a_sites);
  const Eigen::VectorXd cf = c.tail(3);
  const double expected = cf.dot(a.dof()) - 0.5 * lambda * cf.dot(SpectralCovariance(t).pinned_covariance() * cf);
  const auto r = renorm_apply(f, lambda, tilt(0.0), a, t, QuadratureSpec{});
  EXPECT_NEAR(r.value, expected, 1e-10);
}

TEST(RenormOracle, GaussianMapsVanish) {
  const Torus t(1, 3);
  RenormOracle ro(t, Potential::gaussian(), 0.5, QuadratureSpec{});
  EXPECT_NEAR(ro.r1g(tilt(0.3), Field(t)).value, 0.0, 1e-10);
  EXPECT_NEAR(ro.r2r1g(tilt(0.3)).value, 0.0, 1e-9);
}

TEST(RenormOracle, ConvolutionAgreesWithGaussHermiteRenorm) {
  const Torus t(1, 3);
  const auto p = scale_to_unit(Potential::example_c(0.05, 2.0, 1.0), 1.0).potential;
  const double lambda = 0.5 / cbar(p.constants());
  RenormOracle ro(t, p, lambda, QuadratureSpec{});
  const ScalarFn g = remainder_fn(p);
  FieldFunctional G = [&t, g](const Tilt& u, std::span<const double> s) { return edge_energy(t, u, s, g); };
  std::vector<double> psi_sites{0.0, 0.05, -0.02};
  const Field psi = Field::pinned(psi_sites);
  const double gh = renorm_apply(G, lambda, tilt(0.04), psi, t, with_rule(QuadratureRule::GaussHermite)).value;
  EXPECT_NEAR(ro.r1g(tilt(0.04), psi).value, gh, 1e-8);
}

TEST(RenormOracle, FreeEnergyDecomposition) {
  // log Z(u) - log Z(0) = -|T| u^2 / 2 - R2R1G(u) + R2R1G(0) at beta = 1
  const Torus t(1, 3);
  const auto us = scale_to_unit(Potential::example_b(0.5), 0.1);
  RenormOracle ro(t, us.potential, 1.0 / 2.4, QuadratureSpec{});
  const double r0 = ro.r2r1g(tilt(0.0)).value;
  const QuadratureSpec q;
  const double z0 = log_partition(tilt(0.0), us.potential, t, 1.0, q).value;
  for (double a : {0.05, 0.15}) {
    const double lhs = log_partition(tilt(a), us.potential, t, 1.0, q).value - z0;
    const double rhs = -1.5 * a * a - ro.r2r1g(tilt(a)).value + r0;
    EXPECT_NEAR(lhs, rhs, 1e-6) << a;
  }
}

TEST(LogPartition, LargeTilt) {
  // the edge kernels sit far from the zero-sum constraint
  const Torus t(1, 6);
  const auto p = Potential::gaussian();
  const QuadratureSpec q;
  const double z0 = log_partition(tilt(0.0), p, t, 1.0, q).value;
  EXPECT_NEAR(log_partition(tilt(3.0), p, t, 1.0, q).value - z0, -27.0, 1e-8);
  EXPECT_NEAR(log_partition(tilt(-3.0), p, t, 4.0, q).value - log_partition(tilt(0.0), p, t, 4.0, q).value, -108.0,
              1e-7);
}
