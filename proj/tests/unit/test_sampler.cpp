#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "gil/error.hpp"
#include "gil/gaussian.hpp"
#include "gil/quadrature.hpp"
#include "gil/renorm.hpp"
#include "gil/sampler.hpp"

using namespace gil;

namespace {

ChainConfig quick(std::size_t steps, std::uint64_t seed = 1) {
  ChainConfig c;
  c.n_steps = steps;
  c.burn_in = steps / 10;
  c.seed = seed;
  return c;
}

Observable identity() {
  return [](const Eigen::VectorXd& s) { return s; };
}

}  // namespace

TEST(ChainConfig, Validation) {
  ChainConfig c;
  c.burn_in = c.n_steps;
  EXPECT_THROW(c.validate(), PreconditionViolation);
  c = ChainConfig{};
  c.thinning = 0;
  EXPECT_THROW(c.validate(), PreconditionViolation);
  c = ChainConfig{};
  c.step_size = -1.0;
  EXPECT_THROW(c.validate(), PreconditionViolation);
  EXPECT_NE(chain_seed(1, 0), chain_seed(1, 1));
  EXPECT_NE(chain_seed(1, 0), chain_seed(2, 0));
}

TEST(Mala, DefaultStepSize) {
  const Torus t(2, 3);
  const auto target = gibbs_target(t, Tilt::Zero(2), Potential::example_a(0.5), 0.25);
  EXPECT_DOUBLE_EQ(default_step_size(target), 0.5 / std::sqrt(0.25 * (2 * 2 * 2.0 + 1)));
}

TEST(Mala, GaussianCovarianceMatchesInverseForm) {
  const Torus t(1, 3);
  const auto target = gibbs_target(t, Tilt::Zero(1), Potential::gaussian(), 1.0);
  ChainConfig cfg = quick(200000, 4);
  cfg.n_chains = 2;
  Observable second = [](const Eigen::VectorXd& s) {
    Eigen::VectorXd o(3);
    o << s[0] * s[0], s[0] * s[1], s[1] * s[1];
    return o;
  };
  const auto est = mean_estimate(run_chains(target, Eigen::VectorXd::Zero(2), cfg, second));
  const double exact[3] = {2.0 / 3, 1.0 / 3, 2.0 / 3};
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(est.value(k, 0), exact[k], 4 * est.std_error(k, 0)) << k;
  EXPECT_EQ(est.method, EstimateMethod::Chain);
  EXPECT_LE(est.n_effective, 2.0 * cfg.retained_per_chain());
}

TEST(Mala, TinyStepBarelyMoves) {
  const Torus t(1, 4);
  const auto target = gibbs_target(t, Tilt::Zero(1), Potential::example_b(0.5), 1.0);
  ChainConfig cfg = quick(2000);
  cfg.step_size = 1e-9;
  cfg.adapt = false;
  cfg.enforce_acceptance = false;
  Eigen::VectorXd start(3);
  start << 0.3, -0.2, 0.1;
  Eigen::VectorXd last = start;
  const auto stats = run_chain(target, start, cfg, 0, [&](const Eigen::VectorXd& s) { last = s; });
  EXPECT_GT(stats.acceptance_rate, 0.999);
  EXPECT_LT((last - start).norm(), 1e-6);
}

TEST(Mala, SymmetricTargetHasZeroMean) {
  const Torus t(1, 4);
  const auto target = gibbs_target(t, Tilt::Zero(1), Potential::example_a(0.5), 0.05);
  const auto est = mean_estimate(run_chains(target, Eigen::VectorXd::Zero(3), quick(100000, 6), identity()));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(est.value(k, 0), 0.0, 4 * est.std_error(k, 0));
}

TEST(Mala, DeterministicGivenSeed) {
  const Torus t(2, 3);
  const auto target = gibbs_target(t, Tilt::Constant(2, 0.1), Potential::example_b(0.5), 1.0);
  ChainConfig cfg = quick(3000, 77);
  cfg.n_chains = 3;
  cfg.threads = 2;
  const auto a = run_chains(target, Eigen::VectorXd::Zero(8), cfg, identity());
  cfg.threads = 1;
  const auto b = run_chains(target, Eigen::VectorXd::Zero(8), cfg, identity());
  ASSERT_EQ(a.series.size(), 3u);
  for (int c = 0; c < 3; ++c) EXPECT_TRUE(a.series[c] == b.series[c]);
  EXPECT_FALSE(a.series[0] == a.series[1]);
}

TEST(Mala, InconsistentGradientIsRejected) {
  const Torus t(1, 3);
  auto target = gibbs_target(t, Tilt::Zero(1), Potential::gaussian(), 1.0);
  target.gradient = [](const Eigen::VectorXd& s) { return Eigen::VectorXd(2.0 * s); };
  EXPECT_THROW(run_chain(target, Eigen::VectorXd::Constant(2, 0.3), quick(100), 0, [](const Eigen::VectorXd&) {}),
               PreconditionViolation);
}

TEST(Mala, AcceptanceOutOfRangeIsReported) {
  const Torus t(1, 5);
  const auto target = gibbs_target(t, Tilt::Zero(1), Potential::gaussian(), 1.0);
  ChainConfig cfg = quick(2000);
  cfg.step_size = 20.0;
  cfg.adapt = false;
  EXPECT_THROW(run_chains(target, Eigen::VectorXd::Zero(4), cfg, identity()), ChainDiagnosticsError);
}

TEST(FluctuationHessian, GaussianIsExact) {
  for (int m : {3, 4}) {
    for (int d : {1, 2}) {
      const Torus t(d, m);
      const auto r = fluctuation_hessian(Tilt::Constant(d, 0.4), Potential::gaussian(), t, quick(2000));
      const double vol = static_cast<double>(t.volume());
      EXPECT_LT((r.hessian.value - vol * Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-9 * vol);
      EXPECT_LT(r.variance_term.value.cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(FluctuationHessian, ExampleBAgainstOracle) {
  const Torus t(1, 3);
  const auto p = Potential::example_b(0.5);
  Tilt u(1);
  u << 0.2;
  ChainConfig cfg = quick(300000, 8);
  cfg.n_chains = 2;
  const auto r = fluctuation_hessian(u, p, t, cfg);
  QuadratureSpec q;
  const FreeEnergyOracle f(p, t, 1.0, q, u);
  const double oracle = hessian_fd([&](const Tilt& v) { return f(v); }, u)(0, 0);
  EXPECT_NEAR(r.hessian.scalar(), oracle, 3 * r.hessian.scalar_error());
  EXPECT_GT(r.hessian.scalar_error(), 0.0);
}

TEST(FluctuationHessian, SymmetricMatrix) {
  const Torus t(2, 3);
  const auto r = fluctuation_hessian(Tilt::Constant(2, 0.1), Potential::example_b(0.5), t, quick(20000, 3));
  EXPECT_NEAR(r.hessian.value(0, 1), r.hessian.value(1, 0), 1e-12);
  EXPECT_THROW(fluctuation_hessian(Tilt::Zero(2), Potential::example_a(0.5), t, quick(100)), PreconditionViolation);
}

TEST(Characteristic, GaussianClosedForm) {
  const Torus t(1, 4);
  const auto unit = Potential::gaussian();
  const auto plan = DecompositionPlan::make(t, unit);
  const Field psi(t);
  const InducedH1 h1(plan, Tilt::Zero(1), psi);
  const std::vector<double> k{-3.0, -1.0, 0.0, 0.5, 2.0};
  ChainConfig cfg = quick(100000, 12);
  const auto a = characteristic_A(k, 0, 1, t, h1.target(), cfg);
  const double var = plan.lambda * SpectralCovariance(t).gradient_variance(0);
  ASSERT_EQ(a.size(), k.size());
  EXPECT_EQ(a[2].value, std::complex<double>(1.0, 0.0));
  for (std::size_t j = 0; j < k.size(); ++j) {
    const double exact = std::exp(-0.5 * k[j] * k[j] * var);
    EXPECT_NEAR(a[j].value.real(), exact, 4 * a[j].std_error_re + 1e-15) << k[j];
    EXPECT_LE(std::abs(a[j].value), 1.0 + 1e-12);
  }
  // conjugate symmetry
  EXPECT_NEAR(a[0].value.real(), characteristic_A({3.0}, 0, 1, t, h1.target(), cfg)[0].value.real(), 1e-15);
}

TEST(Characteristic, DefaultGrid) {
  const auto k = default_k_grid(1, 1.2, 401);
  ASSERT_EQ(k.size(), 401u);
  const double kmax = 4.0 * std::sqrt(12.0 * 1.2);
  EXPECT_DOUBLE_EQ(k.front(), -kmax);
  EXPECT_DOUBLE_EQ(k.back(), kmax);
  EXPECT_EQ(k[200], 0.0);
}

TEST(L1Norm, GaussianPasses) {
  const Torus t(1, 4);
  const auto unit = Potential::gaussian();
  const auto plan = DecompositionPlan::make(t, unit);
  const auto report = verify_l1norm_bounds(unit, t, Tilt::Zero(1), Field(t), plan.lambda,
                                           default_k_grid(1, plan.cbar, 101), quick(20000, 2));
  EXPECT_TRUE(report.all_ok());
  for (const auto& e : report.edges) {
    EXPECT_EQ(e.mean_h_full, 0.0);
    EXPECT_LT(e.integral, e.integral_bound);
  }
}

TEST(L1Norm, RejectsLambdaAboveThePlan) {
  const Torus t(1, 4);
  const auto p = Potential::example_b(0.5);
  EXPECT_THROW(verify_l1norm_bounds(p, t, Tilt::Zero(1), Field(t), 0.9, default_k_grid(1, 1.2, 11), quick(100)),
               PreconditionViolation);
}

TEST(Poincare, GaussianLinearObservable) {
  const Torus t(1, 3);
  const auto target = gibbs_target(t, Tilt::Zero(1), Potential::gaussian(), 1.0);
  Eigen::VectorXd v(2);
  v << 1.0, 0.5;
  const double exact_var = v.dot(SpectralCovariance(t).pinned_covariance() * v);
  const auto r = poincare_variance_check(target, linear_observable(v), 1.0, quick(200000, 21));
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.variance, exact_var, 4 * r.variance_se);
  EXPECT_NEAR(r.bound, v.squaredNorm(), 1e-12);
  EXPECT_LT(exact_var, r.bound);
}

TEST(Poincare, ConstantObservable) {
  const Torus t(1, 3);
  const auto target = gibbs_target(t, Tilt::Zero(1), Potential::gaussian(), 1.0);
  GradientObservable g{[](const Eigen::VectorXd&) { return 2.0; },
                       [](const Eigen::VectorXd& s) { return Eigen::VectorXd(Eigen::VectorXd::Zero(s.size())); }};
  const auto r = poincare_variance_check(target, g, 1.0, quick(5000));
  EXPECT_EQ(r.variance, 0.0);
  EXPECT_EQ(r.bound, 0.0);
  EXPECT_TRUE(r.holds);
}

TEST(Diagnostics, GradientCovarianceByDistance) {
  const Torus t(1, 6);
  const auto target = gibbs_target(t, Tilt::Zero(1), Potential::gaussian(), 1.0);
  ChainConfig cfg = quick(100000, 31);
  Observable field = [](const Eigen::VectorXd& s) { return s; };
  const auto run = run_chains(target, Eigen::VectorXd::Zero(5), cfg, field);
  const auto cov = gradient_covariance_by_distance(t, run, 0);
  ASSERT_EQ(cov.size(), 4u);
  const double var = SpectralCovariance(t).gradient_variance(0);
  EXPECT_NEAR(cov[0], var, 0.05 * var);
  // gradients sum to zero: the distance-weighted covariances cancel
  EXPECT_NEAR(cov[0] + 2 * cov[1] + 2 * cov[2] + cov[3], 0.0, 0.05);
}
