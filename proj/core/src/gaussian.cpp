#include "gil/gaussian.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include <Eigen/Dense>
#include <fftw3.h>

#include "gil/error.hpp"

namespace gil {

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t reals, std::size_t complexes)
      : real(fftw_alloc_real(reals)), cplx(fftw_alloc_complex(complexes)) {}
  ~FftwBuffer() {
    fftw_free(real);
    fftw_free(cplx);
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* real;
  fftw_complex* cplx;
};

}  // namespace

struct SpectralCovariance::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::size_t reals = 0;
  std::size_t complexes = 0;

  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

Spectrum spectrum(const Torus& t) {
  Spectrum s;
  s.values.resize(t.volume());
  for (std::size_t x = 0; x < t.volume(); ++x) {
    double mu = 0.0;
    for (int k : t.coords(x)) {
      const double sn = std::sin(std::numbers::pi * k / t.side());
      mu += 4.0 * sn * sn;
    }
    s.values[x] = mu;
  }
  s.zero_mode = 0;
  return s;
}

Eigen::MatrixXd pinned_dirichlet_form(const Torus& t) {
  const auto n = static_cast<Eigen::Index>(t.dof());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t x = 0; x < t.volume(); ++x)
    for (int i = 0; i < t.dim(); ++i) {
      const std::size_t y = t.forward(x, i);
      // edge contributes (phi_y - phi_x)^2; origin entries are dropped
      const Eigen::Index a = static_cast<Eigen::Index>(x) - 1;
      const Eigen::Index b = static_cast<Eigen::Index>(y) - 1;
      if (a >= 0) L(a, a) += 1.0;
      if (b >= 0) L(b, b) += 1.0;
      if (a >= 0 && b >= 0) {
        L(a, b) -= 1.0;
        L(b, a) -= 1.0;
      }
    }
  return L;
}

PoincareConstant poincare_constant(const Torus& t) {
  if (t.volume() > 4096) throw PreconditionViolation("poincare_constant is limited to volume <= 4096");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pinned_dirichlet_form(t), Eigen::EigenvaluesOnly);
  return {es.eigenvalues()(0)};
}

SpectralCovariance::SpectralCovariance(const Torus& t) : torus_(t) {
  eigenvalues_ = spectrum(t).values;
  const int d = t.dim();
  const int m = t.side();
  const int half = m / 2 + 1;
  std::size_t complexes = t.volume() / m * half;
  half_eigenvalues_.resize(complexes);
  // r2c layout: all axes full except the last, which keeps m/2 + 1 entries
  for (std::size_t c = 0; c < complexes; ++c) {
    std::size_t rest = c;
    double mu = 0.0;
    const int k_last = static_cast<int>(rest % half);
    rest /= half;
    double sn = std::sin(std::numbers::pi * k_last / m);
    mu += 4.0 * sn * sn;
    for (int a = 0; a < d - 1; ++a) {
      const int k = static_cast<int>(rest % m);
      rest /= m;
      sn = std::sin(std::numbers::pi * k / m);
      mu += 4.0 * sn * sn;
    }
    half_eigenvalues_[c] = mu;
  }
  auto plans = std::make_shared<Plans>();
  plans->reals = t.volume();
  plans->complexes = complexes;
  std::vector<int> dims(d, m);
  FftwBuffer buf(plans->reals, plans->complexes);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plans->forward = fftw_plan_dft_r2c(d, dims.data(), buf.real, buf.cplx, FFTW_ESTIMATE);
    plans->backward = fftw_plan_dft_c2r(d, dims.data(), buf.cplx, buf.real, FFTW_ESTIMATE);
  }
  if (!plans->forward || !plans->backward) throw Error("FFTW planning failed");
  plans_ = std::move(plans);
}

double SpectralCovariance::mode_energy(std::span<const double> phi) const {
  if (phi.size() != torus_.volume()) throw PreconditionViolation("field size does not match torus volume");
  FftwBuffer buf(plans_->reals, plans_->complexes);
  std::copy(phi.begin(), phi.end(), buf.real);
  fftw_execute_dft_r2c(plans_->forward, buf.real, buf.cplx);
  const int m = torus_.side();
  const int half = m / 2 + 1;
  double e = 0.0;
  for (std::size_t c = 0; c < plans_->complexes; ++c) {
    const int k_last = static_cast<int>(c % half);
    // modes with a conjugate partner outside the stored half count twice
    const double mult = (k_last == 0 || 2 * k_last == m) ? 1.0 : 2.0;
    const double re = buf.cplx[c][0];
    const double im = buf.cplx[c][1];
    e += mult * half_eigenvalues_[c] * (re * re + im * im);
  }
  return e / static_cast<double>(torus_.volume());
}

Field SpectralCovariance::sample(double variance_scale, std::mt19937_64& rng) const {
  if (!(variance_scale > 0.0 && variance_scale <= 1.0)) {
    throw PreconditionViolation("variance_scale must lie in (0, 1]");
  }
  const std::size_t n = plans_->reals;
  FftwBuffer buf(plans_->reals, plans_->complexes);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t x = 0; x < n; ++x) buf.real[x] = normal(rng);
  // white noise -> filter by sqrt(s / mu_k), zero mode removed
  fftw_execute_dft_r2c(plans_->forward, buf.real, buf.cplx);
  for (std::size_t c = 0; c < plans_->complexes; ++c) {
    const double mu = half_eigenvalues_[c];
    const double f = mu > 0.0 ? std::sqrt(variance_scale / mu) : 0.0;
    buf.cplx[c][0] *= f;
    buf.cplx[c][1] *= f;
  }
  // unnormalized r2c followed by c2r scales by n
  fftw_execute_dft_c2r(plans_->backward, buf.cplx, buf.real);
  const double norm = 1.0 / static_cast<double>(n);
  std::vector<double> sites(n);
  for (std::size_t x = 0; x < n; ++x) sites[x] = buf.real[x] * norm;
  return Field::pinned(sites);
}

double SpectralCovariance::gradient_variance(int axis) const {
  double s = 0.0;
  for (std::size_t x = 1; x < torus_.volume(); ++x) {
    const int k = torus_.coords(x)[axis];
    const double sn = std::sin(std::numbers::pi * k / torus_.side());
    s += 4.0 * sn * sn / eigenvalues_[x];
  }
  return s / static_cast<double>(torus_.volume());
}

Eigen::MatrixXd SpectralCovariance::pinned_covariance() const {
  const Eigen::MatrixXd L = pinned_dirichlet_form(torus_);
  return L.ldlt().solve(Eigen::MatrixXd::Identity(L.rows(), L.cols()));
}

Field sample_gff(const SpectralCovariance& sc, double variance_scale, std::mt19937_64& rng) {
  return sc.sample(variance_scale, rng);
}

}  // namespace gil
