#include "gil/edge_convolution.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>

#include <fftw3.h>

#include "gil/error.hpp"

namespace gil {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

struct PlanPairL {
  fftwl_plan forward;
  fftwl_plan backward;
};

// Plans are cached per size and never destroyed; execution with the
// new-array interface is thread safe.
PlanPairL plans_l(std::size_t n) {
  static std::map<std::size_t, PlanPairL> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  long double* r = fftwl_alloc_real(n);
  fftwl_complex* c = fftwl_alloc_complex(n / 2 + 1);
  PlanPairL p{fftwl_plan_dft_r2c_1d(static_cast<int>(n), r, c, FFTW_ESTIMATE),
              fftwl_plan_dft_c2r_1d(static_cast<int>(n), c, r, FFTW_ESTIMATE)};
  fftwl_free(r);
  fftwl_free(c);
  if (!p.forward || !p.backward) throw Error("FFTW planning failed");
  cache.emplace(n, p);
  return p;
}

struct PlanPairD {
  fftw_plan forward;
  fftw_plan backward;
};

PlanPairD plans_d(std::size_t n) {
  static std::map<std::size_t, PlanPairD> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  double* r = fftw_alloc_real(n);
  fftw_complex* c = fftw_alloc_complex(n / 2 + 1);
  PlanPairD p{fftw_plan_dft_r2c_1d(static_cast<int>(n), r, c, FFTW_ESTIMATE),
              fftw_plan_dft_c2r_1d(static_cast<int>(n), c, r, FFTW_ESTIMATE)};
  fftw_free(r);
  fftw_free(c);
  if (!p.forward || !p.backward) throw Error("FFTW planning failed");
  cache.emplace(n, p);
  return p;
}

struct PlanPair2 {
  fftw_plan forward;
  fftw_plan backward;
};

PlanPair2 plans_2d(std::size_t n0, std::size_t n1) {
  static std::map<std::pair<std::size_t, std::size_t>, PlanPair2> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find({n0, n1});
  if (it != cache.end()) return it->second;
  double* r = fftw_alloc_real(n0 * n1);
  fftw_complex* c = fftw_alloc_complex(n0 * (n1 / 2 + 1));
  PlanPair2 p{fftw_plan_dft_r2c_2d(static_cast<int>(n0), static_cast<int>(n1), r, c, FFTW_ESTIMATE),
              fftw_plan_dft_c2r_2d(static_cast<int>(n0), static_cast<int>(n1), c, r, FFTW_ESTIMATE)};
  fftw_free(r);
  fftw_free(c);
  if (!p.forward || !p.backward) throw Error("FFTW planning failed");
  cache.emplace(std::make_pair(n0, n1), p);
  return p;
}

template <class T, void (*Free)(void*)>
struct Buf {
  explicit Buf(T* p) : ptr(p) {}
  ~Buf() { Free(ptr); }
  Buf(const Buf&) = delete;
  Buf& operator=(const Buf&) = delete;
  T* ptr;
};

using Real2 = Buf<double, fftw_free>;
using Cplx2 = Buf<fftw_complex, fftw_free>;

// Raw energies on the grid.
void sample_energy(const NegLogKernel& e, const ConvolutionGrid& g, std::vector<double>& out) {
  const std::size_t n = g.points();
  out.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = e(-g.radius + static_cast<double>(k) * g.step);
    if (std::isnan(out[k])) throw DomainError("kernel evaluated to NaN");
  }
}

// exp(-(E - t eta - Emin)) in place; returns Emin of the tilted energy.
double tilt_and_exponentiate(std::vector<double>& v, const ConvolutionGrid& g, double t) {
  double emin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < v.size(); ++k) {
    v[k] -= t * (-g.radius + static_cast<double>(k) * g.step);
    emin = std::min(emin, v[k]);
  }
  if (!std::isfinite(emin)) throw QuadratureFailure("kernel has no finite value on the grid");
  for (double& x : v) x = std::exp(-(x - emin));
  return emin;
}

// Multiplying every kernel by exp(t . eta) leaves the constrained integral
// unchanged (sum eta = 0 on the evaluated node) but moves the bulk of the
// convolution onto that node. t minimizes the convex function
//   Phi(t) = sum_x log sum_k exp(-E_x(eta_k) + t . eta_k),
// whose gradient is the sum of the tilted means. Solved on a subsample:
// any t is exact, accuracy only affects conditioning.
// energies[x][k], coords[k] with dim entries per node.
std::vector<double> balancing_tilt(const std::vector<std::vector<double>>& energies, const std::vector<double>& coords,
                                   int dim, double scale) {
  const std::size_t n = coords.size() / static_cast<std::size_t>(dim);
  std::vector<double> t(static_cast<std::size_t>(dim), 0.0);
  const double cap = 1e12 / scale;  // finiteness guard only; Phi is evaluated shifted
  auto eval = [&](const std::vector<double>& tt, std::vector<double>* grad, std::vector<double>* hess) {
    double phi = 0.0;
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    if (hess) std::fill(hess->begin(), hess->end(), 0.0);
    for (const auto& e : energies) {
      double top = -std::numeric_limits<double>::infinity();
      std::vector<double> l(n);
      for (std::size_t k = 0; k < n; ++k) {
        double v = -e[k];
        for (int a = 0; a < dim; ++a) v += tt[a] * coords[k * dim + a];
        l[k] = v;
        top = std::max(top, v);
      }
      if (!std::isfinite(top)) return std::numeric_limits<double>::infinity();
      double z = 0.0, m[2] = {0, 0}, s2[3] = {0, 0, 0};
      for (std::size_t k = 0; k < n; ++k) {
        const double w = std::exp(l[k] - top);
        z += w;
        for (int a = 0; a < dim; ++a) m[a] += w * coords[k * dim + a];
        s2[0] += w * coords[k * dim] * coords[k * dim];
        if (dim == 2) {
          s2[1] += w * coords[k * dim] * coords[k * dim + 1];
          s2[2] += w * coords[k * dim + 1] * coords[k * dim + 1];
        }
      }
      phi += top + std::log(z);
      for (int a = 0; a < dim; ++a) m[a] /= z;
      if (grad)
        for (int a = 0; a < dim; ++a) (*grad)[a] += m[a];
      if (hess) {
        (*hess)[0] += s2[0] / z - m[0] * m[0];
        if (dim == 2) {
          (*hess)[1] += s2[1] / z - m[0] * m[1];
          (*hess)[3] += s2[2] / z - m[1] * m[1];
        }
      }
    }
    if (hess && dim == 2) (*hess)[2] = (*hess)[1];
    return phi;
  };
  std::vector<double> g(dim), h(dim * dim);
  double phi = eval(t, &g, &h);
  for (int it = 0; it < 60 && std::isfinite(phi); ++it) {
    std::vector<double> step(dim);
    if (dim == 1) {
      step[0] = h[0] > 0 ? -g[0] / h[0] : -g[0];
    } else {
      const double det = h[0] * h[3] - h[1] * h[2];
      if (det > 0) {
        step[0] = -(h[3] * g[0] - h[1] * g[1]) / det;
        step[1] = -(-h[2] * g[0] + h[0] * g[1]) / det;
      } else {
        step = {-g[0], -g[1]};
      }
    }
    double gnorm = 0.0;
    for (int a = 0; a < dim; ++a) gnorm += g[a] * g[a];
    if (std::sqrt(gnorm) < 1e-10 * scale) break;
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      std::vector<double> trial(dim);
      bool inside = true;
      for (int a = 0; a < dim; ++a) {
        trial[a] = t[a] + alpha * step[a];
        inside = inside && std::abs(trial[a]) <= cap;
      }
      if (!inside) continue;
      const double p = eval(trial, nullptr, nullptr);
      if (p < phi) {
        t = trial;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    phi = eval(t, &g, &h);
  }
  return t;
}

std::size_t subsample_stride(std::size_t n) { return std::max<std::size_t>(1, n / 2048); }

double finish(long double c, std::size_t count, const ConvolutionGrid& g, double emin_sum) {
  if (!(c > 0.0L)) throw QuadratureFailure("constrained convolution lost all precision");
  return static_cast<double>(std::log(c)) + static_cast<double>(count - 1) * std::log(g.step) - emin_sum;
}

}  // namespace

std::size_t ConvolutionGrid::points() const {
  return 2 * static_cast<std::size_t>(std::llround(radius / step)) + 1;
}

ConvolutionGrid ConvolutionGrid::make(double step, double radius) {
  if (!(step > 0.0) || !(radius > 0.0)) throw PreconditionViolation("grid step and radius must be positive");
  return {step, std::ceil(radius / step - 1e-9) * step};
}

namespace {

struct ExtendedFft {
  using Real = long double;
  using Complex = fftwl_complex;
  static Real* alloc_real(std::size_t n) { return fftwl_alloc_real(n); }
  static Complex* alloc_complex(std::size_t n) { return fftwl_alloc_complex(n); }
  static void free(void* p) { fftwl_free(p); }
  static PlanPairL plans(std::size_t n) { return plans_l(n); }
  static void forward(const PlanPairL& p, Real* r, Complex* c) { fftwl_execute_dft_r2c(p.forward, r, c); }
  static void backward(const PlanPairL& p, Complex* c, Real* r) { fftwl_execute_dft_c2r(p.backward, c, r); }
};

struct DoubleFft {
  using Real = double;
  using Complex = fftw_complex;
  static Real* alloc_real(std::size_t n) { return fftw_alloc_real(n); }
  static Complex* alloc_complex(std::size_t n) { return fftw_alloc_complex(n); }
  static void free(void* p) { fftw_free(p); }
  static PlanPairD plans(std::size_t n) { return plans_d(n); }
  static void forward(const PlanPairD& p, Real* r, Complex* c) { fftw_execute_dft_r2c(p.forward, r, c); }
  static void backward(const PlanPairD& p, Complex* c, Real* r) { fftw_execute_dft_c2r(p.backward, c, r); }
};

template <class T>
struct Owned {
  explicit Owned(T* p, void (*f)(void*)) : ptr(p), release(f) {}
  ~Owned() { release(ptr); }
  Owned(const Owned&) = delete;
  Owned& operator=(const Owned&) = delete;
  T* ptr;
  void (*release)(void*);
};

// count == 0: one kernel per entry of `kernels`; otherwise kernels[0]^count.
template <class F>
double constrained_impl(std::span<const NegLogKernel> kernels, int count, const ConvolutionGrid& grid) {
  using Real = typename F::Real;
  using Cx = std::complex<Real>;
  const std::size_t m = count > 0 ? static_cast<std::size_t>(count) : kernels.size();
  if (m < 2 || kernels.empty()) throw PreconditionViolation("need at least two kernels");
  const std::size_t n = grid.points();
  const std::size_t size = next_pow2(m * (n - 1) + 1);
  const std::size_t half = size / 2 + 1;
  const auto plans = F::plans(size);
  Owned<Real> real(F::alloc_real(size), F::free);
  Owned<typename F::Complex> spec(F::alloc_complex(half), F::free);
  Owned<typename F::Complex> acc(F::alloc_complex(half), F::free);
  const std::size_t distinct = count > 0 ? 1 : m;
  std::vector<std::vector<double>> energy(distinct);
  for (std::size_t x = 0; x < distinct; ++x) sample_energy(kernels[x], grid, energy[x]);
  double t = 0.0;
  {
    const std::size_t stride = subsample_stride(n);
    std::vector<std::vector<double>> sub(distinct);
    std::vector<double> coords;
    for (std::size_t k = 0; k < n; k += stride) coords.push_back(-grid.radius + static_cast<double>(k) * grid.step);
    for (std::size_t x = 0; x < distinct; ++x)
      for (std::size_t k = 0; k < n; k += stride) sub[x].push_back(energy[x][k]);
    t = balancing_tilt(sub, coords, 1, grid.radius)[0];
  }
  double emin_sum = 0.0;
  for (std::size_t x = 0; x < distinct; ++x) {
    std::vector<double>& q = energy[x];
    emin_sum += tilt_and_exponentiate(q, grid, t);
    std::fill(real.ptr, real.ptr + size, Real(0));
    std::copy(q.begin(), q.end(), real.ptr);
    F::forward(plans, real.ptr, spec.ptr);
    for (std::size_t k = 0; k < half; ++k) {
      const Cx z(spec.ptr[k][0], spec.ptr[k][1]);
      Cx a;
      if (count > 0) {
        a = std::pow(z, count);
      } else {
        a = x == 0 ? z : Cx(acc.ptr[k][0], acc.ptr[k][1]) * z;
      }
      acc.ptr[k][0] = a.real();
      acc.ptr[k][1] = a.imag();
    }
  }
  if (count > 0) emin_sum *= static_cast<double>(count);
  F::backward(plans, acc.ptr, real.ptr);
  const std::size_t j = m * (n - 1) / 2;
  return finish(static_cast<long double>(real.ptr[j]) / static_cast<long double>(size), m, grid, emin_sum);
}

}  // namespace

double log_constrained_integral(std::span<const NegLogKernel> kernels, const ConvolutionGrid& grid,
                                FftPrecision precision) {
  return precision == FftPrecision::Extended ? constrained_impl<ExtendedFft>(kernels, 0, grid)
                                             : constrained_impl<DoubleFft>(kernels, 0, grid);
}

double log_constrained_integral_power(const NegLogKernel& kernel, int count, const ConvolutionGrid& grid,
                                      FftPrecision precision) {
  if (count < 2) throw PreconditionViolation("need at least two kernels");
  std::span<const NegLogKernel> one(&kernel, 1);
  return precision == FftPrecision::Extended ? constrained_impl<ExtendedFft>(one, count, grid)
                                             : constrained_impl<DoubleFft>(one, count, grid);
}

ConvolutionResult refine_grid(const std::function<double(const ConvolutionGrid&)>& evaluate,
                              std::span<const NegLogKernel> kernels, ConvolutionGrid start, double tol,
                              std::size_t max_points) {
  ConvolutionGrid g = ConvolutionGrid::make(start.step, start.radius);
  // widen until the kernels are below e^-60 of their peak at both ends
  for (int widen = 0; widen < 40; ++widen) {
    bool ok = true;
    for (const auto& e : kernels) {
      double emin = std::numeric_limits<double>::infinity();
      const std::size_t n = g.points();
      const std::size_t stride = std::max<std::size_t>(1, n / 4096);
      for (std::size_t k = 0; k < n; k += stride) emin = std::min(emin, e(-g.radius + k * g.step));
      emin = std::min({emin, e(-g.radius), e(g.radius)});
      if (e(-g.radius) - emin < 60.0 || e(g.radius) - emin < 60.0) ok = false;
    }
    if (ok) break;
    g = ConvolutionGrid::make(g.step, g.radius * 1.5);
    if (g.points() > max_points) throw QuadratureFailure("kernel window does not close within the point cap");
  }
  ConvolutionResult r;
  double prev = evaluate(g);
  for (;;) {
    ConvolutionGrid finer = ConvolutionGrid::make(g.step / 2.0, g.radius);
    if (finer.points() > max_points) {
      r.value = prev;
      r.grid = g;
      r.converged = false;
      return r;
    }
    const double v = evaluate(finer);
    ++r.refinements;
    g = finer;
    if (std::abs(v - prev) < tol) {
      r.value = v;
      r.grid = g;
      r.converged = true;
      return r;
    }
    prev = v;
  }
}

double log_constrained_integral_2d(std::span<const NegLogKernel2> kernels, const ConvolutionGrid& grid_a,
                                   const ConvolutionGrid& grid_s) {
  const std::size_t m = kernels.size();
  if (m < 2) throw PreconditionViolation("need at least two kernels");
  const std::size_t na = grid_a.points();
  const std::size_t ns = grid_s.points();
  const std::size_t pa = next_pow2(m * (na - 1) + 1);
  const std::size_t ps = next_pow2(m * (ns - 1) + 1);
  const std::size_t half = pa / 2 + 1;
  // layout: s is the slow axis, a the fast one
  const PlanPair2 plans = plans_2d(ps, pa);
  Real2 real(fftw_alloc_real(ps * pa));
  Cplx2 spec(fftw_alloc_complex(ps * half));
  Cplx2 acc(fftw_alloc_complex(ps * half));
  std::vector<std::vector<double>> vals(m, std::vector<double>(na * ns));
  for (std::size_t x = 0; x < m; ++x) {
    for (std::size_t i = 0; i < ns; ++i) {
      const double s = -grid_s.radius + static_cast<double>(i) * grid_s.step;
      for (std::size_t k = 0; k < na; ++k) {
        const double a = -grid_a.radius + static_cast<double>(k) * grid_a.step;
        const double e = kernels[x](a, s);
        if (std::isnan(e)) throw DomainError("kernel evaluated to NaN");
        vals[x][i * na + k] = e;
      }
    }
  }
  std::vector<double> t;
  {
    const std::size_t sa = std::max<std::size_t>(1, na / 64), ss = std::max<std::size_t>(1, ns / 64);
    std::vector<std::vector<double>> sub(m);
    std::vector<double> coords;
    for (std::size_t i = 0; i < ns; i += ss)
      for (std::size_t k = 0; k < na; k += sa) {
        coords.push_back(-grid_a.radius + static_cast<double>(k) * grid_a.step);
        coords.push_back(-grid_s.radius + static_cast<double>(i) * grid_s.step);
        for (std::size_t x = 0; x < m; ++x) sub[x].push_back(vals[x][i * na + k]);
      }
    t = balancing_tilt(sub, coords, 2, std::max(grid_a.radius, grid_s.radius));
  }
  double emin_sum = 0.0;
  for (std::size_t x = 0; x < m; ++x) {
    double emin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ns; ++i) {
      const double s = -grid_s.radius + static_cast<double>(i) * grid_s.step;
      for (std::size_t k = 0; k < na; ++k) {
        const double a = -grid_a.radius + static_cast<double>(k) * grid_a.step;
        double& e = vals[x][i * na + k];
        e -= t[0] * a + t[1] * s;
        emin = std::min(emin, e);
      }
    }
    if (!std::isfinite(emin)) throw QuadratureFailure("kernel has no finite value on the grid");
    emin_sum += emin;
    std::fill(real.ptr, real.ptr + ps * pa, 0.0);
    for (std::size_t i = 0; i < ns; ++i)
      for (std::size_t k = 0; k < na; ++k) real.ptr[i * pa + k] = std::exp(-(vals[x][i * na + k] - emin));
    fftw_execute_dft_r2c(plans.forward, real.ptr, spec.ptr);
    for (std::size_t k = 0; k < ps * half; ++k) {
      const std::complex<double> z(spec.ptr[k][0], spec.ptr[k][1]);
      const std::complex<double> a = x == 0 ? z : std::complex<double>(acc.ptr[k][0], acc.ptr[k][1]) * z;
      acc.ptr[k][0] = a.real();
      acc.ptr[k][1] = a.imag();
    }
  }
  fftw_execute_dft_c2r(plans.backward, acc.ptr, real.ptr);
  const std::size_t ja = m * (na - 1) / 2;
  const std::size_t js = m * (ns - 1) / 2;
  const double c = real.ptr[js * pa + ja] / static_cast<double>(ps * pa);
  if (!(c > 0.0)) throw QuadratureFailure("constrained convolution lost all precision");
  return std::log(c) + static_cast<double>(m - 1) * (std::log(grid_a.step) + std::log(grid_s.step)) - emin_sum;
}

}  // namespace gil
