#pragma once

#include <functional>
#include <span>
#include <vector>

namespace gil {

/// Negative log of a one-variable kernel, E(eta) = -log q(eta).
using NegLogKernel = std::function<double(double)>;
/// Negative log of a two-variable kernel.
using NegLogKernel2 = std::function<double(double, double)>;

/// Uniform symmetric grid: nodes -radius + k * step, radius a multiple of step.
struct ConvolutionGrid {
  double step = 0.0;
  double radius = 0.0;

  std::size_t points() const;
  /// Snaps radius up to a multiple of step.
  static ConvolutionGrid make(double step, double radius);
};

/// FFT arithmetic: extended precision for values far below the peak of the
/// convolution, double for speed.
enum class FftPrecision { Extended, Double };

/// log of the constrained integral
///   int prod_x q_x(eta_x) delta(sum_x eta_x) d eta
/// on a fixed grid (Riemann sum, FFT convolution in extended precision).
/// The power form evaluates one kernel and uses it for `count` edges.
double log_constrained_integral(std::span<const NegLogKernel> kernels, const ConvolutionGrid& grid,
                                FftPrecision precision = FftPrecision::Extended);
double log_constrained_integral_power(const NegLogKernel& kernel, int count, const ConvolutionGrid& grid,
                                      FftPrecision precision = FftPrecision::Extended);

/// Result of grid refinement.
struct ConvolutionResult {
  double value = 0.0;
  ConvolutionGrid grid;
  bool converged = false;
  int refinements = 0;
};

/// Widens the window until every kernel is negligible at the boundary, then
/// halves the step until consecutive values differ by less than `tol`.
/// `evaluate` maps a grid to a value; `kernels` are used for the window test.
ConvolutionResult refine_grid(const std::function<double(const ConvolutionGrid&)>& evaluate,
                              std::span<const NegLogKernel> kernels, ConvolutionGrid start, double tol,
                              std::size_t max_points = std::size_t{1} << 21);

/// Two-variable version on a product grid, evaluated in double precision:
/// log int prod_x q_x(a_x, s_x) delta(sum a) delta(sum s) da ds.
double log_constrained_integral_2d(std::span<const NegLogKernel2> kernels, const ConvolutionGrid& grid_a,
                                   const ConvolutionGrid& grid_s);

}  // namespace gil
