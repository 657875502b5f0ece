#include "gil/potential.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gil/error.hpp"

namespace gil {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double checked(double value, const char* what, double s) {
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << what << " is not finite at s = " << s;
    throw DomainError(msg.str());
  }
  return value;
}

void require_order(int order) {
  if (order < 0 || order > 2) throw PreconditionViolation("derivative order must be 0, 1 or 2");
}

double quadratic(double k, double s, int order) {
  switch (order) {
    case 0: return 0.5 * k * s * s;
    case 1: return k * s;
    default: return k;
  }
}

template <class F>
double gk(F&& f, double a, double b, double* err) {
  double e = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-13, &e);
  if (err) *err += e;
  return v;
}

struct TailResult {
  double value = 0.0;
  double error = 0.0;
  bool divergent = false;
};

// Integrates f over the real line: a core interval [-T0, T0] split at the
// breakpoints, then annuli T < |s| < 2T until an annulus contributes less
// than tol/2. The last annulus is reported as the tail error.
template <class F>
TailResult integrate_line(F&& f, std::vector<double> cuts, double t0, double tol) {
  TailResult out;
  cuts.push_back(-t0);
  cuts.push_back(t0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (cuts[k] < -t0 || cuts[k + 1] > t0) continue;
    out.value += gk(f, cuts[k], cuts[k + 1], &out.error);
  }
  double t = t0;
  double previous = kInf;
  int growth = 0;
  for (int doubling = 0; doubling < 60; ++doubling) {
    const double inc = gk(f, t, 2 * t, &out.error) + gk(f, -2 * t, -t, &out.error);
    out.value += inc;
    t *= 2;
    if (!std::isfinite(out.value)) {
      out.divergent = true;
      return out;
    }
    if (std::abs(inc) <= 0.5 * tol) {
      out.error += std::abs(inc);
      return out;
    }
    growth = (std::abs(inc) >= previous) ? growth + 1 : 0;
    if (growth >= 3) {
      out.divergent = true;
      return out;
    }
    previous = std::abs(inc);
  }
  out.divergent = true;
  return out;
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::ExampleA: return "example_a";
    case Family::ExampleB: return "example_b";
    case Family::ExampleC: return "example_c";
    case Family::Custom: return "custom";
  }
  return "custom";
}

double ScalingRecord::length() const { return std::sqrt(beta * c1); }

Potential Potential::gaussian() {
  Potential p;
  p.family_ = Family::Gaussian;
  p.v0_ = [](double s, int order) { return quadratic(1.0, s, order); };
  p.g0_ = [](double, int) { return 0.0; };
  p.constants_ = CurvatureConstants{0.0, 1.0, 1.0};
  p.feature_scale_ = 1.0;
  return p;
}

Potential Potential::example_a(double a) {
  if (!(a > 0.0 && a < 1.0)) throw PreconditionViolation("example_a requires 0 < a < 1");
  Potential p;
  p.family_ = Family::ExampleA;
  p.params_ = {a};
  p.v0_ = [](double s, int order) { return quadratic(2.0, s, order); };
  p.g0_ = [a](double s, int order) {
    const double q = s * s + a;
    switch (order) {
      case 0: return a - std::log(q);
      case 1: return -2.0 * s / q;
      default: return 2.0 * (s * s - a) / (q * q);
    }
  };
  p.constants_ = CurvatureConstants{2.0 / a, 2.0, 2.0};
  p.breakpoints_ = {-std::sqrt(a), std::sqrt(a)};
  p.feature_scale_ = std::sqrt(a);
  return p;
}

Potential Potential::example_b(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw PreconditionViolation("example_b requires 0 < delta < 1");
  Potential p;
  p.family_ = Family::ExampleB;
  p.params_ = {delta};
  p.v0_ = [](double s, int order) { return quadratic(1.0, s, order); };
  const double c = 4.0 / std::pow(delta, 4);
  p.g0_ = [delta, c](double s, int order) {
    if (s <= 0.0 || s >= delta) return 0.0;
    const double r = delta - s;
    switch (order) {
      case 0: return -c * s * s * s * r * r * r;
      case 1: return -3.0 * c * s * s * r * r * (delta - 2.0 * s);
      default: return -6.0 * c * s * r * (delta * delta - 5.0 * delta * s + 5.0 * s * s);
    }
  };
  p.constants_ = CurvatureConstants{6.0 / 5.0, 1.0, 1.0};
  const double t0 = (5.0 - std::sqrt(5.0)) / 10.0;
  p.breakpoints_ = {0.0, t0 * delta, (1.0 - t0) * delta, delta};
  p.feature_scale_ = delta;
  return p;
}

Potential Potential::example_c(double pw, double k1, double k2) {
  if (!(pw > 0.0 && pw < 1.0)) throw PreconditionViolation("example_c requires 0 < p < 1");
  if (!(k2 > 0.0 && k1 > k2)) throw PreconditionViolation("example_c requires 0 < k2 < k1");
  Potential p;
  p.family_ = Family::ExampleC;
  p.params_ = {pw, k1, k2};
  const double gap = k1 - k2;
  // posterior weight of the stiff component
  auto stiff_weight = [pw, gap](double s) {
    const double e = pw * std::exp(-0.5 * gap * s * s);
    return e / ((1.0 - pw) + e);
  };
  auto g0pp = [stiff_weight, gap](double s) {
    const double w = stiff_weight(s);
    return -s * s * gap * gap * w * (1.0 - w);
  };
  p.total_ = [pw, k2, gap, stiff_weight](double s, int order) {
    switch (order) {
      case 0: return 0.5 * k2 * s * s - std::log((1.0 - pw) + pw * std::exp(-0.5 * gap * s * s));
      case 1: return s * (k2 + gap * stiff_weight(s));
      default: {
        const double w = stiff_weight(s);
        return k2 + gap * w - s * s * gap * gap * w * (1.0 - w);
      }
    }
  };
  // g0 and g0' from g0'' with g0(0) = g0'(0) = 0.
  p.g0_ = [g0pp](double s, int order) {
    if (order == 2) return g0pp(s);
    if (s == 0.0) return 0.0;
    if (order == 1) return gk(g0pp, 0.0, s, nullptr);
    return gk([&](double t) { return (s - t) * g0pp(t); }, 0.0, s, nullptr);
  };
  auto total = p.total_;
  auto g0 = p.g0_;
  p.v0_ = [total, g0, k2, gap, stiff_weight](double s, int order) {
    if (order == 2) return k2 + gap * stiff_weight(s);
    return total(s, order) - g0(s, order);
  };
  p.constants_ = CurvatureConstants{pw * gap / (1.0 - pw), k2, pw * k1 + (1.0 - pw) * k2};
  p.feature_scale_ = 1.0 / std::sqrt(k1);
  return p;
}

Potential Potential::custom(ScalarFn v0, ScalarFn g0, std::optional<CurvatureConstants> declared,
                            std::vector<double> breakpoints, double feature_scale) {
  if (!v0 || !g0) throw PreconditionViolation("custom potential needs both V0 and g0");
  if (!(feature_scale > 0.0)) throw PreconditionViolation("feature scale must be positive");
  Potential p;
  p.family_ = Family::Custom;
  p.v0_ = std::move(v0);
  p.g0_ = std::move(g0);
  p.constants_ = declared;
  p.breakpoints_ = std::move(breakpoints);
  p.feature_scale_ = feature_scale;
  p.cert_cache_ = std::make_shared<CertCache>();
  return p;
}

double Potential::v0(double s, int order) const {
  require_order(order);
  return checked(v0_(s, order), "V0", s);
}

double Potential::g0(double s, int order) const {
  require_order(order);
  return checked(g0_(s, order), "g0", s);
}

double Potential::eval(double s, int order) const {
  require_order(order);
  if (total_) return checked(total_(s, order), "V", s);
  return checked(v0_(s, order) + g0_(s, order), "V", s);
}

double Potential::remainder(double s, int order) const {
  return eval(s, order) - quadratic(1.0, s, order);
}

struct Potential::CertCache {
  std::once_flag once;
  CurvatureConstants value;
  std::exception_ptr error;
};

CurvatureConstants Potential::constants() const {
  if (family_ != Family::Custom || scaling_) {
    return *constants_;
  }
  // certification scans a fine grid, so it runs once per potential
  std::call_once(cert_cache_->once, [this] {
    try {
      cert_cache_->value = certify_constants();
    } catch (...) {
      cert_cache_->error = std::current_exception();
    }
  });
  if (cert_cache_->error) std::rethrow_exception(cert_cache_->error);
  return cert_cache_->value;
}

CurvatureConstants Potential::certify_constants() const {
  if (constants_) {
    const auto cert = certify_curvature(*this, *constants_);
    if (!cert.lower_bounds_hold || !cert.g0pp_nonpositive) {
      throw InvalidPotential("custom potential violates its declared curvature bounds on the grid");
    }
    return *constants_;
  }
  const auto cert = certify_curvature(*this, CurvatureConstants{kInf, 0.0, kInf});
  if (!(cert.v0pp_min > 0.0)) throw InvalidPotential("V0'' is not bounded below by a positive constant");
  if (!cert.g0pp_nonpositive) throw InvalidPotential("g0'' takes positive values on the grid");
  constexpr double margin = 1e-6;
  return CurvatureConstants{std::max(0.0, -cert.g0pp_min) * (1.0 + margin), cert.v0pp_min * (1.0 - margin),
                            cert.v0pp_max * (1.0 + margin)};
}

const Potential& Potential::base() const { return base_ ? base_->base() : *this; }

std::optional<double> Potential::stated_l1_curvature_norm() const {
  if (scaling_) {
    auto inner = base_->stated_l1_curvature_norm();
    if (!inner) return std::nullopt;
    return *inner * scaling_->length() / scaling_->c1;
  }
  switch (family_) {
    case Family::Gaussian: return 0.0;
    case Family::ExampleA: return 2.0 / std::sqrt(params_[0]);
    case Family::ExampleB: return 3.0 * std::pow(params_[0], 5) / (10.0 * std::sqrt(5.0));
    case Family::ExampleC: {
      const double pw = params_[0];
      return 2.0 * pw / (1.0 - pw) * std::sqrt((params_[1] - params_[2]) * std::numbers::pi);
    }
    case Family::Custom: return std::nullopt;
  }
  return std::nullopt;
}

Potential Potential::scaled(double beta) const {
  if (!(beta > 0.0)) throw PreconditionViolation("beta must be positive");
  const CurvatureConstants c = constants();
  const ScalingRecord rec{beta, c.c1};
  const double len = rec.length();
  auto wrap = [beta, len](ScalarFn f) -> ScalarFn {
    if (!f) return {};
    return [f = std::move(f), beta, len](double s, int order) {
      return beta * std::pow(len, -order) * f(s / len, order);
    };
  };
  Potential out;
  out.family_ = family_;
  out.params_ = params_;
  out.v0_ = wrap(v0_);
  out.g0_ = wrap(g0_);
  out.total_ = wrap(total_);
  out.constants_ = CurvatureConstants{c.c0 / c.c1, 1.0, c.c2 / c.c1};
  for (double b : breakpoints_) out.breakpoints_.push_back(b * len);
  out.feature_scale_ = feature_scale_ * len;
  out.scaling_ = rec;
  out.base_ = std::make_shared<const Potential>(*this);
  return out;
}

std::string Potential::describe() const {
  std::ostringstream os;
  os << to_string(family_);
  if (!params_.empty()) {
    os << "(";
    for (std::size_t k = 0; k < params_.size(); ++k) os << (k ? "," : "") << params_[k];
    os << ")";
  }
  if (scaling_) os << " scaled(beta=" << scaling_->beta << ",c1=" << scaling_->c1 << ")";
  return os.str();
}

CurvatureCertificate certify_curvature(const Potential& p, const CurvatureConstants& c, GridRange grid) {
  CurvatureCertificate cert;
  cert.v0pp_min = cert.g0pp_min = kInf;
  cert.v0pp_max = cert.g0pp_max = -kInf;
  for (int k = 0; k < grid.points; ++k) {
    const double s = grid.at(k);
    const double v = p.v0(s, 2);
    const double g = p.g0(s, 2);
    cert.v0pp_min = std::min(cert.v0pp_min, v);
    cert.v0pp_max = std::max(cert.v0pp_max, v);
    cert.g0pp_min = std::min(cert.g0pp_min, g);
    cert.g0pp_max = std::max(cert.g0pp_max, g);
  }
  constexpr double rel = 1e-12;
  cert.lower_bounds_hold = cert.v0pp_min >= c.c1 * (1 - rel) && cert.v0pp_max <= c.c2 * (1 + rel) &&
                           cert.g0pp_min >= -c.c0 * (1 + rel) - 1e-14;
  cert.g0pp_nonpositive = cert.g0pp_max <= 1e-14;
  return cert;
}

NormReport norms(const Potential& p, double tol) {
  if (!(tol > 0.0)) throw PreconditionViolation("norm tolerance must be positive");
  if (p.scaling()) {
    // Exact transformation of the base norms under s -> s / sqrt(beta c1).
    const ScalingRecord& rec = *p.scaling();
    const NormReport b = norms(p.base(), tol);
    const double len = rec.length();
    NormReport out;
    out.l1_g0pp = b.l1_g0pp * len / rec.c1;
    out.l1_g0pp_abs = b.l1_g0pp_abs * len / rec.c1;
    out.l2_g0p = b.l2_g0p * rec.beta / std::sqrt(len);
    out.l1_g0 = b.l1_g0 * rec.beta * len;
    out.quadrature_error = b.quadrature_error * std::max({len / rec.c1, rec.beta * len, 1.0});
    return out;
  }
  if (p.family() == Family::Gaussian) return NormReport{};

  double reach = 8.0 * p.feature_scale();
  for (double b : p.breakpoints()) reach = std::max(reach, 2.0 * std::abs(b));
  reach = std::max(reach, 1.0);

  NormReport out;
  const auto neg = integrate_line([&](double s) { return std::max(0.0, -p.g0(s, 2)); }, p.breakpoints(), reach, tol);
  if (neg.divergent) throw DivergentNorm("L1 norm of the negative part of g0'' diverges");
  const auto abs2 = integrate_line([&](double s) { return std::abs(p.g0(s, 2)); }, p.breakpoints(), reach, tol);
  if (abs2.divergent) throw DivergentNorm("L1 norm of g0'' diverges");
  out.l1_g0pp = neg.value;
  out.l1_g0pp_abs = abs2.value;
  out.quadrature_error = std::max(neg.error, abs2.error);

  const auto d1 = integrate_line([&](double s) { const double g = p.g0(s, 1); return g * g; }, p.breakpoints(), reach, tol);
  out.l2_g0p = d1.divergent ? kInf : std::sqrt(d1.value);
  if (!d1.divergent) out.quadrature_error = std::max(out.quadrature_error, d1.error);

  const auto d0 = integrate_line([&](double s) { return std::abs(p.g0(s, 0)); }, p.breakpoints(), reach, tol);
  out.l1_g0 = d0.divergent ? kInf : d0.value;
  if (!d0.divergent) out.quadrature_error = std::max(out.quadrature_error, d0.error);
  return out;
}

bool validate_growth(const Potential& p, double a_coef, double b_coef, GridRange grid) {
  if (!(a_coef > 0.0)) throw PreconditionViolation("growth coefficient must be positive");
  for (int k = 0; k < grid.points; ++k) {
    const double s = grid.at(k);
    if (p.eval(s, 0) < a_coef * s * s - b_coef) return false;
  }
  return true;
}

}  // namespace gil
