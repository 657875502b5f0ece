#include "gil/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "gil/conditions.hpp"
#include "gil/error.hpp"
#include "gil/parallel.hpp"
#include "gil/renorm.hpp"

namespace gil {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<double> with_origin(const Eigen::VectorXd& dof) {
  std::vector<double> s(static_cast<std::size_t>(dof.size()) + 1, 0.0);
  std::copy(dof.data(), dof.data() + dof.size(), s.begin() + 1);
  return s;
}

void check_gradient(const Target& target, const Eigen::VectorXd& x, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x5eedULL));
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(x.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
  const double h = 1e-5;
  const double e0 = target.energy(x);
  const double num = (target.energy(x + h * v) - target.energy(x - h * v)) / (2.0 * h);
  const double ana = target.gradient(x).dot(v);
  const double tol = 1e-5 * (1.0 + std::abs(ana)) + 1e-9 * std::abs(e0) / h;
  if (!(std::abs(num - ana) <= tol)) {
    throw PreconditionViolation("target gradient is inconsistent with its energy");
  }
}

}  // namespace

Target gibbs_target(const Torus& t, const Tilt& u, const Potential& p, double beta) {
  if (!(beta > 0.0)) throw PreconditionViolation("beta must be positive");
  if (u.size() != t.dim()) throw PreconditionViolation("tilt dimension does not match torus");
  const ScalarFn f = potential_fn(p);
  Target target;
  target.energy = [t, u, f](const Eigen::VectorXd& x) { return edge_energy(t, u, with_origin(x), f); };
  target.gradient = [t, u, f](const Eigen::VectorXd& x) { return edge_gradient(t, u, with_origin(x), f); };
  target.beta = beta;
  target.edge_curvature = p.constants().c2;
  target.lattice_dim = t.dim();
  target.dof = t.dof();
  return target;
}

double default_step_size(const Target& target) {
  return 0.5 / std::sqrt(target.beta * (2.0 * target.lattice_dim * target.edge_curvature + 1.0));
}

void ChainConfig::validate() const {
  if (step_size && !(*step_size > 0.0)) throw PreconditionViolation("step_size must be positive");
  if (burn_in >= n_steps) throw PreconditionViolation("burn_in must be smaller than n_steps");
  if (thinning < 1) throw PreconditionViolation("thinning must be >= 1");
  if (n_chains < 1) throw PreconditionViolation("n_chains must be >= 1");
}

std::uint64_t chain_seed(std::uint64_t seed, int index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

ChainStats run_chain(const Target& target, const Eigen::VectorXd& start, const ChainConfig& cfg, int chain_index,
                     const SampleCallback& on_sample) {
  cfg.validate();
  if (static_cast<std::size_t>(start.size()) != target.dof) throw PreconditionViolation("start state has wrong size");
  const std::uint64_t seed = chain_seed(cfg.seed, chain_index);
  check_gradient(target, start, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  const double beta = target.beta;
  double eps = cfg.step_size ? *cfg.step_size : default_step_size(target);
  Eigen::VectorXd x = start;
  double U = beta * target.energy(x);
  Eigen::VectorXd gU = beta * target.gradient(x);
  Eigen::VectorXd xi(x.size());

  std::size_t window_accepts = 0;
  std::size_t window_n = 0;
  std::size_t post_accepts = 0;
  std::size_t post_n = 0;
  ChainStats stats;

  for (std::size_t step = 0; step < cfg.n_steps; ++step) {
    for (Eigen::Index k = 0; k < xi.size(); ++k) xi[k] = normal(rng);
    const double e2 = eps * eps;
    const Eigen::VectorXd y = x - 0.5 * e2 * gU + eps * xi;
    const double Uy = beta * target.energy(y);
    const Eigen::VectorXd gUy = beta * target.gradient(y);
    const double log_fwd = -0.5 * xi.squaredNorm();
    const double log_bwd = -(x - y + 0.5 * e2 * gUy).squaredNorm() / (2.0 * e2);
    const double log_alpha = -Uy + U + log_bwd - log_fwd;
    const bool accept = std::isfinite(log_alpha) && std::log(uniform(rng)) < log_alpha;
    if (accept) {
      x = y;
      U = Uy;
      gU = gUy;
    }
    if (step < cfg.burn_in) {
      window_accepts += accept;
      if (cfg.adapt && ++window_n == 50) {
        eps *= std::exp(static_cast<double>(window_accepts) / 50.0 - 0.574);
        window_accepts = 0;
        window_n = 0;
      }
      continue;
    }
    post_accepts += accept;
    ++post_n;
    if (post_n % cfg.thinning == 0) {
      on_sample(x);
      ++stats.retained;
    }
  }
  stats.acceptance_rate = static_cast<double>(post_accepts) / static_cast<double>(post_n);
  stats.step_size = eps;
  if (cfg.enforce_acceptance && (stats.acceptance_rate < 0.10 || stats.acceptance_rate > 0.95)) {
    throw ChainDiagnosticsError("acceptance rate " + std::to_string(stats.acceptance_rate) +
                                " outside [0.10, 0.95]; adjust the step size");
  }
  return stats;
}

ChainRun run_chains(const Target& target, const Eigen::VectorXd& start, const ChainConfig& cfg, const Observable& obs) {
  cfg.validate();
  ChainRun run;
  run.series.resize(cfg.n_chains);
  run.stats.resize(cfg.n_chains);
  parallel_for(static_cast<std::size_t>(cfg.n_chains), cfg.threads, [&](std::size_t c) {
    std::vector<Eigen::VectorXd> rows;
    rows.reserve(cfg.retained_per_chain());
    run.stats[c] = run_chain(target, start, cfg, static_cast<int>(c),
                             [&](const Eigen::VectorXd& state) { rows.push_back(obs(state)); });
    const auto cols = rows.empty() ? 0 : rows.front().size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    run.series[c] = std::move(m);
  });
  return run;
}

Estimate mean_estimate(const ChainRun& run) {
  BatchMeans bm;
  for (const auto& s : run.series) bm.add_chain(s);
  Estimate e;
  e.value = bm.mean();
  e.std_error = bm.std_error();
  e.n_effective = bm.n_effective(0);
  e.method = EstimateMethod::Chain;
  return e;
}

FluctuationResult fluctuation_hessian(const Tilt& u, const Potential& p, const Torus& t, const ChainConfig& cfg) {
  if (std::abs(p.constants().c1 - 1.0) > 1e-12) {
    throw PreconditionViolation("fluctuation_hessian requires a unit-scaled potential (c1 = 1, beta = 1)");
  }
  const Target target = gibbs_target(t, u, p, 1.0);
  const int d = t.dim();
  Observable obs = [&t, &u, &p, d](const Eigen::VectorXd& x) {
    const TiltDerivatives td = tilt_derivatives(t, u, with_origin(x), p);
    Eigen::VectorXd v(2 * d);
    v << td.first, td.second_diag;
    return v;
  };
  const ChainRun run = run_chains(target, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.dof())), cfg, obs);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  double total = 0.0;
  for (const auto& s : run.series) {
    mean += s.leftCols(d).colwise().sum().transpose();
    total += static_cast<double>(s.rows());
  }
  mean /= total;
  const double bessel = total / (total - 1.0);

  BatchMeans hess_bm, curv_bm, var_bm;
  for (const auto& s : run.series) {
    const Eigen::Index n = s.rows();
    Eigen::MatrixXd zh(n, d * d), zc(n, d * d), zv(n, d * d);
    for (Eigen::Index r = 0; r < n; ++r) {
      const Eigen::VectorXd dev = s.row(r).head(d).transpose() - mean;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const double curv = i == j ? s(r, d + i) : 0.0;
          const double cov = bessel * dev[i] * dev[j];
          zc(r, i * d + j) = curv;
          zv(r, i * d + j) = cov;
          zh(r, i * d + j) = curv - cov;
        }
    }
    hess_bm.add_chain(zh);
    curv_bm.add_chain(zc);
    var_bm.add_chain(zv);
  }
  auto to_estimate = [d](const BatchMeans& bm) {
    Estimate e;
    e.value = Eigen::Map<const Eigen::MatrixXd>(bm.mean().data(), d, d).transpose();
    e.std_error = Eigen::Map<const Eigen::MatrixXd>(bm.std_error().data(), d, d).transpose();
    e.n_effective = bm.n_effective(0);
    e.method = EstimateMethod::Chain;
    return e;
  };
  FluctuationResult r;
  r.hessian = to_estimate(hess_bm);
  r.hessian.value = 0.5 * (r.hessian.value + r.hessian.value.transpose()).eval();
  r.mean_curvature = to_estimate(curv_bm);
  r.variance_term = to_estimate(var_bm);
  r.stats = run.stats;
  return r;
}

std::vector<ComplexEstimate> characteristic_from_series(const std::vector<Eigen::VectorXd>& eta_by_chain,
                                                        const std::vector<double>& k_grid) {
  std::vector<ComplexEstimate> out;
  out.reserve(k_grid.size());
  for (double k : k_grid) {
    BatchMeans bm;
    for (const auto& eta : eta_by_chain) {
      Eigen::MatrixXd cs(eta.size(), 2);
      cs.col(0) = (k * eta.array()).cos().matrix();
      cs.col(1) = (k * eta.array()).sin().matrix();
      bm.add_chain(cs);
    }
    const Eigen::VectorXd m = bm.mean();
    const Eigen::VectorXd se = bm.std_error();
    ComplexEstimate e;
    e.value = {m[0], m[1]};
    e.std_error_re = se[0];
    e.std_error_im = se[1];
    e.n_effective = static_cast<double>(bm.samples());
    out.push_back(e);
  }
  return out;
}

std::vector<ComplexEstimate> characteristic_A(const std::vector<double>& k_grid, int axis, std::size_t site,
                                              const Torus& t, const Target& target, const ChainConfig& cfg) {
  if (axis < 0 || axis >= t.dim() || site >= t.volume()) throw PreconditionViolation("invalid edge");
  Observable obs = [&t, axis, site](const Eigen::VectorXd& x) {
    const auto s = with_origin(x);
    return Eigen::VectorXd::Constant(1, grad(t, s, site, axis));
  };
  const ChainRun run = run_chains(target, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.dof())), cfg, obs);
  std::vector<Eigen::VectorXd> eta;
  for (const auto& s : run.series) eta.emplace_back(s.col(0));
  return characteristic_from_series(eta, k_grid);
}

std::vector<double> default_k_grid(int d, double cbar, int points) {
  if (points < 3) throw PreconditionViolation("k grid needs at least 3 points");
  const double K = 4.0 * std::sqrt(12.0 * d * cbar);
  std::vector<double> k(points);
  for (int j = 0; j < points; ++j) k[j] = -K + 2.0 * K * j / (points - 1);
  k[points / 2] = points % 2 == 1 ? 0.0 : k[points / 2];
  return k;
}

FourierReport verify_l1norm_bounds(const Potential& p, const Torus& t, const Tilt& u, const Field& psi, double lambda,
                                   const std::vector<double>& k_grid, const ChainConfig& cfg) {
  if (std::abs(p.constants().c1 - 1.0) > 1e-12) {
    throw PreconditionViolation("verify_l1norm_bounds requires a unit-scaled potential");
  }
  const double cb = cbar(p.constants());
  if (lambda > 1.0 / (2.0 * cb) * (1.0 + 1e-12)) throw PreconditionViolation("lambda exceeds 1/(2 cbar)");
  if (k_grid.size() < 2) throw PreconditionViolation("k grid needs at least two points");
  const int d = t.dim();
  const DecompositionPlan plan = DecompositionPlan::make(t, p, lambda);
  const InducedH1 h1(plan, u, psi);
  Observable obs = [&t, d](const Eigen::VectorXd& x) {
    const auto s = with_origin(x);
    Eigen::VectorXd e(static_cast<Eigen::Index>(t.volume()) * d);
    for (std::size_t y = 0; y < t.volume(); ++y)
      for (int i = 0; i < d; ++i) e[static_cast<Eigen::Index>(y * d + i)] = grad(t, s, y, i);
    return e;
  };
  const ChainRun run = run_chains(h1.target(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.dof())), cfg, obs);

  const NormReport nrm = norms(p);
  const double c12 = 12.0 * d * cb;
  std::vector<double> ks = k_grid;
  std::sort(ks.begin(), ks.end());
  const double K = std::max(std::abs(ks.front()), std::abs(ks.back()));
  const double tail = 2.0 * c12 / K;

  FourierReport rep;
  rep.cbar = cb;
  rep.lambda = lambda;
  rep.stats = run.stats;
  for (std::size_t y = 0; y < t.volume(); ++y) {
    for (int i = 0; i < d; ++i) {
      const Eigen::Index col = static_cast<Eigen::Index>(y * d + i);
      std::vector<Eigen::VectorXd> eta;
      for (const auto& s : run.series) eta.emplace_back(s.col(col));
      const auto A = characteristic_from_series(eta, ks);
      FourierEdgeSummary es;
      es.site = y;
      es.axis = i;
      for (std::size_t j = 0; j < ks.size(); ++j) {
        FourierPoint fp;
        fp.site = y;
        fp.axis = i;
        fp.k = ks[j];
        fp.modulus = std::abs(A[j].value);
        fp.std_error = A[j].modulus_error();
        fp.envelope = ks[j] == 0.0 ? 1.0 : std::min(1.0, c12 / (ks[j] * ks[j]));
        fp.ok = fp.modulus <= fp.envelope + 4.0 * fp.std_error;
        rep.pointwise_ok = rep.pointwise_ok && fp.ok;
        rep.points.push_back(fp);
        if (j + 1 < ks.size()) {
          const double w = 0.5 * (ks[j + 1] - ks[j]);
          es.integral += w * (std::abs(A[j].value) + std::abs(A[j + 1].value));
          es.integral_se += w * (A[j].modulus_error() + A[j + 1].modulus_error());
        }
      }
      es.integral += tail;
      es.integral_bound = 4.0 * std::sqrt(c12);
      es.integral_ok = es.integral <= es.integral_bound + 4.0 * es.integral_se;
      rep.integral_ok = rep.integral_ok && es.integral_ok;

      const double shift = u[i] + grad(t, psi.sites(), y, i);
      BatchMeans bm;
      for (const auto& e : eta) {
        Eigen::MatrixXd hv(e.size(), 2);
        for (Eigen::Index r = 0; r < e.size(); ++r) {
          const double h = p.g0(shift + e[r], 2);
          hv(r, 0) = h;
          hv(r, 1) = std::min(h, 0.0);
        }
        bm.add_chain(hv);
      }
      const Eigen::VectorXd m = bm.mean();
      const Eigen::VectorXd se = bm.std_error();
      const double pref = 2.0 / std::numbers::pi * std::sqrt(c12);
      es.mean_h_full = m[0];
      es.mean_h_full_se = se[0];
      es.bound_h_full = pref * nrm.l1_g0pp_abs;
      es.mean_h_neg = m[1];
      es.mean_h_neg_se = se[1];
      es.bound_h_neg = pref * nrm.l1_g0pp;
      es.h_ok = std::abs(m[0]) <= es.bound_h_full + 4.0 * se[0] && std::abs(m[1]) <= es.bound_h_neg + 4.0 * se[1];
      rep.h_ok = rep.h_ok && es.h_ok;
      rep.edges.push_back(es);
    }
  }
  return rep;
}

GradientObservable linear_observable(const Eigen::VectorXd& v) {
  return {[v](const Eigen::VectorXd& x) { return v.dot(x); }, [v](const Eigen::VectorXd&) { return v; }};
}

PoincareReport poincare_variance_check(const Target& target, const GradientObservable& g, double delta,
                                       const ChainConfig& cfg) {
  if (!(delta > 0.0)) throw PreconditionViolation("delta must be positive");
  Observable obs = [&g](const Eigen::VectorXd& x) {
    Eigen::VectorXd v(2);
    v << g.value(x), g.gradient(x).squaredNorm();
    return v;
  };
  const ChainRun run = run_chains(target, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(target.dof)), cfg, obs);
  double mean = 0.0;
  double total = 0.0;
  for (const auto& s : run.series) {
    mean += s.col(0).sum();
    total += static_cast<double>(s.rows());
  }
  mean /= total;
  const double bessel = total / (total - 1.0);
  BatchMeans bm;
  for (const auto& s : run.series) {
    Eigen::MatrixXd z(s.rows(), 2);
    z.col(0) = bessel * (s.col(0).array() - mean).square().matrix();
    z.col(1) = s.col(1);
    bm.add_chain(z);
  }
  const Eigen::VectorXd m = bm.mean();
  const Eigen::VectorXd se = bm.std_error();
  PoincareReport r;
  r.variance = m[0];
  r.variance_se = se[0];
  r.bound = m[1] / delta;
  r.bound_se = se[1] / delta;
  r.holds = r.variance <= r.bound + 4.0 * std::hypot(r.variance_se, r.bound_se);
  return r;
}

std::vector<double> gradient_covariance_by_distance(const Torus& t, const ChainRun& field_run, int axis) {
  const std::size_t n = t.volume();
  std::vector<double> mean(n, 0.0);
  double count = 0.0;
  std::vector<std::vector<double>> eta_rows;
  for (const auto& s : field_run.series) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      const auto sites = with_origin(s.row(r).transpose());
      std::vector<double> e(n);
      for (std::size_t x = 0; x < n; ++x) e[x] = grad(t, sites, x, axis);
      for (std::size_t x = 0; x < n; ++x) mean[x] += e[x];
      eta_rows.push_back(std::move(e));
      count += 1.0;
    }
  }
  if (count < 2.0) throw PreconditionViolation("need at least two samples");
  for (double& m : mean) m /= count;
  const int max_dist = t.dim() * (t.side() / 2);
  std::vector<double> acc(max_dist + 1, 0.0);
  std::vector<double> pairs(max_dist + 1, 0.0);
  for (std::size_t y = 0; y < n; ++y) {
    const auto cy = t.coords(y);
    for (std::size_t z = 0; z < n; ++z) {
      const auto cz = t.coords(z);
      int dist = 0;
      for (int i = 0; i < t.dim(); ++i) {
        const int diff = std::abs(cy[i] - cz[i]);
        dist += std::min(diff, t.side() - diff);
      }
      double c = 0.0;
      for (const auto& e : eta_rows) c += (e[y] - mean[y]) * (e[z] - mean[z]);
      acc[dist] += c / (count - 1.0);
      pairs[dist] += 1.0;
    }
  }
  for (int k = 0; k <= max_dist; ++k) acc[k] = pairs[k] > 0 ? acc[k] / pairs[k] : 0.0;
  return acc;
}

}  // namespace gil
