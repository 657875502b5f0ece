#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "gil/conditions.hpp"
#include "gil/error.hpp"
#include "gil/gaussian.hpp"
#include "gil/parallel.hpp"
#include "gil/serialization.hpp"
#include "schema_data.hpp"

namespace gil::cli {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

void validate_at(const json& v, const json& s, const std::string& path, std::vector<std::string>& errs) {
  const std::string where = path.empty() ? "<root>" : path;
  if (auto it = s.find("type"); it != s.end()) {
    bool ok = false;
    if (it->is_string()) {
      ok = type_matches(v, it->get<std::string>());
    } else {
      for (const auto& t : *it) ok = ok || type_matches(v, t.get<std::string>());
    }
    if (!ok) {
      errs.push_back(where + ": expected type " + it->dump());
      return;
    }
  }
  if (auto it = s.find("enum"); it != s.end()) {
    if (std::find(it->begin(), it->end(), v) == it->end()) errs.push_back(where + ": value not in " + it->dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (auto it = s.find("minimum"); it != s.end() && x < it->get<double>()) {
      errs.push_back(where + ": below minimum " + it->dump());
    }
    if (auto it = s.find("maximum"); it != s.end() && x > it->get<double>()) {
      errs.push_back(where + ": above maximum " + it->dump());
    }
    if (auto it = s.find("exclusiveMinimum"); it != s.end() && x <= it->get<double>()) {
      errs.push_back(where + ": must exceed " + it->dump());
    }
    if (auto it = s.find("exclusiveMaximum"); it != s.end() && x >= it->get<double>()) {
      errs.push_back(where + ": must be below " + it->dump());
    }
  }
  if (v.is_object()) {
    const json empty = json::object();
    const json& props = s.contains("properties") ? s["properties"] : empty;
    if (auto it = s.find("required"); it != s.end()) {
      for (const auto& key : *it) {
        if (!v.contains(key.get<std::string>())) errs.push_back(where + ": missing required key " + key.dump());
      }
    }
    const bool closed = s.value("additionalProperties", true) == false;
    for (const auto& [key, child] : v.items()) {
      const std::string sub = path.empty() ? key : path + "." + key;
      if (auto p = props.find(key); p != props.end()) {
        validate_at(child, *p, sub, errs);
      } else if (closed) {
        errs.push_back(sub + ": unknown key");
      }
    }
  }
  if (v.is_array()) {
    if (auto it = s.find("items"); it != s.end()) {
      for (std::size_t i = 0; i < v.size(); ++i) validate_at(v[i], *it, path + "[" + std::to_string(i) + "]", errs);
    }
  }
}

Potential make_potential(const json& spec) {
  const auto family = spec["family"].get<std::string>();
  auto need = [&](const char* key) {
    if (!spec.contains(key)) throw ConfigError(std::string("potential.") + key + " is required for " + family);
    return spec[key].get<double>();
  };
  std::vector<std::string> allowed;
  Potential p = Potential::gaussian();
  if (family == "gaussian") {
    p = Potential::gaussian();
  } else if (family == "example_a") {
    allowed = {"a"};
    p = Potential::example_a(need("a"));
  } else if (family == "example_b") {
    allowed = {"delta"};
    p = Potential::example_b(need("delta"));
  } else {
    allowed = {"p", "k1", "k2"};
    p = Potential::example_c(need("p"), need("k1"), need("k2"));
  }
  for (const auto& [key, _] : spec.items()) {
    if (key != "family" && std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("potential." + key + " does not apply to " + family);
    }
  }
  return p;
}

Tilt make_tilt(const json& v, int d, const std::string& what) {
  Tilt u(d);
  if (v.is_number()) {
    if (d != 1) throw ConfigError(what + ": scalar tilt needs d = 1");
    u[0] = v.get<double>();
    return u;
  }
  if (static_cast<int>(v.size()) != d) throw ConfigError(what + ": tilt must have d components");
  for (int i = 0; i < d; ++i) u[i] = v[static_cast<std::size_t>(i)].get<double>();
  return u;
}

QuadratureRule parse_rule(const std::string& s) {
  if (s == "gauss_hermite") return QuadratureRule::GaussHermite;
  if (s == "edge_convolution") return QuadratureRule::EdgeConvolution;
  return QuadratureRule::Auto;
}

double threshold_for(const ConditionReport& r, const std::string& condition) {
  if (condition == "alt9") return r.beta_max_9;
  if (condition == "alt11") return r.beta_max_11;
  return r.beta_max_fcond;
}

json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

Tilt zero_tilt(int d) { return Tilt::Zero(d); }

Tilt lemma_tilt(const ExperimentConfig& cfg) {
  if (cfg.u) return *cfg.u;
  if (!cfg.u_grid.empty()) return cfg.u_grid.front();
  return zero_tilt(cfg.d);
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line + '\n';
}

struct LegendreNode {
  double t;
  double w;
};

// 32-point Gauss-Legendre on [0, 1], ascending.
std::vector<LegendreNode> legendre32() {
  using Rule = boost::math::quadrature::gauss<double, 32>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  std::vector<LegendreNode> nodes;
  for (std::size_t k = x.size(); k-- > 0;) nodes.push_back({0.5 * (1.0 - x[k]), 0.5 * w[k]});
  for (std::size_t k = 0; k < x.size(); ++k) nodes.push_back({0.5 * (1.0 + x[k]), 0.5 * w[k]});
  return nodes;
}

bool use_oracle(const ExperimentConfig& cfg, const Torus& t) {
  if (cfg.free_energy_method == "oracle") return true;
  if (cfg.free_energy_method == "thermodynamic") return false;
  if (t.dim() == 1 && cfg.quadrature.rule != QuadratureRule::GaussHermite) return true;
  return t.dof() <= static_cast<std::size_t>(cfg.quadrature.max_dof);
}

struct Difference {
  double value;
  double error;
};

// f(u) - f(0) = int_0^1 u . <D_u H>(s u) ds.
Difference thermodynamic_difference(const ExperimentConfig& cfg, const Torus& t, const Tilt& u) {
  const auto nodes = legendre32();
  double value = 0.0;
  double var = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const Tilt us = nodes[j].t * u;
    const Target target = gibbs_target(t, us, cfg.potential, cfg.beta);
    ChainConfig chain = cfg.chain;
    chain.seed = chain_seed(cfg.seed, static_cast<int>(j));
    const Potential& p = cfg.potential;
    Observable obs = [&t, &us, &u, &p](const Eigen::VectorXd& state) {
      const Field phi = Field::from_dof(state);
      Eigen::VectorXd out(1);
      out[0] = u.dot(tilt_derivatives(t, us, phi.sites(), p).first);
      return out;
    };
    const Estimate e = mean_estimate(run_chains(target, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.dof())), chain, obs));
    value += nodes[j].w * e.scalar();
    var += std::pow(nodes[j].w * e.scalar_error(), 2);
  }
  return {value, std::sqrt(var)};
}

std::vector<double> resolve_k_grid(const ExperimentConfig& cfg, double cbar) {
  if (cfg.k_grid) return *cfg.k_grid;
  const int points = cfg.k_points.value_or(401);
  if (!cfg.k_max) return default_k_grid(cfg.d, cbar, points);
  std::vector<double> k(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) k[static_cast<std::size_t>(i)] = -*cfg.k_max + 2.0 * *cfg.k_max * i / (points - 1);
  return k;
}

ordered_json poincare_json(const std::string& target, int index, const PoincareReport& r) {
  ordered_json j;
  j["target"] = target;
  j["observable"] = index;
  j["variance"] = num(r.variance);
  j["variance_se"] = num(r.variance_se);
  j["bound"] = num(r.bound);
  j["bound_se"] = num(r.bound_se);
  j["method"] = to_string(EstimateMethod::Chain);
  j["holds"] = r.holds;
  return j;
}

}  // namespace

const json& experiment_schema() {
  static const json schema = json::parse(kExperimentSchema);
  return schema;
}

std::vector<std::string> validate(const json& doc, const json& schema) {
  std::vector<std::string> errs;
  validate_at(doc, schema, "", errs);
  return errs;
}

ExperimentConfig parse_config(const std::string& text, const std::string& command) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const json& schema = experiment_schema();
  auto errs = validate(doc, schema);
  const auto& by_command = schema["commandRequired"];
  if (!by_command.contains(command)) throw ConfigError("unknown command " + command);
  for (const auto& key : by_command[command]) {
    if (doc.is_object() && !doc.contains(key.get<std::string>())) {
      errs.push_back("<root>: " + command + " requires key " + key.dump());
    }
  }
  if (!errs.empty()) {
    std::string msg = "config does not match the experiment schema:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }

  ExperimentConfig cfg;
  cfg.command = command;
  cfg.d = doc["d"].get<int>();
  cfg.m = doc["m"].get<int>();
  try {
    cfg.potential = make_potential(doc["potential"]);
  } catch (const gil::Error& e) {
    throw ConfigError(std::string("potential: ") + e.what());
  }
  cfg.condition = doc.value("condition", std::string("fcond"));

  const bool has_beta = doc.contains("beta");
  const bool has_fraction = doc.contains("beta_threshold_fraction");
  if (has_beta == has_fraction) throw ConfigError("exactly one of beta and beta_threshold_fraction is required");
  if (has_beta) {
    cfg.beta = doc["beta"].get<double>();
  } else {
    const ConditionReport r = evaluate_conditions(1.0, cfg.d, cfg.potential, norms(cfg.potential));
    const double threshold = threshold_for(r, cfg.condition);
    if (!std::isfinite(threshold) || !(threshold > 0.0)) {
      throw ConfigError("beta_threshold_fraction: the " + cfg.condition + " threshold is not finite and positive");
    }
    cfg.beta = doc["beta_threshold_fraction"].get<double>() * threshold;
  }

  if (doc.contains("u_grid")) {
    for (const auto& v : doc["u_grid"]) cfg.u_grid.push_back(make_tilt(v, cfg.d, "u_grid"));
  }
  if (doc.contains("u")) cfg.u = make_tilt(doc["u"], cfg.d, "u");
  if (doc.contains("lambda")) cfg.lambda = doc["lambda"].get<double>();
  cfg.free_energy_method = doc.value("free_energy_method", std::string("auto"));

  if (doc.contains("chain")) {
    const auto& c = doc["chain"];
    if (c.contains("step_size")) cfg.chain.step_size = c["step_size"].get<double>();
    cfg.chain.n_steps = c.value("n_steps", cfg.chain.n_steps);
    cfg.chain.burn_in = c.value("burn_in", cfg.chain.burn_in);
    cfg.chain.thinning = c.value("thinning", cfg.chain.thinning);
    cfg.chain.n_chains = c.value("n_chains", cfg.chain.n_chains);
    cfg.chain.adapt = c.value("adapt", cfg.chain.adapt);
    cfg.chain.enforce_acceptance = c.value("enforce_acceptance", cfg.chain.enforce_acceptance);
  }
  if (doc.contains("quadrature")) {
    const auto& q = doc["quadrature"];
    cfg.quadrature.rule = parse_rule(q.value("rule", std::string("auto")));
    cfg.quadrature.nodes_per_dim = q.value("nodes_per_dim", cfg.quadrature.nodes_per_dim);
    cfg.quadrature.max_nodes = q.value("max_nodes", cfg.quadrature.max_nodes);
    cfg.quadrature.envelope_scale = q.value("envelope_scale", cfg.quadrature.envelope_scale);
    cfg.quadrature.max_dof = q.value("max_dof", cfg.quadrature.max_dof);
    cfg.quadrature.tolerance = q.value("tolerance", cfg.quadrature.tolerance);
    cfg.quadrature.weight_cutoff = q.value("weight_cutoff", cfg.quadrature.weight_cutoff);
  }
  if (doc.contains("theorem")) {
    const auto& th = doc["theorem"];
    cfg.theorem.prefer_oracle = th.value("prefer_oracle", cfg.theorem.prefer_oracle);
    cfg.theorem.tolerance = th.value("tolerance", cfg.theorem.tolerance);
    cfg.theorem.fd_step = th.value("fd_step", cfg.theorem.fd_step);
  }
  if (doc.contains("k_grid")) {
    const auto& k = doc["k_grid"];
    if (k.is_array()) {
      if (k.empty()) throw ConfigError("k_grid: empty");
      cfg.k_grid = k.get<std::vector<double>>();
    } else {
      if (k.contains("points")) cfg.k_points = k["points"].get<int>();
      if (k.contains("max")) cfg.k_max = k["max"].get<double>();
    }
  }
  cfg.poincare_observables = doc.value("poincare_observables", cfg.poincare_observables);
  cfg.checkpoint_every = doc.value("checkpoint_every", cfg.checkpoint_every);
  cfg.seed = doc.value("seed", std::uint64_t{1});
  cfg.output = doc.value("output", std::string());

  try {
    cfg.chain.validate();
    cfg.quadrature.validate();
    (void)Torus(cfg.d, cfg.m);
  } catch (const gil::Error& e) {
    throw ConfigError(e.what());
  }
  apply_overrides(cfg, std::nullopt, 1);
  return cfg;
}

void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, int threads) {
  if (seed) cfg.seed = *seed;
  cfg.chain.seed = cfg.seed;
  cfg.chain.threads = threads;
  cfg.quadrature.threads = threads;
  cfg.theorem.quadrature = cfg.quadrature;
  cfg.theorem.chain = cfg.chain;
}

CommandOutput cmd_check(const ExperimentConfig& cfg) {
  const ConditionReport r = evaluate_conditions(cfg.beta, cfg.d, cfg.potential, norms(cfg.potential));
  bool ok = r.fcond_satisfied;
  if (cfg.condition == "alt9") ok = r.alt9_satisfied;
  if (cfg.condition == "alt11") ok = r.alt11_satisfied;
  return {ok ? kOk : kViolation, condition_report_to_json(r) + "\n"};
}

CommandOutput cmd_free_energy(const ExperimentConfig& cfg) {
  const Torus t(cfg.d, cfg.m);
  std::vector<std::string> header;
  for (int i = 0; i < cfg.d; ++i) header.push_back("u_" + std::to_string(i + 1));
  header.insert(header.end(), {"delta_f", "method", "error"});
  std::string out = csv_row(header);
  if (cfg.u_grid.empty()) return {kOk, out};

  const bool oracle = use_oracle(cfg, t);
  double f0 = 0.0;
  if (oracle) f0 = free_energy(zero_tilt(cfg.d), cfg.potential, t, cfg.beta, cfg.quadrature).value;
  for (const Tilt& u : cfg.u_grid) {
    Difference diff{0.0, 0.0};
    if (oracle) {
      const double fu = u.isZero() ? f0 : free_energy(u, cfg.potential, t, cfg.beta, cfg.quadrature).value;
      // each converged log Z is within the tolerance
      diff = {fu - f0, 2.0 * cfg.quadrature.tolerance / cfg.beta};
    } else if (!u.isZero()) {
      diff = thermodynamic_difference(cfg, t, u);
    }
    std::vector<std::string> row;
    for (int i = 0; i < cfg.d; ++i) row.push_back(format_double(u[i]));
    row.push_back(format_double(diff.value));
    row.push_back(oracle ? "oracle" : "thermodynamic");
    row.push_back(format_double(diff.error));
    out += csv_row(row);
  }
  return {kOk, out};
}

CommandOutput cmd_hessian(const ExperimentConfig& cfg) {
  const TheoremReport r = verify_theorem(cfg.potential, cfg.beta, cfg.d, cfg.m, cfg.u_grid, cfg.theorem);
  const bool failed = r.in_hypothesis && !r.all_passed();
  return {failed ? kViolation : kOk, theorem_csv(r, cfg.d)};
}

CommandOutput cmd_verify_lemma(const ExperimentConfig& cfg) {
  const Torus t(cfg.d, cfg.m);
  const UnitScaling us = scale_to_unit(cfg.potential, cfg.beta);
  const Tilt u = lemma_tilt(cfg) * us.tilt_scale;
  const DecompositionPlan plan = DecompositionPlan::make(t, us.potential, cfg.lambda);
  const Field psi(t);
  const std::vector<double> k_grid = resolve_k_grid(cfg, plan.cbar);

  const FourierReport fr = verify_l1norm_bounds(us.potential, t, u, psi, plan.lambda, k_grid, cfg.chain);

  ordered_json report;
  report["beta"] = num(cfg.beta);
  report["tilt"] = std::vector<double>(u.data(), u.data() + u.size());
  report["cbar"] = num(plan.cbar);
  report["lambda"] = num(plan.lambda);
  report["in_hypothesis"] = plan.in_hypothesis();

  ordered_json fourier;
  fourier["pointwise_ok"] = fr.pointwise_ok;
  fourier["integral_ok"] = fr.integral_ok;
  fourier["h_ok"] = fr.h_ok;
  ordered_json edges = ordered_json::array();
  for (const auto& e : fr.edges) {
    ordered_json j;
    j["site"] = e.site;
    j["axis"] = e.axis;
    j["integral"] = num(e.integral);
    j["integral_se"] = num(e.integral_se);
    j["integral_bound"] = num(e.integral_bound);
    j["integral_ok"] = e.integral_ok;
    j["mean_h_full"] = num(e.mean_h_full);
    j["mean_h_full_se"] = num(e.mean_h_full_se);
    j["bound_h_full"] = num(e.bound_h_full);
    j["mean_h_neg"] = num(e.mean_h_neg);
    j["mean_h_neg_se"] = num(e.mean_h_neg_se);
    j["bound_h_neg"] = num(e.bound_h_neg);
    j["h_ok"] = e.h_ok;
    j["method"] = to_string(EstimateMethod::Chain);
    edges.push_back(std::move(j));
  }
  fourier["edges"] = std::move(edges);
  ordered_json points = ordered_json::array();
  for (const auto& p : fr.points) {
    ordered_json j;
    j["site"] = p.site;
    j["axis"] = p.axis;
    j["k"] = num(p.k);
    j["modulus"] = num(p.modulus);
    j["std_error"] = num(p.std_error);
    j["envelope"] = num(p.envelope);
    j["method"] = to_string(EstimateMethod::Chain);
    j["ok"] = p.ok;
    points.push_back(std::move(j));
  }
  fourier["points"] = std::move(points);
  ordered_json chains = ordered_json::array();
  for (const auto& s : fr.stats) chains.push_back({{"acceptance_rate", num(s.acceptance_rate)}, {"step_size", num(s.step_size)}});
  fourier["chains"] = std::move(chains);
  report["fourier"] = std::move(fourier);

  // Poincare-type variance bounds for linear observables under the Gaussian
  // reference and under the induced H1.
  const double delta_m = poincare_constant(t).delta_m;
  // D^2 H1 >= (1/lambda - cbar) ||grad theta_dot||^2, which is cbar at the default lambda
  const double curvature_h1 = (1.0 / plan.lambda - plan.cbar) * delta_m;
  const Target gaussian = gibbs_target(t, zero_tilt(cfg.d), Potential::gaussian(), 1.0);
  const Target h1 = InducedH1(plan, u, psi).target();
  std::mt19937_64 rng(chain_seed(cfg.seed, 7919));
  std::normal_distribution<double> normal;
  ordered_json poincare = ordered_json::array();
  bool poincare_ok = true;
  for (int i = 0; i < cfg.poincare_observables; ++i) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(t.dof()));
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
    v /= v.norm();
    const GradientObservable g = linear_observable(v);
    ChainConfig chain = cfg.chain;
    chain.seed = chain_seed(cfg.seed, 2 * i + 1);
    const PoincareReport rg = poincare_variance_check(gaussian, g, delta_m, chain);
    chain.seed = chain_seed(cfg.seed, 2 * i + 2);
    PoincareReport rh;
    if (curvature_h1 > 0.0) {
      rh = poincare_variance_check(h1, g, curvature_h1, chain);
    } else {
      rh.holds = false;
      rh.bound = std::numeric_limits<double>::infinity();
    }
    poincare_ok = poincare_ok && rg.holds && rh.holds;
    poincare.push_back(poincare_json("gaussian", i, rg));
    poincare.push_back(poincare_json("induced_h1", i, rh));
  }
  report["poincare_delta_gaussian"] = num(delta_m);
  report["poincare_delta_h1"] = num(curvature_h1);
  report["poincare"] = std::move(poincare);
  const bool passed = fr.all_ok() && poincare_ok;
  report["passed"] = passed;
  return {passed ? kOk : kViolation, report.dump(2) + "\n"};
}

CommandOutput cmd_sample(const ExperimentConfig& cfg) {
  const Torus t(cfg.d, cfg.m);
  const Tilt u = lemma_tilt(cfg);
  const Target target = gibbs_target(t, u, cfg.potential, cfg.beta);
  const Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.dof()));
  std::vector<std::vector<Field>> per_chain(static_cast<std::size_t>(cfg.chain.n_chains));
  parallel_for(per_chain.size(), cfg.chain.threads, [&](std::size_t c) {
    std::size_t count = 0;
    auto& fields = per_chain[c];
    run_chain(target, start, cfg.chain, static_cast<int>(c), [&](const Eigen::VectorXd& state) {
      if (count++ % cfg.checkpoint_every == 0) fields.push_back(Field::from_dof(state));
    });
  });
  std::vector<Field> all;
  for (auto& fields : per_chain) all.insert(all.end(), fields.begin(), fields.end());
  std::ostringstream os;
  write_checkpoint(os, t, all);
  return {kOk, os.str()};
}

CommandOutput dispatch(const ExperimentConfig& cfg) {
  if (cfg.command == "check") return cmd_check(cfg);
  if (cfg.command == "free-energy") return cmd_free_energy(cfg);
  if (cfg.command == "hessian") return cmd_hessian(cfg);
  if (cfg.command == "verify-lemma") return cmd_verify_lemma(cfg);
  if (cfg.command == "sample") return cmd_sample(cfg);
  throw ConfigError("unknown command " + cfg.command);
}

int run(int argc, char** argv) {
  CLI::App app{"Gradient interface model experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  for (const char* name : {"check", "free-energy", "hessian", "verify-lemma", "sample"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment JSON")->required();
    sub->add_option("--out", out_path, "output file (defaults to the config's output)");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--threads", threads, "worker threads (GIL_THREADS when absent)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read " + config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    cfg = parse_config(buf.str(), command);
    if (threads < 0) throw ConfigError("--threads must be non-negative");
    apply_overrides(cfg, seed, resolve_threads(threads));
    if (!out_path.empty()) cfg.output = out_path;
    if (cfg.output.empty()) throw ConfigError("no output path: pass --out or set output in the config");
  } catch (const std::exception& e) {
    std::cerr << "gil: " << e.what() << '\n';
    return kConfigError;
  }

  CommandOutput result;
  try {
    result = dispatch(cfg);
  } catch (const std::exception& e) {
    std::cerr << "gil " << command << ": " << e.what() << '\n';
    return kConfigError;
  }
  std::ofstream out(cfg.output, std::ios::binary);
  out << result.content;
  if (!out) {
    std::cerr << "gil: cannot write " << cfg.output << '\n';
    return kConfigError;
  }
  return result.exit_code;
}

}  // namespace gil::cli
