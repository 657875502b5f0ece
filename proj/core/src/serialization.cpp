#include "gil/serialization.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gil/error.hpp"

namespace gil {

namespace {

using nlohmann::ordered_json;

// JSON has no infinities; they travel as strings
ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  if (m.rows() == 1 && m.cols() == 1) return number(m(0, 0));
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json r = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(number(m(i, j)));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string field_to_json(const Torus& t, const Field& f) {
  if (f.volume() != t.volume()) throw PreconditionViolation("field size does not match torus volume");
  ordered_json j;
  j["d"] = t.dim();
  j["m"] = t.side();
  const auto s = f.sites();
  j["values"] = std::vector<double>(s.begin(), s.end());
  return j.dump();
}

std::pair<Torus, Field> field_from_json(const std::string& text) {
  nlohmann::json j;
  std::vector<double> values;
  int d = 0, m = 0;
  try {
    j = nlohmann::json::parse(text);
    d = j.at("d").get<int>();
    m = j.at("m").get<int>();
    values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionViolation(std::string("malformed field record: ") + e.what());
  }
  const Torus t(d, m);
  if (values.size() != t.volume()) throw PreconditionViolation("field size does not match its header");
  if (values.front() != 0.0) throw PreconditionViolation("serialized field is not pinned");
  return {t, Field::pinned(values)};
}

void write_checkpoint(std::ostream& os, const Torus& t, const std::vector<Field>& fields) {
  for (const auto& f : fields) os << field_to_json(t, f) << '\n';
}

std::vector<Field> read_checkpoint(std::istream& is, Torus* torus) {
  std::vector<Field> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto [t, f] = field_from_json(line);
    if (torus) *torus = t;
    out.push_back(std::move(f));
  }
  return out;
}

std::string estimate_to_json(const Estimate& e) {
  ordered_json j;
  j["value"] = matrix_json(e.value);
  j["std_error"] = matrix_json(e.std_error);
  j["n_effective"] = number(e.n_effective);
  j["method"] = to_string(e.method);
  return j.dump();
}

std::string oracle_to_json(const OracleResult& r) {
  ordered_json j;
  j["value"] = number(r.value);
  j["node_order"] = r.node_order;
  j["converged"] = r.converged;
  j["method"] = to_string(r.method);
  return j.dump();
}

std::string condition_report_to_json(const ConditionReport& r) {
  ordered_json j;
  j["beta"] = number(r.beta);
  j["d"] = r.d;
  j["constants"] = {{"c0", number(r.constants.c0)}, {"c1", number(r.constants.c1)}, {"c2", number(r.constants.c2)}};
  j["norms"] = {{"l1_g0pp", number(r.norms.l1_g0pp)},
                {"l1_g0pp_abs", number(r.norms.l1_g0pp_abs)},
                {"l2_g0p", number(r.norms.l2_g0p)},
                {"l1_g0", number(r.norms.l1_g0)},
                {"quadrature_error", number(r.norms.quadrature_error)}};
  j["cbar"] = number(r.cbar);
  j["lhs_fcond"] = number(r.lhs_fcond);
  j["lhs_9"] = number(r.lhs_9);
  j["lhs_11"] = number(r.lhs_11);
  j["lhs_fcond_pessimistic"] = number(r.lhs_fcond_pessimistic);
  j["lhs_9_pessimistic"] = number(r.lhs_9_pessimistic);
  j["lhs_11_pessimistic"] = number(r.lhs_11_pessimistic);
  j["beta_max_fcond"] = number(r.beta_max_fcond);
  j["beta_max_9"] = number(r.beta_max_9);
  j["beta_max_11"] = number(r.beta_max_11);
  j["fcond_satisfied"] = r.fcond_satisfied;
  j["alt9_satisfied"] = r.alt9_satisfied;
  j["alt11_satisfied"] = r.alt11_satisfied;
  j["fcond_satisfied_pessimistic"] = r.fcond_satisfied_pessimistic;
  j["alt9_satisfied_pessimistic"] = r.alt9_satisfied_pessimistic;
  j["alt11_satisfied_pessimistic"] = r.alt11_satisfied_pessimistic;
  return j.dump(2);
}

}  // namespace gil
