#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "gil/conditions.hpp"
#include "gil/lattice.hpp"
#include "gil/quadrature.hpp"
#include "gil/statistics.hpp"

namespace gil {

/// Shortest round-trip decimal with at most 17 significant digits;
/// "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double v);

/// {"d":..,"m":..,"values":[...]} with values in site order.
std::string field_to_json(const Torus& t, const Field& f);
std::pair<Torus, Field> field_from_json(const std::string& text);

/// One field per line.
void write_checkpoint(std::ostream& os, const Torus& t, const std::vector<Field>& fields);
std::vector<Field> read_checkpoint(std::istream& is, Torus* torus = nullptr);

/// {value, std_error, n_effective, method}; 1x1 estimates are scalars.
std::string estimate_to_json(const Estimate& e);
/// {value, node_order, converged, method}.
std::string oracle_to_json(const OracleResult& r);
std::string condition_report_to_json(const ConditionReport& r);

}  // namespace gil
