#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gil/lattice.hpp"
#include "gil/potential.hpp"
#include "gil/quadrature.hpp"
#include "gil/renorm.hpp"
#include "gil/sampler.hpp"

namespace gil::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kViolation = 2 };

/// Bad command line or configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The experiment schema shipped with the tool.
const nlohmann::json& experiment_schema();

/// Validates `doc` against the subset of JSON Schema used by the experiment
/// schema: type, enum, properties, required, additionalProperties (bool),
/// items, minimum/maximum and their exclusive forms. Returns one message per
/// violation, empty when valid.
std::vector<std::string> validate(const nlohmann::json& doc, const nlohmann::json& schema);

struct ExperimentConfig {
  std::string command;
  Potential potential = Potential::gaussian();
  int d = 1;
  int m = 3;
  double beta = 1.0;
  std::vector<Tilt> u_grid;
  std::optional<Tilt> u;
  std::string condition = "fcond";
  std::optional<double> lambda;
  std::string free_energy_method = "auto";
  ChainConfig chain;
  QuadratureSpec quadrature;
  TheoremOptions theorem;
  std::optional<std::vector<double>> k_grid;
  std::optional<int> k_points;
  std::optional<double> k_max;
  int poincare_observables = 5;
  std::size_t checkpoint_every = 1;
  std::uint64_t seed = 1;
  std::string output;
};

/// Parses and validates a configuration for `command`. Command-line seed and
/// thread overrides are applied by the caller.
ExperimentConfig parse_config(const std::string& text, const std::string& command);

/// Sets the seed and worker count on every nested block.
void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed, int threads);

struct CommandOutput {
  int exit_code = kOk;
  std::string content;
};

CommandOutput cmd_check(const ExperimentConfig& cfg);
CommandOutput cmd_free_energy(const ExperimentConfig& cfg);
CommandOutput cmd_hessian(const ExperimentConfig& cfg);
CommandOutput cmd_verify_lemma(const ExperimentConfig& cfg);
CommandOutput cmd_sample(const ExperimentConfig& cfg);

CommandOutput dispatch(const ExperimentConfig& cfg);

/// Entry point behind main(); returns the process exit code.
int run(int argc, char** argv);

}  // namespace gil::cli
