#pragma once

#include "ratecert/galerkin.hpp"
#include "ratecert/materials.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ratecert {

/// Configuration error; the message names the offending field.
class ConfigError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

struct RunConfig {
  MaterialModel model;
  std::vector<LoadKnot> knots;
  double horizon = 1.0;
  Vector y0;
  std::optional<int> steps_count;       ///< partition.N
  std::vector<double> explicit_steps;   ///< partition.steps
  double theta = 1.0;
  Tolerances tol;
  std::optional<double> inner_tol;
  double adapt_tol = 1e-3;
  int adapt_max_rounds = 30;
  double adapt_budget_divisor = 4.0;
  int adapt_initial_steps = 15;
  std::vector<int> refinements{25, 50, 100, 200, 400};
  std::string oracle = "auto";          ///< auto | analytic | reference
  int reference_factor = 100;
  std::vector<double> sweep_thetas{0.5, 0.75, 1.0};
  std::vector<int> sweep_steps{25, 50, 100};
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  Problem problem() const;
  Partition partition() const;
};

/// Parses and validates a configuration tree; unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

/// Decimal with 17 significant digits, "inf" for +infinity, "-inf" for
/// -infinity, and 0 for negative zero.  Throws on NaN.
std::string format_number(double x);
/// JSON value of a number: the number itself, or the string "inf".
nlohmann::json json_number(double x);
nlohmann::json json_number(ExtendedReal x);

void write_trajectory_csv(std::ostream& out, const Problem& problem, const Trajectory& traj,
                          const Tolerances& tol = {});
/// Reads the state columns of a trajectory CSV written by write_trajectory_csv.
Trajectory read_trajectory_csv(std::istream& in, Eigen::Index dimension, double theta);

nlohmann::json to_json(const Certificate& c);
nlohmann::json to_json(const FunctionalReport& r);
nlohmann::json to_json(const LipschitzReport& r);
nlohmann::json to_json(const ConvergenceReport& r);

struct CommandOptions {
  std::string out_dir;
  bool assert_mode = false;
  std::optional<double> tol;
  std::optional<std::string> candidate;
  int threads = 0;  ///< sweep workers; 0 picks the hardware concurrency
};

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNonConvergence = 3,
  kExitBoundExceeded = 4,
};

int cmd_solve(const RunConfig& config, const CommandOptions& options);
int cmd_certify(const RunConfig& config, const CommandOptions& options);
int cmd_adapt(const RunConfig& config, const CommandOptions& options);
int cmd_converge(const RunConfig& config, const CommandOptions& options);
int cmd_sweep(const RunConfig& config, const CommandOptions& options);

/// Command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace ratecert
