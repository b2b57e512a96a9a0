#pragma once

// Run configuration: a flat INI document with [problem], [solver], [sweep],
// [truncate], [identity] and [probe] sections. Every key is optional except
// those a subcommand needs; see docs/config.md for the schema.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "polyharm/identity.hpp"
#include "polyharm/solver.hpp"

namespace polyharm::cli {

using polyharm::to_string;

enum class Subcommand { Exponents, Truncate, Solve, TwoSolutions, Identity, Sweep, Spectrum };

std::string to_string(Subcommand s);
Subcommand parse_subcommand(const std::string& name);

enum class IdentityField { Solution, Manufactured };

struct NonlinearityConfig {
  std::string kind = "zero";
  NonlinearityParams params;
  std::string table;  // CSV path for "sampled"
};

struct RunConfig {
  Subcommand subcommand = Subcommand::Solve;

  // [problem]
  int dimension = 3;
  int order = 1;
  Rational p{3};
  std::optional<Rational> q;
  Shape shape = Shape::RadialBall;
  double length = 1.0;  // interval length, rectangle x side, ball radius
  double width = 1.0;
  int nodes = 400;
  int nodes_y = 0;  // 0: same as nodes
  BoundaryCondition bc = BoundaryCondition::Dirichlet;
  NonlinearityConfig f;
  double alpha = 1.0 / 64;

  SolveConfig solve;
  SweepConfig sweep;  // lambdas filled from list or log grid

  // [sweep] grid description, echoed as given
  std::vector<double> lambda_list;
  double lambda_min = 1e-2;
  double lambda_max = 1e3;
  int lambda_points = 11;
  bool include_zero = true;

  // [truncate]
  int samples = 2001;
  std::optional<double> sample_range;  // default 2 s0'/alpha

  // [identity]
  IdentityField identity_field = IdentityField::Solution;
  std::optional<double> identity_a;

  // [probe]
  double probe_radius = 1.0;
  int probe_random_points = 0;
  std::uint64_t seed = 0;

  DomainSpec domain() const;
  NonlinearitySpec nonlinearity() const;
  Problem problem() const;
  std::vector<double> probe() const;
};

/// Parses and validates; throws ValidationError naming the key and the
/// violated constraint. The seed comes from the command line.
RunConfig parse_config(const std::string& text, Subcommand subcommand, std::uint64_t seed = 0);

/// Every effective setting, defaults included.
nlohmann::ordered_json config_echo(const RunConfig& cfg);

}  // namespace polyharm::cli
