#include <Eigen/Core>
#include <boost/version.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "polyharm/errors.hpp"
#include "runner.hpp"

using namespace polyharm;
using namespace polyharm::cli;

namespace {

struct Options {
  std::string config;
  std::string out = "runs";
  std::uint64_t seed = 0;
  int jobs = 0;  // 0: keep the config value
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read config file " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

nlohmann::ordered_json manifest(const RunConfig& cfg, const Options& opt, const RunResult& r,
                                const std::vector<std::string>& files, double seconds) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["subcommand"] = to_string(cfg.subcommand);
  j["config_file"] = opt.config;
  j["config"] = config_echo(cfg);
  j["seed"] = opt.seed;
  j["jobs"] = cfg.sweep.jobs;
  j["wall_seconds"] = seconds;
  j["files"] = files;
  j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  j["boost_version"] = BOOST_LIB_VERSION;
  j["exit_status"] = r.status;
  return j;
}

int run(Subcommand sub, const Options& opt) {
  RunConfig cfg = parse_config(opt.config.empty() ? std::string() : read_file(opt.config), sub, opt.seed);
  if (opt.jobs > 0) cfg.sweep.jobs = opt.jobs;
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = execute(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto dir = make_run_directory(opt.out, to_string(sub));
  auto files = write_run(dir, r);
  files.push_back("manifest.json");
  std::ofstream(dir / "manifest.json") << dump(manifest(cfg, opt, r, files, seconds));
  std::cout << dir.string() << ": " << r.summary << "\n";
  return r.status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polyharmonic lab: (-Delta)^m u = f(u) + lambda |u|^{p-1} u"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Options opt;
  const std::vector<std::pair<Subcommand, const char*>> subs = {
      {Subcommand::Exponents, "exact exponent ledger"},
      {Subcommand::Truncate, "calibrate and sample the truncated nonlinearity"},
      {Subcommand::Solve, "existence pipeline at one alpha"},
      {Subcommand::TwoSolutions, "positive and negative solutions"},
      {Subcommand::Identity, "Pucci-Serrin identity check"},
      {Subcommand::Sweep, "nonexistence sweep over lambda"},
      {Subcommand::Spectrum, "principal eigenpair"},
  };
  std::vector<std::pair<Subcommand, CLI::App*>> apps;
  for (const auto& [sub, help] : subs) {
    CLI::App* s = app.add_subcommand(to_string(sub), help);
    s->add_option("--config", opt.config, "INI config file");
    s->add_option("--out", opt.out, "parent directory for run directories");
    s->add_option("--seed", opt.seed, "seed for randomized probe points");
    s->add_option("--jobs", opt.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
    apps.emplace_back(sub, s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidation;
  }

  for (const auto& [sub, s] : apps) {
    if (!s->parsed()) continue;
    try {
      return run(sub, opt);
    } catch (const ValidationError& e) {
      std::cerr << "validation error: " << e.what() << "\n";
      return kValidation;
    } catch (const HypothesisFailure& e) {
      std::cerr << "hypothesis failure: " << e.what() << "\n";
      return kHypothesis;
    } catch (const NumericalFailure& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return kNumerical;
    }
  }
  return kValidation;
}
