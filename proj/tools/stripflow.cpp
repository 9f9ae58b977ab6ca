/**
 * @brief Batch front end: `stripflow run <scenario> [--mode M] [--out DIR]
 *        [--deterministic] [--seed N]` and `stripflow validate <scenario>`.
 *
 * Exit codes: 0 completed, 2 validation failure, 3 breakdown, 4 internal error.
 */
#include "stripflow/run.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace stripflow;

namespace {

/// An unreadable scenario file is an input problem, so it maps to the validation exit code.
Scenario load(const std::string& path) {
  try {
    return load_scenario(path);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw Error(ErrorKind::Validation, e.message());
    throw;
  }
}

int validate_command(const std::string& path) {
  Scenario s = load(path);
  Json j;
  j["scenario"] = s.name;
  j["scenario_checksum"] = s.checksum();
  j["validation"] = detail::validation_json(s.validation);
  j["status"] = "Valid";
  std::cout << j.dump(2) << '\n';
  return ExitCompleted;
}

int run_command(const std::string& path, const std::string& mode, const std::string& out, bool deterministic,
                std::optional<std::uint64_t> seed) {
  RunOptions opt;
  opt.mode = parse_mode(mode);
  opt.out_dir = out;
  opt.deterministic = deterministic;
  opt.seed = seed;
  Scenario s = load(path);
  RunOutcome r = run(s, opt);
  std::cout << r.status << ' ' << r.directory.string() << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stripflow: free boundary evolution on a flattened strip"};
  app.require_subcommand(1);
  std::string scenario, mode = "evolve", out;
  bool deterministic = false;
  std::int64_t seed = -1;

  auto* run = app.add_subcommand("run", "run a scenario");
  run->add_option("scenario", scenario, "scenario file")->required();
  run->add_option("--mode", mode, "evolve | diagnose-frozen | diagnose-coercivity | diagnose-localization");
  run->add_option("--out", out, "output directory (overrides output.dir)");
  run->add_flag("--deterministic", deterministic, "omit wall-clock data so reruns are byte-identical");
  run->add_option("--seed", seed, "seed for randomized diagnostics")->check(CLI::NonNegativeNumber);

  auto* validate = app.add_subcommand("validate", "load and validate a scenario");
  validate->add_option("scenario", scenario, "scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : ExitValidation;
  }

  try {
    if (*validate) return validate_command(scenario);
    std::optional<std::uint64_t> s;
    if (seed >= 0) s = static_cast<std::uint64_t>(seed);
    return run_command(scenario, mode, out, deterministic, s);
  } catch (const Error& e) {
    std::cerr << "stripflow: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Schema:
      case ErrorKind::Validation:
      case ErrorKind::Ellipticity:
      case ErrorKind::Degenerate:
      case ErrorKind::Domain: return ExitValidation;
      default: return ExitInternal;
    }
  } catch (const std::exception& e) {
    std::cerr << "stripflow: internal error: " << e.what() << '\n';
    return ExitInternal;
  }
}
