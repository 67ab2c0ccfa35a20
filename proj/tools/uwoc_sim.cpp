#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "uwoc/error.hpp"
#include "uwoc/ooc.hpp"
#include "uwoc/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailure = 2;
constexpr int kInfeasible = 3;

int report_diagnostics(const std::vector<std::string>& diagnostics) {
  for (const auto& d : diagnostics) std::cerr << "invalid: " << d << '\n';
  return diagnostics.empty() ? kOk : kValidationFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Underwater optical CDMA network simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_path;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  auto* run = app.add_subcommand("run", "Run a scenario and write its CSV");
  run->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();
  run->add_option("--out", out_path, "Output CSV path")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check scenario constraints");
  validate->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();

  auto* codes = app.add_subcommand("codes", "Optical orthogonal code utilities");
  codes->require_subcommand(1);
  int length = 0, weight = 0, rho = 0, count = 0;
  std::uint64_t code_seed = 1;
  auto* gen = codes->add_subcommand("gen", "Generate an (F, W, rho) code family");
  gen->add_option("F", length, "Code length")->required();
  gen->add_option("W", weight, "Code weight")->required();
  gen->add_option("rho", rho, "Maximum correlation")->required();
  gen->add_option("count", count, "Number of codes")->required();
  gen->add_option("--seed", code_seed, "Search seed");
  gen->add_option("--out", out_path, "Output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto s = uwoc::scenario::load_scenario(scenario_path);
      if (*seed_opt) s.seed = seed;
      if (const int rc = report_diagnostics(uwoc::scenario::validate(s)); rc != kOk) return rc;
      std::ofstream out(out_path);
      if (!out) {
        std::cerr << "cannot write " << out_path << '\n';
        return 1;
      }
      uwoc::scenario::run(s, out, workers);
      return kOk;
    }
    if (*validate) {
      const auto s = uwoc::scenario::load_scenario(scenario_path);
      const int rc = report_diagnostics(uwoc::scenario::validate(s));
      if (rc == kOk) std::cout << "ok\n";
      return rc;
    }
    if (*gen) {
      if (count < 1) throw uwoc::ParameterError("count must be >= 1");
      const auto family = uwoc::ooc::generate_family(length, weight, rho, count, code_seed);
      if (out_path.empty()) {
        uwoc::ooc::write_family(std::cout, family);
      } else {
        std::ofstream out(out_path);
        uwoc::ooc::write_family(out, family);
      }
      if (family.shortfall) {
        std::cerr << "only " << family.size() << " of " << count << " codes found\n";
        return kInfeasible;
      }
      return kOk;
    }
  } catch (const uwoc::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const uwoc::ParameterError& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
