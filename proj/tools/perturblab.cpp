#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "perturblab/cli.hpp"

using namespace perturblab;

int main(int argc, char** argv) {
  CLI::App app{"perturblab: perturbation theory experiments"};
  std::vector<std::string> positional;
  std::string experiment, config, out, formats;
  std::uint64_t seed = 0;
  app.add_option("command", positional, "experiment name, 'validate <file>' or 'list'");
  auto* o_exp = app.add_option("--experiment", experiment, "experiment name (overrides the file)");
  auto* o_cfg = app.add_option("--config", config, "JSON config file");
  auto* o_out = app.add_option("--out", out, "output directory");
  auto* o_fmt = app.add_option("--format", formats, "comma-separated subset of csv,json,svg");
  auto* o_seed = app.add_option("--seed", seed, "seed for portrait scattering");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kConfigError;
  }

  if (!positional.empty() && positional[0] == "list") {
    for (const auto& n : cli::experiment_names()) std::cout << n << "\n";
    return cli::kOk;
  }
  if (!positional.empty() && positional[0] == "validate") {
    if (positional.size() != 2) {
      std::cerr << "usage: perturblab validate <config.json>\n";
      return cli::kConfigError;
    }
    try {
      const auto rep = cli::validate(positional[1]);
      if (rep.ok) {
        std::cout << positional[1] << ": ok (" << rep.config->experiment << ")\n";
        return cli::kOk;
      }
      for (const auto& e : rep.errors) std::cerr << e << "\n";
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
    }
    return cli::kConfigError;
  }
  if (positional.size() > 1) {
    std::cerr << "unexpected argument '" << positional[1] << "'\n";
    return cli::kConfigError;
  }

  cli::Overrides over;
  if (!positional.empty()) over.experiment = positional[0];
  if (*o_exp) over.experiment = experiment;
  if (*o_out) over.output_dir = out;
  if (*o_fmt) over.formats = cli::parse_formats(formats);
  if (*o_seed) over.rng_seed = seed;

  cli::ExperimentConfig cfg;
  try {
    cfg = cli::resolve_config(*o_cfg ? std::optional<std::string>(config) : std::nullopt, over);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return cli::kConfigError;
  }

  if (cfg.experiment == "acceptance-suite") {
    // stream the per-criterion lines as well
    auto res = cli::run(cfg);
    if (res.summary.contains("criteria"))
      for (const auto& c : res.summary["criteria"])
        std::cout << (c["passed"].get<bool>() ? "PASS " : "FAIL ") << c["id"].get<int>() << " "
                  << c["name"].get<std::string>() << ": " << c["detail"].get<std::string>() << "\n";
    if (!res.message.empty()) std::cerr << res.message << "\n";
    return res.exit_code;
  }

  auto res = cli::run(cfg);
  for (const auto& f : res.files) std::cout << cfg.output_dir << "/" << f << "\n";
  if (!res.message.empty()) std::cerr << res.message << "\n";
  return res.exit_code;
}
