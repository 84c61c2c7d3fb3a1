// gqmc: designs, worst-case errors and covering radii on G(2,4).
//
//   gqmc design   --imin 1 --imax 6 --seed 7 --out run
//   gqmc wce      --imin 1 --imax 6 --seed 7 --out run --trials 200
//   gqmc covering --imin 1 --imax 6 --seed 7 --out run --probes 1000000
//   gqmc report   --seed 7 --out run

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gqmc/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cubature designs and covering radii on the Grassmannian G(2,4)"};
  app.require_subcommand(1);

  gqmc::ExperimentConfig config;
  int trials = 0;
  int restarts = 0;
  std::uint64_t seed = 0;
  std::string kernels = "K1,K2";
  std::string out = config.out_dir.string();

  for (const char* name : {"design", "wce", "covering", "report"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--imin", config.i_min, "smallest strength index")->capture_default_str();
    sub->add_option("--imax", config.i_max, "largest strength index")->capture_default_str();
    sub->add_option("--seed", seed, "base seed for every random stream")->required();
    sub->add_option("--probes", config.probes, "random probes for covering estimates")->capture_default_str();
    sub->add_option("--trials", trials, "random configurations per n (default 200 for wce, 1 for covering)");
    sub->add_option("--kernels", kernels, "comma-separated subset of K1,K2")->capture_default_str();
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--energy-tol", config.energy_tol, "design energy tolerance")->capture_default_str();
    sub->add_option("--max-iters", config.max_iters, "CG iterations per restart")->capture_default_str();
    sub->add_option("--restarts", restarts, "random starts per design (default 8 for i<=4, else 3)");
    sub->add_flag("--generate", config.generate, "build missing designs instead of failing");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gqmc::kExitUsage;
  }

  config.command = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--trials")) config.trials = trials;
  if (sub->count("--restarts")) config.restarts = restarts;
  config.seed = seed;
  config.out_dir = out;
  config.kernels.clear();
  for (const auto& part : CLI::detail::split(kernels, ',')) {
    if (!part.empty()) config.kernels.push_back(CLI::detail::trim_copy(part));
  }
  config.threads = gqmc::thread_cap();

  return gqmc::run_command(config, std::cout, std::cerr);
}
