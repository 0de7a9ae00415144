#include <iostream>

#include "CLI11.hpp"
#include "scatterkit/app/commands.hpp"
#include "scatterkit/scatterkit.hpp"

int main(int argc, char** argv) {
  using namespace scatterkit::app;

  CLI::App app{"scatterkit: multi-particle scattering approximations on finite model spaces"};
  app.set_version_flag("--version", std::string(scatterkit::kVersion));
  app.require_subcommand(1);

  RunOptions opts;
  unsigned threads = 0;
  std::string out_dir;
  std::uint64_t seed = 0;
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (fallback: SCATTERKIT_THREADS)")
                          ->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides outputs.directory)");
  auto* seed_opt = app.add_option("--seed-override", seed, "replace model.seed");

  std::string config;
  auto* verify = app.add_subcommand("verify", "run the identity battery at one energy");
  auto* scan = app.add_subcommand("scan", "diagnostics over the energy grid");
  auto* twobody = app.add_subcommand("twobody", "continuum separable two-body check");
  for (auto* sub : {verify, scan, twobody}) {
    sub->add_option("config", config, "scenario JSON file")->required();
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (*threads_opt) opts.threads = threads;
  if (*out_opt) opts.out_dir = out_dir;
  if (*seed_opt) opts.seed_override = seed;

  if (*verify) return cmd_verify(config, opts, std::cout, std::cerr);
  if (*scan) return cmd_scan(config, opts, std::cout, std::cerr);
  return cmd_twobody(config, opts, std::cout, std::cerr);
}
