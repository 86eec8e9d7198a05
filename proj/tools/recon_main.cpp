#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "recon/config.hpp"
#include "recon/errors.hpp"
#include "recon/experiments.hpp"
#include "recon/threading.hpp"

namespace {

struct SubArgs {
  CLI::App* cmd = nullptr;
  recon::cfg::Experiment kind{};
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

int run(const SubArgs& a) {
  recon::cfg::ExperimentConfig c = recon::cfg::load_config(a.config_path);
  if (c.kind != a.kind) {
    throw recon::ArgumentError(std::string("config is for experiment '") +
                               recon::cfg::experiment_name(c.kind) +
                               "' but the subcommand expects '" +
                               recon::cfg::experiment_name(a.kind) + "'");
  }
  if (a.cmd->count("--out")) c.out_dir = a.out_dir;
  if (a.cmd->count("--seed")) c.seed = a.seed;
  if (a.cmd->count("--threads")) c.threads = a.threads;
  c.validate();
  recon::threads::set_num_threads(c.threads);
  recon::exp::run_experiment(c);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint multi-echo, motion-resolved MRI reconstruction"};
  app.require_subcommand(1);

  const std::pair<const char*, recon::cfg::Experiment> subs[] = {
      {"synth-rgb", recon::cfg::Experiment::synth_rgb},
      {"phantom", recon::cfg::Experiment::phantom},
      {"recon", recon::cfg::Experiment::recon},
      {"r2star", recon::cfg::Experiment::r2star},
      {"traj", recon::cfg::Experiment::traj},
  };
  SubArgs args[5];
  for (int i = 0; i < 5; ++i) {
    args[i].kind = subs[i].second;
    CLI::App* sc = app.add_subcommand(subs[i].first);
    sc->add_option("--config", args[i].config_path, "experiment config (JSON)")->required();
    sc->add_option("--out", args[i].out_dir, "output directory override");
    sc->add_option("--seed", args[i].seed, "seed override");
    sc->add_option("--threads", args[i].threads, "worker threads (0 = hardware)");
    args[i].cmd = sc;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (const auto& a : args)
      if (a.cmd->parsed()) return run(a);
    std::fprintf(stderr, "no subcommand selected\n");
    return 2;
  } catch (const recon::ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const recon::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const recon::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
