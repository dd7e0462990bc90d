#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "epicast/errors.hpp"
#include "epicast/pipeline.hpp"
#include "epicast/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct StageArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
};

void add_stage(CLI::App& app, const std::string& name, const std::string& desc,
               StageArgs& args, std::string& chosen) {
  CLI::App* sub = app.add_subcommand(name, desc);
  sub->add_option("--config", args.config_path, "pipeline config JSON")->required();
  sub->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  sub->add_option("--out", args.out_dir, "override paths.out_dir");
  sub->callback([&chosen, name] { chosen = name; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epicast: regional case forecasting and clustering pipeline"};
  app.require_subcommand(1);

  StageArgs args;
  std::string chosen;
  add_stage(app, "synth", "generate a seeded synthetic cases + static-vars dataset",
            args, chosen);
  add_stage(app, "forecast", "train the quantile net and write forecasts.csv", args,
            chosen);
  add_stage(app, "embed", "assemble region vectors and write every reduction", args,
            chosen);
  add_stage(app, "cluster", "run the silhouette grid and write cluster artifacts",
            args, chosen);
  add_stage(app, "pipeline", "forecast, embed, and cluster in one run", args, chosen);
  add_stage(app, "evaluate", "backtest the configured models on a 7-day holdout",
            args, chosen);

  CLI11_PARSE(app, argc, argv);

  try {
    epicast::pipeline::PipelineConfig config =
        epicast::pipeline::load_config(args.config_path);
    if (args.seed_set) {
      config.seed = args.seed;
      config.net.seed = epicast::mix_seed(config.seed, {epicast::fnv1a64("net")});
      config.synth.seed = config.seed;
    }
    if (!args.out_dir.empty()) config.out_dir = args.out_dir;
    epicast::pipeline::run(chosen, config);
    std::printf("%s: done (seed %llu, config %s)\n", chosen.c_str(),
                static_cast<unsigned long long>(config.seed),
                epicast::pipeline::config_hash(config).c_str());
    return kExitOk;
  } catch (const epicast::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return kExitRuntime;
  }
}
