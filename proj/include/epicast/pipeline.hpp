#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epicast/forecaster.hpp"
#include "epicast/reduce.hpp"
#include "epicast/synthetic.hpp"

namespace epicast::pipeline {

struct PipelineConfig {
  std::uint64_t seed = 0;  // required in the config file; no entropy fallback

  // paths
  std::string cases_csv;
  std::string static_csv;
  std::string out_dir;

  // stage parameters
  forecast::NetConfig net;
  reduce::GaParams ga;
  reduce::AeParams ae;
  double pca_variance_threshold = 0.90;
  int k_min = 3, k_max = 10;
  std::vector<std::string> reductions{"none", "pca", "ga", "ae_stacked", "ae_tied"};

  // evaluation
  std::vector<std::string> backtest_models{"seasonal_naive", "ar_ols", "net",
                                           "net_no_day_embeddings"};
  int backtest_horizon = 7;
  std::vector<std::string> largest_regions;

  synth::SynthParams synth;
};

// Parses the JSON config; unknown keys and malformed values raise errors
// naming the field. `seed` is mandatory.
PipelineConfig load_config(const std::string& path);

// FNV-1a hex digest of the canonical (defaults-resolved, key-sorted) config.
std::string config_hash(const PipelineConfig& config);

// Subcommands: synth | forecast | embed | cluster | pipeline | evaluate.
// Stages communicate only through files in out_dir, so each one can resume
// from the previous stage's artifacts. Writes manifest.json on success.
void run(const std::string& subcommand, const PipelineConfig& config);

// Individual stages, exposed for direct testing.
void run_synth(const PipelineConfig& config);
void run_forecast(const PipelineConfig& config);
void run_embed(const PipelineConfig& config);
void run_cluster(const PipelineConfig& config);
void run_evaluate(const PipelineConfig& config);

// Artifact locations inside out_dir.
std::string forecasts_path(const PipelineConfig& config);
std::string embeddings_path(const PipelineConfig& config, const std::string& tag);
std::string clusters_path(const PipelineConfig& config);
std::string grid_path(const PipelineConfig& config);
std::string report_path(const PipelineConfig& config);

}  // namespace epicast::pipeline
