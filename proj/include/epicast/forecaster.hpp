#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epicast/nn.hpp"
#include "epicast/series.hpp"
#include "epicast/tensor.hpp"

namespace epicast::forecast {

struct NetConfig {
  int filters = 128;
  int kernel = 2;
  std::vector<int> dilations{1, 2, 3, 4, 5, 6};
  int input_len = 10;
  int horizon = 7;
  std::vector<double> quantiles{0.05, 0.5, 0.9};
  int day_embed_dim = 1;
  std::vector<int> decoder_dims{64, 32};
  int epochs = 4;
  double lr = 0.001;
  int batch_size = 32;
  std::uint64_t seed = 0;
  bool use_day_embeddings = true;
  // Alternative objective: pinball on the normalized log scale instead of the
  // rescaled count scale.
  bool loss_in_log_space = false;

  void validate() const;
};

// One encoder block: dilated causal conv -> dense -> batch norm -> ReLU.
struct EncoderBlock {
  nn::ConvParams conv;
  nn::DenseParams dense;
  nn::BatchNormState bn;
};

struct ForecastModel {
  NetConfig config;
  std::vector<EncoderBlock> blocks;      // block i uses config.dilations[i]
  nn::EmbeddingTable day_embed;          // [7 x day_embed_dim]
  std::vector<nn::DenseParams> decoder;  // trunk shared by all heads
  std::vector<nn::DenseParams> heads;    // one per quantile, out_dim = horizon

  // Learnable tensors in a fixed enumeration order (the order Adam state,
  // gradient buffers, and parameter flattening all share).
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;
  std::vector<double> flatten_parameters() const;
  void set_parameters(const std::vector<double>& flat);
};

// Uniform fan-in init for weights, zero biases, batch-norm gamma=1 beta=0
// with running stats (0, 1). Same seed, same model, bitwise.
ForecastModel build_model(const NetConfig& config, std::uint64_t rng_seed);

// Single-window forward pass: input_len normalized values plus the horizon's
// day indices -> [quantiles x horizon] in normalized log space. Train mode
// normalizes with batch statistics over (batch x time) and updates running
// stats; infer mode is read-only.
Tensor forward(ForecastModel& model, const std::vector<double>& window_input,
               const std::vector<int>& dow_future, nn::Mode mode);

// Inverse of the series normalization: y_i = exp(clamp(z_i, -10, 10)) * anchor - 1,
// clamped below at zero. The -1 mirrors the +1 shift applied before the log.
std::vector<double> rescale(const std::vector<double>& net_output_row,
                            double anchor_level);

struct TrainTrace {
  std::vector<double> epoch_loss;  // mean per-window loss, one entry per epoch
};

// Trains one net across every region's windows, shuffled by the config seed,
// batched at config.batch_size. Deterministic given the seed.
TrainTrace train(ForecastModel& model, const series::PreparedPanel& prep);

// Loss of one fixed batch at the current parameters (train-mode batch norm,
// running-stat updates discarded); `grads` aligns with parameters() when
// given and `input_grads` receives d(loss)/d(window inputs) as [B*input_len x 1].
// This is the surface the end-to-end gradient checks drive.
double batch_loss_and_grads(const ForecastModel& model,
                            const std::vector<series::TrainingWindow>& batch,
                            std::vector<Tensor>* grads = nullptr,
                            Tensor* input_grads = nullptr);

struct ForecastResult {
  std::string region;
  std::vector<Date> dates;  // the horizon days after the panel's last date
  std::vector<double> q05, q50, q90;  // q50 is the point forecast

  double q50_mean() const;
};

// Forecast from the most recent input_len days. Quantile rows are sorted
// per horizon step before rescaling so q05 <= q50 <= q90 always holds.
ForecastResult predict(const ForecastModel& model,
                       const series::PreparedPanel& prep,
                       const std::string& region);

// y_hat_{T+i} = y_{T+i-7}, repeating the last observed week.
std::vector<double> baseline_seasonal_naive(const series::CasePanel& panel,
                                            const std::string& region,
                                            int horizon = 7);

// AR(p) on the d-times differenced ln(x+1) series, fit by least squares with
// an intercept, forecast iterated then inverted back to counts. Falls back to
// seasonal naive when the solve produces non-finite coefficients.
std::vector<double> baseline_ar_ols(const series::CasePanel& panel,
                                    const std::string& region, int p = 7,
                                    int d = 1, int horizon = 7,
                                    bool* used_fallback = nullptr,
                                    std::vector<double>* coef_out = nullptr);

}  // namespace epicast::forecast
