#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "epicast/tensor.hpp"

namespace epicast::nn {

enum class Mode { train, infer };

// Weights of a 1-D causal convolution. kernel is [K x C_in x C_out];
// tap k reads the input (K-1-k)*dilation steps back, so the last tap sits on
// the current timestep.
struct ConvParams {
  Tensor kernel;
  Tensor bias;
  int dilation = 1;

  ConvParams() = default;
  ConvParams(std::size_t kernel_size, std::size_t in_ch, std::size_t out_ch,
             int dilation_rate)
      : kernel({kernel_size, in_ch, out_ch}),
        bias({out_ch}),
        dilation(dilation_rate) {}
};

struct DenseParams {
  Tensor weight;  // [in_dim x out_dim]
  Tensor bias;    // [out_dim]

  DenseParams() = default;
  DenseParams(std::size_t in_dim, std::size_t out_dim)
      : weight({in_dim, out_dim}), bias({out_dim}) {}
};

struct BatchNormState {
  Tensor gamma, beta;
  Tensor running_mean, running_var;
  double momentum = 0.9;
  double epsilon = 1e-5;

  BatchNormState() = default;
  explicit BatchNormState(std::size_t channels)
      : gamma({channels}), beta({channels}), running_mean({channels}),
        running_var({channels}) {
    gamma.fill(1.0);
    running_var.fill(1.0);
  }
  std::size_t channels() const { return gamma.numel(); }
};

// Day-of-week embedding, always 7 rows (Monday=0 .. Sunday=6).
struct EmbeddingTable {
  Tensor table;  // [7 x dim]

  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : table({7, dim}) {}
  std::size_t dim() const { return table.dim(1); }
};

struct AdamState {
  std::vector<Tensor> m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8, lr = 0.001;

  // Allocates zeroed moment buffers matching each parameter tensor.
  void init(const std::vector<const Tensor*>& params);
};

// ---- Forward passes -------------------------------------------------------

// input [T x C_in] -> [T x C_out], zero left padding so output keeps length T
// and y_t depends only on x_{<=t}.
Tensor conv1d_causal(const Tensor& input, const ConvParams& params);

// input [R x in_dim] -> [R x out_dim], y = xW + b.
Tensor dense(const Tensor& input, const DenseParams& params);

struct BatchNormCache {
  Tensor xhat;                  // normalized activations
  std::vector<double> inv_std;  // per channel 1/sqrt(var + eps)
};

// input [R x C]. Train mode normalizes with batch statistics (biased
// variance), updates running stats via r <- momentum*r + (1-momentum)*stat,
// and fills `cache` when given. Infer mode uses running stats only.
Tensor batch_norm(const Tensor& input, BatchNormState& state, Mode mode,
                  BatchNormCache* cache = nullptr);

Tensor relu(const Tensor& input);

// day_index in 0..6 -> copy of the table row.
Tensor embed_lookup(int day_index, const EmbeddingTable& table);

// Mean pinball loss: mean(max(q*(y - yhat), (q-1)*(y - yhat))).
double pinball_loss(const Tensor& pred, const Tensor& target, double q);

// ---- Backward passes (analytic) -------------------------------------------

struct ConvGrads {
  Tensor input, kernel, bias;
};
ConvGrads conv1d_causal_backward(const Tensor& input, const ConvParams& params,
                                 const Tensor& grad_output);

struct DenseGrads {
  Tensor input, weight, bias;
};
DenseGrads dense_backward(const Tensor& input, const DenseParams& params,
                          const Tensor& grad_output);

struct BatchNormGrads {
  Tensor input, gamma, beta;
};
// Train-mode gradient through the batch statistics, from the cache the
// forward pass produced.
BatchNormGrads batch_norm_backward(const BatchNormCache& cache,
                                   const BatchNormState& state,
                                   const Tensor& grad_output);

// Subgradient at 0 is 0; mask comes from the forward input.
Tensor relu_backward(const Tensor& input, const Tensor& grad_output);

// Scatter-adds grad_output into row `day_index` of table_grad [7 x dim].
void embed_lookup_backward(int day_index, const Tensor& grad_output,
                           Tensor& table_grad);

// d(mean pinball)/d(pred); the kink at y == yhat gets subgradient 0.
Tensor pinball_loss_backward(const Tensor& pred, const Tensor& target, double q);

// ---- Optimizer -------------------------------------------------------------

// One bias-corrected Adam update over aligned (param, grad) tensor lists.
// Deterministic: identical inputs give bitwise-identical outputs.
void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state);

// ---- Gradient checking ------------------------------------------------------

struct DifferentiableFn {
  std::function<double(const std::vector<double>&)> value;
  std::function<std::vector<double>(const std::vector<double>&)> gradient;
};

// Max relative error between the analytic gradient and central finite
// differences with step h, relative error |a-n| / (|a|+|n|+1e-12).
double grad_check(const DifferentiableFn& fn, const std::vector<double>& point,
                  double step = 1e-5);

// Same check restricted to a subset of coordinates, for models too large to
// difference exhaustively. `analytic` is the full gradient at `point`.
double grad_check_coords(
    const std::function<double(const std::vector<double>&)>& value,
    const std::vector<double>& analytic, const std::vector<double>& point,
    const std::vector<std::size_t>& coords, double step = 1e-5);

}  // namespace epicast::nn
