#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epicast/forecaster.hpp"
#include "epicast/nn.hpp"
#include "epicast/tensor.hpp"

namespace epicast::reduce {

// Canonical column order of the 25 static region variables; the static-vars
// CSV header must list them in exactly this order after region_id.
const std::vector<std::string>& static_variable_names();

// One region's embedding: the 25 static variables plus the mean of its 7-day
// median forecast, in that column order.
struct RegionVector {
  std::string region;
  std::vector<double> values;  // length 26
};

std::vector<RegionVector> assemble(
    const std::string& static_csv_path,
    const std::vector<forecast::ForecastResult>& forecasts);

Tensor to_matrix(const std::vector<RegionVector>& vectors);

struct StandardizedMatrix {
  Tensor matrix;                    // [N x d], zero mean / unit variance columns
  std::vector<double> mean;         // per column
  std::vector<double> stddev;       // population convention (divide by N)
  std::vector<bool> zero_variance;  // flagged columns are left at 0, not divided
};

StandardizedMatrix zscore(const Tensor& matrix);

enum class ReductionMethod { none, pca, ga, ae_stacked, ae_tied };

std::string reduction_name(ReductionMethod m);

struct ReductionResult {
  ReductionMethod method = ReductionMethod::none;
  Tensor reduced;  // [N x m], rows aligned with the input rows

  // method-specific metadata
  std::vector<double> explained_variance_ratios;  // pca: all d ratios
  Tensor components;                              // pca: [d x m] loadings
  std::vector<bool> selected_features;            // ga
  double best_fitness = 0.0;                      // ga
  std::vector<double> fitness_trace;              // ga: best-so-far per generation
  double final_reconstruction_loss = 0.0;         // autoencoders
};

// Projects onto the leading eigenvectors of the covariance matrix, keeping
// the smallest m whose cumulative explained-variance ratio reaches the
// threshold. Sign convention: the largest-magnitude loading of each component
// is positive.
ReductionResult pca_reduce(const Tensor& matrix, double variance_threshold = 0.90);

struct GaParams {
  int population = 50;
  int generations = 30;
  int tournament = 3;
  double crossover_rate = 0.9;
  double mutation_rate = -1.0;  // < 0 means 1 / n_features
  int elitism = 2;
  int kmeans_n_init = 10;
};

// Fitness of one feature mask: the best k-means silhouette over k_min..k_max
// on the masked columns. Empty masks score -1. Deterministic in
// (matrix, mask, k range, seed), so exhaustive enumeration can share it.
double ga_fitness(const Tensor& std_matrix, const std::vector<bool>& mask,
                  int k_min, int k_max, std::uint64_t seed, int kmeans_n_init = 10);

// Binary-mask genetic search over feature subsets: tournament selection,
// uniform crossover, per-bit mutation, elitism. The all-ones mask is seeded
// into the initial population, so the result never scores below it.
ReductionResult ga_select(const Tensor& std_matrix, int k_min, int k_max,
                          const GaParams& params, std::uint64_t seed);

enum class AeVariant { stacked, tied };

struct AeParams {
  std::vector<int> hidden{16, 8};  // encoder widths; the last is the bottleneck
  int epochs = 1;
  double lr = 0.01;
};

// Two-hidden-layer autoencoder (d -> h0 -> h1 -> h0 -> d), ReLU on hidden
// layers, linear output. The tied variant constrains decoder weights to the
// encoder transposes (decoder biases stay free) and keeps the materialized
// decoder tensors in sync after every update.
struct Autoencoder {
  AeVariant variant = AeVariant::stacked;
  nn::DenseParams enc1, enc2;
  nn::DenseParams dec1, dec2;

  std::vector<Tensor*> parameters();  // learnable tensors only
  Tensor encode(const Tensor& x) const;
  Tensor reconstruct(const Tensor& x) const;
  void sync_tied();  // refresh decoder weights from the encoder transposes
  std::size_t parameter_count() const;
};

Autoencoder build_autoencoder(std::size_t input_dim, const AeParams& params,
                              AeVariant variant, std::uint64_t seed);

// Mean squared reconstruction error over all entries; gradients align with
// Autoencoder::parameters() (tied weights accumulate both uses).
double ae_loss_and_grads(const Autoencoder& ae, const Tensor& data,
                         std::vector<Tensor>* grads = nullptr);

// Full-dataset batches, Adam, `epochs` update steps. The embedding is the
// bottleneck activation after training.
ReductionResult ae_reduce(const Tensor& std_matrix, AeVariant variant,
                          const AeParams& params, std::uint64_t seed,
                          Autoencoder* model_out = nullptr);

std::size_t ae_parameter_count(std::size_t input_dim, const std::vector<int>& hidden,
                               AeVariant variant);

}  // namespace epicast::reduce
