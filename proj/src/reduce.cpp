#include "epicast/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "epicast/cluster.hpp"
#include "epicast/csv.hpp"
#include "epicast/errors.hpp"
#include "epicast/linalg.hpp"
#include "epicast/rng.hpp"

namespace epicast::reduce {

const std::vector<std::string>& static_variable_names() {
  static const std::vector<std::string> names{
      "altitude",
      "precipitation",
      "temperature",
      "humidity",
      "population_under_15",
      "population_15_24",
      "population_over_65",
      "population_density",
      "women_population",
      "multidimensional_poverty_index",
      "child_labour",
      "dependency_ratio",
      "informal_economy",
      "illiteracy",
      "school_dropout",
      "total_population",
      "life_expectancy",
      "deaths_digestive_diseases",
      "deaths_respiratory_illness",
      "deaths_cardiac_complications",
      "population_with_diabetes",
      "deaths_chronic_diseases",
      "deaths_acute_diseases",
      "deaths_endocrine_disorders",
      "deaths_malignant_neoplasm",
  };
  return names;
}

std::string reduction_name(ReductionMethod m) {
  switch (m) {
    case ReductionMethod::none: return "none";
    case ReductionMethod::pca: return "pca";
    case ReductionMethod::ga: return "ga";
    case ReductionMethod::ae_stacked: return "ae_stacked";
    case ReductionMethod::ae_tied: return "ae_tied";
  }
  return "unknown";
}

std::vector<RegionVector> assemble(
    const std::string& static_csv_path,
    const std::vector<forecast::ForecastResult>& forecasts) {
  const auto& names = static_variable_names();
  const auto rows = csv::read_file(static_csv_path);
  if (rows.empty()) throw ValidationError(static_csv_path + ": empty file");

  const auto& header = rows.front().fields;
  if (header.empty() || header[0] != "region_id")
    throw ValidationError(static_csv_path + ": first column must be region_id");
  if (header.size() != names.size() + 1) {
    // name what is missing or unexpected
    for (const auto& name : names)
      if (std::find(header.begin() + 1, header.end(), name) == header.end())
        throw ValidationError(static_csv_path + ": missing column '" + name + "'");
    throw ValidationError(static_csv_path + ": expected " +
                          std::to_string(names.size() + 1) + " columns, got " +
                          std::to_string(header.size()));
  }
  for (std::size_t c = 0; c < names.size(); ++c)
    if (header[c + 1] != names[c])
      throw ValidationError(static_csv_path + ": column " + std::to_string(c + 2) +
                            " must be '" + names[c] + "', got '" + header[c + 1] + "'");

  std::map<std::string, double> forecast_means;
  for (const auto& fc : forecasts) forecast_means[fc.region] = fc.q50_mean();

  std::map<std::string, std::vector<double>> regions;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = static_csv_path + " row " + std::to_string(row.line);
    if (row.fields.size() != names.size() + 1)
      throw ValidationError(where + ": expected " + std::to_string(names.size() + 1) +
                            " fields, got " + std::to_string(row.fields.size()));
    const std::string& region = row.fields[0];
    if (regions.count(region))
      throw ValidationError(where + ": duplicate region '" + region + "'");
    std::vector<double> values;
    values.reserve(names.size() + 1);
    for (std::size_t c = 0; c < names.size(); ++c) {
      const auto v = csv::parse_double(row.fields[c + 1]);
      if (!v)
        throw ValidationError(where + ": unparseable value '" + row.fields[c + 1] +
                              "' in column " + names[c]);
      values.push_back(*v);
    }
    const auto fit = forecast_means.find(region);
    if (fit == forecast_means.end())
      throw ValidationError("assemble: region '" + region + "' has no forecast");
    values.push_back(fit->second);
    regions.emplace(region, std::move(values));
  }
  for (const auto& [region, mean] : forecast_means)
    if (!regions.count(region))
      throw ValidationError("assemble: region '" + region +
                            "' has a forecast but no static variables");

  std::vector<RegionVector> out;
  out.reserve(regions.size());
  for (auto& [region, values] : regions)
    out.push_back(RegionVector{region, std::move(values)});
  return out;
}

Tensor to_matrix(const std::vector<RegionVector>& vectors) {
  if (vectors.empty()) throw ValidationError("to_matrix: no region vectors");
  const std::size_t d = vectors.front().values.size();
  Tensor m({vectors.size(), d});
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    if (vectors[r].values.size() != d)
      throw ValidationError("to_matrix: inconsistent vector length for region " +
                            vectors[r].region);
    std::copy(vectors[r].values.begin(), vectors[r].values.end(), m.row(r));
  }
  return m;
}

StandardizedMatrix zscore(const Tensor& matrix) {
  if (matrix.ndim() != 2 || matrix.dim(0) == 0)
    throw ValidationError("zscore: matrix must be [N x d] with N >= 1");
  const std::size_t n = matrix.dim(0), d = matrix.dim(1);
  StandardizedMatrix out;
  out.matrix = Tensor({n, d});
  out.mean.assign(d, 0.0);
  out.stddev.assign(d, 0.0);
  out.zero_variance.assign(d, false);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += matrix.at(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double dv = matrix.at(r, c) - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    out.mean[c] = mean;
    out.stddev[c] = sd;
    if (sd < 1e-12) {
      out.zero_variance[c] = true;  // column stays at 0
      continue;
    }
    for (std::size_t r = 0; r < n; ++r)
      out.matrix.at(r, c) = (matrix.at(r, c) - mean) / sd;
  }
  return out;
}

ReductionResult pca_reduce(const Tensor& matrix, double variance_threshold) {
  if (matrix.ndim() != 2)
    throw ValidationError("pca: matrix must be [N x d], got " + matrix.shape_str());
  const std::size_t n = matrix.dim(0), d = matrix.dim(1);
  if (n < 2) throw ValidationError("pca: needs at least 2 rows, got " + std::to_string(n));
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0))
    throw ValidationError("pca: variance threshold must lie in (0, 1]");

  Tensor centered({n, d});
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += matrix.at(r, c);
    mean /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) centered.at(r, c) = matrix.at(r, c) - mean;
  }
  Tensor cov({d, d});
  add_matmul_tn(centered, centered, cov);
  for (auto& v : cov.data) v /= static_cast<double>(n);

  const linalg::SymmetricEigen eig = linalg::symmetric_eigen(cov);
  std::vector<double> eigenvalues = eig.values;
  for (auto& v : eigenvalues) v = std::max(v, 0.0);
  double total = 0.0;
  for (double v : eigenvalues) total += v;
  if (total <= 0.0)
    throw ValidationError("pca: matrix has zero total variance");

  ReductionResult result;
  result.method = ReductionMethod::pca;
  result.explained_variance_ratios.resize(d);
  for (std::size_t i = 0; i < d; ++i)
    result.explained_variance_ratios[i] = eigenvalues[i] / total;

  std::size_t m = d;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    cumulative += result.explained_variance_ratios[i];
    if (cumulative >= variance_threshold - 1e-12) {
      m = i + 1;
      break;
    }
  }

  result.components = Tensor({d, m});
  for (std::size_t j = 0; j < m; ++j) {
    // deterministic sign: the largest-magnitude loading is positive
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double mag = std::abs(eig.vectors.at(i, j));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    const double sign = eig.vectors.at(arg, j) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < d; ++i)
      result.components.at(i, j) = sign * eig.vectors.at(i, j);
  }
  result.reduced = matmul(centered, result.components);
  return result;
}

namespace {

void add_inplace(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.numel(); ++i) dst.data[i] += src.data[i];
}

std::uint64_t mask_hash(const std::vector<bool>& mask) {
  std::string bits(mask.size(), '0');
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) bits[i] = '1';
  return fnv1a64(bits);
}

Tensor masked_columns(const Tensor& matrix, const std::vector<bool>& mask) {
  std::size_t kept = 0;
  for (bool b : mask)
    if (b) ++kept;
  Tensor out({matrix.dim(0), kept});
  for (std::size_t r = 0; r < matrix.dim(0); ++r) {
    std::size_t j = 0;
    for (std::size_t c = 0; c < mask.size(); ++c)
      if (mask[c]) out.at(r, j++) = matrix.at(r, c);
  }
  return out;
}

}  // namespace

double ga_fitness(const Tensor& std_matrix, const std::vector<bool>& mask,
                  int k_min, int k_max, std::uint64_t seed, int kmeans_n_init) {
  if (mask.size() != std_matrix.dim(1))
    throw ValidationError("ga_fitness: mask size " + std::to_string(mask.size()) +
                          " != feature count " + std::to_string(std_matrix.dim(1)));
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) return -1.0;
  const Tensor sub = masked_columns(std_matrix, mask);
  const std::uint64_t h = mask_hash(mask);
  double best = -1.0;
  for (int k = k_min; k <= k_max; ++k) {
    const std::uint64_t kseed = mix_seed(seed, {fnv1a64("ga-fitness"), h,
                                                static_cast<std::uint64_t>(k)});
    const auto assignment = cluster::kmeans(sub, k, kseed, kmeans_n_init);
    best = std::max(best, cluster::silhouette(sub, assignment.labels));
  }
  return best;
}

ReductionResult ga_select(const Tensor& std_matrix, int k_min, int k_max,
                          const GaParams& params, std::uint64_t seed) {
  if (std_matrix.ndim() != 2 || std_matrix.dim(1) == 0)
    throw ValidationError("ga_select: matrix must be [N x d] with d >= 1");
  const std::size_t n_features = std_matrix.dim(1);
  if (params.population < 2 || params.generations < 1 || params.tournament < 1 ||
      params.elitism < 0 || params.elitism >= params.population)
    throw ValidationError("ga_select: invalid GA parameters");
  const double mutation = params.mutation_rate < 0.0
                              ? 1.0 / static_cast<double>(n_features)
                              : params.mutation_rate;

  Rng rng(mix_seed(seed, {fnv1a64("ga-select")}));
  const auto pop_size = static_cast<std::size_t>(params.population);
  std::vector<std::vector<bool>> population(pop_size);
  population[0].assign(n_features, true);  // the all-features baseline
  for (std::size_t i = 1; i < pop_size; ++i) {
    population[i].resize(n_features);
    for (std::size_t c = 0; c < n_features; ++c)
      population[i][c] = rng.uniform() < 0.5;
  }

  std::map<std::vector<bool>, double> memo;
  auto fitness_of = [&](const std::vector<bool>& mask) {
    const auto it = memo.find(mask);
    if (it != memo.end()) return it->second;
    const double f =
        ga_fitness(std_matrix, mask, k_min, k_max, seed, params.kmeans_n_init);
    memo.emplace(mask, f);
    return f;
  };

  std::vector<bool> best_mask = population[0];
  double best_fitness = fitness_of(best_mask);
  ReductionResult result;
  result.method = ReductionMethod::ga;

  std::vector<double> fitness(pop_size);
  for (int gen = 0; gen < params.generations; ++gen) {
    for (std::size_t i = 0; i < pop_size; ++i) {
      fitness[i] = fitness_of(population[i]);
      if (fitness[i] > best_fitness) {
        best_fitness = fitness[i];
        best_mask = population[i];
      }
    }
    result.fitness_trace.push_back(best_fitness);
    if (gen + 1 == params.generations) break;

    // elitism: carry the current top chromosomes over unchanged
    std::vector<std::size_t> order(pop_size);
    for (std::size_t i = 0; i < pop_size; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fitness[a] > fitness[b];
    });
    std::vector<std::vector<bool>> next;
    next.reserve(pop_size);
    for (int e = 0; e < params.elitism; ++e)
      next.push_back(population[order[static_cast<std::size_t>(e)]]);

    auto tournament = [&]() -> const std::vector<bool>& {
      std::size_t winner = static_cast<std::size_t>(rng.below(pop_size));
      for (int t = 1; t < params.tournament; ++t) {
        const std::size_t challenger = static_cast<std::size_t>(rng.below(pop_size));
        if (fitness[challenger] > fitness[winner]) winner = challenger;
      }
      return population[winner];
    };
    while (next.size() < pop_size) {
      const std::vector<bool>& a = tournament();
      const std::vector<bool>& b = tournament();
      std::vector<bool> child(n_features);
      if (rng.uniform() < params.crossover_rate) {
        for (std::size_t c = 0; c < n_features; ++c)
          child[c] = rng.uniform() < 0.5 ? a[c] : b[c];
      } else {
        child = a;
      }
      for (std::size_t c = 0; c < n_features; ++c)
        if (rng.uniform() < mutation) child[c] = !child[c];
      next.push_back(std::move(child));
    }
    population = std::move(next);
  }

  result.selected_features = best_mask;
  result.best_fitness = best_fitness;
  result.reduced = masked_columns(std_matrix, best_mask);
  return result;
}

// ---- autoencoders ----------------------------------------------------------

std::vector<Tensor*> Autoencoder::parameters() {
  if (variant == AeVariant::tied)
    return {&enc1.weight, &enc1.bias, &enc2.weight, &enc2.bias, &dec1.bias,
            &dec2.bias};
  return {&enc1.weight, &enc1.bias, &enc2.weight, &enc2.bias,
          &dec1.weight, &dec1.bias, &dec2.weight, &dec2.bias};
}

std::size_t Autoencoder::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* p : const_cast<Autoencoder*>(this)->parameters()) n += p->numel();
  return n;
}

void Autoencoder::sync_tied() {
  if (variant != AeVariant::tied) return;
  dec1.weight = transpose(enc2.weight);
  dec2.weight = transpose(enc1.weight);
}

Tensor Autoencoder::encode(const Tensor& x) const {
  return nn::relu(nn::dense(nn::relu(nn::dense(x, enc1)), enc2));
}

Tensor Autoencoder::reconstruct(const Tensor& x) const {
  return nn::dense(nn::relu(nn::dense(encode(x), dec1)), dec2);
}

Autoencoder build_autoencoder(std::size_t input_dim, const AeParams& params,
                              AeVariant variant, std::uint64_t seed) {
  if (params.hidden.size() != 2 || params.hidden[0] < 1 || params.hidden[1] < 1)
    throw ValidationError("autoencoder: hidden must list two positive widths");
  const auto h0 = static_cast<std::size_t>(params.hidden[0]);
  const auto h1 = static_cast<std::size_t>(params.hidden[1]);
  Autoencoder ae;
  ae.variant = variant;
  Rng rng(mix_seed(seed, {fnv1a64("autoencoder")}));
  auto init = [&rng](Tensor& w, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : w.data) v = rng.uniform(-bound, bound);
  };
  ae.enc1 = nn::DenseParams(input_dim, h0);
  init(ae.enc1.weight, input_dim);
  ae.enc2 = nn::DenseParams(h0, h1);
  init(ae.enc2.weight, h0);
  ae.dec1 = nn::DenseParams(h1, h0);
  ae.dec2 = nn::DenseParams(h0, input_dim);
  if (variant == AeVariant::tied) {
    ae.sync_tied();
  } else {
    init(ae.dec1.weight, h1);
    init(ae.dec2.weight, h0);
  }
  return ae;
}

double ae_loss_and_grads(const Autoencoder& ae, const Tensor& data,
                         std::vector<Tensor>* grads) {
  if (data.ndim() != 2 || data.dim(1) != ae.enc1.weight.dim(0))
    throw ValidationError("autoencoder: data shape " + data.shape_str() +
                          " does not match input width " +
                          std::to_string(ae.enc1.weight.dim(0)));
  const Tensor pre1 = nn::dense(data, ae.enc1);
  const Tensor h1 = nn::relu(pre1);
  const Tensor pre2 = nn::dense(h1, ae.enc2);
  const Tensor z = nn::relu(pre2);
  const Tensor pre3 = nn::dense(z, ae.dec1);
  const Tensor h3 = nn::relu(pre3);
  const Tensor out = nn::dense(h3, ae.dec2);

  const double inv_n = 1.0 / static_cast<double>(out.numel());
  double loss = 0.0;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const double e = out[i] - data[i];
    loss += e * e;
  }
  loss *= inv_n;
  if (!grads) return loss;

  Tensor dout(out.shape);
  for (std::size_t i = 0; i < out.numel(); ++i)
    dout[i] = 2.0 * (out[i] - data[i]) * inv_n;

  nn::DenseGrads g4 = nn::dense_backward(h3, ae.dec2, dout);
  const Tensor dpre3 = nn::relu_backward(pre3, g4.input);
  nn::DenseGrads g3 = nn::dense_backward(z, ae.dec1, dpre3);
  const Tensor dpre2 = nn::relu_backward(pre2, g3.input);
  nn::DenseGrads g2 = nn::dense_backward(h1, ae.enc2, dpre2);
  const Tensor dpre1 = nn::relu_backward(pre1, g2.input);
  nn::DenseGrads g1 = nn::dense_backward(data, ae.enc1, dpre1);

  grads->clear();
  if (ae.variant == AeVariant::tied) {
    // shared weights collect gradient from both the encoder and decoder uses
    Tensor dw1 = std::move(g1.weight);
    add_inplace(dw1, transpose(g4.weight));
    Tensor dw2 = std::move(g2.weight);
    add_inplace(dw2, transpose(g3.weight));
    grads->push_back(std::move(dw1));
    grads->push_back(std::move(g1.bias));
    grads->push_back(std::move(dw2));
    grads->push_back(std::move(g2.bias));
    grads->push_back(std::move(g3.bias));
    grads->push_back(std::move(g4.bias));
  } else {
    grads->push_back(std::move(g1.weight));
    grads->push_back(std::move(g1.bias));
    grads->push_back(std::move(g2.weight));
    grads->push_back(std::move(g2.bias));
    grads->push_back(std::move(g3.weight));
    grads->push_back(std::move(g3.bias));
    grads->push_back(std::move(g4.weight));
    grads->push_back(std::move(g4.bias));
  }
  return loss;
}

ReductionResult ae_reduce(const Tensor& std_matrix, AeVariant variant,
                          const AeParams& params, std::uint64_t seed,
                          Autoencoder* model_out) {
  if (std_matrix.ndim() != 2 || std_matrix.dim(0) == 0)
    throw ValidationError("ae_reduce: matrix must be [N x d] with N >= 1");
  if (params.epochs < 1) throw ValidationError("ae_reduce: epochs must be >= 1");
  Autoencoder ae = build_autoencoder(std_matrix.dim(1), params, variant, seed);

  auto learnable = ae.parameters();
  nn::AdamState adam;
  adam.lr = params.lr;
  adam.init({learnable.begin(), learnable.end()});

  std::vector<Tensor> grads;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    ae_loss_and_grads(ae, std_matrix, &grads);
    std::vector<const Tensor*> gptrs;
    for (const auto& g : grads) gptrs.push_back(&g);
    nn::adam_step(learnable, gptrs, adam);
    ae.sync_tied();
  }

  ReductionResult result;
  result.method =
      variant == AeVariant::tied ? ReductionMethod::ae_tied : ReductionMethod::ae_stacked;
  result.reduced = ae.encode(std_matrix);
  result.final_reconstruction_loss = ae_loss_and_grads(ae, std_matrix, nullptr);
  if (model_out) *model_out = std::move(ae);
  return result;
}

std::size_t ae_parameter_count(std::size_t input_dim, const std::vector<int>& hidden,
                               AeVariant variant) {
  if (hidden.size() != 2)
    throw ValidationError("ae_parameter_count: hidden must list two widths");
  const auto h0 = static_cast<std::size_t>(hidden[0]);
  const auto h1 = static_cast<std::size_t>(hidden[1]);
  const std::size_t encoder = (input_dim * h0 + h0) + (h0 * h1 + h1);
  if (variant == AeVariant::tied) return encoder + h0 + input_dim;  // free biases only
  return encoder + (h1 * h0 + h0) + (h0 * input_dim + input_dim);
}

}  // namespace epicast::reduce
