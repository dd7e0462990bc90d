#include "epicast/forecaster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "epicast/errors.hpp"
#include "epicast/linalg.hpp"
#include "epicast/rng.hpp"

namespace epicast::forecast {

using series::PreparedPanel;
using series::TrainingWindow;

namespace {

// Index of each learnable tensor in the parameters() enumeration.
struct Layout {
  std::size_t n_blocks, n_dec, n_heads;

  explicit Layout(const ForecastModel& m)
      : n_blocks(m.blocks.size()), n_dec(m.decoder.size()), n_heads(m.heads.size()) {}

  std::size_t conv_kernel(std::size_t b) const { return b * 6 + 0; }
  std::size_t conv_bias(std::size_t b) const { return b * 6 + 1; }
  std::size_t dense_w(std::size_t b) const { return b * 6 + 2; }
  std::size_t dense_b(std::size_t b) const { return b * 6 + 3; }
  std::size_t bn_gamma(std::size_t b) const { return b * 6 + 4; }
  std::size_t bn_beta(std::size_t b) const { return b * 6 + 5; }
  std::size_t embed() const { return n_blocks * 6; }
  std::size_t dec_w(std::size_t j) const { return embed() + 1 + j * 2; }
  std::size_t dec_b(std::size_t j) const { return embed() + 1 + j * 2 + 1; }
  std::size_t head_w(std::size_t q) const { return embed() + 1 + n_dec * 2 + q * 2; }
  std::size_t head_b(std::size_t q) const { return embed() + 1 + n_dec * 2 + q * 2 + 1; }
  std::size_t total() const { return embed() + 1 + n_dec * 2 + n_heads * 2; }
};

Tensor slice_rows(const Tensor& m, std::size_t row0, std::size_t nrows) {
  Tensor out({nrows, m.dim(1)});
  std::copy(m.row(row0), m.row(row0) + nrows * m.dim(1), out.data.begin());
  return out;
}

void paste_rows(Tensor& dst, std::size_t row0, const Tensor& src) {
  std::copy(src.data.begin(), src.data.end(), dst.row(row0));
}

void add_inplace(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.numel(); ++i) dst.data[i] += src.data[i];
}

// exp-clamp inverse transform for a single value; optionally reports dy/dz.
double rescale_one(double z, double anchor, double* dydz = nullptr) {
  const double zc = std::clamp(z, -10.0, 10.0);
  const double raw = std::exp(zc) * anchor - 1.0;
  if (dydz)
    *dydz = (z > -10.0 && z < 10.0 && raw > 0.0) ? std::exp(zc) * anchor : 0.0;
  return raw > 0.0 ? raw : 0.0;
}

struct NetCaches {
  std::vector<Tensor> block_in;   // conv input of each block [B*T x C_in]
  std::vector<Tensor> conv_out;   // [B*T x F]
  std::vector<nn::BatchNormCache> bn;
  std::vector<Tensor> bn_out;     // relu input
  Tensor concat_in;               // [B x F + H*ded]
  std::vector<Tensor> dec_in;     // input of each decoder dense
  std::vector<Tensor> dec_pre;    // decoder dense outputs pre-relu
  Tensor trunk_out;               // activation entering the heads
};

// Shared forward pass over a batch of windows. Returns one [B x horizon]
// z-space tensor per quantile head. Train mode updates running batch-norm
// stats on `model`; caches are filled only when backward needs them.
std::vector<Tensor> net_forward(ForecastModel& model,
                                const std::vector<const TrainingWindow*>& batch,
                                nn::Mode mode, NetCaches* caches) {
  const NetConfig& cfg = model.config;
  const std::size_t B = batch.size();
  const std::size_t T = static_cast<std::size_t>(cfg.input_len);
  const std::size_t H = static_cast<std::size_t>(cfg.horizon);
  const std::size_t ded = static_cast<std::size_t>(cfg.day_embed_dim);
  if (B == 0) throw ValidationError("forward: empty batch");
  for (const TrainingWindow* w : batch) {
    if (w->input.size() != T)
      throw ValidationError("forward: window length " +
                            std::to_string(w->input.size()) + " != input_len " +
                            std::to_string(T));
    if (w->dow_future.size() != H)
      throw ValidationError("forward: dow_future length " +
                            std::to_string(w->dow_future.size()) + " != horizon " +
                            std::to_string(H));
  }

  Tensor act({B * T, 1});
  for (std::size_t s = 0; s < B; ++s)
    for (std::size_t t = 0; t < T; ++t) act.at(s * T + t, 0) = batch[s]->input[t];

  if (caches) {
    caches->block_in.resize(model.blocks.size());
    caches->conv_out.resize(model.blocks.size());
    caches->bn.resize(model.blocks.size());
    caches->bn_out.resize(model.blocks.size());
    caches->dec_in.resize(model.decoder.size());
    caches->dec_pre.resize(model.decoder.size());
  }

  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    EncoderBlock& blk = model.blocks[b];
    const std::size_t c_out = blk.conv.kernel.dim(2);
    Tensor conv_out({B * T, c_out});
    for (std::size_t s = 0; s < B; ++s) {
      const Tensor xi = slice_rows(act, s * T, T);
      paste_rows(conv_out, s * T, nn::conv1d_causal(xi, blk.conv));
    }
    Tensor dense_out = nn::dense(conv_out, blk.dense);
    Tensor bn_out = nn::batch_norm(dense_out, blk.bn, mode,
                                   caches ? &caches->bn[b] : nullptr);
    Tensor next = nn::relu(bn_out);
    if (caches) {
      caches->block_in[b] = std::move(act);
      caches->conv_out[b] = std::move(conv_out);
      caches->bn_out[b] = std::move(bn_out);
    }
    act = std::move(next);
  }

  // Last-timestep feature vector per window, concatenated with the embedded
  // day scalars for the forecast horizon (zeros under the ablation flag).
  const std::size_t F = act.dim(1);
  Tensor concat({B, F + H * ded});
  for (std::size_t s = 0; s < B; ++s) {
    const double* feat = act.row(s * T + T - 1);
    double* crow = concat.row(s);
    std::copy(feat, feat + F, crow);
    if (cfg.use_day_embeddings) {
      for (std::size_t h = 0; h < H; ++h) {
        const Tensor e = nn::embed_lookup(batch[s]->dow_future[h], model.day_embed);
        std::copy(e.data.begin(), e.data.end(), crow + F + h * ded);
      }
    }
  }

  Tensor trunk = concat;
  if (caches) caches->concat_in = concat;
  for (std::size_t j = 0; j < model.decoder.size(); ++j) {
    Tensor pre = nn::dense(trunk, model.decoder[j]);
    Tensor post = nn::relu(pre);
    if (caches) {
      caches->dec_in[j] = std::move(trunk);
      caches->dec_pre[j] = std::move(pre);
    }
    trunk = std::move(post);
  }
  if (caches) caches->trunk_out = trunk;

  std::vector<Tensor> head_z;
  head_z.reserve(model.heads.size());
  for (auto& head : model.heads) head_z.push_back(nn::dense(trunk, head));
  return head_z;
}

// Loss of one batch plus, optionally, gradients for every parameter and for
// the window inputs.
double batch_pass(ForecastModel& model,
                  const std::vector<const TrainingWindow*>& batch,
                  std::vector<Tensor>* grads, Tensor* input_grads = nullptr) {
  const NetConfig& cfg = model.config;
  const std::size_t B = batch.size();
  const std::size_t H = static_cast<std::size_t>(cfg.horizon);
  const std::size_t T = static_cast<std::size_t>(cfg.input_len);
  const Layout lay(model);
  const bool want_backward = grads != nullptr || input_grads != nullptr;
  std::vector<Tensor> local_grads;
  if (want_backward && !grads) grads = &local_grads;

  NetCaches caches;
  std::vector<Tensor> head_z =
      net_forward(model, batch, nn::Mode::train, want_backward ? &caches : nullptr);

  Tensor targets({B, H});
  for (std::size_t s = 0; s < B; ++s) {
    if (batch[s]->target.size() != H)
      throw ValidationError("train: window target length " +
                            std::to_string(batch[s]->target.size()) +
                            " != horizon " + std::to_string(H));
    for (std::size_t h = 0; h < H; ++h) targets.at(s, h) = batch[s]->target[h];
  }

  double total_loss = 0.0;
  std::vector<Tensor> dz(head_z.size());
  for (std::size_t q = 0; q < head_z.size(); ++q) {
    const double quantile = cfg.quantiles[q];
    if (cfg.loss_in_log_space) {
      Tensor ztarget({B, H});
      for (std::size_t s = 0; s < B; ++s) {
        const double log_anchor = std::log(batch[s]->anchor_level);
        for (std::size_t h = 0; h < H; ++h)
          ztarget.at(s, h) = std::log(targets.at(s, h) + 1.0) - log_anchor;
      }
      total_loss += nn::pinball_loss(head_z[q], ztarget, quantile);
      if (want_backward) dz[q] = nn::pinball_loss_backward(head_z[q], ztarget, quantile);
    } else {
      Tensor pred({B, H});
      Tensor dydz({B, H});
      for (std::size_t s = 0; s < B; ++s)
        for (std::size_t h = 0; h < H; ++h)
          pred.at(s, h) = rescale_one(head_z[q].at(s, h), batch[s]->anchor_level,
                                      &dydz.at(s, h));
      total_loss += nn::pinball_loss(pred, targets, quantile);
      if (want_backward) {
        Tensor dp = nn::pinball_loss_backward(pred, targets, quantile);
        dz[q] = Tensor({B, H});
        for (std::size_t i = 0; i < dp.numel(); ++i) dz[q][i] = dp[i] * dydz[i];
      }
    }
  }
  if (!want_backward) return total_loss;

  // ---- backward ----
  grads->clear();
  grads->resize(lay.total());
  {
    const auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) (*grads)[i] = Tensor(params[i]->shape);
  }

  Tensor d_trunk(caches.trunk_out.shape);
  for (std::size_t q = 0; q < model.heads.size(); ++q) {
    nn::DenseGrads hg = nn::dense_backward(caches.trunk_out, model.heads[q], dz[q]);
    add_inplace(d_trunk, hg.input);
    (*grads)[lay.head_w(q)] = std::move(hg.weight);
    (*grads)[lay.head_b(q)] = std::move(hg.bias);
  }

  Tensor d_act = std::move(d_trunk);
  for (std::size_t j = model.decoder.size(); j-- > 0;) {
    const Tensor d_pre = nn::relu_backward(caches.dec_pre[j], d_act);
    nn::DenseGrads dg = nn::dense_backward(caches.dec_in[j], model.decoder[j], d_pre);
    (*grads)[lay.dec_w(j)] = std::move(dg.weight);
    (*grads)[lay.dec_b(j)] = std::move(dg.bias);
    d_act = std::move(dg.input);
  }

  // Split the concat gradient into encoder features and day embeddings.
  const std::size_t F = static_cast<std::size_t>(cfg.filters);
  const std::size_t ded = static_cast<std::size_t>(cfg.day_embed_dim);
  Tensor d_enc({B * T, F});
  for (std::size_t s = 0; s < B; ++s) {
    const double* drow = d_act.row(s);
    double* dst = d_enc.row(s * T + T - 1);
    for (std::size_t f = 0; f < F; ++f) dst[f] = drow[f];
    if (cfg.use_day_embeddings) {
      for (std::size_t h = 0; h < H; ++h) {
        Tensor de({ded});
        std::copy(drow + F + h * ded, drow + F + (h + 1) * ded, de.data.begin());
        nn::embed_lookup_backward(batch[s]->dow_future[h], de,
                                  (*grads)[lay.embed()]);
      }
    }
  }

  for (std::size_t b = model.blocks.size(); b-- > 0;) {
    EncoderBlock& blk = model.blocks[b];
    const Tensor d_bn_out = nn::relu_backward(caches.bn_out[b], d_enc);
    nn::BatchNormGrads bg = nn::batch_norm_backward(caches.bn[b], blk.bn, d_bn_out);
    (*grads)[lay.bn_gamma(b)] = std::move(bg.gamma);
    (*grads)[lay.bn_beta(b)] = std::move(bg.beta);
    nn::DenseGrads dg = nn::dense_backward(caches.conv_out[b], blk.dense, bg.input);
    (*grads)[lay.dense_w(b)] = std::move(dg.weight);
    (*grads)[lay.dense_b(b)] = std::move(dg.bias);

    Tensor d_conv_in({B * T, caches.block_in[b].dim(1)});
    for (std::size_t s = 0; s < B; ++s) {
      const Tensor xi = slice_rows(caches.block_in[b], s * T, T);
      const Tensor dyi = slice_rows(dg.input, s * T, T);
      nn::ConvGrads cg = nn::conv1d_causal_backward(xi, blk.conv, dyi);
      add_inplace((*grads)[lay.conv_kernel(b)], cg.kernel);
      add_inplace((*grads)[lay.conv_bias(b)], cg.bias);
      paste_rows(d_conv_in, s * T, cg.input);
    }
    d_enc = std::move(d_conv_in);
  }
  if (input_grads) *input_grads = std::move(d_enc);
  return total_loss;
}

}  // namespace

void NetConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("net config: " + msg); };
  if (filters < 1) fail("filters must be >= 1");
  if (kernel < 1) fail("kernel must be >= 1");
  if (dilations.empty()) fail("dilations must not be empty");
  for (int d : dilations)
    if (d < 1) fail("dilation rates must be >= 1");
  if (input_len < 1) fail("input_len must be >= 1");
  if (horizon < 1) fail("horizon must be >= 1");
  if (quantiles.size() != 3) fail("exactly 3 quantiles required");
  for (std::size_t i = 0; i < quantiles.size(); ++i) {
    if (!(quantiles[i] > 0.0 && quantiles[i] < 1.0))
      fail("quantiles must lie in (0,1)");
    if (i > 0 && !(quantiles[i] > quantiles[i - 1]))
      fail("quantiles must be strictly increasing");
  }
  if (day_embed_dim < 1) fail("day_embed_dim must be >= 1");
  if (decoder_dims.empty()) fail("decoder_dims must not be empty");
  for (int w : decoder_dims)
    if (w < 1) fail("decoder widths must be >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(lr > 0.0)) fail("learning rate must be positive");
  if (batch_size < 1) fail("batch_size must be >= 1");
}

std::vector<Tensor*> ForecastModel::parameters() {
  std::vector<Tensor*> out;
  for (auto& blk : blocks) {
    out.push_back(&blk.conv.kernel);
    out.push_back(&blk.conv.bias);
    out.push_back(&blk.dense.weight);
    out.push_back(&blk.dense.bias);
    out.push_back(&blk.bn.gamma);
    out.push_back(&blk.bn.beta);
  }
  out.push_back(&day_embed.table);
  for (auto& d : decoder) {
    out.push_back(&d.weight);
    out.push_back(&d.bias);
  }
  for (auto& h : heads) {
    out.push_back(&h.weight);
    out.push_back(&h.bias);
  }
  return out;
}

std::vector<const Tensor*> ForecastModel::parameters() const {
  auto mutable_params = const_cast<ForecastModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::size_t ForecastModel::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* p : parameters()) n += p->numel();
  return n;
}

std::vector<double> ForecastModel::flatten_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const Tensor* p : parameters())
    flat.insert(flat.end(), p->data.begin(), p->data.end());
  return flat;
}

void ForecastModel::set_parameters(const std::vector<double>& flat) {
  if (flat.size() != parameter_count())
    throw ValidationError("set_parameters: got " + std::to_string(flat.size()) +
                          " values, model has " + std::to_string(parameter_count()));
  std::size_t offset = 0;
  for (Tensor* p : parameters()) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + p->numel()),
              p->data.begin());
    offset += p->numel();
  }
}

ForecastModel build_model(const NetConfig& config, std::uint64_t rng_seed) {
  config.validate();
  ForecastModel m;
  m.config = config;
  Rng rng(rng_seed);
  auto fan_in_init = [&rng](Tensor& w, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : w.data) v = rng.uniform(-bound, bound);
  };

  std::size_t c_in = 1;
  const auto filters = static_cast<std::size_t>(config.filters);
  for (int dilation : config.dilations) {
    EncoderBlock blk;
    blk.conv = nn::ConvParams(static_cast<std::size_t>(config.kernel), c_in, filters,
                              dilation);
    fan_in_init(blk.conv.kernel, static_cast<std::size_t>(config.kernel) * c_in);
    blk.dense = nn::DenseParams(filters, filters);
    fan_in_init(blk.dense.weight, filters);
    blk.bn = nn::BatchNormState(filters);
    m.blocks.push_back(std::move(blk));
    c_in = filters;
  }

  m.day_embed = nn::EmbeddingTable(static_cast<std::size_t>(config.day_embed_dim));
  fan_in_init(m.day_embed.table, 1);

  std::size_t in_dim = filters + static_cast<std::size_t>(config.horizon) *
                                     static_cast<std::size_t>(config.day_embed_dim);
  for (int width : config.decoder_dims) {
    nn::DenseParams d(in_dim, static_cast<std::size_t>(width));
    fan_in_init(d.weight, in_dim);
    m.decoder.push_back(std::move(d));
    in_dim = static_cast<std::size_t>(width);
  }
  for (std::size_t q = 0; q < config.quantiles.size(); ++q) {
    nn::DenseParams h(in_dim, static_cast<std::size_t>(config.horizon));
    fan_in_init(h.weight, in_dim);
    m.heads.push_back(std::move(h));
  }
  return m;
}

Tensor forward(ForecastModel& model, const std::vector<double>& window_input,
               const std::vector<int>& dow_future, nn::Mode mode) {
  TrainingWindow w;
  w.input = window_input;
  w.dow_future = dow_future;
  w.anchor_level = 1.0;
  w.target.assign(static_cast<std::size_t>(model.config.horizon), 0.0);
  const std::vector<const TrainingWindow*> batch{&w};
  const std::vector<Tensor> head_z = net_forward(model, batch, mode, nullptr);

  Tensor out({head_z.size(), static_cast<std::size_t>(model.config.horizon)});
  for (std::size_t q = 0; q < head_z.size(); ++q)
    for (std::size_t h = 0; h < out.dim(1); ++h) out.at(q, h) = head_z[q].at(0, h);
  return out;
}

std::vector<double> rescale(const std::vector<double>& net_output_row,
                            double anchor_level) {
  if (!(anchor_level >= 1.0))
    throw ValidationError("rescale: anchor level must be >= 1, got " +
                          std::to_string(anchor_level));
  std::vector<double> out(net_output_row.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = rescale_one(net_output_row[i], anchor_level);
  return out;
}

double batch_loss_and_grads(const ForecastModel& model,
                            const std::vector<TrainingWindow>& batch,
                            std::vector<Tensor>* grads, Tensor* input_grads) {
  ForecastModel scratch = model;  // absorb the running-stat update
  std::vector<const TrainingWindow*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& w : batch) ptrs.push_back(&w);
  return batch_pass(scratch, ptrs, grads, input_grads);
}

TrainTrace train(ForecastModel& model, const PreparedPanel& prep) {
  const NetConfig& cfg = model.config;
  cfg.validate();
  const auto windows = series::make_windows(prep, cfg.input_len, cfg.horizon);
  if (windows.empty()) throw ValidationError("train: no training windows");

  auto params = model.parameters();
  nn::AdamState adam;
  adam.lr = cfg.lr;
  adam.init({params.begin(), params.end()});

  Rng shuffle_rng(mix_seed(cfg.seed, {fnv1a64("train-shuffle")}));
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainTrace trace;
  std::vector<Tensor> grads;
  const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      std::vector<const TrainingWindow*> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&windows[order[i]]);
      const double loss = batch_pass(model, batch, &grads);
      std::vector<const Tensor*> grad_ptrs;
      grad_ptrs.reserve(grads.size());
      for (const auto& g : grads) grad_ptrs.push_back(&g);
      nn::adam_step(params, grad_ptrs, adam);
      loss_sum += loss * static_cast<double>(end - begin);
    }
    trace.epoch_loss.push_back(loss_sum / static_cast<double>(windows.size()));
  }
  return trace;
}

double ForecastResult::q50_mean() const {
  double sum = 0.0;
  for (double v : q50) sum += v;
  return q50.empty() ? 0.0 : sum / static_cast<double>(q50.size());
}

ForecastResult predict(const ForecastModel& model, const PreparedPanel& prep,
                       const std::string& region) {
  const NetConfig& cfg = model.config;
  const auto it = std::find(prep.regions.begin(), prep.regions.end(), region);
  if (it == prep.regions.end())
    throw ValidationError("predict: unknown region '" + region + "'");
  const auto r = static_cast<std::size_t>(it - prep.regions.begin());
  const auto T = static_cast<std::size_t>(cfg.input_len);
  const auto H = static_cast<std::size_t>(cfg.horizon);
  if (prep.days < T)
    throw ValidationError("predict: panel has " + std::to_string(prep.days) +
                          " days, needs at least " + std::to_string(T));

  TrainingWindow w;
  w.anchor_level = prep.ema_level[r][prep.days - 1];
  const double log_anchor = std::log(w.anchor_level);
  w.input.resize(T);
  for (std::size_t i = 0; i < T; ++i)
    w.input[i] = prep.log_counts[r][prep.days - T + i] - log_anchor;
  w.dow_future.resize(H);
  ForecastResult result;
  result.region = region;
  for (std::size_t h = 0; h < H; ++h) {
    const Date day = prep.start + static_cast<std::int64_t>(prep.days + h);
    result.dates.push_back(day);
    w.dow_future[h] = day.weekday_mon0();
  }
  w.target.assign(H, 0.0);

  ForecastModel scratch = model;  // infer mode, but keep the API const
  const std::vector<const TrainingWindow*> batch{&w};
  const std::vector<Tensor> head_z = net_forward(scratch, batch, nn::Mode::infer, nullptr);

  // Monotone repair: sort the three quantile values per horizon step in
  // z space (the rescale map is monotone, so order survives).
  result.q05.resize(H);
  result.q50.resize(H);
  result.q90.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    std::array<double, 3> z{head_z[0].at(0, h), head_z[1].at(0, h),
                            head_z[2].at(0, h)};
    std::sort(z.begin(), z.end());
    result.q05[h] = rescale_one(z[0], w.anchor_level);
    result.q50[h] = rescale_one(z[1], w.anchor_level);
    result.q90[h] = rescale_one(z[2], w.anchor_level);
  }
  return result;
}

std::vector<double> baseline_seasonal_naive(const series::CasePanel& panel,
                                            const std::string& region, int horizon) {
  const auto r = panel.region_index(region);
  if (!r) throw ValidationError("seasonal_naive: unknown region '" + region + "'");
  if (horizon < 1) throw ValidationError("seasonal_naive: horizon must be >= 1");
  if (panel.days < 7)
    throw ValidationError("seasonal_naive: panel has " + std::to_string(panel.days) +
                          " days, needs at least 7");
  const auto& counts = panel.counts[*r];
  std::vector<double> out(static_cast<std::size_t>(horizon));
  for (int i = 0; i < horizon; ++i)
    out[static_cast<std::size_t>(i)] =
        counts[panel.days - 7 + static_cast<std::size_t>(i % 7)];
  return out;
}

std::vector<double> baseline_ar_ols(const series::CasePanel& panel,
                                    const std::string& region, int p, int d,
                                    int horizon, bool* used_fallback,
                                    std::vector<double>* coef_out) {
  if (used_fallback) *used_fallback = false;
  const auto r = panel.region_index(region);
  if (!r) throw ValidationError("ar_ols: unknown region '" + region + "'");
  if (p < 1 || d < 0 || horizon < 1)
    throw ValidationError("ar_ols: need p >= 1, d >= 0, horizon >= 1");
  const auto& counts = panel.counts[*r];
  const std::size_t min_len = static_cast<std::size_t>(p + d + 1);
  if (counts.size() < min_len)
    throw ValidationError("ar_ols: series length " + std::to_string(counts.size()) +
                          " < required " + std::to_string(min_len));

  // ln(x+1), then difference d times.
  std::vector<std::vector<double>> levels(static_cast<std::size_t>(d) + 1);
  levels[0].resize(counts.size());
  for (std::size_t t = 0; t < counts.size(); ++t)
    levels[0][t] = std::log(counts[t] + 1.0);
  for (int l = 1; l <= d; ++l) {
    const auto& prev = levels[static_cast<std::size_t>(l - 1)];
    auto& cur = levels[static_cast<std::size_t>(l)];
    cur.resize(prev.size() - 1);
    for (std::size_t t = 0; t + 1 < prev.size(); ++t) cur[t] = prev[t + 1] - prev[t];
  }
  std::vector<double> u = levels[static_cast<std::size_t>(d)];

  const std::size_t lags = static_cast<std::size_t>(p);
  const std::size_t rows = u.size() - lags;
  Tensor design({rows, lags + 1});
  std::vector<double> rhs(rows);
  for (std::size_t t = 0; t < rows; ++t) {
    design.at(t, 0) = 1.0;
    for (std::size_t j = 1; j <= lags; ++j) design.at(t, j) = u[lags + t - j];
    rhs[t] = u[lags + t];
  }
  const std::vector<double> coef = linalg::solve_least_squares(design, rhs);
  const bool finite =
      std::all_of(coef.begin(), coef.end(), [](double c) { return std::isfinite(c); });
  if (!finite) {
    if (used_fallback) *used_fallback = true;
    return baseline_seasonal_naive(panel, region, horizon);
  }
  if (coef_out) *coef_out = coef;

  // Iterate the AR recursion, then integrate the differences back to levels.
  std::vector<double> last(static_cast<std::size_t>(d) + 1);
  for (int l = 0; l <= d; ++l) last[static_cast<std::size_t>(l)] = levels[static_cast<std::size_t>(l)].back();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int step = 0; step < horizon; ++step) {
    double u_next = coef[0];
    for (std::size_t j = 1; j <= lags; ++j) u_next += coef[j] * u[u.size() - j];
    u.push_back(u_next);
    double value = u_next;
    for (int l = d - 1; l >= 0; --l) {
      value = last[static_cast<std::size_t>(l)] + value;
      last[static_cast<std::size_t>(l)] = value;
    }
    if (d > 0) last[static_cast<std::size_t>(d)] = u_next;
    const double count = std::exp(value) - 1.0;
    out.push_back(count > 0.0 ? count : 0.0);
  }
  return out;
}

}  // namespace epicast::forecast
