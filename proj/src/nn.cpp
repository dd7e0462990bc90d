#include "epicast/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "epicast/errors.hpp"

namespace epicast::nn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace

Tensor conv1d_causal(const Tensor& input, const ConvParams& params) {
  require(input.ndim() == 2,
          "conv1d_causal: input must be [T x C_in], got " + input.shape_str());
  require(params.kernel.ndim() == 3,
          "conv1d_causal: kernel must be [K x C_in x C_out], got " +
              params.kernel.shape_str());
  const std::size_t T = input.dim(0), c_in = input.dim(1);
  const std::size_t K = params.kernel.dim(0), c_out = params.kernel.dim(2);
  require(T >= 1, "conv1d_causal: input length must be >= 1");
  require(params.kernel.dim(1) == c_in,
          "conv1d_causal: input channels (" + std::to_string(c_in) +
              ") != kernel in_channels (" + std::to_string(params.kernel.dim(1)) +
              ")");
  require(params.bias.numel() == c_out,
          "conv1d_causal: bias size (" + std::to_string(params.bias.numel()) +
              ") != out_channels (" + std::to_string(c_out) + ")");
  require(params.dilation >= 1, "conv1d_causal: dilation must be >= 1");

  Tensor out({T, c_out});
  for (std::size_t t = 0; t < T; ++t) {
    double* orow = out.row(t);
    for (std::size_t o = 0; o < c_out; ++o) orow[o] = params.bias[o];
  }
  const long d = params.dilation;
  for (std::size_t k = 0; k < K; ++k) {
    const long offset = static_cast<long>(K - 1 - k) * d;
    for (std::size_t t = 0; t < T; ++t) {
      const long src = static_cast<long>(t) - offset;
      if (src < 0) continue;  // zero left padding
      const double* xrow = input.row(static_cast<std::size_t>(src));
      double* orow = out.row(t);
      for (std::size_t i = 0; i < c_in; ++i) {
        const double xv = xrow[i];
        if (xv == 0.0) continue;
        const double* krow = &params.kernel.data[(k * c_in + i) * c_out];
        for (std::size_t o = 0; o < c_out; ++o) orow[o] += xv * krow[o];
      }
    }
  }
  return out;
}

ConvGrads conv1d_causal_backward(const Tensor& input, const ConvParams& params,
                                 const Tensor& grad_output) {
  const std::size_t T = input.dim(0), c_in = input.dim(1);
  const std::size_t K = params.kernel.dim(0), c_out = params.kernel.dim(2);
  require(grad_output.shape == std::vector<std::size_t>({T, c_out}),
          "conv1d_causal_backward: grad_output shape " + grad_output.shape_str() +
              " != [T x C_out]");

  ConvGrads g;
  g.input = Tensor({T, c_in});
  g.kernel = Tensor(params.kernel.shape);
  g.bias = Tensor({c_out});

  for (std::size_t t = 0; t < T; ++t) {
    const double* dyrow = grad_output.row(t);
    for (std::size_t o = 0; o < c_out; ++o) g.bias[o] += dyrow[o];
  }
  const long d = params.dilation;
  for (std::size_t k = 0; k < K; ++k) {
    const long offset = static_cast<long>(K - 1 - k) * d;
    for (std::size_t t = 0; t < T; ++t) {
      const long src = static_cast<long>(t) - offset;
      if (src < 0) continue;
      const double* xrow = input.row(static_cast<std::size_t>(src));
      const double* dyrow = grad_output.row(t);
      double* dxrow = g.input.row(static_cast<std::size_t>(src));
      for (std::size_t i = 0; i < c_in; ++i) {
        const double* krow = &params.kernel.data[(k * c_in + i) * c_out];
        double* dkrow = &g.kernel.data[(k * c_in + i) * c_out];
        const double xv = xrow[i];
        double acc = 0.0;
        for (std::size_t o = 0; o < c_out; ++o) {
          dkrow[o] += xv * dyrow[o];
          acc += krow[o] * dyrow[o];
        }
        dxrow[i] += acc;
      }
    }
  }
  return g;
}

Tensor dense(const Tensor& input, const DenseParams& params) {
  require(input.ndim() == 2,
          "dense: input must be [rows x in_dim], got " + input.shape_str());
  require(input.dim(1) == params.weight.dim(0),
          "dense: input dim (" + std::to_string(input.dim(1)) +
              ") != weight in_dim (" + std::to_string(params.weight.dim(0)) + ")");
  require(params.bias.numel() == params.weight.dim(1),
          "dense: bias size (" + std::to_string(params.bias.numel()) +
              ") != weight out_dim (" + std::to_string(params.weight.dim(1)) + ")");
  Tensor out({input.dim(0), params.weight.dim(1)});
  const std::size_t rows = out.dim(0), cols = out.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    double* orow = out.row(r);
    for (std::size_t c = 0; c < cols; ++c) orow[c] = params.bias[c];
  }
  add_matmul(input, params.weight, out);
  return out;
}

DenseGrads dense_backward(const Tensor& input, const DenseParams& params,
                          const Tensor& grad_output) {
  require(grad_output.shape ==
              std::vector<std::size_t>({input.dim(0), params.weight.dim(1)}),
          "dense_backward: grad_output shape " + grad_output.shape_str() +
              " != [rows x out_dim]");
  DenseGrads g;
  g.input = Tensor(input.shape);
  g.weight = Tensor(params.weight.shape);
  g.bias = Tensor({params.weight.dim(1)});
  add_matmul_nt(grad_output, params.weight, g.input);  // dX = dY W^T
  add_matmul_tn(input, grad_output, g.weight);         // dW = X^T dY
  const std::size_t rows = grad_output.dim(0), cols = grad_output.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* dyrow = grad_output.row(r);
    for (std::size_t c = 0; c < cols; ++c) g.bias[c] += dyrow[c];
  }
  return g;
}

Tensor batch_norm(const Tensor& input, BatchNormState& state, Mode mode,
                  BatchNormCache* cache) {
  require(input.ndim() == 2,
          "batch_norm: input must be [rows x channels], got " + input.shape_str());
  const std::size_t R = input.dim(0), C = input.dim(1);
  require(C == state.channels(),
          "batch_norm: input channels (" + std::to_string(C) +
              ") != state channels (" + std::to_string(state.channels()) + ")");
  Tensor out({R, C});
  if (mode == Mode::infer) {
    for (std::size_t c = 0; c < C; ++c) {
      const double inv = 1.0 / std::sqrt(state.running_var[c] + state.epsilon);
      const double scale = state.gamma[c] * inv;
      const double shift = state.beta[c] - scale * state.running_mean[c];
      for (std::size_t r = 0; r < R; ++r) out.at(r, c) = scale * input.at(r, c) + shift;
    }
    return out;
  }

  require(R >= 2, "batch_norm: train mode needs at least 2 rows, got " +
                      std::to_string(R));
  std::vector<double> mean(C, 0.0), var(C, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    const double* xrow = input.row(r);
    for (std::size_t c = 0; c < C; ++c) mean[c] += xrow[c];
  }
  for (std::size_t c = 0; c < C; ++c) mean[c] /= static_cast<double>(R);
  for (std::size_t r = 0; r < R; ++r) {
    const double* xrow = input.row(r);
    for (std::size_t c = 0; c < C; ++c) {
      const double dvi = xrow[c] - mean[c];
      var[c] += dvi * dvi;
    }
  }
  for (std::size_t c = 0; c < C; ++c) var[c] /= static_cast<double>(R);  // biased

  std::vector<double> inv_std(C);
  for (std::size_t c = 0; c < C; ++c)
    inv_std[c] = 1.0 / std::sqrt(var[c] + state.epsilon);

  Tensor xhat({R, C});
  for (std::size_t r = 0; r < R; ++r) {
    const double* xrow = input.row(r);
    double* hrow = xhat.row(r);
    double* orow = out.row(r);
    for (std::size_t c = 0; c < C; ++c) {
      hrow[c] = (xrow[c] - mean[c]) * inv_std[c];
      orow[c] = state.gamma[c] * hrow[c] + state.beta[c];
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    state.running_mean[c] =
        state.momentum * state.running_mean[c] + (1.0 - state.momentum) * mean[c];
    state.running_var[c] =
        state.momentum * state.running_var[c] + (1.0 - state.momentum) * var[c];
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

BatchNormGrads batch_norm_backward(const BatchNormCache& cache,
                                   const BatchNormState& state,
                                   const Tensor& grad_output) {
  const std::size_t R = cache.xhat.dim(0), C = cache.xhat.dim(1);
  require(grad_output.shape == cache.xhat.shape,
          "batch_norm_backward: grad_output shape " + grad_output.shape_str() +
              " != cached activation shape " + cache.xhat.shape_str());
  BatchNormGrads g;
  g.input = Tensor({R, C});
  g.gamma = Tensor({C});
  g.beta = Tensor({C});

  // Per channel with dxhat = dy * gamma:
  //   dx = inv_std/R * (R*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
  std::vector<double> sum_dxhat(C, 0.0), sum_dxhat_xhat(C, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    const double* dyrow = grad_output.row(r);
    const double* hrow = cache.xhat.row(r);
    for (std::size_t c = 0; c < C; ++c) {
      const double dxhat = dyrow[c] * state.gamma[c];
      sum_dxhat[c] += dxhat;
      sum_dxhat_xhat[c] += dxhat * hrow[c];
      g.gamma[c] += dyrow[c] * hrow[c];
      g.beta[c] += dyrow[c];
    }
  }
  const double inv_r = 1.0 / static_cast<double>(R);
  for (std::size_t r = 0; r < R; ++r) {
    const double* dyrow = grad_output.row(r);
    const double* hrow = cache.xhat.row(r);
    double* dxrow = g.input.row(r);
    for (std::size_t c = 0; c < C; ++c) {
      const double dxhat = dyrow[c] * state.gamma[c];
      dxrow[c] = cache.inv_std[c] *
                 (dxhat - inv_r * (sum_dxhat[c] + hrow[c] * sum_dxhat_xhat[c]));
    }
  }
  return g;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape);
  for (std::size_t i = 0; i < input.numel(); ++i)
    out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_output) {
  require(grad_output.shape == input.shape,
          "relu_backward: grad_output shape " + grad_output.shape_str() +
              " != input shape " + input.shape_str());
  Tensor g(input.shape);
  for (std::size_t i = 0; i < input.numel(); ++i)
    g[i] = input[i] > 0.0 ? grad_output[i] : 0.0;
  return g;
}

Tensor embed_lookup(int day_index, const EmbeddingTable& table) {
  require(day_index >= 0 && day_index < 7,
          "embed_lookup: day index " + std::to_string(day_index) +
              " outside 0..6");
  const std::size_t dim = table.dim();
  Tensor out({dim});
  const double* row = table.table.row(static_cast<std::size_t>(day_index));
  std::copy(row, row + dim, out.data.begin());
  return out;
}

void embed_lookup_backward(int day_index, const Tensor& grad_output,
                           Tensor& table_grad) {
  require(day_index >= 0 && day_index < 7,
          "embed_lookup_backward: day index " + std::to_string(day_index) +
              " outside 0..6");
  require(table_grad.ndim() == 2 && table_grad.dim(0) == 7 &&
              table_grad.dim(1) == grad_output.numel(),
          "embed_lookup_backward: table grad shape " + table_grad.shape_str() +
              " incompatible with grad size " + std::to_string(grad_output.numel()));
  double* row = table_grad.row(static_cast<std::size_t>(day_index));
  for (std::size_t i = 0; i < grad_output.numel(); ++i) row[i] += grad_output[i];
}

double pinball_loss(const Tensor& pred, const Tensor& target, double q) {
  require(q > 0.0 && q < 1.0, "pinball_loss: quantile must lie in (0,1)");
  require(pred.shape == target.shape,
          "pinball_loss: pred shape " + pred.shape_str() + " != target shape " +
              target.shape_str());
  require(pred.numel() > 0, "pinball_loss: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double e = target[i] - pred[i];
    total += std::max(q * e, (q - 1.0) * e);
  }
  return total / static_cast<double>(pred.numel());
}

Tensor pinball_loss_backward(const Tensor& pred, const Tensor& target, double q) {
  require(pred.shape == target.shape,
          "pinball_loss_backward: pred shape " + pred.shape_str() +
              " != target shape " + target.shape_str());
  Tensor g(pred.shape);
  const double inv_n = 1.0 / static_cast<double>(pred.numel());
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double e = target[i] - pred[i];
    if (e > 0.0)
      g[i] = -q * inv_n;
    else if (e < 0.0)
      g[i] = (1.0 - q) * inv_n;
    else
      g[i] = 0.0;
  }
  return g;
}

void AdamState::init(const std::vector<const Tensor*>& params) {
  m.clear();
  v.clear();
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Tensor* p : params) {
    m.emplace_back(p->shape);
    v.emplace_back(p->shape);
  }
  t = 0;
}

void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state) {
  require(params.size() == grads.size(),
          "adam_step: " + std::to_string(params.size()) + " params vs " +
              std::to_string(grads.size()) + " grads");
  require(state.m.size() == params.size(),
          "adam_step: state tracks " + std::to_string(state.m.size()) +
              " tensors, got " + std::to_string(params.size()));
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& param = *params[p];
    const Tensor& grad = *grads[p];
    require(param.shape == grad.shape,
            "adam_step: param " + std::to_string(p) + " shape " +
                param.shape_str() + " != grad shape " + grad.shape_str());
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    for (std::size_t i = 0; i < param.numel(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      param[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

double grad_check_coords(
    const std::function<double(const std::vector<double>&)>& value,
    const std::vector<double>& analytic, const std::vector<double>& point,
    const std::vector<std::size_t>& coords, double step) {
  require(analytic.size() == point.size(),
          "grad_check: gradient size != point size");
  double worst = 0.0;
  std::vector<double> x = point;
  for (std::size_t i : coords) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = value(x);
    x[i] = saved - step;
    const double down = value(x);
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[i];
    const double rel =
        std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
    worst = std::max(worst, rel);
  }
  return worst;
}

double grad_check(const DifferentiableFn& fn, const std::vector<double>& point,
                  double step) {
  std::vector<std::size_t> coords(point.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  return grad_check_coords(fn.value, fn.gradient(point), point, coords, step);
}

}  // namespace epicast::nn
