#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "epicast/errors.hpp"
#include "epicast/forecaster.hpp"
#include "epicast/rng.hpp"
#include "epicast/series.hpp"

using namespace epicast;
using namespace epicast::forecast;
using epicast::series::CasePanel;

namespace {

// Small net so the gradient and training tests stay fast.
NetConfig small_config(std::uint64_t seed) {
  NetConfig cfg;
  cfg.filters = 12;
  cfg.dilations = {1, 2, 3};
  cfg.decoder_dims = {10, 8};
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.seed = seed;
  return cfg;
}

// Epidemic-shaped counts with a weekly profile, deterministic per seed.
CasePanel seeded_panel(std::size_t regions, std::size_t days, std::uint64_t seed) {
  static const double profile[7] = {1.05, 1.10, 1.10, 1.05, 1.25, 0.75, 0.55};
  CasePanel p;
  p.start = *Date::parse("2020-03-03");
  p.days = days;
  Rng rng(seed);
  for (std::size_t r = 0; r < regions; ++r) {
    char name[16];
    std::snprintf(name, sizeof(name), "R%02zu", r);
    p.regions.push_back(name);
    const double scale = rng.uniform(200.0, 2000.0);
    const double rate = rng.uniform(0.06, 0.12);
    const double mid = rng.uniform(0.4, 0.7) * static_cast<double>(days);
    std::vector<double> counts(days);
    for (std::size_t t = 0; t < days; ++t) {
      const double z = std::exp(-rate * (static_cast<double>(t) - mid));
      const double base = scale * rate * z / ((1.0 + z) * (1.0 + z));
      const double noise = std::exp(0.05 * rng.normal());
      const int dow = p.date_at(t).weekday_mon0();
      counts[t] = std::round(base * profile[dow] * noise);
      if (counts[t] < 0.0) counts[t] = 0.0;
    }
    p.counts.push_back(std::move(counts));
  }
  return p;
}

}  // namespace

TEST_CASE("build_model is bitwise deterministic per seed") {
  const NetConfig cfg = small_config(9);
  const auto a = build_model(cfg, 123);
  const auto b = build_model(cfg, 123);
  const auto c = build_model(cfg, 124);
  CHECK(a.flatten_parameters() == b.flatten_parameters());
  CHECK(a.flatten_parameters() != c.flatten_parameters());
}

TEST_CASE("default model matches the hand parameter count") {
  NetConfig cfg;  // paper defaults: 128 filters, 6 blocks, decoder 64/32
  cfg.seed = 1;
  const auto model = build_model(cfg, 1);
  // block 0: conv 2*1*128+128, dense 128*128+128, bn 2*128
  const std::size_t block0 = (2 * 1 * 128 + 128) + (128 * 128 + 128) + 256;
  // blocks 1..5: conv 2*128*128+128, dense 128*128+128, bn 2*128
  const std::size_t blockn = (2 * 128 * 128 + 128) + (128 * 128 + 128) + 256;
  const std::size_t embed = 7 * 1;
  const std::size_t dec = (135 * 64 + 64) + (64 * 32 + 32);
  const std::size_t heads = 3 * (32 * 7 + 7);
  CHECK(model.parameter_count() == block0 + 5 * blockn + embed + dec + heads);
  CHECK(model.parameter_count() == 276956);

  for (std::size_t b = 0; b < model.blocks.size(); ++b)
    CHECK(model.blocks[b].conv.dilation == cfg.dilations[b]);
}

TEST_CASE("forward yields 3 x horizon outputs, zeros under zeroed heads") {
  auto model = build_model(small_config(4), 42);
  for (auto& head : model.heads) {
    head.weight.fill(0.0);
    head.bias.fill(0.0);
  }
  std::vector<double> window(10, 0.3);
  std::vector<int> dow{0, 1, 2, 3, 4, 5, 6};
  Tensor out = forward(model, window, dow, nn::Mode::infer);
  CHECK(out.shape == std::vector<std::size_t>{3, 7});
  for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out[i] == 0.0);

  std::vector<double> bad(9, 0.0);
  CHECK_THROWS_AS(forward(model, bad, dow, nn::Mode::infer), ValidationError);
}

TEST_CASE("ablated model ignores dow_future entirely") {
  NetConfig cfg = small_config(5);
  cfg.use_day_embeddings = false;
  auto model = build_model(cfg, 7);
  Rng rng(3);
  std::vector<double> window(10);
  for (auto& v : window) v = rng.uniform(-1.0, 1.0);
  Tensor a = forward(model, window, {0, 1, 2, 3, 4, 5, 6}, nn::Mode::infer);
  Tensor b = forward(model, window, {6, 5, 4, 3, 2, 1, 0}, nn::Mode::infer);
  Tensor c = forward(model, window, {3, 3, 3, 3, 3, 3, 3}, nn::Mode::infer);
  CHECK(a.data == b.data);
  CHECK(a.data == c.data);
}

TEST_CASE("rescale closed forms") {
  CHECK(rescale({0.0}, 1.0)[0] == doctest::Approx(0.0));
  CHECK(rescale({0.0}, 50.0)[0] == doctest::Approx(49.0));
  CHECK(rescale({-1e6}, 50.0)[0] == 0.0);  // clamped exponent, then floor at 0

  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const double z = rng.uniform(-1e3, 1e3);
    const double anchor = rng.uniform(1.0, 1e6);
    const double y = rescale({z}, anchor)[0];
    CHECK(std::isfinite(y));
    CHECK(y >= 0.0);
  }
  CHECK_THROWS_AS(rescale({0.0}, 0.5), ValidationError);
}

TEST_CASE("training is deterministic and reduces the loss on a seeded panel") {
  const auto panel = seeded_panel(4, 60, 17);
  const auto prep = series::prepare(panel);
  const NetConfig cfg = small_config(99);

  auto model1 = build_model(cfg, cfg.seed);
  const TrainTrace trace1 = train(model1, prep);
  auto model2 = build_model(cfg, cfg.seed);
  const TrainTrace trace2 = train(model2, prep);

  CHECK(trace1.epoch_loss.size() == static_cast<std::size_t>(cfg.epochs));
  CHECK(trace1.epoch_loss == trace2.epoch_loss);
  CHECK(model1.flatten_parameters() == model2.flatten_parameters());
  CHECK(trace1.epoch_loss.back() < trace1.epoch_loss.front());
}

TEST_CASE("train rejects an empty window set") {
  series::PreparedPanel prep;  // no regions at all
  prep.days = 30;
  prep.dow.assign(30, 0);
  auto model = build_model(small_config(1), 1);
  CHECK_THROWS_AS(train(model, prep), ValidationError);
}

TEST_CASE("predict keeps quantiles ordered and dates contiguous") {
  const auto panel = seeded_panel(3, 40, 23);
  const auto prep = series::prepare(panel);
  auto model = build_model(small_config(2), 11);
  const auto result = predict(model, prep, panel.regions[1]);
  REQUIRE(result.dates.size() == 7);
  for (std::size_t h = 0; h < 7; ++h) {
    CHECK(result.dates[h] == panel.last_date() + static_cast<std::int64_t>(h + 1));
    CHECK(result.q05[h] <= result.q50[h]);
    CHECK(result.q50[h] <= result.q90[h]);
    CHECK(result.q05[h] >= 0.0);
  }
  CHECK_THROWS_AS(predict(model, prep, "NOPE"), ValidationError);
}

TEST_CASE("zeroed heads predict the anchor level minus one everywhere") {
  const auto panel = seeded_panel(2, 30, 31);
  const auto prep = series::prepare(panel);
  auto model = build_model(small_config(3), 5);
  for (auto& head : model.heads) {
    head.weight.fill(0.0);
    head.bias.fill(0.0);
  }
  const auto result = predict(model, prep, panel.regions[0]);
  const double anchor = prep.ema_level[0][prep.days - 1];
  for (std::size_t h = 0; h < 7; ++h) {
    CHECK(result.q50[h] == doctest::Approx(anchor - 1.0));
    CHECK(result.q05[h] == doctest::Approx(anchor - 1.0));
    CHECK(result.q90[h] == doctest::Approx(anchor - 1.0));
  }
}

TEST_CASE("holdout rows beyond the cutoff never influence predictions") {
  const auto full = seeded_panel(3, 47, 41);
  const Date cutoff = full.date_at(39);
  const auto truncated = series::truncate(full, cutoff);
  CHECK(truncated.days == 40);

  // A panel that never contained the holdout rows at all.
  CasePanel shorter = truncated;
  const auto prep_a = series::prepare(truncated);
  const auto prep_b = series::prepare(shorter);

  const NetConfig cfg = small_config(77);
  auto model_a = build_model(cfg, cfg.seed);
  train(model_a, prep_a);
  auto model_b = build_model(cfg, cfg.seed);
  train(model_b, prep_b);
  CHECK(model_a.flatten_parameters() == model_b.flatten_parameters());
  for (const auto& region : full.regions) {
    const auto fa = predict(model_a, prep_a, region);
    const auto fb = predict(model_b, prep_b, region);
    CHECK(fa.q50 == fb.q50);
  }
}

TEST_CASE("seasonal naive repeats the last observed week") {
  CasePanel p;
  p.start = *Date::parse("2020-03-02");  // a Monday
  p.days = 21;
  p.regions = {"A"};
  std::vector<double> counts(21);
  for (std::size_t t = 0; t < 21; ++t) counts[t] = 10.0 + static_cast<double>(t % 7);
  p.counts = {counts};

  const auto fc = baseline_seasonal_naive(p, "A", 7);
  for (int i = 0; i < 7; ++i) CHECK(fc[i] == counts[14 + i]);

  CasePanel constant = p;
  constant.counts[0].assign(21, 4.0);
  for (double v : baseline_seasonal_naive(constant, "A", 7)) CHECK(v == 4.0);

  CasePanel tiny;
  tiny.start = p.start;
  tiny.days = 5;
  tiny.regions = {"A"};
  tiny.counts = {{1, 2, 3, 4, 5}};
  CHECK_THROWS_AS(baseline_seasonal_naive(tiny, "A", 7), ValidationError);
}

TEST_CASE("ar baseline: constant series forecasts itself") {
  CasePanel p;
  p.start = *Date::parse("2020-03-03");
  p.days = 30;
  p.regions = {"A"};
  p.counts = {std::vector<double>(30, 12.0)};
  const auto fc = baseline_ar_ols(p, "A", 7, 1, 7);
  for (double v : fc) CHECK(v == doctest::Approx(12.0).epsilon(1e-9));
}

TEST_CASE("ar baseline: exact log-linear series continues linearly") {
  CasePanel p;
  p.start = *Date::parse("2020-03-03");
  p.days = 25;
  p.regions = {"A"};
  std::vector<double> counts(25);
  const double a = 0.4, b = 0.07;
  for (std::size_t t = 0; t < 25; ++t)
    counts[t] = std::exp(a + b * static_cast<double>(t)) - 1.0;
  p.counts = {counts};
  const auto fc = baseline_ar_ols(p, "A", 7, 1, 7);
  for (int i = 0; i < 7; ++i) {
    const double expected = std::exp(a + b * (24.0 + 1.0 + i)) - 1.0;
    CHECK(fc[i] == doctest::Approx(expected).epsilon(1e-7));
  }
}

TEST_CASE("ar baseline AR(1) coefficients match the hand normal equations") {
  CasePanel p;
  p.start = *Date::parse("2020-03-03");
  p.days = 6;
  p.regions = {"A"};
  p.counts = {{3.0, 5.0, 2.0, 7.0, 4.0, 6.0}};
  std::vector<double> coef;
  baseline_ar_ols(p, "A", /*p=*/1, /*d=*/0, /*horizon=*/1, nullptr, &coef);
  REQUIRE(coef.size() == 2);

  // Hand 2x2 normal equations on w_t = ln(x_t + 1):
  //   [n      sum(w_lag)    ] [c  ]   [sum(w)     ]
  //   [sum(w_lag) sum(w_lag^2)] [phi] = [sum(w*w_lag)]
  std::vector<double> w(6);
  for (int t = 0; t < 6; ++t) w[t] = std::log(p.counts[0][t] + 1.0);
  double n = 5, sl = 0, sll = 0, sy = 0, syl = 0;
  for (int t = 1; t < 6; ++t) {
    sl += w[t - 1];
    sll += w[t - 1] * w[t - 1];
    sy += w[t];
    syl += w[t] * w[t - 1];
  }
  const double det = n * sll - sl * sl;
  const double c_hand = (sll * sy - sl * syl) / det;
  const double phi_hand = (n * syl - sl * sy) / det;
  CHECK(coef[0] == doctest::Approx(c_hand).epsilon(1e-10));
  CHECK(coef[1] == doctest::Approx(phi_hand).epsilon(1e-10));
}

TEST_CASE("end-to-end training gradient matches finite differences") {
  const auto panel = seeded_panel(3, 35, 53);
  const auto prep = series::prepare(panel);
  auto windows = series::make_windows(prep);
  windows.resize(8);  // fixed batch

  const NetConfig cfg = small_config(13);
  auto model = build_model(cfg, cfg.seed);

  std::vector<Tensor> grads;
  batch_loss_and_grads(model, windows, &grads);
  std::vector<double> flat_grads;
  for (const auto& g : grads)
    flat_grads.insert(flat_grads.end(), g.data.begin(), g.data.end());
  const std::vector<double> point = model.flatten_parameters();
  REQUIRE(flat_grads.size() == point.size());

  auto value = [&](const std::vector<double>& params) {
    ForecastModel probe = model;
    probe.set_parameters(params);
    return batch_loss_and_grads(probe, windows);
  };

  Rng rng(99);
  std::vector<std::size_t> coords;
  for (int i = 0; i < 20; ++i) coords.push_back(rng.below(point.size()));
  const double err = nn::grad_check_coords(value, flat_grads, point, coords);
  CHECK(err < 1e-3);
}

TEST_CASE("composed forward gradient w.r.t. the window inputs") {
  const auto panel = seeded_panel(2, 30, 67);
  const auto prep = series::prepare(panel);
  auto windows = series::make_windows(prep);
  windows.resize(4);

  const NetConfig cfg = small_config(19);
  auto model = build_model(cfg, cfg.seed);

  Tensor input_grads;
  batch_loss_and_grads(model, windows, nullptr, &input_grads);
  REQUIRE(input_grads.numel() == 4 * 10);

  std::vector<double> point;
  for (const auto& w : windows) point.insert(point.end(), w.input.begin(), w.input.end());

  auto value = [&](const std::vector<double>& inputs) {
    auto probe = windows;
    std::size_t k = 0;
    for (auto& w : probe)
      for (auto& v : w.input) v = inputs[k++];
    return batch_loss_and_grads(model, probe);
  };

  std::vector<std::size_t> coords(point.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  const double err = nn::grad_check_coords(value, input_grads.data, point, coords);
  CHECK(err < 1e-4);
}
