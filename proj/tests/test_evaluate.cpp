#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "epicast/errors.hpp"
#include "epicast/evaluate.hpp"
#include "epicast/rng.hpp"

using namespace epicast;
using namespace epicast::eval;
using epicast::series::CasePanel;

namespace {

CasePanel weekly_panel(std::size_t regions, std::size_t days) {
  CasePanel p;
  p.start = *Date::parse("2020-03-02");  // Monday
  p.days = days;
  for (std::size_t r = 0; r < regions; ++r) {
    p.regions.push_back("R" + std::to_string(r));
    std::vector<double> counts(days);
    for (std::size_t t = 0; t < days; ++t)
      counts[t] = static_cast<double>(10 * (r + 1) + (t % 7));
    p.counts.push_back(std::move(counts));
  }
  return p;
}

}  // namespace

TEST_CASE("smape hand values") {
  CHECK(smape({5.0, 7.0}, {5.0, 7.0}) == 0.0);
  CHECK(smape({1.0}, {3.0}) == doctest::Approx(1.0));
  CHECK(smape({0.0}, {0.0}) == 0.0);
  CHECK_THROWS_AS(smape({1.0}, {1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(smape({}, {}), ValidationError);
}

TEST_CASE("smape symmetry, scale invariance, and bounds") {
  Rng rng(12);
  for (int rep = 0; rep < 200; ++rep) {
    const double y = rng.uniform(0.0, 100.0);
    const double f = rng.uniform(0.0, 100.0);
    const double c = rng.uniform(0.1, 50.0);
    CHECK(smape_term(y, f) == doctest::Approx(smape_term(f, y)).epsilon(1e-12));
    CHECK(smape_term(c * y, c * f) == doctest::Approx(smape_term(y, f)).epsilon(1e-9));
    CHECK(smape_term(y, f) >= 0.0);
    CHECK(smape_term(y, f) <= 2.0);
    CHECK(smape_term(y, y) == 0.0);
  }
  CHECK(smape_term(0.0, 0.0) == 0.0);
  CHECK(smape_term(0.0, 5.0) == doctest::Approx(2.0));  // upper bound is tight
}

TEST_CASE("backtest scores a clairvoyant model at exactly zero") {
  const auto panel = weekly_panel(3, 40);
  const Date cutoff = panel.date_at(32);

  // oracle defined via the full panel, not the training slice it receives
  ModelSpec oracle;
  oracle.name = "oracle";
  oracle.forecast_all = [&panel, cutoff](const CasePanel& train) {
    CHECK(train.last_date() == cutoff);  // trained strictly on data <= cutoff
    CHECK(train.days == 33);
    std::map<std::string, std::vector<double>> out;
    const auto idx = static_cast<std::size_t>(cutoff - panel.start);
    for (std::size_t r = 0; r < panel.regions.size(); ++r)
      out[panel.regions[r]] = {panel.counts[r].begin() + idx + 1,
                               panel.counts[r].begin() + idx + 8};
    return out;
  };

  BacktestConfig config;
  config.largest_regions = {"R0"};
  const auto report = backtest(panel, cutoff, {oracle}, config);
  CHECK(report.model_average.at("oracle") == 0.0);
  CHECK(report.model_average_largest.at("oracle") == 0.0);
  CHECK(report.cells.size() == 3 * 7);
}

TEST_CASE("seasonal naive nails a 7-periodic panel") {
  const auto panel = weekly_panel(2, 35);
  const Date cutoff = panel.date_at(27);
  const auto report =
      backtest(panel, cutoff, {make_seasonal_naive_model()}, BacktestConfig{});
  CHECK(report.model_average.at("seasonal_naive") == 0.0);
}

TEST_CASE("report averages equal a hand recomputation over the cells") {
  auto panel = weekly_panel(3, 40);
  // make it non-trivial so averages are strictly positive
  Rng rng(9);
  for (auto& row : panel.counts)
    for (auto& v : row) v = std::floor(v * rng.uniform(0.5, 1.5));
  const Date cutoff = panel.date_at(32);
  BacktestConfig config;
  config.largest_regions = {"R1", "R2"};
  const auto report = backtest(
      panel, cutoff, {make_seasonal_naive_model(), make_ar_ols_model()}, config);

  for (const auto& name : {"seasonal_naive", "ar_ols"}) {
    double sum = 0.0, sum_largest = 0.0;
    std::size_t n = 0, n_largest = 0;
    for (const auto& cell : report.cells) {
      if (cell.model != name) continue;
      sum += cell.smape;
      ++n;
      if (cell.region != "R0") {
        sum_largest += cell.smape;
        ++n_largest;
      }
    }
    CHECK(n == 21);
    CHECK(n_largest == 14);
    CHECK(report.model_average.at(name) ==
          doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
    CHECK(report.model_average_largest.at(name) ==
          doctest::Approx(sum_largest / static_cast<double>(n_largest)).epsilon(1e-12));
  }
}

TEST_CASE("backtest validates its inputs") {
  const auto panel = weekly_panel(2, 20);
  CHECK_THROWS_AS(
      backtest(panel, panel.date_at(16), {make_seasonal_naive_model()}, {}),
      ValidationError);  // only 3 holdout days
  CHECK_THROWS_AS(backtest(panel, panel.date_at(10), {}, {}), ValidationError);
  BacktestConfig config;
  config.largest_regions = {"missing"};
  CHECK_THROWS_AS(
      backtest(panel, panel.date_at(10), {make_seasonal_naive_model()}, config),
      ValidationError);
}

TEST_CASE("report serializers carry every cell and the convention note") {
  const auto panel = weekly_panel(2, 30);
  const auto report = backtest(panel, panel.date_at(22),
                               {make_seasonal_naive_model()}, BacktestConfig{});
  const std::string json = report_to_json(report);
  CHECK(json.find("smape_convention") != std::string::npos);
  CHECK(json.find("seasonal_naive") != std::string::npos);

  const std::string csv = cells_to_csv(report);
  std::size_t lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + report.cells.size());
}
