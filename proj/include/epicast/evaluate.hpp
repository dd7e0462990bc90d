#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "epicast/dates.hpp"
#include "epicast/forecaster.hpp"
#include "epicast/series.hpp"

namespace epicast::eval {

// SMAPE with the factor-2 convention: 2|f - a| / (|a| + |f|), range [0, 2],
// and the 0/0 day defined as 0.
double smape_term(double actual, double forecast);
double smape(const std::vector<double>& actual, const std::vector<double>& forecast);

// A backtest contender: gets the training panel (rows <= cutoff only) and
// returns a horizon-length forecast per region.
struct ModelSpec {
  std::string name;
  std::function<std::map<std::string, std::vector<double>>(
      const series::CasePanel&)>
      forecast_all;
};

struct BacktestCell {
  std::string model;
  std::string region;
  int day = 0;  // 0-based offset into the holdout week
  Date date;
  double actual = 0.0;
  double forecast = 0.0;
  double smape = 0.0;
};

struct BacktestReport {
  Date cutoff;
  int horizon = 7;
  std::vector<std::string> largest_regions;
  std::vector<BacktestCell> cells;
  std::map<std::string, double> model_average;
  std::map<std::string, double> model_average_largest;
};

struct BacktestConfig {
  int horizon = 7;
  std::vector<std::string> largest_regions;  // subset for the second average
};

// Trains every model on the panel truncated at the cutoff and scores the
// following `horizon` days.
BacktestReport backtest(const series::CasePanel& panel, Date cutoff,
                        const std::vector<ModelSpec>& models,
                        const BacktestConfig& config);

std::string report_to_json(const BacktestReport& report);
std::string cells_to_csv(const BacktestReport& report);

// Standard contenders.
ModelSpec make_seasonal_naive_model(int horizon = 7);
ModelSpec make_ar_ols_model(int p = 7, int d = 1, int horizon = 7);
// Trains one net over all regions inside the backtest; `name` keys the report.
ModelSpec make_net_model(const std::string& name, forecast::NetConfig config);

}  // namespace epicast::eval
