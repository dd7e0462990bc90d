#include "epicast/evaluate.hpp"

#include <cmath>

#include "json.hpp"

#include "epicast/csv.hpp"
#include "epicast/errors.hpp"

namespace epicast::eval {

double smape_term(double actual, double forecast) {
  const double denom = std::abs(actual) + std::abs(forecast);
  if (denom == 0.0) return 0.0;
  return 2.0 * std::abs(forecast - actual) / denom;
}

double smape(const std::vector<double>& actual, const std::vector<double>& forecast) {
  if (actual.size() != forecast.size())
    throw ValidationError("smape: " + std::to_string(actual.size()) +
                          " actuals vs " + std::to_string(forecast.size()) +
                          " forecasts");
  if (actual.empty()) throw ValidationError("smape: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i)
    total += smape_term(actual[i], forecast[i]);
  return total / static_cast<double>(actual.size());
}

BacktestReport backtest(const series::CasePanel& panel, Date cutoff,
                        const std::vector<ModelSpec>& models,
                        const BacktestConfig& config) {
  if (models.empty()) throw ValidationError("backtest: no models given");
  if (config.horizon < 1) throw ValidationError("backtest: horizon must be >= 1");
  const std::int64_t holdout = panel.last_date() - cutoff;
  if (holdout < config.horizon)
    throw ValidationError("backtest: panel ends " + std::to_string(holdout) +
                          " day(s) after the cutoff, needs " +
                          std::to_string(config.horizon));
  for (const auto& region : config.largest_regions)
    if (!panel.region_index(region))
      throw ValidationError("backtest: largest-regions entry '" + region +
                            "' is not in the panel");

  const series::CasePanel train_panel = series::truncate(panel, cutoff);
  const auto cutoff_idx = static_cast<std::size_t>(cutoff - panel.start);

  BacktestReport report;
  report.cutoff = cutoff;
  report.horizon = config.horizon;
  report.largest_regions = config.largest_regions;

  for (const auto& model : models) {
    const auto forecasts = model.forecast_all(train_panel);
    double sum = 0.0, sum_largest = 0.0;
    std::size_t count = 0, count_largest = 0;
    for (std::size_t r = 0; r < panel.regions.size(); ++r) {
      const std::string& region = panel.regions[r];
      const auto it = forecasts.find(region);
      if (it == forecasts.end())
        throw ValidationError("backtest: model '" + model.name +
                              "' returned no forecast for region " + region);
      if (it->second.size() != static_cast<std::size_t>(config.horizon))
        throw ValidationError("backtest: model '" + model.name + "' returned " +
                              std::to_string(it->second.size()) + " values for region " +
                              region + ", expected " + std::to_string(config.horizon));
      const bool is_largest =
          std::find(config.largest_regions.begin(), config.largest_regions.end(),
                    region) != config.largest_regions.end();
      for (int h = 0; h < config.horizon; ++h) {
        BacktestCell cell;
        cell.model = model.name;
        cell.region = region;
        cell.day = h;
        cell.date = cutoff + (h + 1);
        cell.actual = panel.counts[r][cutoff_idx + 1 + static_cast<std::size_t>(h)];
        cell.forecast = it->second[static_cast<std::size_t>(h)];
        cell.smape = smape_term(cell.actual, cell.forecast);
        sum += cell.smape;
        ++count;
        if (is_largest) {
          sum_largest += cell.smape;
          ++count_largest;
        }
        report.cells.push_back(std::move(cell));
      }
    }
    report.model_average[model.name] = sum / static_cast<double>(count);
    if (count_largest > 0)
      report.model_average_largest[model.name] =
          sum_largest / static_cast<double>(count_largest);
  }
  return report;
}

std::string report_to_json(const BacktestReport& report) {
  nlohmann::json j;
  j["smape_convention"] = "2|f-a|/(|a|+|f|), range [0,2], 0/0 day counts as 0";
  j["cutoff"] = report.cutoff.to_iso();
  j["horizon"] = report.horizon;
  j["largest_regions"] = report.largest_regions;
  j["model_average"] = report.model_average;
  j["model_average_largest_regions"] = report.model_average_largest;
  return j.dump(2) + "\n";
}

std::string cells_to_csv(const BacktestReport& report) {
  std::string out = "model,region_id,day,date,actual,forecast,smape\n";
  for (const auto& cell : report.cells) {
    out += cell.model + "," + cell.region + "," + std::to_string(cell.day) + "," +
           cell.date.to_iso() + "," + csv::format_double(cell.actual) + "," +
           csv::format_double(cell.forecast) + "," + csv::format_double(cell.smape) +
           "\n";
  }
  return out;
}

ModelSpec make_seasonal_naive_model(int horizon) {
  ModelSpec spec;
  spec.name = "seasonal_naive";
  spec.forecast_all = [horizon](const series::CasePanel& panel) {
    std::map<std::string, std::vector<double>> out;
    for (const auto& region : panel.regions)
      out[region] = forecast::baseline_seasonal_naive(panel, region, horizon);
    return out;
  };
  return spec;
}

ModelSpec make_ar_ols_model(int p, int d, int horizon) {
  ModelSpec spec;
  spec.name = "ar_ols";
  spec.forecast_all = [p, d, horizon](const series::CasePanel& panel) {
    std::map<std::string, std::vector<double>> out;
    for (const auto& region : panel.regions)
      out[region] = forecast::baseline_ar_ols(panel, region, p, d, horizon);
    return out;
  };
  return spec;
}

ModelSpec make_net_model(const std::string& name, forecast::NetConfig config) {
  ModelSpec spec;
  spec.name = name;
  spec.forecast_all = [config](const series::CasePanel& panel) {
    const auto prep = series::prepare(panel);
    auto model = forecast::build_model(config, config.seed);
    forecast::train(model, prep);
    std::map<std::string, std::vector<double>> out;
    for (const auto& region : panel.regions)
      out[region] = forecast::predict(model, prep, region).q50;
    return out;
  };
  return spec;
}

}  // namespace epicast::eval
