#include "epicast/series.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "epicast/csv.hpp"
#include "epicast/errors.hpp"

namespace epicast::series {

std::optional<std::size_t> CasePanel::region_index(const std::string& id) const {
  const auto it = std::find(regions.begin(), regions.end(), id);
  if (it == regions.end()) return std::nullopt;
  return static_cast<std::size_t>(it - regions.begin());
}

CasePanel load_cases(const std::string& path, LoadSummary* summary) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw ValidationError(path + ": empty file");
  const auto& header = rows.front().fields;
  if (header != std::vector<std::string>{"date", "region_id", "new_cases"})
    throw ValidationError(path + " row " + std::to_string(rows.front().line) +
                          ": expected header date,region_id,new_cases");

  struct Entry {
    double count;
    std::size_t line;
  };
  std::map<std::pair<std::string, std::int64_t>, Entry> cells;
  std::int64_t min_day = 0, max_day = 0;
  bool first = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = path + " row " + std::to_string(row.line);
    if (row.fields.size() != 3)
      throw ValidationError(where + ": expected 3 fields, got " +
                            std::to_string(row.fields.size()));
    const auto date = Date::parse(row.fields[0]);
    if (!date) throw ValidationError(where + ": unparseable date '" + row.fields[0] + "'");
    const std::string& region = row.fields[1];
    if (region.empty()) throw ValidationError(where + ": empty region_id");
    const auto count = csv::parse_int(row.fields[2]);
    if (!count)
      throw ValidationError(where + ": unparseable new_cases '" + row.fields[2] + "'");
    if (*count < 0)
      throw ValidationError(where + ": negative new_cases (" + row.fields[2] +
                            ") for region " + region);
    const auto key = std::make_pair(region, date->days);
    const auto [it, inserted] =
        cells.insert({key, Entry{static_cast<double>(*count), row.line}});
    if (!inserted)
      throw ValidationError(where + ": duplicate (region, date) = (" + region + ", " +
                            row.fields[0] + "), first seen at row " +
                            std::to_string(it->second.line));
    if (first || date->days < min_day) min_day = date->days;
    if (first || date->days > max_day) max_day = date->days;
    first = false;
  }
  if (cells.empty()) throw ValidationError(path + ": no data rows");

  CasePanel panel;
  panel.start = Date{min_day};
  panel.days = static_cast<std::size_t>(max_day - min_day + 1);
  std::set<std::string> region_set;
  for (const auto& [key, entry] : cells) region_set.insert(key.first);
  panel.regions.assign(region_set.begin(), region_set.end());

  std::size_t gaps = 0;
  panel.counts.assign(panel.regions.size(), std::vector<double>(panel.days, 0.0));
  for (std::size_t r = 0; r < panel.regions.size(); ++r) {
    std::size_t region_gaps = 0;
    for (std::size_t t = 0; t < panel.days; ++t) {
      const auto it = cells.find({panel.regions[r], min_day + static_cast<std::int64_t>(t)});
      if (it == cells.end()) {
        ++region_gaps;
      } else {
        panel.counts[r][t] = it->second.count;
      }
    }
    if (region_gaps > 0 && summary)
      summary->warnings.push_back("region " + panel.regions[r] + ": filled " +
                                  std::to_string(region_gaps) + " missing day(s) with 0");
    gaps += region_gaps;
  }
  if (summary) summary->filled_gaps = gaps;
  return panel;
}

CasePanel truncate(const CasePanel& panel, Date cutoff) {
  if (cutoff < panel.start)
    throw ValidationError("truncate: cutoff " + cutoff.to_iso() +
                          " precedes panel start " + panel.start.to_iso());
  CasePanel out;
  out.regions = panel.regions;
  out.start = panel.start;
  out.days = std::min<std::size_t>(
      panel.days, static_cast<std::size_t>(cutoff - panel.start + 1));
  out.counts.reserve(panel.counts.size());
  for (const auto& row : panel.counts)
    out.counts.emplace_back(row.begin(), row.begin() + out.days);
  return out;
}

std::vector<double> ema(const std::vector<double>& series, double alpha) {
  if (series.empty()) throw ValidationError("ema: series must have at least 1 value");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ValidationError("ema: alpha must lie in (0, 1], got " + std::to_string(alpha));
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (std::size_t t = 1; t < series.size(); ++t)
    out[t] = alpha * series[t] + (1.0 - alpha) * out[t - 1];
  return out;
}

PreparedPanel prepare(const CasePanel& panel, double alpha) {
  if (panel.days == 0) throw ValidationError("prepare: empty panel");
  PreparedPanel prep;
  prep.regions = panel.regions;
  prep.start = panel.start;
  prep.days = panel.days;
  prep.raw_counts = panel.counts;
  prep.log_counts.reserve(panel.counts.size());
  prep.ema_level.reserve(panel.counts.size());
  for (const auto& counts : panel.counts) {
    std::vector<double> logs(counts.size());
    std::vector<double> shifted(counts.size());
    for (std::size_t t = 0; t < counts.size(); ++t) {
      logs[t] = std::log(counts[t] + 1.0);
      shifted[t] = counts[t] + 1.0;
    }
    prep.log_counts.push_back(std::move(logs));
    prep.ema_level.push_back(ema(shifted, alpha));
  }
  prep.dow.resize(panel.days);
  for (std::size_t t = 0; t < panel.days; ++t)
    prep.dow[t] = panel.date_at(t).weekday_mon0();
  return prep;
}

std::vector<TrainingWindow> make_windows(const PreparedPanel& prep, int input_len,
                                         int horizon) {
  if (input_len < 1 || horizon < 1)
    throw ValidationError("make_windows: input_len and horizon must be >= 1");
  const std::size_t need = static_cast<std::size_t>(input_len + horizon);
  if (prep.days < need)
    throw ValidationError("make_windows: panel has " + std::to_string(prep.days) +
                          " days but needs at least " + std::to_string(need) +
                          " (input_len " + std::to_string(input_len) + " + horizon " +
                          std::to_string(horizon) + ")");
  std::vector<TrainingWindow> windows;
  const std::size_t per_region = prep.days - need + 1;
  windows.reserve(per_region * prep.regions.size());
  for (std::size_t r = 0; r < prep.regions.size(); ++r) {
    for (std::size_t s = 0; s < per_region; ++s) {
      TrainingWindow w;
      w.region = r;
      w.start = s;
      const std::size_t anchor_t = s + static_cast<std::size_t>(input_len) - 1;
      w.anchor_level = prep.ema_level[r][anchor_t];
      const double log_anchor = std::log(w.anchor_level);
      w.input.resize(static_cast<std::size_t>(input_len));
      for (int i = 0; i < input_len; ++i)
        w.input[static_cast<std::size_t>(i)] =
            prep.log_counts[r][s + static_cast<std::size_t>(i)] - log_anchor;
      w.target.resize(static_cast<std::size_t>(horizon));
      w.dow_future.resize(static_cast<std::size_t>(horizon));
      for (int h = 0; h < horizon; ++h) {
        const std::size_t t = anchor_t + 1 + static_cast<std::size_t>(h);
        w.target[static_cast<std::size_t>(h)] = prep.raw_counts[r][t];
        w.dow_future[static_cast<std::size_t>(h)] = prep.dow[t];
      }
      windows.push_back(std::move(w));
    }
  }
  return windows;
}

}  // namespace epicast::series
