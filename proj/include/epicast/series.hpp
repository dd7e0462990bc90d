#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "epicast/dates.hpp"

namespace epicast::series {

// Calendar-aligned daily new-case counts. Dates are implicit: a contiguous
// run of `days` days starting at `start`. counts[r][t] >= 0 for every region.
struct CasePanel {
  std::vector<std::string> regions;
  Date start;
  std::size_t days = 0;
  std::vector<std::vector<double>> counts;  // [N regions][days]

  Date date_at(std::size_t t) const { return start + static_cast<std::int64_t>(t); }
  Date last_date() const { return start + static_cast<std::int64_t>(days) - 1; }
  std::optional<std::size_t> region_index(const std::string& id) const;
};

struct LoadSummary {
  std::size_t filled_gaps = 0;  // missing (region, date) pairs zero-filled
  std::vector<std::string> warnings;
};

// Reads `date,region_id,new_cases` rows (header required). Missing
// (region, date) pairs inside the global date range are filled with zeros and
// reported in the summary; malformed rows raise errors naming the row.
CasePanel load_cases(const std::string& path, LoadSummary* summary = nullptr);

// Keeps only dates <= cutoff. Errors if the cutoff precedes the panel start.
CasePanel truncate(const CasePanel& panel, Date cutoff);

// Standard exponential moving average, v_1 = s_1, v_t = a*s_t + (1-a)*v_{t-1}.
std::vector<double> ema(const std::vector<double>& series, double alpha);

// Log-transformed series plus the smoothing level used for rescaling.
// ema_level is computed on the shifted counts s_t = x_t + 1 so the level is
// bounded below by 1 even on all-zero histories.
struct PreparedPanel {
  std::vector<std::string> regions;
  Date start;
  std::size_t days = 0;
  std::vector<std::vector<double>> raw_counts;  // copied from the panel
  std::vector<std::vector<double>> log_counts;  // ln(x + 1)
  std::vector<std::vector<double>> ema_level;   // ema(x + 1, alpha)
  std::vector<int> dow;                         // Monday=0 .. Sunday=6

  Date date_at(std::size_t t) const { return start + static_cast<std::int64_t>(t); }
};

PreparedPanel prepare(const CasePanel& panel, double alpha = 0.1);

// One training sample: 10 input days normalized by the window's own anchor
// level, the next 7 raw counts as targets.
struct TrainingWindow {
  std::size_t region = 0;          // index into PreparedPanel::regions
  std::size_t start = 0;           // index of the first input day
  std::vector<double> input;       // z_t = log_counts - ln(anchor), length input_len
  std::vector<double> target;      // raw counts, length horizon
  std::vector<int> dow_future;     // day-of-week of each target day
  double anchor_level = 1.0;       // EMA level at the last input day
};

std::vector<TrainingWindow> make_windows(const PreparedPanel& prep,
                                         int input_len = 10, int horizon = 7);

}  // namespace epicast::series
