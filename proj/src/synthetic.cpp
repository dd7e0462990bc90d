#include "epicast/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "epicast/csv.hpp"
#include "epicast/errors.hpp"
#include "epicast/reduce.hpp"
#include "epicast/rng.hpp"

namespace epicast::synth {

const std::array<double, 7>& weekly_profile() {
  static const std::array<double, 7> profile{1.05, 1.10, 1.10, 1.05,
                                             1.25, 0.75, 0.55};
  return profile;
}

SynthData generate(const SynthParams& params) {
  if (params.n_regions < 1 || params.days < 1)
    throw ValidationError("synth: n_regions and days must be >= 1");
  const auto start = Date::parse(params.start_date);
  if (!start)
    throw ValidationError("synth: unparseable start date '" + params.start_date + "'");

  SynthData data;
  data.panel.start = *start;
  data.panel.days = static_cast<std::size_t>(params.days);

  const auto n = static_cast<std::size_t>(params.n_regions);
  std::size_t width = std::to_string(params.n_regions).size();
  width = std::max<std::size_t>(width, 2);
  for (std::size_t r = 0; r < n; ++r) {
    std::string digits = std::to_string(r + 1);
    data.panel.regions.push_back(
        "R" + std::string(width - std::min(width, digits.size()), '0') + digits);
    data.group.push_back(static_cast<int>(r % kLatentGroups));
  }

  // Case curves. Group scale separates by ~4x steps so forecast means carry
  // the group structure too.
  Rng rng(mix_seed(params.seed, {fnv1a64("synth-cases")}));
  static const double group_scale[kLatentGroups] = {2.0e3, 8.0e3, 3.2e4, 1.3e5,
                                                    5.0e5};
  const auto& profile = weekly_profile();
  for (std::size_t r = 0; r < n; ++r) {
    const double scale =
        group_scale[data.group[r]] * std::exp(rng.uniform(-0.3, 0.3));
    const double rate = rng.uniform(0.06, 0.12);
    const double mid = rng.uniform(0.35, 0.65) * static_cast<double>(params.days);
    std::vector<double> counts(data.panel.days);
    for (std::size_t t = 0; t < data.panel.days; ++t) {
      const double z = std::exp(-rate * (static_cast<double>(t) - mid));
      const double curve = scale * rate * z / ((1.0 + z) * (1.0 + z));
      const double noise = std::exp(0.08 * rng.normal());
      const int dow = data.panel.date_at(t).weekday_mon0();
      const double value = std::round(curve * profile[static_cast<std::size_t>(dow)] * noise);
      counts[t] = value > 0.0 ? value : 0.0;
    }
    data.panel.counts.push_back(std::move(counts));
  }

  // Static variables: per column, the five group centers sit ~13 sigma apart
  // under a random group permutation, so every column separates the groups.
  Rng srng(mix_seed(params.seed, {fnv1a64("synth-static")}));
  const std::size_t n_vars = reduce::static_variable_names().size();
  data.static_vars = Tensor({n, n_vars});
  for (std::size_t c = 0; c < n_vars; ++c) {
    const double scale = std::exp(srng.uniform(0.0, 3.0));
    const double offset = srng.uniform(0.0, 50.0) * scale;
    std::array<int, kLatentGroups> perm{0, 1, 2, 3, 4};
    for (std::size_t i = kLatentGroups; i > 1; --i) {
      const auto j = static_cast<std::size_t>(srng.below(i));
      std::swap(perm[i - 1], perm[j]);
    }
    std::array<double, kLatentGroups> center;
    for (int g = 0; g < kLatentGroups; ++g)
      center[static_cast<std::size_t>(g)] =
          offset + scale * (4.0 * perm[static_cast<std::size_t>(g)] +
                            srng.uniform(-0.4, 0.4));
    for (std::size_t r = 0; r < n; ++r)
      data.static_vars.at(r, c) =
          center[static_cast<std::size_t>(data.group[r])] +
          0.3 * scale * srng.normal();
  }
  return data;
}

void write_cases_csv(const series::CasePanel& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << "date,region_id,new_cases\n";
  for (std::size_t r = 0; r < panel.regions.size(); ++r)
    for (std::size_t t = 0; t < panel.days; ++t)
      out << panel.date_at(t).to_iso() << ',' << panel.regions[r] << ','
          << static_cast<long long>(panel.counts[r][t]) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_static_csv(const std::vector<std::string>& regions,
                      const Tensor& static_vars, const std::string& path) {
  if (static_vars.dim(0) != regions.size())
    throw ValidationError("write_static_csv: row count mismatch");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << "region_id";
  for (const auto& name : reduce::static_variable_names()) out << ',' << name;
  out << '\n';
  for (std::size_t r = 0; r < regions.size(); ++r) {
    out << regions[r];
    for (std::size_t c = 0; c < static_vars.dim(1); ++c)
      out << ',' << csv::format_double(static_vars.at(r, c));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace epicast::synth
