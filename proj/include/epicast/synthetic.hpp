#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "epicast/series.hpp"
#include "epicast/tensor.hpp"

namespace epicast::synth {

struct SynthParams {
  int n_regions = 33;
  int days = 180;
  std::string start_date = "2020-03-03";
  std::uint64_t seed = 0;
};

// Multiplicative day-of-week profile planted into every case series,
// Monday .. Sunday. Friday peaks and Sunday dips, so day embeddings have a
// strong signal to pick up.
const std::array<double, 7>& weekly_profile();

// Number of latent region groups planted into the static variables.
inline constexpr int kLatentGroups = 5;

struct SynthData {
  series::CasePanel panel;
  Tensor static_vars;       // [N x 25], columns in static_variable_names() order
  std::vector<int> group;   // planted group of each region, aligned with panel.regions
};

// Case counts follow a logistic epidemic curve times the weekly profile times
// lognormal noise; static variables get five well-separated group centers per
// column. Same seed, same data, bitwise.
SynthData generate(const SynthParams& params);

void write_cases_csv(const series::CasePanel& panel, const std::string& path);
void write_static_csv(const std::vector<std::string>& regions,
                      const Tensor& static_vars, const std::string& path);

}  // namespace epicast::synth
