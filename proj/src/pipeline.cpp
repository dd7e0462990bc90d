#include "epicast/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

#include "epicast/cluster.hpp"
#include "epicast/csv.hpp"
#include "epicast/errors.hpp"
#include "epicast/evaluate.hpp"
#include "epicast/rng.hpp"
#include "epicast/series.hpp"

namespace epicast::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  throw ValidationError("config: field '" + field + "' " + what);
}

// Strict object walker: every recognized key is consumed, anything left over
// is reported by name.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string prefix)
      : j_(j), prefix_(std::move(prefix)) {
    if (!j.is_object())
      bad_field(prefix_.empty() ? "<root>" : prefix_, "must be an object");
  }

  const json* take(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void u64(const std::string& key, std::uint64_t& out, bool* present = nullptr) {
    const json* v = take(key);
    if (present) *present = v != nullptr;
    if (!v) return;
    if (!v->is_number_integer() && !v->is_number_unsigned())
      bad_field(path(key), "must be a non-negative integer");
    if (v->is_number_integer() && v->get<std::int64_t>() < 0)
      bad_field(path(key), "must be a non-negative integer");
    out = v->get<std::uint64_t>();
  }

  void integer(const std::string& key, int& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number_integer()) bad_field(path(key), "must be an integer");
    out = v->get<int>();
  }

  void real(const std::string& key, double& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number()) bad_field(path(key), "must be a number");
    out = v->get<double>();
  }

  void boolean(const std::string& key, bool& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_boolean()) bad_field(path(key), "must be a boolean");
    out = v->get<bool>();
  }

  void str(const std::string& key, std::string& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_string()) bad_field(path(key), "must be a string");
    out = v->get<std::string>();
  }

  void int_list(const std::string& key, std::vector<int>& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_array()) bad_field(path(key), "must be an array of integers");
    std::vector<int> parsed;
    for (const auto& item : *v) {
      if (!item.is_number_integer()) bad_field(path(key), "must be an array of integers");
      parsed.push_back(item.get<int>());
    }
    out = std::move(parsed);
  }

  void real_list(const std::string& key, std::vector<double>& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_array()) bad_field(path(key), "must be an array of numbers");
    std::vector<double> parsed;
    for (const auto& item : *v) {
      if (!item.is_number()) bad_field(path(key), "must be an array of numbers");
      parsed.push_back(item.get<double>());
    }
    out = std::move(parsed);
  }

  void str_list(const std::string& key, std::vector<std::string>& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_array()) bad_field(path(key), "must be an array of strings");
    std::vector<std::string> parsed;
    for (const auto& item : *v) {
      if (!item.is_string()) bad_field(path(key), "must be an array of strings");
      parsed.push_back(item.get<std::string>());
    }
    out = std::move(parsed);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) bad_field(path(key), "is not a recognized field");
  }

  std::string path(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

const std::set<std::string>& known_reductions() {
  static const std::set<std::string> tags{"none", "pca", "ga", "ae_stacked",
                                          "ae_tied"};
  return tags;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void require_path(const std::string& value, const std::string& field) {
  if (value.empty())
    throw ValidationError("config: field '" + field + "' is required for this stage");
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }

  PipelineConfig cfg;
  ObjectReader root(j, "");
  bool seed_present = false;
  root.u64("seed", cfg.seed, &seed_present);
  if (!seed_present)
    throw ValidationError("config: field 'seed' is required (runs never draw entropy)");

  if (const json* paths = root.take("paths")) {
    ObjectReader r(*paths, "paths");
    r.str("cases_csv", cfg.cases_csv);
    r.str("static_csv", cfg.static_csv);
    r.str("out_dir", cfg.out_dir);
    r.finish();
  }
  if (const json* net = root.take("net")) {
    ObjectReader r(*net, "net");
    r.integer("filters", cfg.net.filters);
    r.integer("kernel", cfg.net.kernel);
    r.int_list("dilations", cfg.net.dilations);
    r.integer("input_len", cfg.net.input_len);
    r.integer("horizon", cfg.net.horizon);
    r.real_list("quantiles", cfg.net.quantiles);
    r.integer("day_embed_dim", cfg.net.day_embed_dim);
    r.int_list("decoder_dims", cfg.net.decoder_dims);
    r.integer("epochs", cfg.net.epochs);
    r.real("lr", cfg.net.lr);
    r.integer("batch_size", cfg.net.batch_size);
    r.boolean("use_day_embeddings", cfg.net.use_day_embeddings);
    r.boolean("loss_in_log_space", cfg.net.loss_in_log_space);
    r.finish();
  }
  if (const json* ga = root.take("ga")) {
    ObjectReader r(*ga, "ga");
    r.integer("population", cfg.ga.population);
    r.integer("generations", cfg.ga.generations);
    r.integer("tournament", cfg.ga.tournament);
    r.real("crossover_rate", cfg.ga.crossover_rate);
    r.real("mutation_rate", cfg.ga.mutation_rate);
    r.integer("elitism", cfg.ga.elitism);
    r.integer("kmeans_n_init", cfg.ga.kmeans_n_init);
    r.finish();
  }
  if (const json* ae = root.take("ae")) {
    ObjectReader r(*ae, "ae");
    r.int_list("hidden", cfg.ae.hidden);
    r.integer("epochs", cfg.ae.epochs);
    r.real("lr", cfg.ae.lr);
    r.finish();
  }
  root.real("pca_variance_threshold", cfg.pca_variance_threshold);
  if (const json* kr = root.take("k_range")) {
    if (!kr->is_array() || kr->size() != 2 || !(*kr)[0].is_number_integer() ||
        !(*kr)[1].is_number_integer())
      bad_field("k_range", "must be [k_min, k_max]");
    cfg.k_min = (*kr)[0].get<int>();
    cfg.k_max = (*kr)[1].get<int>();
  }
  root.str_list("reductions", cfg.reductions);
  if (cfg.reductions.empty()) bad_field("reductions", "must not be empty");
  {
    std::set<std::string> seen;
    for (const auto& tag : cfg.reductions) {
      if (!known_reductions().count(tag))
        bad_field("reductions", "contains unknown tag '" + tag + "'");
      if (!seen.insert(tag).second)
        bad_field("reductions", "lists '" + tag + "' twice");
    }
  }
  if (const json* bt = root.take("backtest")) {
    ObjectReader r(*bt, "backtest");
    r.str_list("models", cfg.backtest_models);
    r.integer("horizon", cfg.backtest_horizon);
    r.str_list("largest_regions", cfg.largest_regions);
    r.finish();
  }
  if (const json* sy = root.take("synth")) {
    ObjectReader r(*sy, "synth");
    r.integer("n_regions", cfg.synth.n_regions);
    r.integer("days", cfg.synth.days);
    r.str("start_date", cfg.synth.start_date);
    r.finish();
  }
  root.finish();

  cfg.net.seed = mix_seed(cfg.seed, {fnv1a64("net")});
  cfg.synth.seed = cfg.seed;
  return cfg;
}

namespace {

// Canonical form for hashing. Paths are deliberately left out so the same
// experiment hashes identically wherever it runs.
json config_to_json(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["net"] = {{"filters", c.net.filters},
              {"kernel", c.net.kernel},
              {"dilations", c.net.dilations},
              {"input_len", c.net.input_len},
              {"horizon", c.net.horizon},
              {"quantiles", c.net.quantiles},
              {"day_embed_dim", c.net.day_embed_dim},
              {"decoder_dims", c.net.decoder_dims},
              {"epochs", c.net.epochs},
              {"lr", c.net.lr},
              {"batch_size", c.net.batch_size},
              {"use_day_embeddings", c.net.use_day_embeddings},
              {"loss_in_log_space", c.net.loss_in_log_space}};
  j["ga"] = {{"population", c.ga.population},
             {"generations", c.ga.generations},
             {"tournament", c.ga.tournament},
             {"crossover_rate", c.ga.crossover_rate},
             {"mutation_rate", c.ga.mutation_rate},
             {"elitism", c.ga.elitism},
             {"kmeans_n_init", c.ga.kmeans_n_init}};
  j["ae"] = {{"hidden", c.ae.hidden}, {"epochs", c.ae.epochs}, {"lr", c.ae.lr}};
  j["pca_variance_threshold"] = c.pca_variance_threshold;
  j["k_range"] = {c.k_min, c.k_max};
  j["reductions"] = c.reductions;
  j["backtest"] = {{"models", c.backtest_models},
                   {"horizon", c.backtest_horizon},
                   {"largest_regions", c.largest_regions}};
  j["synth"] = {{"n_regions", c.synth.n_regions},
                {"days", c.synth.days},
                {"start_date", c.synth.start_date}};
  return j;
}

std::vector<forecast::ForecastResult> read_forecasts_csv(const std::string& path,
                                                         int horizon) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw ValidationError(path + ": empty file");
  if (rows.front().fields !=
      std::vector<std::string>{"region_id", "date", "q05", "q50", "q90"})
    throw ValidationError(path + ": expected header region_id,date,q05,q50,q90");

  std::vector<forecast::ForecastResult> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = path + " row " + std::to_string(row.line);
    if (row.fields.size() != 5)
      throw ValidationError(where + ": expected 5 fields");
    const auto date = Date::parse(row.fields[1]);
    if (!date) throw ValidationError(where + ": unparseable date '" + row.fields[1] + "'");
    const auto q05 = csv::parse_double(row.fields[2]);
    const auto q50 = csv::parse_double(row.fields[3]);
    const auto q90 = csv::parse_double(row.fields[4]);
    if (!q05 || !q50 || !q90)
      throw ValidationError(where + ": unparseable quantile value");
    if (out.empty() || out.back().region != row.fields[0]) {
      out.emplace_back();
      out.back().region = row.fields[0];
    }
    auto& fc = out.back();
    if (!fc.dates.empty() && *date != fc.dates.back() + 1)
      throw ValidationError(where + ": forecast dates must be consecutive");
    fc.dates.push_back(*date);
    fc.q05.push_back(*q05);
    fc.q50.push_back(*q50);
    fc.q90.push_back(*q90);
  }
  for (const auto& fc : out)
    if (fc.dates.size() != static_cast<std::size_t>(horizon))
      throw ValidationError(path + ": region " + fc.region + " has " +
                            std::to_string(fc.dates.size()) + " rows, expected " +
                            std::to_string(horizon));
  return out;
}

struct EmbeddingFile {
  std::vector<std::string> regions;
  Tensor matrix;
};

EmbeddingFile read_embeddings_csv(const std::string& path) {
  if (!fs::exists(path))
    throw ValidationError("missing embeddings artifact: " + path +
                          " (run the embed stage first)");
  const auto rows = csv::read_file(path);
  if (rows.size() < 2) throw ValidationError(path + ": no embedding rows");
  const std::size_t dims = rows.front().fields.size() - 1;
  if (rows.front().fields.empty() || rows.front().fields[0] != "region_id" || dims < 1)
    throw ValidationError(path + ": expected header region_id,dim_0,...");

  EmbeddingFile file;
  file.matrix = Tensor({rows.size() - 1, dims});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.fields.size() != dims + 1)
      throw ValidationError(path + " row " + std::to_string(row.line) +
                            ": expected " + std::to_string(dims + 1) + " fields");
    file.regions.push_back(row.fields[0]);
    for (std::size_t c = 0; c < dims; ++c) {
      const auto v = csv::parse_double(row.fields[c + 1]);
      if (!v)
        throw ValidationError(path + " row " + std::to_string(row.line) +
                              ": unparseable value '" + row.fields[c + 1] + "'");
      file.matrix.at(i - 1, c) = *v;
    }
  }
  return file;
}

void write_embeddings_csv(const std::string& path,
                          const std::vector<std::string>& regions,
                          const Tensor& matrix) {
  std::string content = "region_id";
  for (std::size_t c = 0; c < matrix.dim(1); ++c)
    content += ",dim_" + std::to_string(c);
  content += "\n";
  for (std::size_t r = 0; r < regions.size(); ++r) {
    content += regions[r];
    for (std::size_t c = 0; c < matrix.dim(1); ++c)
      content += "," + csv::format_double(matrix.at(r, c));
    content += "\n";
  }
  write_text_file(path, content);
}

std::vector<eval::ModelSpec> build_models(const PipelineConfig& cfg) {
  std::vector<eval::ModelSpec> models;
  for (const auto& name : cfg.backtest_models) {
    if (name == "seasonal_naive") {
      models.push_back(eval::make_seasonal_naive_model(cfg.backtest_horizon));
    } else if (name == "ar_ols") {
      models.push_back(eval::make_ar_ols_model(7, 1, cfg.backtest_horizon));
    } else if (name == "net") {
      models.push_back(eval::make_net_model("net", cfg.net));
    } else if (name == "net_no_day_embeddings") {
      forecast::NetConfig ablated = cfg.net;
      ablated.use_day_embeddings = false;
      models.push_back(eval::make_net_model("net_no_day_embeddings", ablated));
    } else {
      throw ValidationError("config: backtest.models contains unknown model '" +
                            name + "'");
    }
  }
  return models;
}

}  // namespace

std::string config_hash(const PipelineConfig& config) {
  const std::string canonical = config_to_json(config).dump();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  return std::string(buf);
}

std::string forecasts_path(const PipelineConfig& c) {
  return join_path(c.out_dir, "forecasts.csv");
}
std::string embeddings_path(const PipelineConfig& c, const std::string& tag) {
  return join_path(c.out_dir, "embeddings_" + tag + ".csv");
}
std::string clusters_path(const PipelineConfig& c) {
  return join_path(c.out_dir, "clusters.csv");
}
std::string grid_path(const PipelineConfig& c) {
  return join_path(c.out_dir, "silhouette_grid.csv");
}
std::string report_path(const PipelineConfig& c) {
  return join_path(c.out_dir, "report.json");
}

void run_synth(const PipelineConfig& config) {
  require_path(config.cases_csv, "paths.cases_csv");
  require_path(config.static_csv, "paths.static_csv");
  for (const auto& target : {config.cases_csv, config.static_csv}) {
    const fs::path parent = fs::path(target).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
  }
  const synth::SynthData data = synth::generate(config.synth);
  synth::write_cases_csv(data.panel, config.cases_csv);
  synth::write_static_csv(data.panel.regions, data.static_vars, config.static_csv);
}

void run_forecast(const PipelineConfig& config) {
  require_path(config.cases_csv, "paths.cases_csv");
  require_path(config.out_dir, "paths.out_dir");
  series::LoadSummary summary;
  const auto panel = series::load_cases(config.cases_csv, &summary);
  for (const auto& warning : summary.warnings)
    std::fprintf(stderr, "warning: %s\n", warning.c_str());

  const auto prep = series::prepare(panel);
  auto model = forecast::build_model(config.net, config.net.seed);
  forecast::train(model, prep);

  std::string content = "region_id,date,q05,q50,q90\n";
  for (const auto& region : panel.regions) {
    const auto fc = forecast::predict(model, prep, region);
    for (std::size_t h = 0; h < fc.dates.size(); ++h)
      content += region + "," + fc.dates[h].to_iso() + "," +
                 csv::format_double(fc.q05[h]) + "," + csv::format_double(fc.q50[h]) +
                 "," + csv::format_double(fc.q90[h]) + "\n";
  }
  write_text_file(forecasts_path(config), content);
}

void run_embed(const PipelineConfig& config) {
  require_path(config.static_csv, "paths.static_csv");
  require_path(config.out_dir, "paths.out_dir");
  const auto forecasts =
      read_forecasts_csv(forecasts_path(config), config.net.horizon);
  const auto vectors = reduce::assemble(config.static_csv, forecasts);
  std::vector<std::string> regions;
  for (const auto& v : vectors) regions.push_back(v.region);

  const auto std_matrix = reduce::zscore(reduce::to_matrix(vectors));

  json meta;
  {
    std::vector<std::string> flagged;
    const auto& names = reduce::static_variable_names();
    for (std::size_t c = 0; c < std_matrix.zero_variance.size(); ++c)
      if (std_matrix.zero_variance[c])
        flagged.push_back(c < names.size() ? names[c] : "forecast_mean");
    meta["zscore"] = {{"zero_variance_columns", flagged}};
    meta["regions"] = regions.size();
  }

  for (const auto& tag : config.reductions) {
    reduce::ReductionResult result;
    if (tag == "none") {
      result.method = reduce::ReductionMethod::none;
      result.reduced = std_matrix.matrix;
      meta[tag] = {{"dims", result.reduced.dim(1)}};
    } else if (tag == "pca") {
      result = reduce::pca_reduce(std_matrix.matrix, config.pca_variance_threshold);
      meta[tag] = {{"dims", result.reduced.dim(1)},
                   {"explained_variance_ratios", result.explained_variance_ratios}};
    } else if (tag == "ga") {
      result = reduce::ga_select(std_matrix.matrix, config.k_min, config.k_max,
                                 config.ga, mix_seed(config.seed, {fnv1a64("ga")}));
      std::vector<std::string> selected;
      const auto& names = reduce::static_variable_names();
      for (std::size_t c = 0; c < result.selected_features.size(); ++c)
        if (result.selected_features[c])
          selected.push_back(c < names.size() ? names[c] : "forecast_mean");
      meta[tag] = {{"dims", result.reduced.dim(1)},
                   {"selected_features", selected},
                   {"best_fitness", result.best_fitness},
                   {"fitness_trace", result.fitness_trace}};
    } else {
      const auto variant = tag == "ae_tied" ? reduce::AeVariant::tied
                                            : reduce::AeVariant::stacked;
      result = reduce::ae_reduce(std_matrix.matrix, variant, config.ae,
                                 mix_seed(config.seed, {fnv1a64(tag)}));
      meta[tag] = {{"dims", result.reduced.dim(1)},
                   {"reconstruction_loss", result.final_reconstruction_loss}};
    }
    write_embeddings_csv(embeddings_path(config, tag), regions, result.reduced);
  }
  write_text_file(join_path(config.out_dir, "embed_meta.json"), meta.dump(2) + "\n");
}

void run_cluster(const PipelineConfig& config) {
  require_path(config.out_dir, "paths.out_dir");
  std::vector<cluster::ReductionInput> inputs;
  std::vector<std::string> regions;
  for (const auto& tag : config.reductions) {
    EmbeddingFile file = read_embeddings_csv(embeddings_path(config, tag));
    if (regions.empty()) {
      regions = file.regions;
    } else if (regions != file.regions) {
      throw ValidationError("embeddings files disagree on regions; re-run the embed stage");
    }
    inputs.push_back({tag, std::move(file.matrix)});
  }
  const auto n = regions.size();
  if (config.k_min < 2 || static_cast<std::size_t>(config.k_max) >= n)
    throw ValidationError("config: k_range [" + std::to_string(config.k_min) + ", " +
                          std::to_string(config.k_max) + "] must lie within [2, " +
                          std::to_string(n - 1) + "] for " + std::to_string(n) +
                          " regions");

  const auto outcome = cluster::select_best(inputs, config.k_min, config.k_max,
                                            mix_seed(config.seed, {fnv1a64("cluster")}));

  {
    std::string content = "region_id,cluster\n";
    for (std::size_t r = 0; r < regions.size(); ++r)
      content += regions[r] + "," + std::to_string(outcome.labels[r]) + "\n";
    write_text_file(clusters_path(config), content);
  }
  {
    std::string content = "reduction,method";
    for (int k = config.k_min; k <= config.k_max; ++k)
      content += ",k=" + std::to_string(k);
    content += "\n";
    const int n_k = config.k_max - config.k_min + 1;
    std::size_t cell = 0;
    for (const auto& tag : config.reductions) {
      for (const cluster::Method method :
           {cluster::Method::kmeans, cluster::Method::kmedoids}) {
        content += tag + "," + cluster::method_name(method);
        for (int k = 0; k < n_k; ++k)
          content += "," + csv::format_double(outcome.grid.cells[cell++].silhouette);
        content += "\n";
      }
    }
    write_text_file(grid_path(config), content);
  }
  {
    // the winning reduction's embeddings become the headline embeddings.csv
    const auto winning = embeddings_path(config, outcome.reduction);
    std::ifstream in(winning, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    write_text_file(join_path(config.out_dir, "embeddings.csv"), bytes);
  }
  {
    json report;
    report["selection"] = {{"reduction", outcome.reduction},
                           {"method", cluster::method_name(outcome.method)},
                           {"k", outcome.k},
                           {"silhouette", outcome.silhouette}};
    std::vector<int> sizes(static_cast<std::size_t>(outcome.k), 0);
    for (int label : outcome.labels) ++sizes[static_cast<std::size_t>(label)];
    report["cluster_sizes"] = sizes;
    json grid = json::array();
    const int n_k = config.k_max - config.k_min + 1;
    std::size_t cell = 0;
    for (const auto& tag : config.reductions) {
      for (const cluster::Method method :
           {cluster::Method::kmeans, cluster::Method::kmedoids}) {
        std::vector<double> row;
        for (int k = 0; k < n_k; ++k)
          row.push_back(outcome.grid.cells[cell++].silhouette);
        grid.push_back({{"reduction", tag},
                        {"method", cluster::method_name(method)},
                        {"silhouettes", row}});
      }
    }
    report["grid"] = grid;
    report["k_range"] = {config.k_min, config.k_max};
    report["seed"] = config.seed;
    report["config_hash"] = config_hash(config);
    write_text_file(report_path(config), report.dump(2) + "\n");
  }
}

void run_evaluate(const PipelineConfig& config) {
  require_path(config.cases_csv, "paths.cases_csv");
  require_path(config.out_dir, "paths.out_dir");
  if (config.backtest_horizon != config.net.horizon)
    throw ValidationError("config: backtest.horizon (" +
                          std::to_string(config.backtest_horizon) +
                          ") must match net.horizon (" +
                          std::to_string(config.net.horizon) + ")");
  const auto panel = series::load_cases(config.cases_csv);
  const Date cutoff = panel.last_date() - config.backtest_horizon;
  eval::BacktestConfig bt;
  bt.horizon = config.backtest_horizon;
  bt.largest_regions = config.largest_regions;
  const auto report = eval::backtest(panel, cutoff, build_models(config), bt);
  write_text_file(join_path(config.out_dir, "evaluation.json"),
                  eval::report_to_json(report));
  write_text_file(join_path(config.out_dir, "smape_cells.csv"),
                  eval::cells_to_csv(report));
}

void run(const std::string& subcommand, const PipelineConfig& config) {
  if (!config.out_dir.empty()) fs::create_directories(config.out_dir);

  std::vector<std::string> artifacts;
  if (subcommand == "synth") {
    run_synth(config);
    artifacts = {config.cases_csv, config.static_csv};
  } else if (subcommand == "forecast") {
    run_forecast(config);
    artifacts = {"forecasts.csv"};
  } else if (subcommand == "embed") {
    run_embed(config);
    for (const auto& tag : config.reductions)
      artifacts.push_back("embeddings_" + tag + ".csv");
    artifacts.push_back("embed_meta.json");
  } else if (subcommand == "cluster") {
    run_cluster(config);
    artifacts = {"clusters.csv", "silhouette_grid.csv", "embeddings.csv",
                 "report.json"};
  } else if (subcommand == "pipeline") {
    run_forecast(config);
    run_embed(config);
    run_cluster(config);
    artifacts = {"forecasts.csv"};
    for (const auto& tag : config.reductions)
      artifacts.push_back("embeddings_" + tag + ".csv");
    artifacts.insert(artifacts.end(), {"embed_meta.json", "clusters.csv",
                                       "silhouette_grid.csv", "embeddings.csv",
                                       "report.json"});
  } else if (subcommand == "evaluate") {
    run_evaluate(config);
    artifacts = {"evaluation.json", "smape_cells.csv"};
  } else {
    throw ValidationError("unknown subcommand '" + subcommand + "'");
  }

  if (!config.out_dir.empty()) {
    json manifest;
    manifest["subcommand"] = subcommand;
    manifest["seed"] = config.seed;
    manifest["config_hash"] = config_hash(config);
    manifest["artifacts"] = artifacts;
    write_text_file(join_path(config.out_dir, "manifest.json"),
                    manifest.dump(2) + "\n");
  }
}

}  // namespace epicast::pipeline
