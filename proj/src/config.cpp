/* Copyright 2026 The cgdbm Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
        limitations under the License.
==============================================================================*/
#include "cgdbm/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "cgdbm/error.hpp"
#include "cgdbm/io.hpp"

namespace cgdbm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(key + ": out of range");
  return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CGDBM_DOUBLE(name, member)                                                           \
  {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }, \
          [](const RunConfig& c) { return format_double(c.member); }}}
#define CGDBM_INT(name, member)                                                              \
  {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_int(k, v); }, \
          [](const RunConfig& c) { return std::to_string(c.member); }}}
#define CGDBM_U64(name, member)                                                              \
  {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_u64(k, v); }, \
          [](const RunConfig& c) { return std::to_string(c.member); }}}
#define CGDBM_BOOL(name, member)                                                             \
  {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_bool(k, v); }, \
          [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }}}
#define CGDBM_LIST(name, member)                                                             \
  {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_list(k, v); }, \
          [](const RunConfig& c) { return list_text(c.member); }}}

// Keys in canonical output order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      CGDBM_U64("seed", seed),
      CGDBM_INT("workers", workers),
      {"data.image_dir",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.data.image_dir = v; },
        [](const RunConfig& c) { return c.data.image_dir; }}},
      CGDBM_INT("data.patch_side", data.patches.patch_side),
      CGDBM_INT("data.n_patches", data.patches.n_patches),
      CGDBM_DOUBLE("data.train_fraction", data.patches.train_fraction),
      CGDBM_INT("data.pca_k", data.pca_k),
      CGDBM_INT("model.L", model.L),
      CGDBM_INT("model.M", model.M),
      CGDBM_INT("model.N", model.N),
      CGDBM_DOUBLE("training.learning_rate_start", training.learning_rate_start),
      CGDBM_DOUBLE("training.learning_rate_end", training.learning_rate_end),
      CGDBM_DOUBLE("training.momentum_start", training.momentum_start),
      CGDBM_DOUBLE("training.momentum_end", training.momentum_end),
      CGDBM_DOUBLE("training.sigma_lr_factor", training.sigma_lr_factor),
      CGDBM_INT("training.batch_size", training.batch_size),
      CGDBM_DOUBLE("training.offset_rate", training.offset_rate),
      CGDBM_INT("training.epochs_max", training.epochs_max),
      CGDBM_INT("training.mean_field_max_iters", training.mean_field_max_iters),
      CGDBM_DOUBLE("training.mean_field_tol", training.mean_field_tol),
      CGDBM_BOOL("training.mean_field_damping", training.mean_field_damping),
      CGDBM_INT("training.gibbs_steps_per_batch", training.gibbs_steps_per_batch),
      CGDBM_INT("training.patience", training.patience),
      CGDBM_DOUBLE("training.sigma_step_clip", training.sigma_step_clip),
      CGDBM_INT("sampling.n_chains", sampling.n_chains),
      CGDBM_INT("sampling.n_iterations", sampling.n_iterations),
      CGDBM_INT("sampling.record_every", sampling.record_every),
      CGDBM_DOUBLE("analysis.alpha", analysis.alpha),
      CGDBM_INT("analysis.threshold_n", analysis.threshold_n),
      CGDBM_INT("analysis.som_nodes", analysis.som.nodes),
      CGDBM_INT("analysis.som_epochs", analysis.som.epochs),
      CGDBM_DOUBLE("analysis.som_learning_rate_start", analysis.som.learning_rate_start),
      CGDBM_DOUBLE("analysis.som_learning_rate_end", analysis.som.learning_rate_end),
      CGDBM_DOUBLE("analysis.som_radius_start", analysis.som.radius_start),
      CGDBM_DOUBLE("analysis.som_radius_end", analysis.som.radius_end),
      CGDBM_LIST("analysis.orientations", analysis.orientations),
      CGDBM_LIST("analysis.frequencies", analysis.frequencies),
      CGDBM_LIST("analysis.phases", analysis.phases),
      CGDBM_INT("analysis.top_filters", analysis.top_filters),
      CGDBM_INT("analysis.rf_top", analysis.rf_top),
  };
  return table;
}

#undef CGDBM_DOUBLE
#undef CGDBM_INT
#undef CGDBM_U64
#undef CGDBM_BOOL
#undef CGDBM_LIST

void set_field(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [name, field] : fields())
    if (name == key) {
      field.set(cfg, key, value);
      return;
    }
  throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

void RunConfig::propagate() {
  data.patches.seed = stream_seed(seed, 10);
  training.seed = stream_seed(seed, 11);
  sampling.seed = stream_seed(seed, 12);
  analysis.som.seed = stream_seed(seed, 13);
  training.workers = workers;
  sampling.workers = workers;
}

void RunConfig::validate() const {
  data.patches.validate();
  training.validate();
  sampling.validate();
  analysis.som.validate();
  const int D = data.patches.patch_side * data.patches.patch_side;
  if (data.pca_k < 1 || data.pca_k > D)
    throw ConfigError("data.pca_k must lie in [1, patch_side^2 = " + std::to_string(D) + "]");
  if (model.L != data.pca_k)
    throw ConfigError("model.L (" + std::to_string(model.L) + ") must equal data.pca_k (" +
                      std::to_string(data.pca_k) + ")");
  if (model.M < 1 || model.N < 1) throw ConfigError("model.M and model.N must be positive");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (!(analysis.alpha > 0.0 && analysis.alpha < 1.0)) throw ConfigError("analysis.alpha must lie in (0, 1)");
  if (analysis.threshold_n < 4) throw ConfigError("analysis.threshold_n must be at least 4");
  if (analysis.orientations.empty() || analysis.phases.empty())
    throw ConfigError("analysis.orientations and analysis.phases must be non-empty");
  for (double o : analysis.orientations)
    if (!(o >= 0.0 && o < 180.0)) throw ConfigError("orientations must lie in [0, 180)");
  for (double f : analysis.frequencies)
    if (!(f > 0.0)) throw ConfigError("grating frequencies must be positive");
  if (analysis.top_filters < 1 || analysis.rf_top < 1)
    throw ConfigError("analysis.top_filters and analysis.rf_top must be positive");
}

std::vector<double> RunConfig::grating_frequencies() const {
  return analysis.frequencies.empty() ? default_frequencies(data.patches.patch_side)
                                      : analysis.frequencies;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"data", "model", "training", "sampling", "analysis"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known))
        throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_field(cfg, section.empty() ? key : section + "." + key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (!cfg.data.image_dir.empty() && !base_dir.empty() &&
      std::filesystem::path(cfg.data.image_dir).is_relative())
    cfg.data.image_dir = (base_dir / cfg.data.image_dir).lexically_normal().string();
  cfg.propagate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse_config(text, path.parent_path());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' lacks '='");
  set_field(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  cfg.propagate();
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& [name, field] : fields()) {
    const auto dot = name.find('.');
    const std::string sec = dot == std::string::npos ? "" : name.substr(0, dot);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += name.substr(dot == std::string::npos ? 0 : dot + 1) + " = " + field.get(cfg) + "\n";
  }
  return out;
}

}  // namespace cgdbm
