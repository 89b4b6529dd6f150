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
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cgdbm/analysis.hpp"
#include "cgdbm/sampling.hpp"
#include "cgdbm/stimuli.hpp"
#include "cgdbm/training.hpp"

namespace cgdbm {

struct DataConfig {
  std::string image_dir;
  PatchConfig patches;
  int pca_k = 100;
};

struct ModelDims {
  int L = 100;
  int M = 64;
  int N = 16;
};

struct AnalysisConfig {
  double alpha = 0.01;
  int threshold_n = 200;
  SomConfig som;
  std::vector<double> orientations = default_orientations();
  // Empty means default_frequencies(patch_side).
  std::vector<double> frequencies;
  std::vector<double> phases = default_phases();
  int top_filters = 25;
  int rf_top = 6;
};

/// Everything a pipeline run needs. Stage seeds are derived from the one
/// global seed.
struct RunConfig {
  DataConfig data;
  ModelDims model;
  TrainConfig training;
  SessionConfig sampling;
  AnalysisConfig analysis;
  std::uint64_t seed = 1;
  int workers = 1;

  /// Pushes the global seed and worker count into the stage configs.
  void propagate();
  /// Throws ConfigError on any invalid or inconsistent field.
  void validate() const;
  std::vector<double> grating_frequencies() const;
};

/// Grammar, one item per line:
///   [section]
///   key = value
///   # comment (also ';')
/// Sections: data, model, training, sampling, analysis. The key "seed" and
/// "workers" may appear before any section. Lists are comma separated.
/// Relative image_dir paths resolve against the config file's directory.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Applies one "section.key=value" (or "seed=...") override.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& cfg);

}  // namespace cgdbm
