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

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "cgdbm/config.hpp"
#include "cgdbm/sampling.hpp"
#include "cgdbm/training.hpp"

namespace cgdbm {

// Artifact names inside the output directory.
namespace artifact {
inline constexpr const char* whitener = "whitener.cgmat";
inline constexpr const char* train = "train.cgmat";
inline constexpr const char* test = "test.cgmat";
inline constexpr const char* model = "model.cgdbm";
inline constexpr const char* checkpoint = "checkpoint.cgdbm";
inline constexpr const char* train_log = "train_log.csv";
inline constexpr const char* frames = "frames.cgmat";
inline constexpr const char* p_init = "p_init.cgmat";
inline constexpr const char* summary = "summary.txt";
inline constexpr const char* report = "report.txt";
}  // namespace artifact

struct PrepareSummary {
  std::size_t images = 0;
  std::size_t skipped_images = 0;
  Eigen::Index train_rows = 0;
  Eigen::Index test_rows = 0;
  double retained_variance = 0.0;  // fraction of total variance kept by k components
  double patch_norm = 0.0;         // mean norm of the centered raw training patches
};

/// Patches from the image directory, fitted whitener and whitened
/// train/test matrices.
PrepareSummary cmd_prepare(const RunConfig& cfg, const std::filesystem::path& out_dir,
                           std::ostream& log);

/// Trains on the prepared data, checkpointing after every epoch. On
/// divergence the last finite state is left in the checkpoint file and the
/// TrainingDiverged error propagates.
TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Spontaneous session started from the mean data-driven hidden1
/// probability.
FrameSet cmd_sample(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

struct AnalysisSummary {
  Eigen::Index frames = 0;
  double threshold = 0.0;
  double threshold_at_M = 0.0;
  double significant_fraction = 0.0;
  double control_significant_fraction = 0.0;
  double max_r = 0.0;
  double control_max_r = 0.0;
  double mean_osi = 0.0;
  double osi_fraction = 0.0;  // units with OSI >= 0.3
  int som_nodes_significant = 0;
  double som_max_r = 0.0;
};

/// Orientation maps, frame statistics against a random-control baseline,
/// SOM, CSV reports and figures. frames_path defaults to the session
/// output in out_dir.
AnalysisSummary cmd_analyze(const RunConfig& cfg, const std::filesystem::path& out_dir,
                            std::ostream& log, const std::filesystem::path& frames_path = {});

/// Human-readable digest of the artifacts in out_dir; also written to
/// report.txt.
std::string cmd_report(const std::filesystem::path& out_dir);

/// 2 config, 3 numeric, 4 I/O or file format, 1 anything else.
int exit_code_for(const std::exception& e);

}  // namespace cgdbm
