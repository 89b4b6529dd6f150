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
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cgdbm/commands.hpp"
#include "cgdbm/config.hpp"
#include "cgdbm/error.hpp"

namespace fs = std::filesystem;
using namespace cgdbm;

int main(int argc, char** argv) {
  CLI::App app{"Centered Gaussian-binary deep Boltzmann machines: training, spontaneous sampling and map analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "run";
  std::optional<int> workers;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "run configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "global seed, overrides the file");
  app.add_option("--out-dir", out_dir, "directory for all artifacts")->capture_default_str();
  app.add_option("--workers", workers, "worker threads (env CGDBM_WORKERS otherwise)");
  app.add_option("--set", overrides, "override a key, e.g. training.epochs_max=5");

  auto* prepare = app.add_subcommand("prepare", "extract and whiten patches");
  auto* train = app.add_subcommand("train", "train the model");
  std::optional<int> epochs;
  train->add_option("--epochs", epochs, "maximum epochs (0 saves the initialized model)");
  auto* sample = app.add_subcommand("sample", "run a spontaneous sampling session");
  std::optional<int> chains, iters, every;
  sample->add_option("--chains", chains, "number of chains");
  sample->add_option("--iters", iters, "sweeps per chain");
  sample->add_option("--every", every, "record every this many sweeps");
  auto* analyze = app.add_subcommand("analyze", "maps, correlations, SOM and figures");
  std::string frames_path;
  analyze->add_option("--frames", frames_path, "frames file (default: the session output)");
  auto* report = app.add_subcommand("report", "summarize a run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (report->parsed()) {
      std::cout << cmd_report(out_dir);
      return 0;
    }
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    if (seed) cfg.seed = *seed;
    if (workers) {
      cfg.workers = *workers;
    } else if (const char* env = std::getenv("CGDBM_WORKERS"); env && *env) {
      apply_override(cfg, std::string("workers=") + env);
    }
    if (epochs) cfg.training.epochs_max = *epochs;
    if (chains) cfg.sampling.n_chains = *chains;
    if (iters) cfg.sampling.n_iterations = *iters;
    if (every) cfg.sampling.record_every = *every;
    cfg.propagate();
    cfg.validate();
    fs::create_directories(out_dir);

    if (prepare->parsed()) cmd_prepare(cfg, out_dir, std::cout);
    if (train->parsed()) cmd_train(cfg, out_dir, std::cout);
    if (sample->parsed()) cmd_sample(cfg, out_dir, std::cout);
    if (analyze->parsed()) cmd_analyze(cfg, out_dir, std::cout, frames_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
