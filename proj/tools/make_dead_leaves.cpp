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

#include <filesystem>
#include <iostream>

#include "cgdbm/images.hpp"
#include "cgdbm/rng.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Write a corpus of dead-leaves PGM images"};
  std::string out_dir;
  int count = 40;
  int width = 128;
  int height = 128;
  std::uint64_t seed = 1;
  app.add_option("out_dir", out_dir, "destination directory")->required();
  app.add_option("--count", count, "number of images")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--width", width, "image width")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--height", height, "image height")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "corpus seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(out_dir);
    for (int i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "leaves_%04d.pgm", i);
      cgdbm::write_pgm(fs::path(out_dir) / name,
                       cgdbm::dead_leaves_image(width, height, cgdbm::stream_seed(seed, static_cast<std::uint64_t>(i))));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  std::cout << "wrote " << count << " images to " << out_dir << "\n";
  return 0;
}
