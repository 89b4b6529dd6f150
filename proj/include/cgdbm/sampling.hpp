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
#include <string>

#include "cgdbm/gdbm.hpp"
#include "cgdbm/rng.hpp"
#include "cgdbm/training.hpp"

namespace cgdbm {

struct SessionConfig {
  int n_chains = 100;
  int n_iterations = 2000;
  int record_every = 10;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
  std::size_t frame_count() const {
    return static_cast<std::size_t>(n_chains) * static_cast<std::size_t>(n_iterations / record_every);
  }
};

enum class FrameKind { spontaneous, orientation_map, random_control, som_node };

std::string to_string(FrameKind kind);
FrameKind frame_kind_from_string(const std::string& name);

/// Hidden1 activity vectors, one per row, with where they came from.
struct FrameSet {
  Matrix frames;
  FrameKind kind = FrameKind::spontaneous;
  std::uint64_t seed = 0;
  std::string source;

  Eigen::Index count() const { return frames.rows(); }
  Eigen::Index width() const { return frames.cols(); }
};

/// Mean over the rows of the mean-field hidden1 probabilities.
Vector average_initial_probability(const ModelParams& p, const Offsets& c, const Matrix& data,
                                   const TrainConfig& cfg);

/// Free-running session: nothing clamped. Each chain starts from
/// y ~ Bernoulli(p_init) and sweeps z ~ P(Z|y), x ~ P(X|y), y ~ P(Y|x,z);
/// every record_every sweeps P(Y|x,z) of that sweep is stored. Frames are
/// ordered chain-major: chain c, record r lands in row c * per_chain + r.
FrameSet run_spontaneous_session(const ModelParams& p, const Offsets& c, const Vector& p_init,
                                 const SessionConfig& cfg);

/// Mean-field hidden1 response with x clamped to one whitened stimulus.
struct ClampedResponse {
  Vector y;
  bool converged = true;
  int iterations = 0;
};

ClampedResponse clamped_response(const ModelParams& p, const Offsets& c, const Vector& stimulus,
                                 const TrainConfig& cfg);

/// Independent Bernoulli(p_init) patterns stored as 0/1 rows.
FrameSet random_control_frames(const Vector& p_init, std::size_t count, Rng& rng);

}  // namespace cgdbm
