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

#include "cgdbm/sampling.hpp"

#include <sstream>

#include "cgdbm/error.hpp"
#include "cgdbm/parallel.hpp"

namespace cgdbm {

void SessionConfig::validate() const {
  if (n_chains < 1) throw ConfigError("n_chains must be at least 1");
  if (record_every < 1) throw ConfigError("record_every must be at least 1");
  if (n_iterations < record_every || n_iterations % record_every != 0)
    throw ConfigError("n_iterations (" + std::to_string(n_iterations) +
                      ") must be a positive multiple of record_every (" +
                      std::to_string(record_every) + ")");
}

std::string to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::spontaneous: return "spontaneous";
    case FrameKind::orientation_map: return "orientation_map";
    case FrameKind::random_control: return "random_control";
    case FrameKind::som_node: return "som_node";
  }
  return "unknown";
}

FrameKind frame_kind_from_string(const std::string& name) {
  for (auto kind : {FrameKind::spontaneous, FrameKind::orientation_map, FrameKind::random_control,
                    FrameKind::som_node})
    if (to_string(kind) == name) return kind;
  throw FormatError("unknown frame kind '" + name + "'");
}

Vector average_initial_probability(const ModelParams& p, const Offsets& c, const Matrix& data,
                                   const TrainConfig& cfg) {
  if (data.rows() == 0) throw DomainError("cannot average over an empty dataset");
  return mean_field_data(data, p, c, cfg).y.colwise().mean().transpose();
}

FrameSet run_spontaneous_session(const ModelParams& p, const Offsets& c, const Vector& p_init,
                                 const SessionConfig& cfg) {
  cfg.validate();
  p.validate();
  c.check_against(p);
  if (p_init.size() != p.hidden1())
    throw DimensionError("initial probability has length " + std::to_string(p_init.size()) +
                         ", model has " + std::to_string(p.hidden1()) + " hidden1 units");
  if ((p_init.array() < 0.0).any() || (p_init.array() > 1.0).any())
    throw DomainError("initial probabilities must lie in [0, 1]");

  const Eigen::Index per_chain = cfg.n_iterations / cfg.record_every;
  FrameSet out;
  out.kind = FrameKind::spontaneous;
  out.seed = cfg.seed;
  out.frames.resize(static_cast<Eigen::Index>(cfg.frame_count()), p.hidden1());

  const Vector sd = p.variances().cwiseSqrt();
  const Vector inv_var = p.variances().cwiseInverse();
  const Eigen::Index L = p.visible();
  const Eigen::Index M = p.hidden1();
  const Eigen::Index N = p.hidden2();

  parallel_for(static_cast<std::size_t>(cfg.n_chains), cfg.workers, [&](std::size_t chain) {
    Rng rng(cfg.seed, chain);
    Vector y(M);
    for (Eigen::Index j = 0; j < M; ++j) y[j] = rng.bernoulli(p_init[j]) ? 1.0 : 0.0;
    Vector z(N);
    Vector x(L);
    Eigen::Index recorded = 0;
    for (int sweep = 1; sweep <= cfg.n_iterations; ++sweep) {
      const Vector yc = y - c.c_y;
      const Vector pz = sigmoid(p.U.transpose() * yc + p.b_z);
      for (Eigen::Index k = 0; k < N; ++k) z[k] = rng.bernoulli(pz[k]) ? 1.0 : 0.0;
      const Vector mean = p.W * yc + c.c_x;
      for (Eigen::Index i = 0; i < L; ++i) x[i] = mean[i] + sd[i] * rng.normal();
      if (!x.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite visible sample in chain " << chain << " at sweep " << sweep;
        throw NumericError(msg.str());
      }
      const Vector py =
          sigmoid(p.W.transpose() * (x - c.c_x).cwiseProduct(inv_var) + p.U * (z - c.c_z) + p.b_y);
      for (Eigen::Index j = 0; j < M; ++j) y[j] = rng.bernoulli(py[j]) ? 1.0 : 0.0;
      if (sweep % cfg.record_every == 0) {
        out.frames.row(static_cast<Eigen::Index>(chain) * per_chain + recorded) = py.transpose();
        ++recorded;
      }
    }
  });

  std::ostringstream src;
  src << "session chains=" << cfg.n_chains << " iterations=" << cfg.n_iterations
      << " every=" << cfg.record_every;
  out.source = src.str();
  return out;
}

ClampedResponse clamped_response(const ModelParams& p, const Offsets& c, const Vector& stimulus,
                                 const TrainConfig& cfg) {
  if (stimulus.size() != p.visible())
    throw DimensionError("stimulus has length " + std::to_string(stimulus.size()) +
                         ", model expects " + std::to_string(p.visible()));
  const Matrix row = stimulus.transpose();
  const MeanFieldState mf = mean_field_data(row, p, c, cfg);
  return ClampedResponse{mf.y.row(0).transpose(), mf.residual <= cfg.mean_field_tol,
                         mf.iterations_used};
}

FrameSet random_control_frames(const Vector& p_init, std::size_t count, Rng& rng) {
  if (count < 1) throw DomainError("random control needs at least one frame");
  FrameSet out;
  out.kind = FrameKind::random_control;
  out.frames.resize(static_cast<Eigen::Index>(count), p_init.size());
  for (Eigen::Index r = 0; r < out.frames.rows(); ++r)
    for (Eigen::Index j = 0; j < p_init.size(); ++j)
      out.frames(r, j) = rng.bernoulli(p_init[j]) ? 1.0 : 0.0;
  out.source = "bernoulli control";
  return out;
}

}  // namespace cgdbm
