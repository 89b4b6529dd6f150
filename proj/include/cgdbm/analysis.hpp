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
#include <vector>

#include "cgdbm/gdbm.hpp"
#include "cgdbm/sampling.hpp"
#include "cgdbm/stimuli.hpp"
#include "cgdbm/training.hpp"

namespace cgdbm {

/// One averaged hidden1 response per grating orientation, rows ordered by
/// ascending angle.
struct OrientationMapSet {
  Matrix maps;
  std::vector<double> orientations;

  Eigen::Index count() const { return maps.rows(); }
};

/// Splits a grating list into per-orientation groups, ascending by angle.
std::vector<std::vector<Grating>> group_by_orientation(const std::vector<Grating>& gratings);

/// Row t is the mean clamped mean-field response over group t. Grating
/// pixels are deviations around the corpus mean luminance, so each
/// stimulus is whiten(grating + whitener.mean).
OrientationMapSet orientation_maps(const ModelParams& p, const Offsets& c,
                                   const std::vector<std::vector<Grating>>& groups,
                                   const Whitener& whitener, const TrainConfig& cfg);

/// Pearson product-moment correlation. Throws DomainError for vectors
/// shorter than 3 or with zero variance.
double pearson(const Vector& a, const Vector& b);

/// Critical |r| of a two-tailed test of zero correlation at level alpha
/// with n - 2 degrees of freedom: t / sqrt(t^2 + n - 2).
double significance_threshold(int n, double alpha);

struct CorrelationReport {
  Matrix r;  // frames x maps
  double threshold = 0.0;
  double significant_fraction = 0.0;
  // Per significant frame, the map index with the largest r; -1 otherwise.
  std::vector<int> preference;
  Vector preference_counts;
  // Counts relative to the first (horizontal) bin; NaN when that bin is empty.
  Vector preference_hist;
  // Largest r among significant frames preferring each map; NaN when none.
  Vector max_r_per_orientation;
  double max_r = 0.0;
};

/// Correlates every frame with every map. A frame is significant when its
/// largest |r| reaches the threshold. Frames with zero variance get r = 0.
CorrelationReport correlate(const FrameSet& frames, const OrientationMapSet& maps,
                            double threshold, int workers = 1);

struct SomConfig {
  int nodes = 40;
  int epochs = 20;
  double learning_rate_start = 0.5;
  double learning_rate_end = 0.01;
  double radius_start = 10.0;
  double radius_end = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Kohonen map on a closed 1-D ring of nodes.
struct SomModel {
  Matrix nodes;  // nodes x width, lattice order
  // Mean distance from each frame to its best-matching node, after each epoch.
  std::vector<double> quantization_error;

  Eigen::Index size() const { return nodes.rows(); }
};

/// Distance between lattice positions i and j on a ring of n nodes.
int circular_distance(int i, int j, int n);

/// Index of the node nearest to v (Euclidean); lowest index wins ties.
Eigen::Index best_matching_unit(const Matrix& nodes, const Vector& v);

/// Online training over shuffled frames. Learning rate and neighborhood
/// radius fall linearly across presentations; the neighborhood is Gaussian in
/// circular lattice distance. Nodes start near the frame mean.
SomModel train_som(const FrameSet& frames, const SomConfig& cfg);

double quantization_error(const Matrix& nodes, const Matrix& data);

struct NodeMatch {
  int orientation = -1;
  double r = 0.0;
};

/// Best-correlated map for every node (constant nodes get r = 0, index -1).
std::vector<NodeMatch> correlate_som(const SomModel& som, const OrientationMapSet& maps);

/// Indices of the k largest entries in descending order; ties go to the
/// lower index.
std::vector<Eigen::Index> top_active_filters(const Vector& activity, std::size_t k = 25);

struct ReceptiveField {
  std::vector<Eigen::Index> filters;  // by descending |u_jk|
  std::vector<double> weights;
  Vector image;                       // pixel space, no mean added
};

/// Composite receptive field of a hidden2 unit: the pixel-space image of
/// sum_j u_jk w_*j over its strongest-connected hidden1 filters.
ReceptiveField second_layer_rf(const ModelParams& p, const Whitener& whitener, Eigen::Index unit,
                               std::size_t top = 6);

/// OSI per hidden1 unit: (r_max - r_orth) / (r_max + r_orth), r_orth taken
/// 90 degrees from the preferred orientation. Flat or all-zero responses
/// give 0.
Vector orientation_selectivity(const OrientationMapSet& maps);

Vector orientation_selectivity(const ModelParams& p, const Offsets& c,
                               const std::vector<std::vector<Grating>>& groups,
                               const Whitener& whitener, const TrainConfig& cfg);

}  // namespace cgdbm
