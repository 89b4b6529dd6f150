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

#include <Eigen/Dense>

namespace cgdbm {

using Vector = Eigen::VectorXd;
// Sample matrices hold one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& a) {
  return a.unaryExpr([](double v) { return sigmoid(v); });
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& a) {
  return a.allFinite();
}

}  // namespace cgdbm
