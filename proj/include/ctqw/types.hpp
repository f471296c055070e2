// Copyright 2026 The ctqw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <type_traits>

#include <Eigen/Dense>

namespace ctqw {

using Index = Eigen::Index;
using Complex = std::complex<double>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RealMatrix = Matrix<double>;
using RealVector = Vector<double>;
using ComplexMatrix = Matrix<Complex>;
using ComplexVector = Vector<Complex>;

template <typename Scalar>
inline constexpr bool is_complex_v = !std::is_same_v<Scalar, typename Eigen::NumTraits<Scalar>::Real>;

template <typename Scalar>
concept WalkScalar = std::is_same_v<Scalar, double> || std::is_same_v<Scalar, Complex>;

}  // namespace ctqw
