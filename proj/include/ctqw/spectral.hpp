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

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ctqw/errors.hpp"
#include "ctqw/types.hpp"

namespace ctqw {

// Relative Hermiticity tolerance: |H(j,k) - conj(H(k,j))| <= tol * max|H|.
inline constexpr double kHermiticityTolerance = 1e-10;
// Default degeneracy tolerance, relative to the spectral range.
inline constexpr double kRelativeDegeneracyTolerance = 1e-8;

/// Dense Hermitian matrix. Construction validates Hermiticity and stores the
/// symmetrized matrix (H + H^dagger) / 2 so rounding-level asymmetry in
/// assembled Hamiltonians does not leak into the eigensolver.
template <WalkScalar Scalar>
class HermitianOperator {
 public:
  using MatrixType = Matrix<Scalar>;

  explicit HermitianOperator(const MatrixType& m, double rel_tol = kHermiticityTolerance) {
    if (m.rows() == 0 || m.cols() == 0) throw ValidationError("HermitianOperator: empty matrix");
    if (m.rows() != m.cols()) {
      std::ostringstream os;
      os << "HermitianOperator: matrix is " << m.rows() << "x" << m.cols() << ", expected square";
      throw ValidationError(os.str());
    }
    const double scale = m.cwiseAbs().maxCoeff();
    const double limit = rel_tol * scale;
    for (Index k = 0; k < m.cols(); ++k) {
      for (Index j = 0; j <= k; ++j) {
        const double diff = std::abs(m(j, k) - Eigen::numext::conj(m(k, j)));
        if (diff > limit) {
          std::ostringstream os;
          os << "HermitianOperator: entries (" << j << "," << k << ") and (" << k << "," << j
             << ") are not conjugate (|difference| = " << diff << ", tolerance " << limit << ")";
          throw ValidationError(os.str());
        }
      }
    }
    matrix_ = (m + m.adjoint()) / 2.0;
  }

  Index dim() const { return matrix_.rows(); }
  const MatrixType& matrix() const { return matrix_; }

 private:
  MatrixType matrix_;
};

template <WalkScalar Scalar>
struct SpectralDecomposition {
  RealVector eigenvalues;      // ascending
  Matrix<Scalar> eigenvectors;  // orthonormal columns

  Index dim() const { return eigenvalues.size(); }
};

namespace detail {

// Rotate each column so its first non-negligible component is real positive.
template <typename Derived>
void fix_phases(Eigen::MatrixBase<Derived>& vectors) {
  using Scalar = typename Derived::Scalar;
  constexpr double kNegligible = 1e-10;
  for (Index c = 0; c < vectors.cols(); ++c) {
    for (Index r = 0; r < vectors.rows(); ++r) {
      const Scalar v = vectors(r, c);
      const double mag = std::abs(v);
      if (mag > kNegligible) {
        vectors.col(c) *= Eigen::numext::conj(v) / mag;
        break;
      }
    }
  }
}

}  // namespace detail

/// Full eigendecomposition with ascending eigenvalues and a deterministic
/// phase convention (first non-negligible component of each eigenvector is
/// real positive).
template <WalkScalar Scalar>
SpectralDecomposition<Scalar> decompose(const HermitianOperator<Scalar>& h) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(h.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalInconsistency("decompose: eigensolver did not converge");
  SpectralDecomposition<Scalar> out{solver.eigenvalues(), solver.eigenvectors()};
  detail::fix_phases(out.eigenvectors);
  return out;
}

struct Eigenspace {
  double energy;               // mean of the member eigenvalues
  std::vector<Index> members;  // eigenvector column indices
};

/// Eigenvalues grouped into numerically degenerate eigenspaces, ordered by
/// ascending energy. Projectors are materialized on demand.
template <WalkScalar Scalar>
class EigenspacePartition {
 public:
  EigenspacePartition(SpectralDecomposition<Scalar> spectrum, double tol_degen)
      : spectrum_(std::move(spectrum)), tol_(tol_degen) {
    if (!(tol_degen > 0.0)) throw ValidationError("group_eigenspaces: tol_degen must be positive");
    const RealVector& e = spectrum_.eigenvalues;
    group_of_.resize(static_cast<std::size_t>(e.size()));
    for (Index i = 0; i < e.size(); ++i) {
      if (i == 0 || e(i) - e(i - 1) > tol_) groups_.push_back({0.0, {}});
      groups_.back().members.push_back(i);
      group_of_[static_cast<std::size_t>(i)] = static_cast<Index>(groups_.size()) - 1;
    }
    for (auto& g : groups_) {
      double sum = 0.0;
      for (Index i : g.members) sum += e(i);
      g.energy = sum / static_cast<double>(g.members.size());
      const double spread = e(g.members.back()) - e(g.members.front());
      if (spread > tol_) {
        std::ostringstream os;
        os << "group_eigenspaces: cluster near E = " << g.energy << " spreads " << spread
           << " > tol_degen = " << tol_ << "; degeneracy is ambiguous at this tolerance";
        throw NumericalInconsistency(os.str());
      }
    }
  }

  const SpectralDecomposition<Scalar>& spectrum() const { return spectrum_; }
  const std::vector<Eigenspace>& groups() const { return groups_; }
  const Eigenspace& group(Index g) const { return groups_.at(static_cast<std::size_t>(g)); }
  Index size() const { return static_cast<Index>(groups_.size()); }
  Index dim() const { return spectrum_.dim(); }
  double tolerance() const { return tol_; }
  Index group_of(Index eigen_index) const { return group_of_.at(static_cast<std::size_t>(eigen_index)); }

  RealVector energies() const {
    RealVector out(size());
    for (Index g = 0; g < size(); ++g) out(g) = groups_[static_cast<std::size_t>(g)].energy;
    return out;
  }

  /// Orthonormal basis of eigenspace g (dim x multiplicity).
  Matrix<Scalar> basis(Index g) const {
    const auto& members = group(g).members;
    Matrix<Scalar> b(dim(), static_cast<Index>(members.size()));
    for (std::size_t c = 0; c < members.size(); ++c) b.col(static_cast<Index>(c)) = spectrum_.eigenvectors.col(members[c]);
    return b;
  }

  Matrix<Scalar> projector(Index g) const {
    const Matrix<Scalar> b = basis(g);
    return b * b.adjoint();
  }

  /// Pi_g v without forming the projector.
  template <typename Derived>
  Vector<Scalar> project(Index g, const Eigen::MatrixBase<Derived>& v) const {
    const Matrix<Scalar> b = basis(g);
    return b * (b.adjoint() * v);
  }

  /// Columns are Pi_g v for every group g (dim x size()).
  template <typename Derived>
  Matrix<typename Derived::Scalar> project_all(const Eigen::MatrixBase<Derived>& v) const {
    using Out = typename Derived::Scalar;
    const Vector<Out> coeffs = spectrum_.eigenvectors.adjoint().template cast<Out>() * v;
    Matrix<Out> out = Matrix<Out>::Zero(dim(), size());
    for (Index i = 0; i < dim(); ++i) out.col(group_of(i)) += coeffs(i) * spectrum_.eigenvectors.col(i).template cast<Out>();
    return out;
  }

 private:
  SpectralDecomposition<Scalar> spectrum_;
  double tol_;
  std::vector<Eigenspace> groups_;
  std::vector<Index> group_of_;
};

template <WalkScalar Scalar>
double default_degeneracy_tolerance(const SpectralDecomposition<Scalar>& spectrum) {
  const RealVector& e = spectrum.eigenvalues;
  const double range = e.size() > 0 ? e(e.size() - 1) - e(0) : 0.0;
  return kRelativeDegeneracyTolerance * (range > 0.0 ? range : 1.0);
}

template <WalkScalar Scalar>
EigenspacePartition<Scalar> group_eigenspaces(SpectralDecomposition<Scalar> spectrum, double tol_degen) {
  return EigenspacePartition<Scalar>(std::move(spectrum), tol_degen);
}

template <WalkScalar Scalar>
EigenspacePartition<Scalar> group_eigenspaces(SpectralDecomposition<Scalar> spectrum) {
  const double tol = default_degeneracy_tolerance(spectrum);
  return EigenspacePartition<Scalar>(std::move(spectrum), tol);
}

/// Decompose and group in one step with the default degeneracy tolerance.
template <WalkScalar Scalar>
EigenspacePartition<Scalar> eigenspaces(const HermitianOperator<Scalar>& h) {
  return group_eigenspaces(decompose(h));
}

// Gap quantities between eigenspace energies. A subset S is a set of group
// indices; its gap is the minimum |E_j - E_k| over pairs with j in S and
// k != j, split into the within-S and S-to-complement minima.
struct SubsetGap {
  double delta_e_s = std::numeric_limits<double>::infinity();
  double within = std::numeric_limits<double>::infinity();   // both endpoints in S
  double to_rest = std::numeric_limits<double>::infinity();  // one endpoint outside S
};

struct GapReport {
  double delta_e_min = 0.0;
  std::vector<double> delta_e_star;  // one entry per eigenspace
  std::optional<SubsetGap> subset;
};

namespace detail {

inline std::vector<bool> subset_mask(Index groups, std::span<const Index> subset, const char* who) {
  std::vector<bool> in(static_cast<std::size_t>(groups), false);
  for (Index g : subset) {
    if (g < 0 || g >= groups) {
      std::ostringstream os;
      os << who << ": eigenspace index " << g << " out of range [0, " << groups << ")";
      throw ValidationError(os.str());
    }
    in[static_cast<std::size_t>(g)] = true;
  }
  return in;
}

}  // namespace detail

template <WalkScalar Scalar>
double delta_e_min(const EigenspacePartition<Scalar>& p) {
  if (p.size() < 2) throw GapUndefinedError("gap undefined: spectrum has a single eigenspace");
  double best = std::numeric_limits<double>::infinity();
  for (Index g = 1; g < p.size(); ++g) best = std::min(best, p.group(g).energy - p.group(g - 1).energy);
  return best;
}

template <WalkScalar Scalar>
double delta_e_star(const EigenspacePartition<Scalar>& p, Index g) {
  if (p.size() < 2) throw GapUndefinedError("gap undefined: spectrum has a single eigenspace");
  if (g < 0 || g >= p.size()) throw ValidationError("delta_e_star: eigenspace index out of range");
  double best = std::numeric_limits<double>::infinity();
  if (g > 0) best = std::min(best, p.group(g).energy - p.group(g - 1).energy);
  if (g + 1 < p.size()) best = std::min(best, p.group(g + 1).energy - p.group(g).energy);
  return best;
}

template <WalkScalar Scalar>
SubsetGap subset_gap(const EigenspacePartition<Scalar>& p, std::span<const Index> subset) {
  if (p.size() < 2) throw GapUndefinedError("gap undefined: spectrum has a single eigenspace");
  if (subset.empty()) throw ValidationError("subset_gap: empty subset");
  const auto in = detail::subset_mask(p.size(), subset, "subset_gap");
  // The closest outside partner of any member is reached through an adjacent
  // (member, non-member) pair, so adjacent pairs give `to_rest` exactly.
  SubsetGap out;
  for (Index g = 1; g < p.size(); ++g) {
    if (in[static_cast<std::size_t>(g - 1)] != in[static_cast<std::size_t>(g)])
      out.to_rest = std::min(out.to_rest, p.group(g).energy - p.group(g - 1).energy);
  }
  // Consecutive members (in energy order) give `within`.
  Index prev = -1;
  for (Index g = 0; g < p.size(); ++g) {
    if (!in[static_cast<std::size_t>(g)]) continue;
    if (prev >= 0) out.within = std::min(out.within, p.group(g).energy - p.group(prev).energy);
    prev = g;
  }
  out.delta_e_s = std::min(out.within, out.to_rest);
  return out;
}

template <WalkScalar Scalar>
GapReport gaps(const EigenspacePartition<Scalar>& p, std::optional<std::span<const Index>> subset = std::nullopt) {
  GapReport r;
  r.delta_e_min = delta_e_min(p);
  r.delta_e_star.reserve(static_cast<std::size_t>(p.size()));
  for (Index g = 0; g < p.size(); ++g) r.delta_e_star.push_back(delta_e_star(p, g));
  if (subset) r.subset = subset_gap(p, *subset);
  return r;
}

}  // namespace ctqw
