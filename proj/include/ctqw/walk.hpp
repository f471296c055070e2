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
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "ctqw/errors.hpp"
#include "ctqw/rng.hpp"
#include "ctqw/spectral.hpp"
#include "ctqw/types.hpp"

namespace ctqw {

inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kDensityTolerance = 1e-9;
inline constexpr double kProbabilitySlack = 1e-9;
inline constexpr double kVanishingProbability = 1e-15;

/// Evolution time t = t_1 + ... + t_k with t_j i.i.d. uniform on [0, T].
/// k = 1 is the plain uniform randomization; k > 1 is Irwin-Hall.
class TimeDistribution {
 public:
  TimeDistribution(double max_time, int summands = 1) : max_time_(max_time), summands_(summands) {
    if (!(max_time > 0.0) || !std::isfinite(max_time)) throw ValidationError("TimeDistribution: T must be positive and finite");
    if (summands < 1) throw ValidationError("TimeDistribution: k must be >= 1");
  }

  double max_time() const { return max_time_; }
  int summands() const { return summands_; }
  double total_max_time() const { return max_time_ * summands_; }

 private:
  double max_time_;
  int summands_;
};

/// E[exp(i r t)] for the distribution. Written as exp(i k x/2) sinc(x/2)^k
/// with x = rT, which equals ((e^{ix} - 1) / (ix))^k without cancellation.
inline Complex characteristic(const TimeDistribution& dist, double r) {
  const double half = 0.5 * r * dist.max_time();
  const double sinc = std::abs(2.0 * half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
  const int k = dist.summands();
  const double phase = k * half;
  return std::pow(sinc, k) * Complex(std::cos(phase), std::sin(phase));
}

inline double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

namespace detail {

template <typename Derived>
void require_normalized(const Eigen::MatrixBase<Derived>& v, const char* name) {
  const double norm = v.norm();
  if (std::abs(norm - 1.0) > kNormTolerance) {
    std::ostringstream os;
    os << name << ": state has norm " << norm << ", expected 1";
    throw ValidationError(os.str());
  }
}

inline void require_dim(Index got, Index want, const char* name) {
  if (got != want) {
    std::ostringstream os;
    os << name << ": dimension " << got << " does not match Hamiltonian dimension " << want;
    throw ValidationError(os.str());
  }
}

}  // namespace detail

/// What the final measurement looks for: a pure state |y>, or a set of
/// computational basis indices (the projector sum_i |i><i|).
template <WalkScalar Scalar>
class Target {
 public:
  static Target state(Vector<Scalar> y) {
    detail::require_normalized(y, "target");
    Target t;
    t.dim_ = y.size();
    t.state_ = std::move(y);
    return t;
  }

  static Target basis_state(Index index, Index dim) { return basis_set({index}, dim); }

  static Target basis_set(std::vector<Index> indices, Index dim) {
    if (indices.empty()) throw ValidationError("target: empty basis set");
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
      throw ValidationError("target: repeated basis index");
    if (indices.front() < 0 || indices.back() >= dim) throw ValidationError("target: basis index out of range");
    Target t;
    t.dim_ = dim;
    t.indices_ = std::move(indices);
    return t;
  }

  Index dim() const { return dim_; }
  bool is_state() const { return indices_.empty(); }
  const Vector<Scalar>& state_vector() const { return state_; }
  const std::vector<Index>& indices() const { return indices_; }

  // Coordinates of each column of m in the target subspace.
  template <typename Derived>
  Matrix<typename Derived::Scalar> components(const Eigen::MatrixBase<Derived>& m) const {
    using Out = typename Derived::Scalar;
    if (is_state()) return state_.adjoint().template cast<Out>() * m;
    return m(indices_, Eigen::all);
  }

 private:
  Target() = default;
  Index dim_ = 0;
  Vector<Scalar> state_;
  std::vector<Index> indices_;
};

/// Trace-one, Hermitian, positive semidefinite complex matrix.
class DensityOperator {
 public:
  explicit DensityOperator(ComplexMatrix m) : matrix_(std::move(m)) {
    if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols()) throw ValidationError("DensityOperator: expected nonempty square matrix");
    const double asym = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
    if (asym > kDensityTolerance) throw ValidationError("DensityOperator: matrix is not Hermitian");
    matrix_ = (matrix_ + matrix_.adjoint()) / 2.0;
    const double tr = matrix_.trace().real();
    if (std::abs(tr - 1.0) > kDensityTolerance) {
      std::ostringstream os;
      os << "DensityOperator: trace " << tr << ", expected 1";
      throw ValidationError(os.str());
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(matrix_, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -kDensityTolerance) throw ValidationError("DensityOperator: matrix is not positive semidefinite");
  }

  template <typename Derived>
  static DensityOperator pure(const Eigen::MatrixBase<Derived>& psi) {
    detail::require_normalized(psi, "DensityOperator::pure");
    const ComplexVector v = psi.template cast<Complex>();
    return DensityOperator(v * v.adjoint());
  }

  Index dim() const { return matrix_.rows(); }
  const ComplexMatrix& matrix() const { return matrix_; }

 private:
  ComplexMatrix matrix_;
};

/// Spectral weights of the transition psi0 -> target:
/// gram(h, g) = <Pi_h psi0| P_target |Pi_g psi0> over eigenspaces g, h.
/// Every time-averaged success probability is a contraction of this matrix
/// with the characteristic function, so a sweep over T reuses it.
template <WalkScalar Scalar>
struct TransitionWeights {
  RealVector energies;
  Matrix<Scalar> gram;

  double limiting() const { return std::real(gram.trace()); }

  double averaged(const TimeDistribution& dist) const {
    const Index n = energies.size();
    double p = 0.0;
    for (Index g = 0; g < n; ++g) {
      p += std::real(gram(g, g));
      for (Index h = 0; h < g; ++h) p += 2.0 * std::real(Complex(gram(h, g)) * characteristic(dist, energies(h) - energies(g)));
    }
    return p;
  }
};

template <WalkScalar Scalar>
TransitionWeights<Scalar> transition_weights(const EigenspacePartition<Scalar>& p, const Vector<Scalar>& psi0,
                                             const Target<Scalar>& target) {
  detail::require_dim(psi0.size(), p.dim(), "psi0");
  detail::require_dim(target.dim(), p.dim(), "target");
  detail::require_normalized(psi0, "psi0");
  const Matrix<Scalar> parts = p.project_all(psi0);
  const Matrix<Scalar> comps = target.components(parts);
  return {p.energies(), comps.adjoint() * comps};
}

/// Time-averaged probability of the target, exact closed form:
/// sum_{g,h} <Pi_h psi0|P|Pi_g psi0> Phi(E_h - E_g). Raw value; rounding can
/// push it outside [0, 1] by ~1e-15 (see clamp_probability).
template <WalkScalar Scalar>
double avg_probability_exact(const EigenspacePartition<Scalar>& p, const Vector<Scalar>& psi0, const Target<Scalar>& target,
                             const TimeDistribution& dist) {
  return transition_weights(p, psi0, target).averaged(dist);
}

template <WalkScalar Scalar>
double avg_probability_exact(const EigenspacePartition<Scalar>& p, const Vector<Scalar>& psi0, const Vector<Scalar>& y,
                             const TimeDistribution& dist) {
  return avg_probability_exact(p, psi0, Target<Scalar>::state(y), dist);
}

/// p_infinity = sum_k |<y|Pi_k|psi0>|^2 (or the projector analogue).
template <WalkScalar Scalar>
double limiting_probability(const EigenspacePartition<Scalar>& p, const Vector<Scalar>& psi0, const Target<Scalar>& target) {
  return transition_weights(p, psi0, target).limiting();
}

template <WalkScalar Scalar>
double limiting_probability(const EigenspacePartition<Scalar>& p, const Vector<Scalar>& psi0, const Vector<Scalar>& y) {
  return limiting_probability(p, psi0, Target<Scalar>::state(y));
}

/// Reference value of (1/T) int_0^T |<y|exp(-iHt)|psi0>|^2 dt by adaptive
/// Gauss-Kronrod quadrature over the matrix exponential. Test oracle only:
/// it never touches the eigendecomposition.
template <WalkScalar Scalar>
double avg_probability_quadrature(const HermitianOperator<Scalar>& h, const Vector<Scalar>& psi0, const Vector<Scalar>& y,
                                  double max_time, double abs_tol = 1e-8) {
  if (!(max_time > 0.0)) throw ValidationError("avg_probability_quadrature: T must be positive");
  detail::require_dim(psi0.size(), h.dim(), "psi0");
  detail::require_dim(y.size(), h.dim(), "y");
  const ComplexMatrix hc = h.matrix().template cast<Complex>();
  const ComplexVector a = psi0.template cast<Complex>();
  const ComplexVector b = y.template cast<Complex>();
  // Frequencies of the integrand are bounded by 2||H||_2 <= 2||H||_F; panels a
  // fraction of that period keep each Gauss-Kronrod rule well resolved.
  const double freq = 2.0 * hc.norm();
  const double width = freq > 0.0 ? std::numbers::pi / freq : max_time;
  const auto panels = static_cast<long>(std::ceil(max_time / width));
  const double h_panel = max_time / static_cast<double>(panels);
  // Panels share their node offsets, so the propagators to each node are
  // formed once and the state is stepped from panel to panel.
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;
  using Gauss = boost::math::quadrature::gauss<double, 15>;
  struct Rule {
    std::vector<ComplexMatrix> props;
    std::vector<double> weights;
  };
  auto make_rule = [&](const auto& abscissa, const auto& weights) {
    Rule r;
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      for (double x : {-abscissa[i], abscissa[i]}) {
        r.props.push_back((Complex(0.0, -0.5 * h_panel * (1.0 + x)) * hc).exp());
        r.weights.push_back(0.5 * h_panel * weights[i]);
        if (abscissa[i] == 0.0) break;
      }
    }
    return r;
  };
  const Rule kronrod = make_rule(Kronrod::abscissa(), Kronrod::weights());
  const Rule gauss = make_rule(Gauss::abscissa(), Gauss::weights());
  const ComplexMatrix step = (Complex(0.0, -h_panel) * hc).exp();
  auto apply = [&](const Rule& r, const ComplexVector& state) {
    double sum = 0.0;
    for (std::size_t i = 0; i < r.props.size(); ++i) sum += r.weights[i] * std::norm(b.dot(r.props[i] * state));
    return sum;
  };
  ComplexVector state = a;
  double integral = 0.0;
  double error_sum = 0.0;
  for (long i = 0; i < panels; ++i) {
    const double k = apply(kronrod, state);
    integral += k;
    error_sum += std::abs(k - apply(gauss, state));
    state = step * state;
  }
  if (error_sum / max_time > abs_tol) throw NumericalInconsistency("avg_probability_quadrature: tolerance not reached");
  return integral / max_time;
}

/// <rho> under the randomized evolution: in the eigenbasis the (j, k)
/// coherence is multiplied by Phi(E_k - E_j); blocks of equal energy are kept.
template <WalkScalar Scalar>
DensityOperator time_averaged_density(const EigenspacePartition<Scalar>& p, const DensityOperator& rho0, const TimeDistribution& dist) {
  detail::require_dim(rho0.dim(), p.dim(), "rho0");
  const ComplexMatrix v = p.spectrum().eigenvectors.template cast<Complex>();
  ComplexMatrix r = v.adjoint() * rho0.matrix() * v;
  const RealVector e = p.energies();
  for (Index k = 0; k < r.cols(); ++k) {
    for (Index j = 0; j < r.rows(); ++j) {
      const Index gj = p.group_of(j);
      const Index gk = p.group_of(k);
      if (gj != gk) r(j, k) *= characteristic(dist, e(gk) - e(gj));
    }
  }
  ComplexMatrix out = v * r * v.adjoint();
  return DensityOperator((out + out.adjoint()) / 2.0);
}

/// Monte Carlo realization of the walk: draw t, evolve exactly, measure.
/// Outcomes are labels assigned to computational basis indices (identity by
/// default), so a register marginal is one mapping away.
template <WalkScalar Scalar>
class WalkSampler {
 public:
  struct Shot {
    double time;
    Index outcome;
  };

  WalkSampler(const EigenspacePartition<Scalar>& p, const Vector<Scalar>& psi0, TimeDistribution dist,
              std::vector<Index> outcome_of_index = {}, Index outcomes = 0)
      : dist_(dist), outcome_of_index_(std::move(outcome_of_index)) {
    detail::require_dim(psi0.size(), p.dim(), "psi0");
    detail::require_normalized(psi0, "psi0");
    if (outcome_of_index_.empty()) {
      outcome_of_index_.resize(static_cast<std::size_t>(p.dim()));
      for (Index i = 0; i < p.dim(); ++i) outcome_of_index_[static_cast<std::size_t>(i)] = i;
      outcomes = p.dim();
    }
    if (static_cast<Index>(outcome_of_index_.size()) != p.dim()) throw ValidationError("WalkSampler: outcome map size mismatch");
    if (outcomes <= 0) outcomes = *std::max_element(outcome_of_index_.begin(), outcome_of_index_.end()) + 1;
    for (Index o : outcome_of_index_)
      if (o < 0 || o >= outcomes) throw ValidationError("WalkSampler: outcome label out of range");
    outcomes_ = outcomes;

    const Matrix<Scalar> parts = p.project_all(psi0);
    const RealVector e = p.energies();
    std::vector<Index> keep;
    for (Index g = 0; g < parts.cols(); ++g)
      if (parts.col(g).norm() > 1e-14) keep.push_back(g);
    components_.resize(p.dim(), static_cast<Index>(keep.size()));
    energies_.resize(static_cast<Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      components_.col(static_cast<Index>(c)) = parts.col(keep[c]).template cast<Complex>();
      energies_(static_cast<Index>(c)) = e(keep[c]);
    }
  }

  Index outcomes() const { return outcomes_; }

  /// Outcome probabilities at a fixed evolution time.
  RealVector distribution_at(double t) const {
    ComplexVector phases(energies_.size());
    for (Index c = 0; c < energies_.size(); ++c) phases(c) = Complex(std::cos(energies_(c) * t), -std::sin(energies_(c) * t));
    const ComplexVector amp = components_ * phases;
    RealVector probs = RealVector::Zero(outcomes_);
    for (Index i = 0; i < amp.size(); ++i) probs(outcome_of_index_[static_cast<std::size_t>(i)]) += std::norm(amp(i));
    return probs;
  }

  Shot draw(RandomStream& rng) const {
    double t = 0.0;
    for (int j = 0; j < dist_.summands(); ++j) t += dist_.max_time() * rng.uniform();
    const RealVector probs = distribution_at(t);
    const double u = rng.uniform() * probs.sum();
    double acc = 0.0;
    Index last = 0;
    for (Index o = 0; o < outcomes_; ++o) {
      if (probs(o) <= 0.0) continue;
      last = o;
      acc += probs(o);
      if (u < acc) return {t, o};
    }
    return {t, last};
  }

 private:
  TimeDistribution dist_;
  std::vector<Index> outcome_of_index_;
  Index outcomes_ = 0;
  ComplexMatrix components_;
  RealVector energies_;
};

struct EmpiricalDistribution {
  std::vector<std::uint64_t> counts;
  std::uint64_t trials = 0;

  double frequency(Index outcome) const {
    return static_cast<double>(counts.at(static_cast<std::size_t>(outcome))) / static_cast<double>(trials);
  }
};

/// `trials` independent shots; shot i draws from RandomStream(seed, i).
template <WalkScalar Scalar>
EmpiricalDistribution sample_walk(const EigenspacePartition<Scalar>& p, const Vector<Scalar>& psi0, const TimeDistribution& dist,
                                  std::uint64_t seed, std::uint64_t trials, std::vector<Index> outcome_of_index = {},
                                  Index outcomes = 0) {
  if (trials < 1) throw ValidationError("sample_walk: trials must be >= 1");
  const WalkSampler<Scalar> sampler(p, psi0, dist, std::move(outcome_of_index), outcomes);
  EmpiricalDistribution out{std::vector<std::uint64_t>(static_cast<std::size_t>(sampler.outcomes()), 0), trials};
  for (std::uint64_t i = 0; i < trials; ++i) {
    RandomStream rng(seed, i);
    ++out.counts[static_cast<std::size_t>(sampler.draw(rng).outcome)];
  }
  return out;
}

/// tau = min over the grid of (k T) / pbar_{T,k}. A grid can only bound the
/// true infimum over T > 0 from above.
struct HittingTimeEstimate {
  double tau = 0.0;
  double argmin_T = 0.0;
  double probability_at_argmin = 0.0;
  int summands = 1;
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  std::size_t grid_points = 0;
};

/// `per_decade` points per factor of ten from lo to hi inclusive.
inline std::vector<double> geometric_grid(double lo, double hi, int per_decade = 40) {
  if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw ValidationError("geometric_grid: need 0 < lo <= hi and per_decade >= 1");
  const double decades = std::log10(hi / lo);
  const auto steps = static_cast<long>(std::ceil(decades * per_decade - 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps + 1));
  for (long i = 0; i <= steps; ++i) grid.push_back(steps == 0 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(steps)));
  return grid;
}

template <WalkScalar Scalar>
HittingTimeEstimate hitting_time_estimate(const TransitionWeights<Scalar>& w, int summands, std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("hitting_time_estimate: empty grid");
  HittingTimeEstimate best;
  best.summands = summands;
  best.tau = std::numeric_limits<double>::infinity();
  best.grid_lo = *std::min_element(grid.begin(), grid.end());
  best.grid_hi = *std::max_element(grid.begin(), grid.end());
  best.grid_points = grid.size();
  for (double t : grid) {
    if (!(t > 0.0)) throw ValidationError("hitting_time_estimate: grid times must be positive");
    const TimeDistribution dist(t, summands);
    const double prob = w.averaged(dist);
    if (prob < kVanishingProbability) continue;
    const double ratio = dist.total_max_time() / prob;
    if (ratio < best.tau) {
      best.tau = ratio;
      best.argmin_T = t;
      best.probability_at_argmin = prob;
    }
  }
  if (!std::isfinite(best.tau)) throw DegenerateProbabilityError("hitting_time_estimate: success probability vanishes on the whole grid");
  return best;
}

template <WalkScalar Scalar>
HittingTimeEstimate hitting_time_estimate(const EigenspacePartition<Scalar>& p, const Vector<Scalar>& psi0, const Target<Scalar>& target,
                                          int summands, std::span<const double> grid) {
  return hitting_time_estimate(transition_weights(p, psi0, target), summands, grid);
}

}  // namespace ctqw
