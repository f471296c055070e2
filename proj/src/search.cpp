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

#include "ctqw/search.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ctqw/errors.hpp"
#include "ctqw/walk.hpp"

namespace ctqw::search {

namespace {

constexpr double kZeroTolerance = 1e-8;
constexpr double kMatchTolerance = 1e-8;

RealMatrix block(const RealVector& amplitudes, Completion completion) {
  const Index n = amplitudes.size();
  RealMatrix q = RealMatrix::Identity(n, n);
  const RealVector w = RealVector::Unit(n, 0) - amplitudes;
  const double ww = w.squaredNorm();
  if (ww > 1e-28) q -= (2.0 / ww) * w * w.transpose();
  if (completion == Completion::rotated && n >= 2) {
    // Acts on the complement of e_0 only, so the first column survives.
    RealMatrix g = RealMatrix::Identity(n, n);
    if (n == 2) {
      g(1, 1) = -1.0;
    } else {
      const double c = std::cos(0.7), s = std::sin(0.7);
      g(1, 1) = c;
      g(1, 2) = -s;
      g(2, 1) = s;
      g(2, 2) = c;
    }
    q = q * g;
  }
  return q;
}

}  // namespace

RealMatrix build_isometry(const markov::InterpolatedChain& ic, Completion completion) {
  const Index n = ic.dim();
  RealMatrix v = RealMatrix::Zero(n * n, n * n);
  for (Index x = 0; x < n; ++x) {
    const RealVector amplitudes = ic.p_s.row(x).transpose().cwiseSqrt();
    v.block(x * n, x * n, n, n) = block(amplitudes, completion);
  }
  return v;
}

RealMatrix swap_operator(const RealMatrix& p) {
  const Index n = p.rows();
  RealMatrix s = RealMatrix::Zero(n * n, n * n);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) {
      const bool edge = p(x, y) > 0.0 || p(y, x) > 0.0;
      if (edge)
        s(edge_index(n, y, x), edge_index(n, x, y)) = 1.0;
      else
        s(edge_index(n, x, y), edge_index(n, x, y)) = 1.0;
    }
  return s;
}

ComplexMatrix build_search_hamiltonian(const markov::InterpolatedChain& ic, Completion completion) {
  const Index n = ic.dim();
  const RealMatrix v = build_isometry(ic, completion);
  const RealMatrix a = v.transpose() * swap_operator(ic.p_s) * v;
  // [A, Pi_0] keeps the columns (A Pi_0) and rows (Pi_0 A) at |x,0>.
  RealMatrix k = RealMatrix::Zero(n * n, n * n);
  for (Index x = 0; x < n; ++x) {
    const Index i = edge_index(n, x, 0);
    k.col(i) += a.col(i);
    k.row(i) -= a.row(i);
  }
  ComplexMatrix h = Complex(0.0, 1.0) * k.cast<Complex>();

  ComplexVector top = ComplexVector::Zero(n * n);
  const RealVector sqrt_pi = ic.top_vector();
  for (Index x = 0; x < n; ++x) top(edge_index(n, x, 0)) = sqrt_pi(x);
  const double residual = (h * top).norm();
  if (residual > 1e-9) {
    std::ostringstream os;
    os << "search Hamiltonian: |v_n(s),0> has residual " << residual;
    throw NumericalInconsistency(os.str());
  }
  return h;
}

SpectrumReport verify_spectrum(const ComplexMatrix& h, const markov::InterpolatedChain& ic) {
  const Index n = ic.dim();
  if (h.rows() != n * n) throw ValidationError("verify_spectrum: Hamiltonian dimension does not match the chain");
  const auto spectrum = decompose(HermitianOperator<Complex>(h));
  SpectrumReport r;
  r.expected_zero_multiplicity = (n - 1) * (n - 1) + 1;
  std::vector<double> negative;
  for (Index i = 0; i < spectrum.dim(); ++i) {
    const double e = spectrum.eigenvalues(i);
    if (std::abs(e) <= kZeroTolerance)
      ++r.zero_multiplicity;
    else if (e > 0.0)
      r.positive.push_back(e);
    else
      negative.push_back(-e);
  }
  std::sort(r.positive.begin(), r.positive.end());
  std::sort(negative.begin(), negative.end());

  // Chain eigenvalues other than the top one; |lambda| = 1 maps to E = 0.
  for (Index k = 0; k + 1 < n; ++k) {
    const double l = std::abs(ic.eigenvalues(k));
    if (1.0 - l > 1e-12) r.chain_lambda.push_back(l);
  }
  std::sort(r.chain_lambda.rbegin(), r.chain_lambda.rend());
  for (double e : r.positive) r.recovered_lambda.push_back(std::sqrt(std::max(0.0, 1.0 - e * e)));

  if (negative.size() != r.positive.size() || r.positive.size() != r.chain_lambda.size()) {
    std::ostringstream os;
    os.precision(17);
    os << "spectral mismatch: " << r.positive.size() << " positive and " << negative.size() << " negative eigenvalues for "
       << r.chain_lambda.size() << " chain eigenvalues; positive:";
    for (double e : r.positive) os << ' ' << e;
    os << "; chain:";
    for (double l : r.chain_lambda) os << ' ' << l;
    throw NumericalInconsistency(os.str());
  }
  std::vector<std::size_t> unmatched;
  for (std::size_t i = 0; i < r.positive.size(); ++i) {
    r.pairing_error = std::max(r.pairing_error, std::abs(r.positive[i] - negative[i]));
    // Compare E^2 with 1 - lambda^2; sqrt(1 - E^2) is ill-conditioned near E = 1.
    const double err = std::abs(r.positive[i] * r.positive[i] - (1.0 - r.chain_lambda[i] * r.chain_lambda[i]));
    r.lambda_error = std::max(r.lambda_error, err);
    if (err > kMatchTolerance) unmatched.push_back(i);
  }
  if (!unmatched.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "spectral mismatch: unmatched eigenvalues";
    for (std::size_t i : unmatched) os << ' ' << r.positive[i] << " (lambda " << r.chain_lambda[i] << ")";
    throw NumericalInconsistency(os.str());
  }

  const double lambda = ic.eigenvalues(n - 2);
  r.expected_gap = std::sqrt(std::max(0.0, 1.0 - lambda * lambda));
  r.amplified_gap = r.positive.empty() ? 0.0 : r.positive.front();
  r.sqrt_delta = std::sqrt(ic.gap);
  const double ratio = r.amplified_gap / r.sqrt_delta;
  r.ok = r.zero_multiplicity == r.expected_zero_multiplicity && r.pairing_error <= kMatchTolerance &&
         std::abs(r.amplified_gap - r.expected_gap) <= kMatchTolerance && ratio >= 1.0 / std::numbers::sqrt2 - 1e-12 &&
         ratio <= std::numbers::sqrt2 + 1e-12;
  return r;
}

namespace {

// Search needs s* > 0; a vertex carrying half the stationary mass is excluded.
void require_light_marked(const markov::ReversibleChain& chain, Index v, const char* who) {
  if (v < 0 || v >= chain.dim()) throw ValidationError(std::string(who) + ": marked state out of range");
  if (chain.stationary()(v) >= 0.5 - markov::kChainTolerance)
    throw ValidationError(std::string(who) + ": marked state has pi_v >= 1/2");
}

}  // namespace

OverlapReport overlap_preconditions(const markov::ReversibleChain& chain, const markov::InterpolatedChain& ic) {
  const Index v = ic.marked;
  require_light_marked(chain, v, "overlap_preconditions");
  const double s = markov::s_star(chain, v);
  if (std::abs(ic.s - s) > 1e-12) throw ValidationError("overlap_preconditions: chain is not interpolated at s*");
  const Index n = ic.dim();
  const RealVector top = ic.eigenvectors.col(n - 1);
  const RealVector sqrt_pi = chain.stationary().cwiseSqrt();
  OverlapReport r;
  r.initial_overlap = std::pow(top.dot(sqrt_pi), 2);
  r.marked_overlap = top(v) * top(v);
  // (|U> + |v>)/sqrt(2), |U> the normalized sqrt(pi) restricted to x != v.
  const double pv = chain.stationary()(v);
  RealVector closed = sqrt_pi / std::sqrt(1.0 - pv);
  closed(v) = 1.0;
  closed /= std::numbers::sqrt2;
  r.closed_form_error = (top - closed).cwiseAbs().maxCoeff();
  r.holds = r.initial_overlap >= 0.5 - 1e-9 && std::abs(r.marked_overlap - 0.5) <= 1e-9 && r.closed_form_error <= 1e-8;
  return r;
}

Algorithm2Result run_algorithm2(const markov::ReversibleChain& chain, Index v, double epsilon, std::uint64_t seed,
                                const Algorithm2Options& options) {
  if (!(epsilon > 0.0 && epsilon < 0.25)) throw ValidationError("run_algorithm2: epsilon must lie in (0, 1/4)");
  if (!(options.time_constant > 0.0)) throw ValidationError("run_algorithm2: time constant must be positive");
  require_light_marked(chain, v, "run_algorithm2");
  const markov::ReversibleChain work = options.lazy ? markov::lazify(chain) : chain;
  const Index n = work.dim();

  Algorithm2Result r;
  r.n = n;
  r.marked = v;
  r.epsilon = epsilon;
  r.seed = seed;
  r.s_star = markov::s_star(work, v);
  const auto ic = markov::interpolate(work, v, r.s_star);
  r.gap = ic.gap;
  r.hitting_time = markov::classical_hitting_time(work, v);
  r.max_time = options.time_constant * std::sqrt(r.hitting_time);
  r.summands = static_cast<int>(std::ceil(std::log2(1.0 / epsilon)));
  r.total_time = r.summands * r.max_time;
  const TimeDistribution dist(r.max_time, r.summands);

  const auto partition = eigenspaces(HermitianOperator<Complex>(build_search_hamiltonian(ic, options.completion)));
  ComplexVector psi0 = ComplexVector::Zero(n * n);
  const RealVector sqrt_pi = work.stationary().cwiseSqrt();
  for (Index x = 0; x < n; ++x) psi0(edge_index(n, x, 0)) = sqrt_pi(x);
  psi0 /= psi0.norm();

  std::vector<Index> first_register;
  for (Index y = 0; y < n; ++y) first_register.push_back(edge_index(n, v, y));
  const auto weights = transition_weights(partition, psi0, Target<Complex>::basis_set(first_register, n * n));
  r.p_bar = weights.averaged(dist);
  r.lemma5_holds = r.p_bar >= 0.25 - epsilon - kProbabilitySlack;

  // Lemma 3 with S = the zero eigenspace and y = |v,0>; the first-register
  // event contains |v,0>, so its probability dominates.
  Index zero = 0;
  for (Index g = 1; g < partition.size(); ++g)
    if (std::abs(partition.group(g).energy) < std::abs(partition.group(zero).energy)) zero = g;
  const ComplexVector projected = partition.project(zero, psi0);
  const double overlap = std::norm(projected(edge_index(n, v, 0)));
  r.lemma3_bound = overlap - std::numbers::sqrt3 * std::pow(2.0 / (r.max_time * std::sqrt(r.gap)), r.summands);
  r.lemma3_holds = r.p_bar >= r.lemma3_bound - kProbabilitySlack;
  r.zero_gap = delta_e_star(partition, zero);

  if (options.shots > 0) {
    std::vector<Index> outcome(static_cast<std::size_t>(n * n));
    for (Index i = 0; i < n * n; ++i) outcome[static_cast<std::size_t>(i)] = i / n;
    const auto counts = sample_walk(partition, psi0, dist, seed, options.shots, outcome, n);
    r.shots = options.shots;
    r.hits = counts.counts[static_cast<std::size_t>(v)];
    r.mc_frequency = counts.frequency(v);
  }
  return r;
}

}  // namespace ctqw::search
