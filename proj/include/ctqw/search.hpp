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

#include <cstdint>
#include <vector>

#include "ctqw/markov.hpp"
#include "ctqw/spectral.hpp"
#include "ctqw/types.hpp"

namespace ctqw::search {

// T = c sqrt(HT(P, v)); smallest c in {1, 2, 4, 8} that satisfied Lemma 5
// on the calibration families. Frozen, never tuned at run time.
inline constexpr double kSearchTimeConstant = 1.0;

// The space is H (x) H with |x, y> at index x * n + y; the reference state
// |0> is basis state 0 of the second register.
inline Index edge_index(Index n, Index x, Index y) { return x * n + y; }

// Two ways of extending |x,0> -> sum_y sqrt(p_xy) |x,y> to an orthogonal
// matrix on each block: a Householder reflection, and the same reflection
// composed with a rotation of the complement of |0>.
enum class Completion { householder, rotated };

// V(s), block diagonal in the first register.
RealMatrix build_isometry(const markov::InterpolatedChain& ic, Completion completion = Completion::householder);

// S |x,y> = |y,x> on edges (p_xy > 0 or p_yx > 0), identity elsewhere.
RealMatrix swap_operator(const RealMatrix& p);

// H(s) = i [V^T S V, Pi_0]. Throws NumericalInconsistency if |v_n(s),0> is
// not annihilated within 1e-9.
ComplexMatrix build_search_hamiltonian(const markov::InterpolatedChain& ic, Completion completion = Completion::householder);

struct SpectrumReport {
  Index zero_multiplicity = 0;
  Index expected_zero_multiplicity = 0;  // (n-1)^2 + 1
  std::vector<double> positive;          // nonzero eigenvalues E > 0, ascending
  double pairing_error = 0.0;            // max |E_k^+ + E_k^-|
  std::vector<double> recovered_lambda;  // sqrt(1 - E^2), descending
  std::vector<double> chain_lambda;      // |lambda_k(s)|, k < n, descending
  double lambda_error = 0.0;
  double amplified_gap = 0.0;       // smallest positive eigenvalue
  double expected_gap = 0.0;        // sqrt(1 - lambda_{n-1}^2)
  double sqrt_delta = 0.0;          // sqrt(Delta(s))
  bool ok = false;                  // every check above passed
};

// Compares the spectrum of H(s) with the discriminant of P(s). Throws
// NumericalInconsistency listing the unmatched values if the nonzero
// eigenvalues cannot be paired with the chain spectrum.
SpectrumReport verify_spectrum(const ComplexMatrix& h, const markov::InterpolatedChain& ic);

struct OverlapReport {
  double initial_overlap = 0.0;  // |<v_n(s*)|pi(0)>|^2, at least 1/2
  double marked_overlap = 0.0;   // |<v|v_n(s*)>|^2, exactly 1/2
  double closed_form_error = 0.0;
  bool holds = false;
};

// `ic` must sit at s = s*. Uses the numerically computed top eigenvector.
OverlapReport overlap_preconditions(const markov::ReversibleChain& chain, const markov::InterpolatedChain& ic);

struct Algorithm2Options {
  bool lazy = true;
  double time_constant = kSearchTimeConstant;
  std::uint64_t shots = 0;  // Monte Carlo shots; 0 skips sampling
  Completion completion = Completion::householder;
};

struct Algorithm2Result {
  Index n = 0;
  Index marked = 0;
  double epsilon = 0.0;
  double s_star = 0.0;
  double gap = 0.0;  // Delta(s*)
  double hitting_time = 0.0;
  double max_time = 0.0;  // T
  int summands = 0;       // k
  double total_time = 0.0;  // k T
  double p_bar = 0.0;
  bool lemma5_holds = false;  // p_bar >= 1/4 - epsilon
  double lemma3_bound = 0.0;  // |<v,0|Pi_0|pi,0>|^2 - sqrt(3)(2/(T sqrt(Delta)))^k
  bool lemma3_holds = false;
  double zero_gap = 0.0;  // distance from 0 to the rest of the spectrum of H(s*)
  std::uint64_t shots = 0;
  std::uint64_t hits = 0;
  double mc_frequency = 0.0;
  std::uint64_t seed = 0;
};

// Algorithm 2: prepare |pi(0),0>, evolve under H(s*) for a random time with
// T = c sqrt(HT) and k = ceil(log2(1/epsilon)), measure the first register.
Algorithm2Result run_algorithm2(const markov::ReversibleChain& chain, Index v, double epsilon, std::uint64_t seed,
                                const Algorithm2Options& options = {});

}  // namespace ctqw::search
