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
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctqw/types.hpp"

namespace ctqw::markov {

inline constexpr double kRowSumTolerance = 1e-12;
inline constexpr double kChainTolerance = 1e-10;

// Row-stochastic matrix. Rows are checked against kRowSumTolerance and then
// renormalized, so downstream sums are exact to rounding.
class StochasticMatrix {
 public:
  explicit StochasticMatrix(RealMatrix p);
  // Random walk on an undirected weighted graph: p_xy = w_xy / sum_y w_xy.
  static StochasticMatrix from_weighted_graph(const RealMatrix& weights);

  Index dim() const { return p_.rows(); }
  const RealMatrix& matrix() const { return p_; }

 private:
  RealMatrix p_;
};

// D(P) = sqrt(P o P^T), entrywise.
RealMatrix discriminant(const RealMatrix& p);

class ReversibleChain {
 public:
  const StochasticMatrix& transition() const { return p_; }
  const RealMatrix& matrix() const { return p_.matrix(); }
  const RealVector& stationary() const { return pi_; }
  Index dim() const { return p_.dim(); }
  bool lazy() const { return lazy_; }

 private:
  friend ReversibleChain validate_chain(const StochasticMatrix&, bool);
  friend ReversibleChain lazify(const ReversibleChain&);
  ReversibleChain(StochasticMatrix p, RealVector pi, bool lazy) : p_(std::move(p)), pi_(std::move(pi)), lazy_(lazy) {}
  StochasticMatrix p_;
  RealVector pi_;
  bool lazy_;
};

// Strong connectivity, detailed balance and (optionally) aperiodicity, in
// that order. pi is the squared top eigenvector of the discriminant.
// Throws ChainError naming the failing premise.
ReversibleChain validate_chain(const StochasticMatrix& p, bool require_aperiodic = true);

// (I + P) / 2.
StochasticMatrix lazify(const StochasticMatrix& p);
ReversibleChain lazify(const ReversibleChain& chain);

// P(s) = (1 - s) P + s P', P' absorbing at v.
struct InterpolatedChain {
  Index marked = 0;
  double s = 0.0;
  RealMatrix p_s;
  RealVector pi_s;
  RealMatrix discriminant;
  RealVector eigenvalues;   // of D(P(s)), ascending; the last is 1
  RealMatrix eigenvectors;  // matching columns; the last is sqrt(pi(s))
  double gap = 0.0;         // 1 - lambda_{n-1}(s)

  Index dim() const { return p_s.rows(); }
  RealVector top_vector() const { return pi_s.cwiseSqrt(); }
};

InterpolatedChain interpolate(const ReversibleChain& chain, Index v, double s);

// s* = 1 - pi_v / (1 - pi_v); requires pi_v < 1/2.
double s_star(const ReversibleChain& chain, Index v);

// Expected steps to reach v from a pi-distributed start.
double classical_hitting_time(const ReversibleChain& chain, Index v);

struct GapHittingReport {
  double s_star = 0.0;
  double gap = 0.0;
  double hitting_time = 0.0;
  double product = 0.0;  // gap * hitting_time
};
GapHittingReport gap_vs_hitting_time(const ReversibleChain& chain, Index v);

struct SweepPoint {
  double s = 0.0;
  double gap = 0.0;
  double pi_v = 0.0;
};
std::vector<SweepPoint> interpolation_sweep(const ReversibleChain& chain, Index v, std::span<const double> s_values);

// Chain families.
StochasticMatrix complete_graph(Index n);
StochasticMatrix cycle_graph(Index n);
StochasticMatrix star_graph(Index n);
// Connected undirected graph with random positive weights and self-loops.
RealMatrix random_weighted_graph(Index n, std::uint64_t seed);

// {n, format: "dense" | "weighted-graph", data, marked}.
struct ChainDocument {
  StochasticMatrix chain;
  std::optional<Index> marked;
};
ChainDocument chain_from_json(const nlohmann::json& doc);
nlohmann::json chain_to_json(const StochasticMatrix& p, std::optional<Index> marked = std::nullopt);

}  // namespace ctqw::markov
