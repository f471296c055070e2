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

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctqw/rng.hpp"
#include "ctqw/spectral.hpp"
#include "ctqw/types.hpp"
#include "ctqw/walk.hpp"

namespace ctqw::gluedtrees {

using Label = std::uint64_t;

// Two complete binary trees of depth d whose leaf layers are joined by a
// random cycle alternating between the trees. Vertices carry random labels;
// a walker learns the graph only through neighbor queries.
class Instance {
 public:
  static Instance generate(int depth, std::uint64_t seed);
  static Instance from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  int depth() const { return depth_; }
  Label entrance() const { return entrance_; }
  Label exit() const { return exit_; }
  std::size_t vertex_count() const { return adjacency_.size(); }
  int label_bits() const { return label_bits_; }

  // The oracle: neighbors of `label` in a seed-dependent order.
  const std::vector<Label>& neighbors(Label label) const;

  // Undirected edges as sorted label pairs; for structural tests only.
  std::vector<std::pair<Label, Label>> edges() const;

  // Checks the degree pattern, the tree shape and the alternating cycle.
  void validate() const;

 private:
  Instance() = default;
  int depth_ = 0;
  int label_bits_ = 0;
  Label entrance_ = 0;
  Label exit_ = 0;
  std::map<Label, std::vector<Label>> adjacency_;
};

// Query-counting view of an instance. Full-graph simulations go through
// this and nothing else, so the count shows what was learned by queries.
class Oracle {
 public:
  explicit Oracle(const Instance& instance) : instance_(&instance) {}
  Label entrance() const { return instance_->entrance(); }
  const std::vector<Label>& neighbors(Label label) const {
    queries_.fetch_add(1, std::memory_order_relaxed);
    return instance_->neighbors(label);
  }
  std::uint64_t queries() const { return queries_.load(std::memory_order_relaxed); }

 private:
  const Instance* instance_;
  mutable std::atomic<std::uint64_t> queries_{0};
};

inline std::vector<Label> oracle_neighbors(const Instance& instance, Label label) { return instance.neighbors(label); }

// Graph explored from the entrance by oracle queries, with H = A / sqrt(2)
// so that the column restriction has unit hopping.
struct ExploredGraph {
  std::vector<Label> labels;  // discovery order; labels[0] is the entrance
  RealMatrix hamiltonian;
  Index exit_index = -1;
  std::uint64_t queries = 0;
};

// The exit is recognized as the only other vertex of degree 2.
ExploredGraph explore(const Oracle& oracle);

// Tridiagonal column Hamiltonian on 2n columns: hopping 1, except sqrt(2)
// across the glued middle. Index j here is column j + 1.
RealMatrix column_hamiltonian(int two_n);

struct MomentumSolution {
  int two_n = 0;
  double p = 0.0;   // in (0, pi)
  int branch = 0;   // +1 or -1: sin((n+1)p) / sin(np) = branch * sqrt(2)
  int ell = 0;      // 1-based position within the branch, ordered by p
  double energy = 0.0;
  double alpha = 0.0;  // 1 / sqrt(2 sum_{j<=n} sin^2(pj))
  double residual = 0.0;
};

// All sine-type eigenmomenta. Counts are cross-checked against the dense
// spectrum together with the hyperbolic pair; NumericalInconsistency if
// they disagree.
std::vector<MomentumSolution> solve_momenta(int two_n);

// sinh-type pair E = +-2 cosh(q), sinh((n+1)q) / sinh(nq) = sqrt(2). Exists
// iff n >= 3.
struct HyperbolicPair {
  double q = 0.0;
  double energy = 0.0;  // the positive member; the other is -energy
};
std::optional<HyperbolicPair> hyperbolic_pair(int two_n);

RealVector eigenstate_from_momentum(const MomentumSolution& sol, int two_n);
// sign = +1 for E = 2 cosh q, -1 for E = -2 cosh q.
RealVector eigenstate_from_hyperbolic(const HyperbolicPair& pair, int two_n, int sign);

struct SubspaceS {
  std::vector<MomentumSolution> members;
  std::vector<Index> groups;  // eigenspace indices in `partition`
  GapReport gaps;
  bool sin_p_in_range = false;  // 1/sqrt(2) < sin p < 1 for every member
  double alpha4_mass = 0.0;     // sum of alpha_p^4 over members
};

// -sqrt(2) branch with ceil(n/4) <= ell <= ceil(3n/4).
SubspaceS subspace_S(int two_n, const EigenspacePartition<double>& partition);
SubspaceS subspace_S(int two_n);

// Column-space walk from col 1 to col 2n with its transition weights.
struct ColumnWalk {
  int two_n = 0;
  EigenspacePartition<double> partition;
  TransitionWeights<double> weights;
};
ColumnWalk column_walk(int two_n);

// ceil(log2(5n)) computed in integers.
int corollary_summands(int n);

// Hitting times under the three time schedules: the Definition-2 minimum
// over a geometric grid within each schedule's window.
struct ScheduleTaus {
  HittingTimeEstimate lemma1;     // k = 1, T in [n^4/16, 64 n^4]
  HittingTimeEstimate lemma2;     // k = 1, T in [n/16, 64 n]
  HittingTimeEstimate lemma3;     // k = ceil(log2 5n), T in [n/16, 64 n]
  HittingTimeEstimate corollary;  // T = 64n, k = ceil(log2 5n), single point
};
ScheduleTaus schedule_hitting_times(const ColumnWalk& walk, int per_decade = 40);

struct EquivalenceReport {
  int depth = 0;
  int two_n = 0;
  double full_probability = 0.0;
  double column_probability = 0.0;
  double difference = 0.0;
  std::size_t vertices = 0;
  std::uint64_t queries = 0;
};

// Exit probability of the full |V|-dimensional walk against the column
// walk with two_n = 2(depth + 1).
EquivalenceReport full_vs_column_equivalence(const Instance& instance, const TimeDistribution& dist);

struct Algorithm1Options {
  bool box_summands = false;  // k = 5n as printed in the algorithm box
  int max_repetitions = 0;    // 0: 20n
};

struct Algorithm1Run {
  bool success = false;
  int repetitions = 0;
  double evolved_time = 0.0;  // sum of sampled evolution times
};

// Algorithm 1 with T = 64n and k = ceil(log2 5n): repeat the randomized walk
// from the entrance until the exit is measured, at most 20n times.
class Algorithm1 {
 public:
  Algorithm1(int two_n, Algorithm1Options options = {});
  // Full-graph mode: the walk runs on the graph explored through `oracle`.
  Algorithm1(const Oracle& oracle, int depth, Algorithm1Options options = {});

  int two_n() const { return two_n_; }
  int n() const { return two_n_ / 2; }
  const TimeDistribution& distribution() const { return dist_; }
  int max_repetitions() const { return max_repetitions_; }
  double shot_probability() const { return shot_probability_; }
  // Per-shot probability at least 1/(20n).
  bool certified() const { return shot_probability_ >= 1.0 / (20.0 * n()); }
  // Worst-case total evolution time, 20n k T.
  double max_total_time() const { return max_repetitions_ * dist_.total_max_time(); }

  // One run; draws come from RandomStream(seed, run_index).
  Algorithm1Run run(std::uint64_t seed, std::uint64_t run_index) const;

 private:
  void init(const RealMatrix& h, Index exit_index, const Algorithm1Options& options);
  int two_n_ = 0;
  TimeDistribution dist_{1.0, 1};
  int max_repetitions_ = 0;
  double shot_probability_ = 0.0;
  Index exit_index_ = 0;
  std::optional<WalkSampler<double>> sampler_;
};

}  // namespace ctqw::gluedtrees
