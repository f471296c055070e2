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

#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "ctqw/errors.hpp"
#include "ctqw/gluedtrees.hpp"

using namespace ctqw;
using namespace ctqw::gluedtrees;

namespace {

std::map<std::size_t, int> degree_histogram(const Instance& g) {
  std::map<Label, int> degree;
  for (const auto& [a, b] : g.edges()) {
    ++degree[a];
    ++degree[b];
  }
  std::map<std::size_t, int> hist;
  for (const auto& [l, d] : degree) ++hist[static_cast<std::size_t>(d)];
  return hist;
}

// Edges whose endpoints are both at distance `depth` from their own root:
// the leaf-gluing cycle. Found by breadth-first search from each root.
std::size_t leaf_cycle_edges(const Instance& g) {
  auto distances = [&](Label root) {
    std::map<Label, int> dist{{root, 0}};
    std::vector<Label> queue{root};
    for (std::size_t i = 0; i < queue.size(); ++i)
      for (Label b : g.neighbors(queue[i]))
        if (dist.emplace(b, dist[queue[i]] + 1).second) queue.push_back(b);
    return dist;
  };
  const auto from_in = distances(g.entrance());
  const auto from_out = distances(g.exit());
  std::size_t count = 0;
  for (const auto& [a, b] : g.edges()) {
    const bool a_left = from_in.at(a) == g.depth(), b_right = from_out.at(b) == g.depth();
    const bool b_left = from_in.at(b) == g.depth(), a_right = from_out.at(a) == g.depth();
    if ((a_left && b_right) || (b_left && a_right)) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("instance shape") {
  const auto g2 = Instance::generate(2, 1);
  CHECK(g2.vertex_count() == 14);
  CHECK(g2.edges().size() == 6 + 6 + 8);
  CHECK(leaf_cycle_edges(g2) == 8);
  const auto g4 = Instance::generate(4, 1);
  CHECK(g4.vertex_count() == 62);
  const auto hist = degree_histogram(g4);
  CHECK(hist.at(2) == 2);
  CHECK(hist.at(3) == 60);
  CHECK(hist.size() == 2);
  CHECK_THROWS_AS(Instance::generate(1, 1), ValidationError);
  g4.validate();
}

TEST_CASE("labels") {
  const auto g = Instance::generate(5, 3);
  CHECK((std::uint64_t{1} << g.label_bits()) >= 4 * g.vertex_count());
  std::set<Label> labels;
  for (const auto& [a, b] : g.edges()) {
    labels.insert(a);
    labels.insert(b);
    CHECK(a < (Label{1} << g.label_bits()));
  }
  CHECK(labels.size() == g.vertex_count());
}

TEST_CASE("generation is seeded") {
  CHECK(Instance::generate(4, 7).edges() == Instance::generate(4, 7).edges());
  CHECK(Instance::generate(4, 7).edges() != Instance::generate(4, 8).edges());
}

TEST_CASE("json round trip and validation") {
  const auto g = Instance::generate(3, 11);
  const auto back = Instance::from_json(g.to_json());
  CHECK(back.edges() == g.edges());
  CHECK(back.entrance() == g.entrance());
  CHECK(back.exit() == g.exit());

  // Cutting one leaf edge breaks the degree pattern.
  auto doc = g.to_json();
  const auto [a, b] = g.edges().back();
  auto& na = doc["adjacency"][std::to_string(a)];
  auto& nb = doc["adjacency"][std::to_string(b)];
  na.erase(std::find(na.begin(), na.end(), nlohmann::json(b)));
  nb.erase(std::find(nb.begin(), nb.end(), nlohmann::json(a)));
  CHECK_THROWS_AS(Instance::from_json(doc), ValidationError);
  CHECK_THROWS_AS(Instance::from_json(nlohmann::json{{"depth", 3}}), ValidationError);
}

TEST_CASE("oracle") {
  const auto g = Instance::generate(3, 5);
  CHECK(oracle_neighbors(g, g.entrance()).size() == 2);
  const auto leaf_edges = leaf_cycle_edges(g);
  CHECK(leaf_edges == 16);
  // Every vertex at depth 3 from the entrance is a leaf with 1 parent + 2 cycle edges.
  std::map<Label, int> dist{{g.entrance(), 0}};
  std::vector<Label> queue{g.entrance()};
  for (std::size_t i = 0; i < queue.size(); ++i)
    for (Label b : g.neighbors(queue[i]))
      if (dist.emplace(b, dist[queue[i]] + 1).second) queue.push_back(b);
  for (const auto& [l, d] : dist)
    if (d == 3) CHECK(oracle_neighbors(g, l).size() == 3);
  Label unknown = 0;
  while (dist.count(unknown)) ++unknown;
  CHECK_THROWS_AS(oracle_neighbors(g, unknown), InvalidLabelError);

  const Oracle oracle(g);
  const auto explored = explore(oracle);
  CHECK(explored.labels.size() == g.vertex_count());
  CHECK(explored.queries == g.vertex_count());
  CHECK(explored.labels[static_cast<std::size_t>(explored.exit_index)] == g.exit());
}

TEST_CASE("column Hamiltonian") {
  const RealMatrix h = column_hamiltonian(8);
  CHECK(h(3, 4) == doctest::Approx(std::numbers::sqrt2));
  CHECK(h(0, 1) == 1.0);
  CHECK(h(0, 2) == 0.0);
  CHECK(h(4, 5) == 1.0);
  CHECK(h.diagonal().isZero());
  CHECK(h == h.transpose());
  CHECK_THROWS_AS(column_hamiltonian(7), ValidationError);
  CHECK_THROWS_AS(column_hamiltonian(2), ValidationError);
}

TEST_CASE("momenta") {
  const auto sols = solve_momenta(8);
  REQUIRE(sols.size() == 6);
  for (std::size_t i = 0; i < sols.size(); ++i) {
    const auto& s = sols[i];
    const int n = 4;
    CHECK(std::abs(std::sin((n + 1) * s.p) / std::sin(n * s.p) - s.branch * std::numbers::sqrt2) <= 1e-10);
    CHECK(s.energy == doctest::Approx(2.0 * std::cos(s.p)));
    if (i > 0) CHECK(s.branch != sols[i - 1].branch);
  }
  CHECK(solve_momenta(4).size() == 4);
  CHECK_FALSE(hyperbolic_pair(4));

  // Leading asymptotics of the lowest -sqrt(2) root and its isolation.
  const int n = 16;
  const auto big = solve_momenta(2 * n);
  CHECK(big.size() == static_cast<std::size_t>(2 * n - 2));
  const MomentumSolution* first = nullptr;
  for (const auto& s : big)
    if (s.branch == -1 && s.ell == 1) first = &s;
  REQUIRE(first);
  const double approx = std::numbers::pi / n - std::numbers::pi / ((1.0 + std::numbers::sqrt2) * n * n);
  CHECK(std::abs(first->p - approx) <= 1.0 / (n * n * n));
  double nearest = INFINITY;
  for (const auto& s : big)
    if (&s != first) nearest = std::min(nearest, std::abs(s.p - first->p));
  CHECK(nearest > std::numbers::pi / ((1.0 + std::numbers::sqrt2) * n * n) - 1.0 / (n * n * n));
}

TEST_CASE("analytic eigenstates") {
  for (int two_n : {8, 14, 24}) {
    const RealMatrix h = column_hamiltonian(two_n);
    const auto d = decompose(HermitianOperator<double>(h));
    for (const auto& s : solve_momenta(two_n)) {
      const RealVector v = eigenstate_from_momentum(s, two_n);
      CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-10));
      CHECK((h * v - s.energy * v).norm() <= 1e-9);
      if (s.branch == -1) CHECK(v(0) == doctest::Approx(s.alpha * std::sin(s.p)));
      Index j = 0;
      while (std::abs(d.eigenvalues(j) - s.energy) > 1e-9) ++j;
      CHECK(std::abs(std::abs(v.dot(d.eigenvectors.col(j))) - 1.0) <= 1e-8);
    }
    const auto hyp = hyperbolic_pair(two_n);
    REQUIRE(hyp);
    for (int sign : {1, -1}) {
      const RealVector v = eigenstate_from_hyperbolic(*hyp, two_n, sign);
      CHECK((h * v - sign * hyp->energy * v).norm() <= 1e-9);
    }
  }
  CHECK_THROWS_AS(eigenstate_from_momentum(solve_momenta(8).front(), 10), ValidationError);
}

TEST_CASE("sinh-type eigenstates decouple the ends") {
  double previous = INFINITY;
  for (int n = 4; n <= 12; ++n) {
    const auto hyp = hyperbolic_pair(2 * n);
    REQUIRE(hyp);
    const RealVector v = eigenstate_from_hyperbolic(*hyp, 2 * n, 1);
    const double product = std::abs(v(0) * v(2 * n - 1));
    CHECK(product * 1.5 <= previous);
    previous = product;
  }
}

TEST_CASE("subspace S") {
  const int two_n = 16, n = 8;
  const auto s = subspace_S(two_n);
  CHECK(s.members.size() == static_cast<std::size_t>((3 * n + 3) / 4 - (n + 3) / 4 + 1));
  // 1/sqrt(2) < sin p < 1 holds strictly inside the l window; the rounded
  // endpoints l = ceil(n/4) and l = ceil(3n/4) fall just outside.
  CHECK_FALSE(s.sin_p_in_range);
  for (int m = 4; m <= 32; ++m) {
    for (const auto& sol : subspace_S(2 * m).members) {
      if (sol.ell == (m + 3) / 4 || sol.ell == (3 * m + 3) / 4) continue;
      CHECK(std::sin(sol.p) > 1.0 / std::numbers::sqrt2);
      CHECK(std::sin(sol.p) < 1.0);
    }
  }
  REQUIRE(s.gaps.subset);
  CHECK(s.gaps.subset->delta_e_s >= std::numbers::pi / (16.0 * n));
  CHECK(s.gaps.subset->within > std::numbers::pi / (16.0 * n));
  CHECK(s.gaps.subset->to_rest > std::numbers::pi / (12.0 * n));
  CHECK(s.alpha4_mass >= 1.0 / (4.0 * n));
  for (const auto& m : s.members) CHECK(m.alpha > 1.0 / std::sqrt(2.0 * n));
}

TEST_CASE("full graph walk equals the column walk") {
  for (int depth : {2, 4}) {
    const auto g = Instance::generate(depth, 17);
    const int n = depth + 1;
    const auto r = full_vs_column_equivalence(g, TimeDistribution(64.0 * n, corollary_summands(n)));
    CHECK(r.two_n == 2 * (depth + 1));
    CHECK(r.difference <= 1e-8);
    CHECK(r.vertices == g.vertex_count());
  }
  const TimeDistribution dist(9.0, 2);
  const auto a = full_vs_column_equivalence(Instance::generate(3, 1), dist);
  const auto b = full_vs_column_equivalence(Instance::generate(3, 2), dist);
  CHECK(std::abs(a.full_probability - b.full_probability) <= 1e-8);
  CHECK_THROWS_AS(full_vs_column_equivalence(Instance::generate(7, 1), dist), ValidationError);
}

TEST_CASE("algorithm 1") {
  const int two_n = 12, n = 6;
  const Algorithm1 alg(two_n);
  CHECK(alg.distribution().max_time() == 64.0 * n);
  CHECK(alg.distribution().summands() == corollary_summands(n));
  CHECK(corollary_summands(n) == 5);  // ceil(log2 30)
  CHECK(alg.shot_probability() >= 1.0 / (4.0 * n) - 1.0 / (5.0 * n));
  CHECK(alg.certified());
  CHECK(alg.max_repetitions() == 20 * n);
  CHECK(alg.max_total_time() <= 20.0 * n * corollary_summands(n) * 64.0 * n);

  int successes = 0;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const auto run = alg.run(123, r);
    successes += run.success;
    CHECK(run.repetitions <= alg.max_repetitions());
    CHECK(run.evolved_time <= run.repetitions * alg.distribution().total_max_time());
  }
  CHECK(successes >= 500);
  CHECK(alg.run(5, 9).evolved_time == alg.run(5, 9).evolved_time);

  const Algorithm1 boxed(two_n, {true, 0});
  CHECK(boxed.distribution().summands() == 5 * n);

  // Full-graph mode sees the graph only through the oracle.
  const auto g = Instance::generate(n - 1, 4);
  const Oracle oracle(g);
  const Algorithm1 full(oracle, n - 1);
  CHECK(oracle.queries() == g.vertex_count());
  CHECK(std::abs(full.shot_probability() - alg.shot_probability()) <= 1e-8);
}
