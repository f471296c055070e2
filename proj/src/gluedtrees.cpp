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

#include "ctqw/gluedtrees.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

#include <boost/math/tools/roots.hpp>

#include "ctqw/errors.hpp"

namespace ctqw::gluedtrees {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr int kSamplesPerInterval = 64;
constexpr double kMomentumResidual = 1e-10;
constexpr double kSpectrumMatch = 1e-9;

template <typename T>
void shuffle(std::vector<T>& v, RandomStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

int ceil_log2(std::uint64_t x) {
  int b = 0;
  while ((std::uint64_t{1} << b) < x) ++b;
  return b;
}

std::pair<double, double> refine(const auto& f, double a, double b) {
  std::uintmax_t iterations = 200;
  return boost::math::tools::toms748_solve(f, a, b, boost::math::tools::eps_tolerance<double>(50), iterations);
}

void require_two_n(int two_n, int minimum) {
  if (two_n < minimum || two_n % 2 != 0) {
    std::ostringstream os;
    os << "two_n must be even and >= " << minimum << ", got " << two_n;
    throw ValidationError(os.str());
  }
}

}  // namespace

Instance Instance::generate(int depth, std::uint64_t seed) {
  if (depth < 2) throw ValidationError("glued trees: depth must be >= 2");
  if (depth > 24) throw ValidationError("glued trees: depth too large");
  const std::uint64_t per_tree = (std::uint64_t{1} << (depth + 1)) - 1;
  const std::uint64_t vertices = 2 * per_tree;
  const std::uint64_t first_leaf = std::uint64_t{1} << depth;

  Instance inst;
  inst.depth_ = depth;
  inst.label_bits_ = 2 * ceil_log2(vertices) + 2;

  // Stream 0: labels, stream 1: leaf cycle, stream 2: neighbor order.
  RandomStream label_rng(seed, 0);
  std::vector<Label> label(vertices);
  std::set<Label> used;
  for (auto& l : label) {
    do l = label_rng.below(std::uint64_t{1} << inst.label_bits_);
    while (!used.insert(l).second);
  }
  // Vertex id t * per_tree + (heap - 1), heap index 1-based within tree t.
  auto id = [&](std::uint64_t tree, std::uint64_t heap) { return label[tree * per_tree + heap - 1]; };
  auto connect = [&](Label a, Label b) {
    inst.adjacency_[a].push_back(b);
    inst.adjacency_[b].push_back(a);
  };
  for (std::uint64_t t = 0; t < 2; ++t)
    for (std::uint64_t h = 1; h < first_leaf; ++h) {
      connect(id(t, h), id(t, 2 * h));
      connect(id(t, h), id(t, 2 * h + 1));
    }

  RandomStream cycle_rng(seed, 1);
  std::vector<std::uint64_t> left, right;
  for (std::uint64_t h = first_leaf; h <= per_tree; ++h) {
    left.push_back(h);
    right.push_back(h);
  }
  shuffle(left, cycle_rng);
  shuffle(right, cycle_rng);
  const std::size_t m = left.size();
  for (std::size_t i = 0; i < m; ++i) {
    connect(id(0, left[i]), id(1, right[i]));
    connect(id(1, right[i]), id(0, left[(i + 1) % m]));
  }

  RandomStream order_rng(seed, 2);
  for (auto& [l, nbrs] : inst.adjacency_) shuffle(nbrs, order_rng);
  inst.entrance_ = id(0, 1);
  inst.exit_ = id(1, 1);
  return inst;
}

const std::vector<Label>& Instance::neighbors(Label label) const {
  auto it = adjacency_.find(label);
  if (it == adjacency_.end()) {
    std::ostringstream os;
    os << "glued trees: unknown label " << label;
    throw InvalidLabelError(os.str());
  }
  return it->second;
}

std::vector<std::pair<Label, Label>> Instance::edges() const {
  std::vector<std::pair<Label, Label>> out;
  for (const auto& [a, nbrs] : adjacency_)
    for (Label b : nbrs)
      if (a < b) out.emplace_back(a, b);
  std::sort(out.begin(), out.end());
  return out;
}

void Instance::validate() const {
  const std::uint64_t per_tree = (std::uint64_t{1} << (depth_ + 1)) - 1;
  if (adjacency_.size() != 2 * per_tree) throw ValidationError("glued trees: wrong vertex count");
  for (const auto& [a, nbrs] : adjacency_) {
    const std::size_t want = (a == entrance_ || a == exit_) ? 2 : 3;
    if (nbrs.size() != want) throw ValidationError("glued trees: wrong degree at label " + std::to_string(a));
    std::set<Label> distinct(nbrs.begin(), nbrs.end());
    if (distinct.size() != nbrs.size() || distinct.count(a)) throw ValidationError("glued trees: multi-edge or self-loop");
    for (Label b : nbrs) {
      auto it = adjacency_.find(b);
      if (it == adjacency_.end() || std::find(it->second.begin(), it->second.end(), a) == it->second.end())
        throw ValidationError("glued trees: adjacency is not symmetric");
    }
  }
  // Layers by distance from the entrance must be 1, 2, ..., 2^d, 2^d, ..., 2, 1.
  std::map<Label, int> dist{{entrance_, 0}};
  std::deque<Label> queue{entrance_};
  while (!queue.empty()) {
    const Label a = queue.front();
    queue.pop_front();
    for (Label b : adjacency_.at(a))
      if (dist.emplace(b, dist[a] + 1).second) queue.push_back(b);
  }
  if (dist.size() != adjacency_.size()) throw ValidationError("glued trees: graph is disconnected");
  std::vector<std::uint64_t> layer(static_cast<std::size_t>(2 * depth_ + 2), 0);
  for (const auto& [l, d] : dist) {
    if (d >= static_cast<int>(layer.size())) throw ValidationError("glued trees: vertex too far from entrance");
    ++layer[static_cast<std::size_t>(d)];
  }
  for (int j = 0; j <= depth_; ++j) {
    const std::uint64_t want = std::uint64_t{1} << j;
    if (layer[static_cast<std::size_t>(j)] != want || layer[static_cast<std::size_t>(2 * depth_ + 1 - j)] != want)
      throw ValidationError("glued trees: layer sizes are not those of two glued binary trees");
  }
  if (dist.at(exit_) != 2 * depth_ + 1) throw ValidationError("glued trees: exit is not opposite the entrance");
  // The two leaf layers must be joined by one alternating cycle.
  std::map<Label, std::vector<Label>> crossing;
  for (const auto& [l, d] : dist) {
    if (d != depth_ && d != depth_ + 1) continue;
    for (Label b : adjacency_.at(l))
      if (dist.at(b) == 2 * depth_ + 1 - d) crossing[l].push_back(b);
    if (crossing[l].size() != 2) throw ValidationError("glued trees: leaf does not have exactly two cycle edges");
  }
  const Label start = crossing.begin()->first;
  Label prev = start;
  Label cur = crossing[start][0];
  std::size_t length = 1;
  while (cur != start && length <= crossing.size()) {
    const auto& c = crossing[cur];
    const Label next = c[0] != prev ? c[0] : c[1];
    prev = cur;
    cur = next;
    ++length;
  }
  if (cur != start || length != crossing.size()) throw ValidationError("glued trees: leaf edges do not form a single cycle");
}

nlohmann::json Instance::to_json() const {
  nlohmann::json adj = nlohmann::json::object();
  for (const auto& [l, nbrs] : adjacency_) adj[std::to_string(l)] = nbrs;
  return {{"depth", depth_}, {"label_bits", label_bits_}, {"entrance", entrance_}, {"exit", exit_}, {"adjacency", adj}};
}

Instance Instance::from_json(const nlohmann::json& doc) {
  Instance inst;
  try {
    inst.depth_ = doc.at("depth").get<int>();
    inst.label_bits_ = doc.value("label_bits", 64);
    inst.entrance_ = doc.at("entrance").get<Label>();
    inst.exit_ = doc.at("exit").get<Label>();
    for (const auto& [key, nbrs] : doc.at("adjacency").items()) inst.adjacency_[std::stoull(key)] = nbrs.get<std::vector<Label>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("glued trees: malformed instance document: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ValidationError(std::string("glued trees: malformed label: ") + e.what());
  }
  if (inst.depth_ < 2) throw ValidationError("glued trees: depth must be >= 2");
  inst.validate();
  return inst;
}

ExploredGraph explore(const Oracle& oracle) {
  ExploredGraph g;
  std::unordered_map<Label, Index> index;
  std::vector<std::vector<Label>> nbrs;
  index.emplace(oracle.entrance(), 0);
  g.labels.push_back(oracle.entrance());
  for (std::size_t head = 0; head < g.labels.size(); ++head) {
    nbrs.push_back(oracle.neighbors(g.labels[head]));
    for (Label b : nbrs.back())
      if (index.emplace(b, static_cast<Index>(g.labels.size())).second) g.labels.push_back(b);
  }
  const auto dim = static_cast<Index>(g.labels.size());
  g.hamiltonian = RealMatrix::Zero(dim, dim);
  for (Index a = 0; a < dim; ++a) {
    for (Label b : nbrs[static_cast<std::size_t>(a)]) g.hamiltonian(a, index.at(b)) = 1.0 / kSqrt2;
    if (a > 0 && nbrs[static_cast<std::size_t>(a)].size() == 2) {
      if (g.exit_index >= 0) throw ValidationError("glued trees: more than one candidate exit");
      g.exit_index = a;
    }
  }
  if (g.exit_index < 0) throw ValidationError("glued trees: no exit found");
  g.queries = oracle.queries();
  return g;
}

RealMatrix column_hamiltonian(int two_n) {
  require_two_n(two_n, 4);
  const int n = two_n / 2;
  RealMatrix h = RealMatrix::Zero(two_n, two_n);
  for (int j = 0; j + 1 < two_n; ++j) {
    const double hop = (j == n - 1) ? kSqrt2 : 1.0;
    h(j, j + 1) = hop;
    h(j + 1, j) = hop;
  }
  return h;
}

std::optional<HyperbolicPair> hyperbolic_pair(int two_n) {
  require_two_n(two_n, 4);
  const int n = two_n / 2;
  if (n < 3) return std::nullopt;
  // sinh((n+1)q)/sinh(nq) = cosh q + sinh q / tanh(nq), which cannot overflow.
  auto f = [n](double q) { return std::cosh(q) + std::sinh(q) / std::tanh(n * q) - kSqrt2; };
  const auto [a, b] = refine(f, 1e-9, 2.0);
  const double q = 0.5 * (a + b);
  return HyperbolicPair{q, 2.0 * std::cosh(q)};
}

std::vector<MomentumSolution> solve_momenta(int two_n) {
  require_two_n(two_n, 4);
  const int n = two_n / 2;
  std::vector<MomentumSolution> out;
  for (int branch : {+1, -1}) {
    auto f = [n, branch](double p) { return std::sin((n + 1) * p) - branch * kSqrt2 * std::sin(n * p); };
    // f is finite across the poles of the ratio, and at a pole mπ/n it equals
    // ±sin(mπ/n) != 0, so every sign change of f is a root of the ratio.
    const int samples = n * kSamplesPerInterval;
    double prev_p = std::numbers::pi / samples;
    double prev_f = f(prev_p);
    int ell = 0;
    for (int i = 2; i < samples; ++i) {
      const double p = std::numbers::pi * i / samples;
      const double fp = f(p);
      if (std::signbit(prev_f) != std::signbit(fp)) {
        const auto [a, b] = refine(f, prev_p, p);
        MomentumSolution s;
        s.two_n = two_n;
        s.p = 0.5 * (a + b);
        s.branch = branch;
        s.ell = ++ell;
        s.energy = 2.0 * std::cos(s.p);
        double norm = 0.0;
        for (int j = 1; j <= n; ++j) norm += std::pow(std::sin(s.p * j), 2);
        s.alpha = 1.0 / std::sqrt(2.0 * norm);
        s.residual = std::abs(std::sin((n + 1) * s.p) / std::sin(n * s.p) - branch * kSqrt2);
        if (s.residual > kMomentumResidual) {
          std::ostringstream os;
          os << "solve_momenta: residual " << s.residual << " at p = " << s.p;
          throw NumericalInconsistency(os.str());
        }
        out.push_back(s);
      }
      prev_p = p;
      prev_f = fp;
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.p < b.p; });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].branch == out[i - 1].branch) throw NumericalInconsistency("solve_momenta: branches do not interleave");

  // Cross-check against the dense spectrum.
  std::vector<double> energies;
  for (const auto& s : out) energies.push_back(s.energy);
  if (const auto hp = hyperbolic_pair(two_n)) {
    energies.push_back(hp->energy);
    energies.push_back(-hp->energy);
  }
  std::sort(energies.begin(), energies.end());
  const auto spectrum = decompose(HermitianOperator<double>(column_hamiltonian(two_n)));
  if (static_cast<Index>(energies.size()) != spectrum.dim()) {
    std::ostringstream os;
    os << "solve_momenta: found " << energies.size() << " eigenvalues, expected " << spectrum.dim();
    throw NumericalInconsistency(os.str());
  }
  for (std::size_t i = 0; i < energies.size(); ++i)
    if (std::abs(energies[i] - spectrum.eigenvalues(static_cast<Index>(i))) > kSpectrumMatch)
      throw NumericalInconsistency("solve_momenta: energies disagree with the dense spectrum");
  return out;
}

RealVector eigenstate_from_momentum(const MomentumSolution& sol, int two_n) {
  require_two_n(two_n, 4);
  const int n = two_n / 2;
  if (sol.two_n != two_n || sol.branch * sol.branch != 1 ||
      std::abs(std::sin((n + 1) * sol.p) / std::sin(n * sol.p) - sol.branch * kSqrt2) > 1e-8)
    throw ValidationError("eigenstate_from_momentum: solution does not belong to this size");
  RealVector v(two_n);
  for (int j = 1; j <= n; ++j) {
    const double a = sol.alpha * std::sin(sol.p * j);
    v(j - 1) = a;
    v(two_n - j) = sol.branch * a;
  }
  return v;
}

RealVector eigenstate_from_hyperbolic(const HyperbolicPair& pair, int two_n, int sign) {
  require_two_n(two_n, 6);
  if (sign != 1 && sign != -1) throw ValidationError("eigenstate_from_hyperbolic: sign must be +1 or -1");
  const int n = two_n / 2;
  RealVector v(two_n);
  for (int j = 1; j <= n; ++j) {
    const double a = std::sinh(pair.q * j);
    v(j - 1) = a;
    v(two_n - j) = a;
  }
  // The path is bipartite: flipping alternate signs maps E to -E.
  if (sign < 0)
    for (int j = 1; j <= two_n; j += 2) v(j - 1) = -v(j - 1);
  return v / v.norm();
}

SubspaceS subspace_S(int two_n, const EigenspacePartition<double>& partition) {
  require_two_n(two_n, 8);
  if (partition.dim() != two_n) throw ValidationError("subspace_S: partition has the wrong dimension");
  const int n = two_n / 2;
  const int lo = (n + 3) / 4;
  const int hi = (3 * n + 3) / 4;
  SubspaceS s;
  s.sin_p_in_range = true;
  for (const auto& sol : solve_momenta(two_n)) {
    if (sol.branch != -1 || sol.ell < lo || sol.ell > hi) continue;
    s.members.push_back(sol);
    const double sp = std::sin(sol.p);
    s.sin_p_in_range = s.sin_p_in_range && sp > 1.0 / kSqrt2 && sp < 1.0;
    s.alpha4_mass += std::pow(sol.alpha, 4);
    Index best = 0;
    for (Index g = 1; g < partition.size(); ++g)
      if (std::abs(partition.group(g).energy - sol.energy) < std::abs(partition.group(best).energy - sol.energy)) best = g;
    if (std::abs(partition.group(best).energy - sol.energy) > kSpectrumMatch)
      throw NumericalInconsistency("subspace_S: momentum energy not found in the spectrum");
    s.groups.push_back(best);
  }
  s.gaps = gaps(partition, std::span<const Index>(s.groups));
  return s;
}

SubspaceS subspace_S(int two_n) {
  require_two_n(two_n, 8);
  return subspace_S(two_n, eigenspaces(HermitianOperator<double>(column_hamiltonian(two_n))));
}

ColumnWalk column_walk(int two_n) {
  auto partition = eigenspaces(HermitianOperator<double>(column_hamiltonian(two_n)));
  const RealVector psi0 = RealVector::Unit(two_n, 0);
  auto weights = transition_weights(partition, psi0, Target<double>::basis_state(two_n - 1, two_n));
  return ColumnWalk{two_n, std::move(partition), std::move(weights)};
}

int corollary_summands(int n) {
  if (n < 1) throw ValidationError("corollary_summands: n must be positive");
  return ceil_log2(5 * static_cast<std::uint64_t>(n));
}

ScheduleTaus schedule_hitting_times(const ColumnWalk& walk, int per_decade) {
  const double n = walk.two_n / 2;
  const int k = corollary_summands(walk.two_n / 2);
  const auto slow = geometric_grid(std::pow(n, 4) / 16.0, 64.0 * std::pow(n, 4), per_decade);
  const auto fast = geometric_grid(n / 16.0, 64.0 * n, per_decade);
  const std::vector<double> fixed{64.0 * n};
  return ScheduleTaus{hitting_time_estimate(walk.weights, 1, slow), hitting_time_estimate(walk.weights, 1, fast),
                      hitting_time_estimate(walk.weights, k, fast), hitting_time_estimate(walk.weights, k, fixed)};
}

EquivalenceReport full_vs_column_equivalence(const Instance& instance, const TimeDistribution& dist) {
  if (instance.depth() > 6) throw ValidationError("full_vs_column_equivalence: depth above 6 is too large to decompose");
  const Oracle oracle(instance);
  const ExploredGraph g = explore(oracle);
  const auto dim = static_cast<Index>(g.labels.size());
  const auto partition = eigenspaces(HermitianOperator<double>(g.hamiltonian));
  const RealVector psi0 = RealVector::Unit(dim, 0);
  EquivalenceReport r;
  r.depth = instance.depth();
  r.two_n = 2 * (instance.depth() + 1);
  r.full_probability = avg_probability_exact(partition, psi0, Target<double>::basis_state(g.exit_index, dim), dist);
  r.column_probability = column_walk(r.two_n).weights.averaged(dist);
  r.difference = std::abs(r.full_probability - r.column_probability);
  r.vertices = g.labels.size();
  r.queries = g.queries;
  return r;
}

Algorithm1::Algorithm1(int two_n, Algorithm1Options options) {
  require_two_n(two_n, 4);
  two_n_ = two_n;
  init(column_hamiltonian(two_n), two_n - 1, options);
}

Algorithm1::Algorithm1(const Oracle& oracle, int depth, Algorithm1Options options) {
  const ExploredGraph g = explore(oracle);
  two_n_ = 2 * (depth + 1);
  init(g.hamiltonian, g.exit_index, options);
}

void Algorithm1::init(const RealMatrix& h, Index exit_index, const Algorithm1Options& options) {
  const int n = two_n_ / 2;
  dist_ = TimeDistribution(64.0 * n, options.box_summands ? 5 * n : corollary_summands(n));
  max_repetitions_ = options.max_repetitions > 0 ? options.max_repetitions : 20 * n;
  exit_index_ = exit_index;
  const auto partition = eigenspaces(HermitianOperator<double>(h));
  const RealVector psi0 = RealVector::Unit(h.rows(), 0);
  shot_probability_ = avg_probability_exact(partition, psi0, Target<double>::basis_state(exit_index, h.rows()), dist_);
  sampler_.emplace(partition, psi0, dist_);
}

Algorithm1Run Algorithm1::run(std::uint64_t seed, std::uint64_t run_index) const {
  RandomStream rng(seed, run_index);
  Algorithm1Run r;
  for (int rep = 1; rep <= max_repetitions_; ++rep) {
    const auto shot = sampler_->draw(rng);
    r.evolved_time += shot.time;
    r.repetitions = rep;
    if (shot.outcome == exit_index_) {
      r.success = true;
      break;
    }
  }
  return r;
}

}  // namespace ctqw::gluedtrees
