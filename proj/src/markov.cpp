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

#include "ctqw/markov.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "ctqw/errors.hpp"
#include "ctqw/rng.hpp"

namespace ctqw::markov {

namespace {

std::vector<Index> bfs_levels(const RealMatrix& p, bool reverse) {
  const Index n = p.rows();
  std::vector<Index> level(static_cast<std::size_t>(n), -1);
  std::deque<Index> queue{0};
  level[0] = 0;
  while (!queue.empty()) {
    const Index x = queue.front();
    queue.pop_front();
    for (Index y = 0; y < n; ++y) {
      const double w = reverse ? p(y, x) : p(x, y);
      if (w > 0.0 && level[static_cast<std::size_t>(y)] < 0) {
        level[static_cast<std::size_t>(y)] = level[static_cast<std::size_t>(x)] + 1;
        queue.push_back(y);
      }
    }
  }
  return level;
}

void require_state(Index v, Index n, const char* who) {
  if (v < 0 || v >= n) {
    std::ostringstream os;
    os << who << ": state " << v << " out of range [0, " << n << ")";
    throw ValidationError(os.str());
  }
}

}  // namespace

StochasticMatrix::StochasticMatrix(RealMatrix p) : p_(std::move(p)) {
  if (p_.rows() == 0 || p_.rows() != p_.cols()) throw ValidationError("stochastic matrix: expected a nonempty square matrix");
  if (!p_.allFinite()) throw ValidationError("stochastic matrix: non-finite entry");
  for (Index x = 0; x < p_.rows(); ++x) {
    for (Index y = 0; y < p_.cols(); ++y)
      if (p_(x, y) < 0.0) {
        std::ostringstream os;
        os << "stochastic matrix: negative entry at (" << x << ", " << y << ")";
        throw ValidationError(os.str());
      }
    const double sum = p_.row(x).sum();
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "stochastic matrix: row " << x << " sums to " << sum;
      throw ValidationError(os.str());
    }
    p_.row(x) /= sum;
  }
}

StochasticMatrix StochasticMatrix::from_weighted_graph(const RealMatrix& weights) {
  if (weights.rows() == 0 || weights.rows() != weights.cols()) throw ValidationError("weighted graph: expected a nonempty square matrix");
  if ((weights - weights.transpose()).cwiseAbs().maxCoeff() > 0.0) throw ValidationError("weighted graph: weights must be symmetric");
  if (weights.minCoeff() < 0.0) throw ValidationError("weighted graph: negative weight");
  RealMatrix p = weights;
  for (Index x = 0; x < p.rows(); ++x) {
    const double d = p.row(x).sum();
    if (!(d > 0.0)) throw ValidationError("weighted graph: isolated vertex " + std::to_string(x));
    p.row(x) /= d;
  }
  return StochasticMatrix(std::move(p));
}

RealMatrix discriminant(const RealMatrix& p) { return p.cwiseProduct(p.transpose()).cwiseSqrt(); }

ReversibleChain validate_chain(const StochasticMatrix& sm, bool require_aperiodic) {
  const RealMatrix& p = sm.matrix();
  const Index n = p.rows();
  const auto forward = bfs_levels(p, false);
  const auto backward = bfs_levels(p, true);
  for (Index x = 0; x < n; ++x) {
    if (forward[static_cast<std::size_t>(x)] < 0 || backward[static_cast<std::size_t>(x)] < 0) {
      std::ostringstream os;
      os << "chain is not ergodic: state " << x << (forward[static_cast<std::size_t>(x)] < 0 ? " is unreachable from" : " cannot reach")
         << " state 0 (not strongly connected)";
      throw ChainError(os.str());
    }
  }

  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(discriminant(p));
  RealVector pi = solver.eigenvectors().col(n - 1).cwiseAbs2();
  pi /= pi.sum();

  double worst = 0.0;
  Index wx = 0, wy = 0;
  for (Index x = 0; x < n; ++x)
    for (Index y = x + 1; y < n; ++y) {
      const double r = std::abs(pi(x) * p(x, y) - pi(y) * p(y, x));
      if (r > worst) {
        worst = r;
        wx = x;
        wy = y;
      }
    }
  if (worst > kChainTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "chain is not reversible: worst detailed-balance residual " << worst << " at (" << wx << ", " << wy << ")";
    throw ChainError(os.str());
  }
  const double stat = (pi.transpose() * p - pi.transpose()).cwiseAbs().maxCoeff();
  if (stat > kChainTolerance) {
    std::ostringstream os;
    os << "chain stationarity residual " << stat << " exceeds tolerance";
    throw NumericalInconsistency(os.str());
  }

  if (require_aperiodic) {
    // Period = gcd of level[x] + 1 - level[y] over all edges x -> y.
    Index period = 0;
    for (Index x = 0; x < n; ++x)
      for (Index y = 0; y < n; ++y)
        if (p(x, y) > 0.0)
          period = std::gcd(period, std::abs(forward[static_cast<std::size_t>(x)] + 1 - forward[static_cast<std::size_t>(y)]));
    if (period > 1) {
      std::ostringstream os;
      os << "chain is not ergodic: periodic with period " << period;
      throw ChainError(os.str());
    }
  }
  return ReversibleChain(sm, std::move(pi), false);
}

StochasticMatrix lazify(const StochasticMatrix& p) {
  const Index n = p.dim();
  return StochasticMatrix((RealMatrix::Identity(n, n) + p.matrix()) / 2.0);
}

ReversibleChain lazify(const ReversibleChain& chain) { return ReversibleChain(lazify(chain.transition()), chain.stationary(), true); }

InterpolatedChain interpolate(const ReversibleChain& chain, Index v, double s) {
  const Index n = chain.dim();
  require_state(v, n, "interpolate");
  if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("interpolate: s must lie in [0, 1]");
  if (n < 2) throw ValidationError("interpolate: chain needs at least two states");
  InterpolatedChain ic;
  ic.marked = v;
  ic.s = s;
  RealMatrix absorbing = chain.matrix();
  absorbing.row(v).setZero();
  absorbing(v, v) = 1.0;
  ic.p_s = (1.0 - s) * chain.matrix() + s * absorbing;

  // pi(s) is pi with the marked weight scaled by 1/(1 - s), renormalized.
  if (s == 1.0) {
    ic.pi_s = RealVector::Unit(n, v);
  } else {
    ic.pi_s = chain.stationary();
    ic.pi_s(v) /= (1.0 - s);
    ic.pi_s /= ic.pi_s.sum();
  }

  ic.discriminant = discriminant(ic.p_s);
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(ic.discriminant);
  ic.eigenvalues = solver.eigenvalues();
  ic.eigenvectors = solver.eigenvectors();
  if (ic.eigenvectors.col(n - 1).sum() < 0.0) ic.eigenvectors.col(n - 1) *= -1.0;
  if (std::abs(ic.eigenvalues(n - 1) - 1.0) > kChainTolerance)
    throw NumericalInconsistency("interpolate: top discriminant eigenvalue is not 1");
  if ((ic.eigenvectors.col(n - 1) - ic.top_vector()).cwiseAbs().maxCoeff() > 1e-8)
    throw NumericalInconsistency("interpolate: top discriminant eigenvector differs from sqrt(pi(s))");
  ic.gap = 1.0 - ic.eigenvalues(n - 2);
  return ic;
}

double s_star(const ReversibleChain& chain, Index v) {
  require_state(v, chain.dim(), "s_star");
  const double pv = chain.stationary()(v);
  if (pv > 0.5 + kChainTolerance) {
    std::ostringstream os;
    os << "s_star: pi_v = " << pv << " > 1/2 gives s* < 0";
    throw ValidationError(os.str());
  }
  return std::max(0.0, 1.0 - pv / (1.0 - pv));
}

double classical_hitting_time(const ReversibleChain& chain, Index v) {
  const Index n = chain.dim();
  require_state(v, n, "classical_hitting_time");
  if (n == 1) return 0.0;
  std::vector<Index> rest;
  for (Index x = 0; x < n; ++x)
    if (x != v) rest.push_back(x);
  const RealMatrix q = chain.matrix()(rest, rest);
  const RealMatrix a = RealMatrix::Identity(n - 1, n - 1) - q;
  const RealVector ones = RealVector::Ones(n - 1);
  const RealVector h = a.fullPivLu().solve(ones);
  const double residual = (a * h - ones).cwiseAbs().maxCoeff();
  if (!h.allFinite() || residual > 1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff()))
    throw ChainError("classical_hitting_time: first-hit system is singular");
  return chain.stationary()(rest).dot(h);
}

GapHittingReport gap_vs_hitting_time(const ReversibleChain& chain, Index v) {
  GapHittingReport r;
  r.s_star = s_star(chain, v);
  r.gap = interpolate(chain, v, r.s_star).gap;
  r.hitting_time = classical_hitting_time(chain, v);
  r.product = r.gap * r.hitting_time;
  return r;
}

std::vector<SweepPoint> interpolation_sweep(const ReversibleChain& chain, Index v, std::span<const double> s_values) {
  std::vector<SweepPoint> out;
  out.reserve(s_values.size());
  for (double s : s_values) {
    const auto ic = interpolate(chain, v, s);
    out.push_back({s, ic.gap, ic.pi_s(v)});
  }
  return out;
}

StochasticMatrix complete_graph(Index n) {
  if (n < 2) throw ValidationError("complete graph needs n >= 2");
  RealMatrix p = RealMatrix::Constant(n, n, 1.0 / static_cast<double>(n - 1));
  p.diagonal().setZero();
  return StochasticMatrix(std::move(p));
}

StochasticMatrix cycle_graph(Index n) {
  if (n < 3) throw ValidationError("cycle graph needs n >= 3");
  RealMatrix p = RealMatrix::Zero(n, n);
  for (Index x = 0; x < n; ++x) {
    p(x, (x + 1) % n) += 0.5;
    p(x, (x + n - 1) % n) += 0.5;
  }
  return StochasticMatrix(std::move(p));
}

StochasticMatrix star_graph(Index n) {
  if (n < 3) throw ValidationError("star graph needs n >= 3");
  RealMatrix p = RealMatrix::Zero(n, n);
  for (Index x = 1; x < n; ++x) {
    p(0, x) = 1.0 / static_cast<double>(n - 1);
    p(x, 0) = 1.0;
  }
  return StochasticMatrix(std::move(p));
}

RealMatrix random_weighted_graph(Index n, std::uint64_t seed) {
  if (n < 2) throw ValidationError("random graph needs n >= 2");
  RandomStream rng(seed, 0);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  RealMatrix w = RealMatrix::Zero(n, n);
  auto weight = [&] { return 0.1 + 0.9 * rng.uniform(); };
  // A random spanning path keeps the graph connected; extra edges and
  // self-loops make it irregular and aperiodic.
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const double x = weight();
    w(order[i], order[i + 1]) = x;
    w(order[i + 1], order[i]) = x;
  }
  for (Index x = 0; x < n; ++x)
    for (Index y = x + 1; y < n; ++y)
      if (w(x, y) == 0.0 && rng.uniform() < 0.3) {
        const double z = weight();
        w(x, y) = z;
        w(y, x) = z;
      }
  for (Index x = 0; x < n; ++x) w(x, x) = 0.05 + 0.45 * rng.uniform();
  return w;
}

ChainDocument chain_from_json(const nlohmann::json& doc) {
  try {
    const auto n = doc.at("n").get<Index>();
    if (n < 1) throw ValidationError("chain.n: must be positive");
    const auto format = doc.at("format").get<std::string>();
    const auto& data = doc.at("data");
    if (!data.is_array() || static_cast<Index>(data.size()) != n) throw ValidationError("chain.data: expected n rows");
    RealMatrix m(n, n);
    for (Index x = 0; x < n; ++x) {
      const auto& row = data.at(static_cast<std::size_t>(x));
      if (!row.is_array() || static_cast<Index>(row.size()) != n) throw ValidationError("chain.data[" + std::to_string(x) + "]: expected n entries");
      for (Index y = 0; y < n; ++y) m(x, y) = row.at(static_cast<std::size_t>(y)).get<double>();
    }
    std::optional<Index> marked;
    if (doc.contains("marked") && !doc.at("marked").is_null()) {
      marked = doc.at("marked").get<Index>();
      require_state(*marked, n, "chain.marked");
    }
    if (format == "dense") return {StochasticMatrix(std::move(m)), marked};
    if (format == "weighted-graph") return {StochasticMatrix::from_weighted_graph(m), marked};
    throw ValidationError("chain.format: expected \"dense\" or \"weighted-graph\", got \"" + format + "\"");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("chain document: ") + e.what());
  }
}

nlohmann::json chain_to_json(const StochasticMatrix& p, std::optional<Index> marked) {
  nlohmann::json data = nlohmann::json::array();
  for (Index x = 0; x < p.dim(); ++x) {
    std::vector<double> row(p.matrix().row(x).begin(), p.matrix().row(x).end());
    data.push_back(row);
  }
  nlohmann::json doc{{"n", p.dim()}, {"format", "dense"}, {"data", data}};
  doc["marked"] = marked ? nlohmann::json(*marked) : nlohmann::json(nullptr);
  return doc;
}

}  // namespace ctqw::markov
