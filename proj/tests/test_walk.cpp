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
#include <numbers>
#include <random>

#include "ctqw/errors.hpp"
#include "ctqw/gluedtrees.hpp"
#include "ctqw/walk.hpp"
#include "oracles.hpp"

using namespace ctqw;

namespace {

RealVector basis(Index i, Index dim) { return RealVector::Unit(dim, i); }

// Binomial 3-sigma acceptance for an empirical frequency.
bool within_three_sigma(double freq, double p, std::uint64_t trials) {
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  return std::abs(freq - p) <= 3.0 * sigma + 1e-12;
}

double off_diagonal_mass(const ComplexMatrix& rho, const ComplexMatrix& v) {
  ComplexMatrix r = v.adjoint() * rho * v;
  r.diagonal().setZero();
  return r.norm();
}

}  // namespace

TEST_CASE("characteristic function") {
  const TimeDistribution one(2.5, 1), three(2.5, 3);
  CHECK(std::abs(characteristic(one, 0.0) - Complex(1.0)) < 1e-15);
  CHECK(std::abs(characteristic(one, 2.0 * std::numbers::pi / 2.5)) < 1e-15);
  for (double r : {-3.0, -0.1, 1e-9, 0.7, 11.0}) {
    const Complex u = characteristic(one, r);
    CHECK(std::abs(characteristic(three, r) - u * u * u) < 1e-14);
    CHECK(std::abs(u) <= 1.0 + 1e-15);
    // Against the defining (e^{irT} - 1)/(irT) where it is well conditioned.
    if (std::abs(r) > 1e-3) {
      const Complex direct = (std::exp(Complex(0.0, r * 2.5)) - 1.0) / Complex(0.0, r * 2.5);
      CHECK(std::abs(u - direct) < 1e-13);
    }
  }
  // Envelope: |Phi(r)| <= (2/(T dE))^k once |r| >= dE.
  for (int k : {1, 2, 4}) {
    const TimeDistribution d(3.0, k);
    const double de = 1.3;
    for (double r = de; r < 60.0; r += 0.01) CHECK(std::abs(characteristic(d, r)) <= std::pow(2.0 / (3.0 * de), k) + 1e-15);
  }
  CHECK_THROWS_AS(TimeDistribution(0.0, 1), ValidationError);
  CHECK_THROWS_AS(TimeDistribution(1.0, 0), ValidationError);
  CHECK(TimeDistribution(2.0, 3).total_max_time() == 6.0);
}

TEST_CASE("eigenstates are stationary") {
  std::mt19937_64 gen(3);
  const auto p = eigenspaces(HermitianOperator<Complex>(oracles::random_hermitian(5, gen)));
  const ComplexVector y = oracles::random_state(5, gen);
  for (Index j = 0; j < 5; ++j) {
    const ComplexVector e = p.spectrum().eigenvectors.col(j);
    for (int k : {1, 3})
      CHECK(avg_probability_exact(p, e, y, TimeDistribution(0.37, k)) == doctest::Approx(std::norm(y.dot(e))).epsilon(1e-12));
    CHECK(limiting_probability(p, e, e) == doctest::Approx(1.0));
  }
}

TEST_CASE("closed form against quadrature") {
  std::mt19937_64 gen(6);
  const oracles::CMatrix h = oracles::random_hermitian(6, gen);
  const ComplexVector a = oracles::random_state(6, gen), b = oracles::random_state(6, gen);
  const HermitianOperator<Complex> op(h);
  const double exact = avg_probability_exact(eigenspaces(op), a, b, TimeDistribution(3.7));
  CHECK(std::abs(exact - avg_probability_quadrature(op, a, b, 3.7)) <= 1e-7);

  std::uniform_int_distribution<int> dims(2, 8);
  std::uniform_real_distribution<double> times(0.1, 30.0);
  for (int i = 0; i < 50; ++i) {
    const int d = dims(gen);
    const HermitianOperator<Complex> hi(oracles::random_hermitian(d, gen));
    const ComplexVector x = oracles::random_state(d, gen), y = oracles::random_state(d, gen);
    const double t = times(gen);
    CHECK(std::abs(avg_probability_exact(eigenspaces(hi), x, y, TimeDistribution(t)) - avg_probability_quadrature(hi, x, y, t)) <= 1e-7);
  }
}

TEST_CASE("quadrature reference cases") {
  std::mt19937_64 gen(1);
  const ComplexVector x = oracles::random_state(4, gen);
  const ComplexVector y = ComplexVector::Unit(4, 2);
  CHECK(avg_probability_quadrature(HermitianOperator<Complex>(ComplexMatrix::Zero(4, 4)), x, y, 9.0) ==
        doctest::Approx(std::norm(y.dot(x))));
  RealMatrix h = RealMatrix::Zero(2, 2);
  h(1, 1) = 1.0;
  const RealVector plus = RealVector::Constant(2, 1.0 / std::numbers::sqrt2);
  const HermitianOperator<double> two(h);
  CHECK(avg_probability_quadrature(two, plus, plus, std::numbers::pi) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(avg_probability_quadrature(two, plus, plus, 1.0) == doctest::Approx(oracles::two_level_average(1.0, 1.0)).epsilon(1e-9));
  CHECK(avg_probability_exact(eigenspaces(two), plus, plus, TimeDistribution(1.0)) ==
        doctest::Approx(oracles::two_level_average(1.0, 1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(avg_probability_quadrature(two, plus, plus, 0.0), ValidationError);
}

TEST_CASE("input validation") {
  const auto p = eigenspaces(HermitianOperator<double>(gluedtrees::column_hamiltonian(4)));
  CHECK_THROWS_AS(avg_probability_exact(p, RealVector(RealVector::Ones(4)), basis(0, 4), TimeDistribution(1.0)), ValidationError);
  CHECK_THROWS_AS(avg_probability_exact(p, basis(0, 3), basis(0, 4), TimeDistribution(1.0)), ValidationError);
  CHECK_THROWS_AS(DensityOperator(ComplexMatrix::Identity(2, 2)), ValidationError);
  ComplexMatrix neg = ComplexMatrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(DensityOperator{neg}, ValidationError);
}

TEST_CASE("glued-trees probabilities") {
  for (int two_n : {8, 12, 16}) {
    const int n = two_n / 2;
    const auto walk = gluedtrees::column_walk(two_n);
    const TimeDistribution dist(64.0 * n, gluedtrees::corollary_summands(n));
    CHECK(walk.weights.averaged(dist) >= 1.0 / (4.0 * n) - 1.0 / (5.0 * n));
    CHECK(walk.weights.limiting() >= 1.0 / (2.0 * n));
    CHECK(avg_probability_exact(walk.partition, basis(0, two_n), basis(two_n - 1, two_n), dist) ==
          doctest::Approx(walk.weights.averaged(dist)).epsilon(1e-12));
  }
}

TEST_CASE("limiting probability is the large-T limit") {
  std::mt19937_64 gen(12);
  for (int i = 0; i < 5; ++i) {
    const auto p = eigenspaces(HermitianOperator<Complex>(oracles::random_hermitian(5, gen)));
    const ComplexVector x = oracles::random_state(5, gen), y = oracles::random_state(5, gen);
    const double inf = limiting_probability(p, x, y);
    CHECK(std::abs(avg_probability_exact(p, x, y, TimeDistribution(1e9)) - inf) <= 1e-4);
    CHECK(std::abs(avg_probability_exact(p, x, y, TimeDistribution(1e8 / delta_e_min(p))) - inf) <= 1e-4);
  }
}

TEST_CASE("time-averaged density matrix") {
  std::mt19937_64 gen(21);
  const auto p = eigenspaces(HermitianOperator<Complex>(oracles::random_hermitian(4, gen)));
  const ComplexMatrix v = p.spectrum().eigenvectors;
  const ComplexVector psi = oracles::random_state(4, gen);
  const DensityOperator rho = DensityOperator::pure(psi);

  // Diagonal in the eigenbasis: unchanged.
  RealVector w(4);
  w << 0.1, 0.2, 0.3, 0.4;
  const DensityOperator mixed(v * w.cast<Complex>().asDiagonal() * v.adjoint());
  CHECK((time_averaged_density(p, mixed, TimeDistribution(2.0)).matrix() - mixed.matrix()).norm() < 1e-12);

  // Two independent uniform randomizations compose into k = 2.
  const auto once = time_averaged_density(p, rho, TimeDistribution(1.7));
  const auto twice = time_averaged_density(p, once, TimeDistribution(1.7));
  CHECK((twice.matrix() - time_averaged_density(p, rho, TimeDistribution(1.7, 2)).matrix()).norm() < 1e-12);

  // Coherences vanish as T grows, inside the 2/(T dE_min) envelope.
  const double full = off_diagonal_mass(rho.matrix(), v);
  double previous = full;
  for (double t = 10.0; t <= 1e12; t *= 10.0) {
    const double mass = off_diagonal_mass(time_averaged_density(p, rho, TimeDistribution(t)).matrix(), v);
    CHECK(mass <= previous + 1e-15);
    CHECK(mass <= full * 2.0 / (t * delta_e_min(p)) + 1e-15);
    previous = mass;
  }
  CHECK(std::abs(once.matrix().trace() - 1.0) < 1e-12);
}

TEST_CASE("Monte Carlo sampling") {
  {
    const auto p = eigenspaces(HermitianOperator<double>(RealMatrix::Zero(5, 5)));
    const auto emp = sample_walk(p, basis(3, 5), TimeDistribution(4.0), 1, 1000);
    CHECK(emp.frequency(3) == 1.0);
  }
  {
    const int two_n = 8, n = 4;
    const auto walk = gluedtrees::column_walk(two_n);
    const TimeDistribution dist(64.0 * n, gluedtrees::corollary_summands(n));
    const std::uint64_t trials = 200000;
    const auto emp = sample_walk(walk.partition, basis(0, two_n), dist, 99, trials);
    CHECK(within_three_sigma(emp.frequency(two_n - 1), walk.weights.averaged(dist), trials));
    // Same seed, same draws.
    CHECK(sample_walk(walk.partition, basis(0, two_n), dist, 99, 1000).counts ==
          sample_walk(walk.partition, basis(0, two_n), dist, 99, 1000).counts);
  }
  {
    RealMatrix h = RealMatrix::Zero(2, 2);
    h(1, 1) = 1.0;
    const RealVector plus = RealVector::Constant(2, 1.0 / std::numbers::sqrt2);
    // Measure in the |+>, |-> basis by evolving in the rotated frame: the
    // probability of |+> is the hand-derived average.
    RealMatrix rot(2, 2);
    rot << 1, 1, 1, -1;
    rot /= std::numbers::sqrt2;
    const auto q = eigenspaces(HermitianOperator<double>(rot * h * rot.transpose()));
    const std::uint64_t trials = 100000;
    const auto emp = sample_walk(q, RealVector(rot * plus), TimeDistribution(1.0), 5, trials);
    CHECK(within_three_sigma(emp.frequency(0), oracles::two_level_average(1.0, 1.0), trials));
  }
  const auto p = eigenspaces(HermitianOperator<double>(RealMatrix::Zero(2, 2)));
  CHECK_THROWS_AS(sample_walk(p, basis(0, 2), TimeDistribution(1.0), 1, 0), ValidationError);
}

TEST_CASE("register marginals through an outcome map") {
  // Two qubits, H = X on the first: the first register flips, the second stays.
  RealMatrix h = RealMatrix::Zero(4, 4);
  h(0, 2) = h(2, 0) = h(1, 3) = h(3, 1) = 1.0;
  const auto p = eigenspaces(HermitianOperator<double>(h));
  const TimeDistribution dist(2.0);
  const auto emp = sample_walk(p, basis(1, 4), dist, 3, 50000, {0, 0, 1, 1}, 2);
  const double exact = avg_probability_exact(p, basis(1, 4), Target<double>::basis_set({2, 3}, 4), dist);
  CHECK(within_three_sigma(emp.frequency(1), exact, 50000));
  CHECK(exact == doctest::Approx(0.5 - std::sin(4.0) / 8.0));
}

TEST_CASE("hitting time estimates") {
  std::mt19937_64 gen(31);
  const auto p = eigenspaces(HermitianOperator<Complex>(oracles::random_hermitian(4, gen)));
  const ComplexVector e = p.spectrum().eigenvectors.col(2);
  const auto grid = geometric_grid(0.5, 50.0, 10);
  CHECK(grid.size() == 21);
  CHECK(grid.front() == 0.5);
  CHECK(grid.back() == doctest::Approx(50.0));
  const auto est = hitting_time_estimate(p, e, Target<Complex>::state(e), 1, grid);
  CHECK(est.tau == doctest::Approx(0.5));
  CHECK(est.probability_at_argmin == doctest::Approx(1.0));

  const ComplexVector x = oracles::random_state(4, gen), y = oracles::random_state(4, gen);
  const auto w = transition_weights(p, x, Target<Complex>::state(y));
  for (int k : {1, 3}) {
    const auto r = hitting_time_estimate(w, k, grid);
    CHECK(r.tau == doctest::Approx(k * r.argmin_T / r.probability_at_argmin));
    for (double t : grid) CHECK(r.tau <= k * t / w.averaged(TimeDistribution(t, k)) * (1 + 1e-12));
  }
  // Orthogonal eigenstates never meet.
  const ComplexVector other = p.spectrum().eigenvectors.col(0);
  CHECK_THROWS_AS(hitting_time_estimate(p, e, Target<Complex>::state(other), 1, grid), DegenerateProbabilityError);
}

TEST_CASE("glued-trees hitting-time scaling") {
  std::vector<double> logn, logtau2;
  for (int n : {8, 12, 16, 20}) {
    const auto walk = gluedtrees::column_walk(2 * n);
    const auto grid = geometric_grid(n / 16.0, 64.0 * n);
    logn.push_back(std::log(n));
    logtau2.push_back(std::log(hitting_time_estimate(walk.weights, 1, grid).tau));
  }
  CHECK(oracles::slope(logn, logtau2) <= 3.3);
  // tau / (n^2) under the Corollary schedule grows at most like log n.
  std::vector<double> ratio;
  for (int n = 8; n <= 24; n += 4) {
    const auto walk = gluedtrees::column_walk(2 * n);
    const double t = 64.0 * n;
    const std::vector<double> one{t};
    const double tau = hitting_time_estimate(walk.weights, gluedtrees::corollary_summands(n), one).tau;
    ratio.push_back(tau / (n * n * std::log(n)));
  }
  for (double r : ratio) CHECK(r <= 2.0 * ratio.front());
}
