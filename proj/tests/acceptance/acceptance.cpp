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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails or exceeds its runtime budget.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "../oracles.hpp"
#include "ctqw/cli.hpp"
#include "ctqw/gluedtrees.hpp"
#include "ctqw/markov.hpp"
#include "ctqw/record.hpp"
#include "ctqw/search.hpp"
#include "ctqw/spectral.hpp"
#include "ctqw/walk.hpp"

namespace {

using namespace ctqw;
using nlohmann::json;
using std::numbers::pi;
using std::numbers::sqrt2;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

json load_config(const std::string& name) {
  std::ifstream in(std::string(CTQW_CONFIG_DIR) + "/" + name);
  return json::parse(in);
}

// Column-space Hamiltonian written out directly: unit hops along the
// columns, sqrt(2) across the gluing.
Eigen::MatrixXd column_matrix(int two_n) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(two_n, two_n);
  for (int j = 0; j + 1 < two_n; ++j) h(j, j + 1) = h(j + 1, j) = (j + 1 == two_n / 2) ? sqrt2 : 1.0;
  return h;
}

void lemma_corpus(Outcome& o) {
  const auto r = cli::cmd_bounds(load_config("bounds.json"), {"bounds.json", std::nullopt, 4});
  const json& lemmas = r.record["summary"]["lemmas"];
  double worst = INFINITY;
  for (const char* name : {"lemma1", "lemma2", "lemma3", "lemma6"}) {
    const double slack = lemmas[name]["min_slack"];
    worst = std::min(worst, slack);
    o.require(slack >= -1e-9, std::string(name) + " slack");
    o.require(lemmas[name]["failures"] == 0, std::string(name) + " failures");
  }
  o.require(r.record["summary"]["instances"] == 200, "instance count");
  o.detail << "200 instances, min slack " << worst;
}

void closed_form_equivalence(Outcome& o) {
  std::mt19937_64 gen(20260415);
  std::uniform_int_distribution<int> dims(2, 10);
  std::uniform_real_distribution<double> log_t(std::log(0.1), std::log(1000.0));
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int d = dims(gen);
    const HermitianOperator<Complex> h(oracles::random_hermitian(d, gen));
    const ComplexVector a = oracles::random_state(d, gen), b = oracles::random_state(d, gen);
    const double t = std::exp(log_t(gen));
    const double exact = avg_probability_exact(eigenspaces(h), a, b, TimeDistribution(t));
    worst = std::max(worst, std::abs(exact - avg_probability_quadrature(h, a, b, t)));
  }
  o.require(worst <= 1e-7, "closed form vs quadrature");
  o.detail << "50 instances, max |diff| " << worst;
}

void glued_spectrum(Outcome& o) {
  double energy_err = 0.0, asym_ratio = 0.0, gap_ratio = INFINITY;
  for (int two_n : {8, 16, 24, 32}) {
    const int n = two_n / 2;
    const auto momenta = gluedtrees::solve_momenta(two_n);
    std::vector<double> energies;
    for (const auto& m : momenta) energies.push_back(m.energy);
    if (const auto hyp = gluedtrees::hyperbolic_pair(two_n)) {
      energies.push_back(hyp->energy);
      energies.push_back(-hyp->energy);
    }
    std::sort(energies.begin(), energies.end());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(column_matrix(two_n), Eigen::EigenvaluesOnly);
    if (energies.size() != static_cast<std::size_t>(two_n)) {
      o.require(false, "eigenvalue count at 2n=" + std::to_string(two_n));
      continue;
    }
    for (int j = 0; j < two_n; ++j) energy_err = std::max(energy_err, std::abs(energies[j] - dense.eigenvalues()(j)));

    // Fixed-ell remainder: |p - (ell pi/n - ell pi/((1+sqrt2) n^2))| <= ell pi / n^3.
    for (const auto& m : momenta) {
      if (m.branch != -1 || m.ell > 3) continue;
      const double approx = m.ell * pi / n - m.ell * pi / ((1.0 + sqrt2) * n * n);
      asym_ratio = std::max(asym_ratio, std::abs(m.p - approx) * n * n * n / (m.ell * pi));
    }
    const auto s = gluedtrees::subspace_S(two_n);
    gap_ratio = std::min(gap_ratio, s.gaps.subset->delta_e_s / (pi / (16.0 * n)));
  }
  o.require(energy_err <= 1e-9, "momentum energies vs dense");
  o.require(asym_ratio <= 1.0, "asymptotic momentum envelope");
  o.require(gap_ratio >= 1.0, "subset gap >= pi/(16n)");
  o.detail << "energy err " << energy_err << ", n^3 remainder / (ell pi) " << asym_ratio << ", min gap / (pi/16n) "
           << gap_ratio;
}

struct GluedSweep {
  std::vector<double> n, p_shot, tau_cor, tau_l1, tau_l2, tau_l3;
};

const GluedSweep& glued_sweep() {
  static const GluedSweep sweep = [] {
    GluedSweep s;
    const auto taus = cli::parallel_map<gluedtrees::ScheduleTaus>(5, 4, [](std::size_t i) {
      return gluedtrees::schedule_hitting_times(gluedtrees::column_walk(8 + 4 * static_cast<int>(i)));
    });
    for (std::size_t i = 0; i < taus.size(); ++i) {
      s.n.push_back(4.0 + 2.0 * static_cast<double>(i));
      s.p_shot.push_back(taus[i].corollary.probability_at_argmin);
      s.tau_cor.push_back(taus[i].corollary.tau);
      s.tau_l1.push_back(taus[i].lemma1.tau);
      s.tau_l2.push_back(taus[i].lemma2.tau);
      s.tau_l3.push_back(taus[i].lemma3.tau);
    }
    return s;
  }();
  return sweep;
}

std::vector<double> logs(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(std::log(x));
  return out;
}

void corollary_reproduction(Outcome& o) {
  const auto& s = glued_sweep();
  double worst_margin = INFINITY;
  for (std::size_t i = 0; i < s.n.size(); ++i) {
    const double bound = 1.0 / (4.0 * s.n[i]) - 1.0 / (5.0 * s.n[i]);
    worst_margin = std::min(worst_margin, s.p_shot[i] / bound);
    const int n = static_cast<int>(s.n[i]);
    const gluedtrees::Algorithm1 alg(2 * n);
    o.require(alg.distribution().max_time() == 64.0 * n && alg.distribution().summands() == gluedtrees::corollary_summands(n),
              "schedule parameters");
  }
  const double slope = oracles::slope(logs(s.n), logs(s.tau_cor));
  o.require(worst_margin >= 1.0, "per-shot probability bound");
  o.require(slope >= 1.8 && slope <= 2.4, "tau log-log slope");
  o.detail << "n 4..12, min p_shot / bound " << worst_margin << ", tau slope " << slope;
}

void hierarchy(Outcome& o) {
  const auto& s = glued_sweep();
  double prev_ratio = 0.0;
  for (std::size_t i = 0; i < s.n.size(); ++i) {
    const double ratio = s.tau_l1[i] / s.tau_l2[i];
    o.require(ratio > 1.0, "lemma2 beats lemma1 at n=" + std::to_string(static_cast<int>(s.n[i])));
    o.require(ratio > prev_ratio, "ratio grows at n=" + std::to_string(static_cast<int>(s.n[i])));
    o.require(s.tau_l3[i] < s.tau_l2[i], "lemma3 beats lemma2 at n=" + std::to_string(static_cast<int>(s.n[i])));
    prev_ratio = ratio;
  }
  o.detail << "tau1/tau2 from " << s.tau_l1.front() / s.tau_l2.front() << " to " << prev_ratio << ", tau3/tau2 at n=12 "
           << s.tau_l3.back() / s.tau_l2.back();
}

void full_graph(Outcome& o) {
  double worst = 0.0;
  for (int depth : {2, 3, 4})
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto inst = gluedtrees::Instance::generate(depth, seed);
      const int n = depth + 1;
      for (const TimeDistribution& dist : {TimeDistribution(64.0 * n, gluedtrees::corollary_summands(n)), TimeDistribution(7.5)}) {
        worst = std::max(worst, gluedtrees::full_vs_column_equivalence(inst, dist).difference);
      }
    }
  o.require(worst <= 1e-8, "full vs column");
  o.detail << "9 instances x 2 schedules, max |diff| " << worst;
}

void search_spectrum(Outcome& o) {
  int cases = 0;
  double worst_pairing = 0.0, ratio_lo = INFINITY, ratio_hi = 0.0;
  auto check = [&](const markov::StochasticMatrix& p, const std::string& label) {
    const auto chain = markov::lazify(markov::validate_chain(p, false));
    for (double s : {0.0, markov::s_star(chain, 0)}) {
      const auto ic = markov::interpolate(chain, 0, s);
      const auto rep = search::verify_spectrum(search::build_search_hamiltonian(ic), ic);
      const Index n = chain.dim();
      o.require(rep.zero_multiplicity == (n - 1) * (n - 1) + 1, label + " zero multiplicity");
      o.require(rep.ok, label + " spectrum report");
      worst_pairing = std::max(worst_pairing, rep.pairing_error);
      const double ratio = rep.amplified_gap / rep.sqrt_delta;
      ratio_lo = std::min(ratio_lo, ratio);
      ratio_hi = std::max(ratio_hi, ratio);
      o.require(ratio >= 1.0 / sqrt2 && ratio <= sqrt2, label + " gap within sqrt2 of sqrt(Delta)");
      ++cases;
    }
  };
  for (int n : {4, 8, 16}) check(markov::complete_graph(n), "K" + std::to_string(n));
  for (int n : {4, 8}) check(markov::cycle_graph(n), "C" + std::to_string(n));
  o.detail << cases << " cases, pairing err " << worst_pairing << ", gap/sqrt(Delta) in [" << ratio_lo << ", " << ratio_hi << "]";
}

void lemma5(Outcome& o) {
  const auto k16 = markov::validate_chain(markov::complete_graph(16), false);
  std::vector<double> x, y;
  double worst_sigma = 0.0, worst_margin = INFINITY;
  for (double eps : {0.2, 0.1, 0.05}) {
    search::Algorithm2Options opts;
    opts.shots = 100000;
    const auto r = search::run_algorithm2(k16, 0, eps, derive_seed(7, 2, static_cast<std::uint32_t>(x.size())), opts);
    worst_margin = std::min(worst_margin, r.p_bar - (0.25 - eps));
    o.require(r.lemma5_holds, "p_bar >= 1/4 - eps");
    const double sigma = std::sqrt(r.p_bar * (1.0 - r.p_bar) / static_cast<double>(r.shots));
    worst_sigma = std::max(worst_sigma, std::abs(r.mc_frequency - r.p_bar) / sigma);
    x.push_back(std::log(1.0 / eps));
    y.push_back(r.total_time);
  }
  o.require(worst_sigma <= 3.0, "Monte Carlo within 3 sigma");
  const auto fit = record::linear_fit(x, y);
  o.require(fit.r_squared >= 0.95, "total time linear in log(1/eps)");

  // Frozen constant c = 1 for both families.
  double product_min = INFINITY;
  auto family = [&](const markov::StochasticMatrix& p) {
    const auto rep = markov::gap_vs_hitting_time(markov::lazify(markov::validate_chain(p, false)), 0);
    product_min = std::min(product_min, rep.gap * rep.hitting_time);
  };
  for (int n : {4, 8, 16, 32}) family(markov::complete_graph(n));
  for (int n : {4, 8, 16}) family(markov::cycle_graph(n));
  o.require(product_min >= 1.0, "Delta(s*) HT >= 1");
  o.detail << "K16, min p_bar margin " << worst_margin << ", max |z| " << worst_sigma << ", R^2 " << fit.r_squared
           << ", min Delta(s*) HT " << product_min;
}

void classical_ht(Outcome& o) {
  struct Case {
    std::string label;
    markov::ReversibleChain chain;
  };
  std::vector<Case> cases;
  for (int n : {4, 8, 16}) cases.push_back({"K" + std::to_string(n), markov::validate_chain(markov::complete_graph(n), false)});
  for (int n : {5, 9}) cases.push_back({"C" + std::to_string(n), markov::validate_chain(markov::cycle_graph(n), false)});
  for (int n : {4, 8, 16}) cases.push_back({"lazyC" + std::to_string(n), markov::lazify(markov::validate_chain(markov::cycle_graph(n), false))});
  const auto z = cli::parallel_map<double>(cases.size(), 4, [&](std::size_t i) {
    const auto& c = cases[i].chain;
    const double exact = markov::classical_hitting_time(c, 0);
    const auto mc = oracles::simulated_hitting_time(c.matrix(), c.stationary(), 0, 1000000, 100 + i);
    return std::abs(mc.mean - exact) / mc.stderr_;
  });
  double worst = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    worst = std::max(worst, z[i]);
    o.require(z[i] <= 3.0, cases[i].label);
  }
  o.detail << cases.size() << " chains x 10^6 walks, max |z| " << worst;
}

void determinism(Outcome& o) {
  using Command = cli::CommandResult (*)(const json&, const cli::RunContext&);
  const std::pair<const char*, Command> commands[] = {
      {"gluedtrees", cli::cmd_gluedtrees}, {"search", cli::cmd_search}, {"bounds", cli::cmd_bounds}};
  for (const auto& [name, cmd] : commands) {
    const json config = load_config(std::string(name) + ".json");
    const auto a = cmd(config, {name, std::nullopt, 1});
    const auto b = cmd(config, {name, std::nullopt, 1});
    const auto c = cmd(config, {name, std::nullopt, 2});
    const std::string ja = record::dump(a.record);
    o.require(ja == record::dump(b.record) && a.csv == b.csv, std::string(name) + " rerun");
    o.require(ja == record::dump(c.record) && a.csv == c.csv, std::string(name) + " jobs 1 vs 2");
    o.detail << name << " " << ja.size() + a.csv.size() << " bytes; ";
  }
}

struct Criterion {
  int id;
  double budget_seconds;
  std::function<void(Outcome&)> body;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, 60, lemma_corpus},     {2, 60, closed_form_equivalence}, {3, 30, glued_spectrum}, {4, 300, corollary_reproduction},
      {5, 300, hierarchy},       {6, 60, full_graph},              {7, 60, search_spectrum}, {8, 180, lemma5},
      {9, 120, classical_ht},    {10, 600, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs < c.budget_seconds, "runtime budget");
    std::printf("criterion %d: %s (%.1fs of %.0fs) %s\n", c.id, o.pass ? "PASS" : "FAIL", secs, c.budget_seconds, o.detail.str().c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
