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

#include "ctqw/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/QR>

#include "ctqw/bounds.hpp"
#include "ctqw/gluedtrees.hpp"
#include "ctqw/markov.hpp"
#include "ctqw/record.hpp"
#include "ctqw/rng.hpp"
#include "ctqw/search.hpp"
#include "ctqw/spectral.hpp"
#include "ctqw/walk.hpp"

#ifndef CTQW_VERSION
#define CTQW_VERSION "unknown"
#endif

namespace ctqw::cli {

namespace {

using nlohmann::json;

// Typed, range-checked access to one JSON object. Unknown keys are errors:
// a misspelled option should not silently fall back to its default.
class Fields {
 public:
  Fields(const json& doc, std::string where, std::set<std::string> allowed) : doc_(doc), where_(std::move(where)) {
    if (!doc_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
    for (auto it = doc_.begin(); it != doc_.end(); ++it)
      if (!allowed.count(it.key())) fail(it.key(), "unknown field");
  }

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ConfigError(where_ + ": field '" + field + "': " + what);
  }

  bool has(const std::string& key) const { return doc_.contains(key) && !doc_.at(key).is_null(); }
  const json& raw(const std::string& key) const {
    if (!has(key)) fail(key, "required");
    return doc_.at(key);
  }

  long long integer(const std::string& key, std::optional<long long> def, long long lo, long long hi) const {
    if (!has(key)) {
      if (!def) fail(key, "required");
      return *def;
    }
    return check_int(key, doc_.at(key), lo, hi);
  }

  double real(const std::string& key, std::optional<double> def, double lo, double hi) const {
    if (!has(key)) {
      if (!def) fail(key, "required");
      return *def;
    }
    return check_real(key, doc_.at(key), lo, hi);
  }

  bool flag(const std::string& key, bool def) const {
    if (!has(key)) return def;
    if (!doc_.at(key).is_boolean()) fail(key, "expected true or false");
    return doc_.at(key).get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> def) const {
    if (!has(key)) {
      if (!def) fail(key, "required");
      return *def;
    }
    if (!doc_.at(key).is_string()) fail(key, "expected a string");
    return doc_.at(key).get<std::string>();
  }

  std::vector<long long> integers(const std::string& key, std::optional<std::vector<long long>> def, long long lo, long long hi) const {
    if (!has(key)) {
      if (!def) fail(key, "required");
      return *def;
    }
    const json& a = doc_.at(key);
    if (!a.is_array() || a.empty()) fail(key, "expected a nonempty array");
    std::vector<long long> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(check_int(key + "[" + std::to_string(i) + "]", a[i], lo, hi));
    return out;
  }

  std::vector<double> reals(const std::string& key, std::optional<std::vector<double>> def, double lo, double hi) const {
    if (!has(key)) {
      if (!def) fail(key, "required");
      return *def;
    }
    const json& a = doc_.at(key);
    if (!a.is_array() || a.empty()) fail(key, "expected a nonempty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(check_real(key + "[" + std::to_string(i) + "]", a[i], lo, hi));
    return out;
  }

  std::uint64_t seed(const RunContext& ctx) const {
    if (ctx.seed) return *ctx.seed;
    if (!has("seed")) fail("seed", "required for stochastic experiments (or pass --seed)");
    const json& s = doc_.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) fail("seed", "expected a nonnegative integer");
    return s.get<std::uint64_t>();
  }

 private:
  long long check_int(const std::string& field, const json& v, long long lo, long long hi) const {
    if (!v.is_number_integer()) fail(field, "expected an integer");
    const auto x = v.get<long long>();
    if (x < lo || x > hi) fail(field, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + std::to_string(x));
    return x;
  }

  double check_real(const std::string& field, const json& v, double lo, double hi) const {
    if (!v.is_number()) fail(field, "expected a number");
    const double x = v.get<double>();
    if (!(x >= lo && x <= hi)) {
      std::ostringstream os;
      os << "must lie in [" << lo << ", " << hi << "], got " << x;
      fail(field, os.str());
    }
    return x;
  }

  const json& doc_;
  std::string where_;
};

void check_experiment(const Fields& f, const std::string& name) {
  if (f.has("experiment") && f.text("experiment", std::nullopt) != name) f.fail("experiment", "expected \"" + name + "\"");
}

json echo(const json& config, std::uint64_t seed) {
  json e = config;
  e["seed"] = seed;
  return e;
}

json base_record(const std::string& command, const json& config, std::uint64_t seed) {
  return {{"command", command}, {"version", CTQW_VERSION}, {"config", echo(config, seed)}};
}

json estimate_json(const HittingTimeEstimate& e) {
  return {{"tau", e.tau},           {"argmin_T", e.argmin_T}, {"probability", e.probability_at_argmin}, {"k", e.summands},
          {"grid_lo", e.grid_lo}, {"grid_hi", e.grid_hi},   {"grid_points", e.grid_points}};
}

json bound_json(const BoundReport& b) {
  return {{"bound", b.bound_value}, {"actual", b.actual_value}, {"slack", b.slack}, {"holds", b.holds},
          {"gap", b.gap},           {"overlap", b.overlap},     {"T", b.max_time},   {"k", b.summands}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- gluedtrees

struct GluedRow {
  json record;
  std::vector<record::Cell> csv;
  bool ok = false;
  double n = 0.0;
  double tau_cor1 = 0.0;
};

GluedRow glued_point(int n, std::uint64_t seed, long long mc_runs, int per_decade, bool box) {
  const int two_n = 2 * n;
  const auto walk = gluedtrees::column_walk(two_n);
  const auto s = gluedtrees::subspace_S(two_n, walk.partition);
  const auto& gap = *s.gaps.subset;
  const auto taus = gluedtrees::schedule_hitting_times(walk, per_decade);
  const gluedtrees::Algorithm1 alg(two_n, {box, 0});

  long long successes = 0;
  double repetitions = 0.0;
  for (long long r = 0; r < mc_runs; ++r) {
    const auto run = alg.run(seed, static_cast<std::uint64_t>(r));
    successes += run.success ? 1 : 0;
    repetitions += run.repetitions;
  }
  const double mc_success = mc_runs > 0 ? static_cast<double>(successes) / static_cast<double>(mc_runs) : std::nan("");

  const double eq34_bound = std::numbers::pi / (16.0 * n);
  const double p_shot_bound = 1.0 / (4.0 * n) - 1.0 / (5.0 * n);
  const bool eq34 = gap.delta_e_s >= eq34_bound;
  const bool shot = alg.shot_probability() >= p_shot_bound - kProbabilitySlack;
  const bool hierarchy = taus.lemma2.tau < taus.lemma1.tau && taus.lemma3.tau < taus.lemma2.tau;

  GluedRow row;
  row.n = n;
  row.tau_cor1 = taus.corollary.tau;
  row.ok = eq34 && shot && hierarchy;
  row.record = {{"n", n},
                {"two_n", two_n},
                {"delta_e_s", gap.delta_e_s},
                {"delta_e_s_within", gap.within},
                {"delta_e_s_to_rest", gap.to_rest},
                {"eq34_bound", eq34_bound},
                {"eq34_holds", eq34},
                {"s_size", s.members.size()},
                {"s_sin_p_in_range", s.sin_p_in_range},
                {"alpha4_mass", s.alpha4_mass},
                {"T", alg.distribution().max_time()},
                {"k", alg.distribution().summands()},
                {"p_shot", alg.shot_probability()},
                {"p_shot_bound", p_shot_bound},
                {"p_shot_holds", shot},
                {"tau_l1", estimate_json(taus.lemma1)},
                {"tau_l2", estimate_json(taus.lemma2)},
                {"tau_l3", estimate_json(taus.lemma3)},
                {"tau_cor1", estimate_json(taus.corollary)},
                {"hierarchy_holds", hierarchy},
                {"mc_runs", mc_runs},
                {"mc_success", mc_success},
                {"mc_mean_repetitions", mc_runs > 0 ? repetitions / static_cast<double>(mc_runs) : std::nan("")},
                {"max_repetitions", alg.max_repetitions()},
                {"max_total_time", alg.max_total_time()}};
  row.csv = {static_cast<long long>(n), gap.delta_e_s, clamp_probability(alg.shot_probability()), taus.lemma1.tau,
             taus.lemma2.tau, taus.lemma3.tau, mc_success};
  return row;
}

// ---------------------------------------------------------------- search

struct ChainEntry {
  std::string family;
  markov::ReversibleChain chain;
  Index marked;
};

ChainEntry load_chain(const json& doc, const std::string& where, bool lazy, const std::filesystem::path& base) {
  const Fields f(doc, where, {"family", "n", "marked", "graph_seed", "path", "chain", "label"});
  const std::string family = f.text("family", std::nullopt);
  std::optional<markov::StochasticMatrix> p;
  std::optional<Index> marked;
  try {
    if (family == "complete" || family == "cycle" || family == "star" || family == "random") {
      const auto n = static_cast<Index>(f.integer("n", std::nullopt, 2, 64));
      if (family == "complete") p = markov::complete_graph(n);
      if (family == "cycle") p = markov::cycle_graph(n);
      if (family == "star") p = markov::star_graph(n);
      if (family == "random")
        p = markov::StochasticMatrix::from_weighted_graph(
            markov::random_weighted_graph(n, static_cast<std::uint64_t>(f.integer("graph_seed", 1, 0, INT64_MAX))));
    } else if (family == "file" || family == "inline") {
      json chain_doc;
      if (family == "file") {
        const std::filesystem::path path = base / f.text("path", std::nullopt);
        std::ifstream in(path);
        if (!in) f.fail("path", "cannot read " + path.string());
        try {
          chain_doc = json::parse(in);
        } catch (const json::exception& e) {
          f.fail("path", std::string("invalid JSON: ") + e.what());
        }
      } else {
        chain_doc = f.raw("chain");
      }
      auto parsed = markov::chain_from_json(chain_doc);
      p = std::move(parsed.chain);
      marked = parsed.marked;
    } else {
      f.fail("family", "expected complete, cycle, star, random, file or inline");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  const auto v = static_cast<Index>(f.integer("marked", marked.value_or(0), 0, p->dim() - 1));
  try {
    auto chain = markov::validate_chain(*p, !lazy);
    return {f.text("label", family), std::move(chain), v};
  } catch (const ValidationError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

// ---------------------------------------------------------------- bounds

struct BoundsInstance {
  HermitianOperator<Complex> h;
  ComplexVector psi0;
  ComplexVector y;
  double max_time;
  int summands;
  bool degenerate;
};

ComplexVector random_state(Index dim, RandomStream& rng) {
  ComplexVector v(dim);
  for (Index i = 0; i < dim; ++i) {
    const double re = rng.normal();
    v(i) = Complex(re, rng.normal());
  }
  return v / v.norm();
}

// A quarter of the corpus has repeated eigenvalues, so eigenspace
// projectors of rank > 1 are exercised too.
BoundsInstance random_instance(RandomStream& rng, Index max_dim, double t_min, double t_max, const std::vector<long long>& ks) {
  const auto dim = static_cast<Index>(2 + rng.below(static_cast<std::uint64_t>(max_dim - 1)));
  const bool degenerate = rng.uniform() < 0.25;
  ComplexMatrix a(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index k = 0; k < dim; ++k) {
      const double re = rng.normal();
      a(j, k) = Complex(re, rng.normal());
    }
  ComplexMatrix h;
  if (degenerate) {
    const ComplexMatrix u = Eigen::HouseholderQR<ComplexMatrix>(a).householderQ();
    RealVector e(dim);
    do {
      for (Index j = 0; j < dim; ++j) e(j) = static_cast<double>(rng.below(4)) - 1.5;
    } while (e.maxCoeff() == e.minCoeff());
    h = u * e.cast<Complex>().asDiagonal() * u.adjoint();
  } else {
    h = (a + a.adjoint()) / 2.0;
  }
  BoundsInstance inst{HermitianOperator<Complex>(h), random_state(dim, rng), random_state(dim, rng), 0.0, 1, degenerate};
  inst.max_time = t_min * std::pow(t_max / t_min, rng.uniform());
  inst.summands = static_cast<int>(ks[rng.below(ks.size())]);
  return inst;
}

struct BoundsRow {
  json record;
  std::vector<record::Cell> csv;
  double slack[4];  // lemma 1, 2 (min over eigenspaces), 3, 6
  bool condition = false;
  bool implication = true;
  bool literal = true;
};

BoundsRow bounds_point(std::uint64_t seed, std::size_t index, Index max_dim, double t_min, double t_max, const std::vector<long long>& ks,
                       double fault) {
  RandomStream rng(seed, index);
  const auto inst = random_instance(rng, max_dim, t_min, t_max, ks);
  const auto p = eigenspaces(inst.h);
  const TimeDistribution dist(inst.max_time, inst.summands);

  std::vector<Index> subset;
  while (subset.empty())
    for (Index g = 0; g < p.size(); ++g)
      if (rng.uniform() < 0.5) subset.push_back(g);

  auto inject = [fault](BoundReport b, bool upper) {
    if (upper)
      b.bound_value -= fault;
    else
      b.bound_value += fault;
    b.slack = upper ? b.bound_value - b.actual_value : b.actual_value - b.bound_value;
    b.holds = b.slack >= -kBoundSlack;
    return b;
  };

  const auto l1 = inject(lemma1_bound(p, inst.psi0, inst.y, inst.max_time), false);
  json l2_all = json::array();
  double l2_min = std::numeric_limits<double>::infinity();
  Index best = 0;
  double best_overlap = -1.0;
  for (Index g = 0; g < p.size(); ++g) {
    const auto l2 = inject(lemma2_bound(p, inst.psi0, inst.y, inst.max_time, g), false);
    l2_min = std::min(l2_min, l2.slack);
    l2_all.push_back(bound_json(l2));
    if (l2.overlap > best_overlap) {
      best_overlap = l2.overlap;
      best = g;
    }
  }
  const auto l3 = inject(lemma3_bound(p, inst.psi0, inst.y, dist, subset), false);
  const auto l6 = inject(dephasing_residual(p, DensityOperator::pure(inst.psi0), subset, dist), true);
  const auto cmp = lemma_comparison(p, inst.psi0, inst.y, inst.max_time, best);

  BoundsRow row;
  row.slack[0] = l1.slack;
  row.slack[1] = l2_min;
  row.slack[2] = l3.slack;
  row.slack[3] = l6.slack;
  row.condition = cmp.condition_holds;
  row.implication = cmp.implication_holds;
  row.literal = cmp.literal_implication;
  row.record = {{"instance", index},
                {"dim", p.dim()},
                {"eigenspaces", p.size()},
                {"degenerate", inst.degenerate},
                {"T", inst.max_time},
                {"k", inst.summands},
                {"subset", subset},
                {"lemma1", bound_json(l1)},
                {"lemma2", l2_all},
                {"lemma3", bound_json(l3)},
                {"lemma6", bound_json(l6)},
                {"comparison",
                 {{"eigenspace", best},
                  {"p_bar", cmp.p_bar},
                  {"p_inf", cmp.p_inf},
                  {"condition", cmp.condition_holds},
                  {"lemma2_bound_better", cmp.lemma2_bound_better},
                  {"lemma1_rate", cmp.lemma1_rate},
                  {"lemma2_rate", cmp.lemma2_rate},
                  {"implication_holds", cmp.implication_holds},
                  {"literal_implication", cmp.literal_implication}}}};
  row.csv = {static_cast<long long>(index), static_cast<long long>(p.dim()), inst.max_time, static_cast<long long>(inst.summands),
             l1.slack, l2_min, l3.slack, l6.slack, cmp.condition_holds, cmp.implication_holds};
  return row;
}

}  // namespace

CommandResult cmd_gluedtrees(const json& config, const RunContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const Fields f(config, ctx.config_name,
                 {"experiment", "seed", "n_values", "mc_runs", "grid_per_decade", "box_summands", "record_timing"});
  check_experiment(f, "gluedtrees");
  const std::uint64_t seed = f.seed(ctx);
  const auto ns = f.integers("n_values", std::nullopt, 4, 64);
  const long long mc_runs = f.integer("mc_runs", 200, 0, 10'000'000);
  const int per_decade = static_cast<int>(f.integer("grid_per_decade", 40, 1, 1000));
  const bool box = f.flag("box_summands", false);
  const bool timing = f.flag("record_timing", false);

  const auto rows = parallel_map<GluedRow>(ns.size(), ctx.jobs, [&](std::size_t i) {
    return glued_point(static_cast<int>(ns[i]), derive_seed(seed, 1, static_cast<std::uint32_t>(ns[i])), mc_runs, per_decade, box);
  });

  CommandResult result;
  result.record = base_record("gluedtrees", config, seed);
  record::CsvTable csv({"n", "delta_e_s", "p_shot", "tau_l1", "tau_l2", "tau_l3", "mc_success"});
  json points = json::array();
  result.assertions_hold = true;
  std::vector<double> logn, logtau;
  for (const auto& r : rows) {
    points.push_back(r.record);
    csv.add_row(r.csv);
    result.assertions_hold = result.assertions_hold && r.ok;
    logn.push_back(std::log(r.n));
    logtau.push_back(std::log(r.tau_cor1));
  }
  result.record["points"] = points;
  json summary = {{"all_hold", result.assertions_hold}};
  if (std::set<double>(logn.begin(), logn.end()).size() >= 2) {
    const auto fit = record::linear_fit(logn, logtau);
    summary["tau_cor1_loglog_slope"] = fit.slope;
    summary["tau_cor1_loglog_r_squared"] = fit.r_squared;
  }
  result.record["summary"] = summary;
  if (timing) result.record["wall_clock_seconds"] = seconds_since(t0);
  result.csv = csv.str();
  return result;
}

CommandResult cmd_search(const json& config, const RunContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const Fields f(config, ctx.config_name,
                 {"experiment", "seed", "chains", "epsilons", "shots", "lazy", "time_constant", "record_timing", "base_dir"});
  check_experiment(f, "search");
  const std::uint64_t seed = f.seed(ctx);
  const auto epsilons = f.reals("epsilons", std::nullopt, 1e-12, 0.25);
  for (std::size_t i = 0; i < epsilons.size(); ++i)
    if (!(epsilons[i] < 0.25)) f.fail("epsilons[" + std::to_string(i) + "]", "must be < 1/4");
  const auto shots = static_cast<std::uint64_t>(f.integer("shots", 10000, 0, 100'000'000));
  const bool lazy = f.flag("lazy", true);
  const double c = f.real("time_constant", search::kSearchTimeConstant, 1e-6, 1e6);
  const bool timing = f.flag("record_timing", false);
  const std::filesystem::path base = f.text("base_dir", ".");
  const json& chain_docs = f.raw("chains");
  if (!chain_docs.is_array() || chain_docs.empty()) f.fail("chains", "expected a nonempty array");

  std::vector<ChainEntry> chains;
  for (std::size_t i = 0; i < chain_docs.size(); ++i)
    chains.push_back(load_chain(chain_docs[i], ctx.config_name + ": chains[" + std::to_string(i) + "]", lazy, base));
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const auto& e = chains[i];
    if (e.chain.stationary()(e.marked) >= 0.5)
      throw ConfigError(ctx.config_name + ": chains[" + std::to_string(i) + "]: marked state has pi_v >= 1/2, s* would be negative");
  }

  const std::size_t tasks = chains.size() * epsilons.size();
  const auto runs = parallel_map<search::Algorithm2Result>(tasks, ctx.jobs, [&](std::size_t t) {
    const auto& e = chains[t / epsilons.size()];
    search::Algorithm2Options opt;
    opt.lazy = lazy;
    opt.time_constant = c;
    opt.shots = shots;
    return search::run_algorithm2(e.chain, e.marked, epsilons[t % epsilons.size()], derive_seed(seed, 2, static_cast<std::uint32_t>(t)), opt);
  });

  CommandResult result;
  result.record = base_record("search", config, seed);
  result.assertions_hold = true;
  record::CsvTable csv({"family", "N", "epsilon", "s_star", "delta_s_star", "HT", "T", "k", "p_bar_exact", "mc_freq", "lemma5_holds"});
  json chain_records = json::array();
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const auto& e = chains[i];
    const auto work = lazy ? markov::lazify(e.chain) : e.chain;
    const auto ic = markov::interpolate(work, e.marked, markov::s_star(work, e.marked));
    const auto overlaps = search::overlap_preconditions(work, ic);
    const auto product = markov::gap_vs_hitting_time(work, e.marked);
    result.assertions_hold = result.assertions_hold && overlaps.holds;
    json eps_records = json::array();
    std::vector<double> log_inv_eps, total;
    for (std::size_t j = 0; j < epsilons.size(); ++j) {
      const auto& r = runs[i * epsilons.size() + j];
      const double sigma = std::sqrt(std::max(0.0, r.p_bar * (1.0 - r.p_bar)) / static_cast<double>(std::max<std::uint64_t>(r.shots, 1)));
      const bool within = r.shots == 0 || std::abs(r.mc_frequency - r.p_bar) <= 3.0 * sigma + 1e-12;
      result.assertions_hold = result.assertions_hold && r.lemma5_holds && r.lemma3_holds;
      eps_records.push_back({{"epsilon", r.epsilon},
                             {"s_star", r.s_star},
                             {"delta_s_star", r.gap},
                             {"HT", r.hitting_time},
                             {"T", r.max_time},
                             {"k", r.summands},
                             {"total_time", r.total_time},
                             {"p_bar_exact", r.p_bar},
                             {"lemma5_holds", r.lemma5_holds},
                             {"lemma3_bound", r.lemma3_bound},
                             {"lemma3_holds", r.lemma3_holds},
                             {"zero_gap", r.zero_gap},
                             {"shots", r.shots},
                             {"hits", r.hits},
                             {"mc_freq", r.shots ? json(r.mc_frequency) : json(nullptr)},
                             {"mc_within_3sigma", within},
                             {"seed", r.seed}});
      csv.add_row({e.family, static_cast<long long>(r.n), r.epsilon, r.s_star, r.gap, r.hitting_time, r.max_time,
                   static_cast<long long>(r.summands), clamp_probability(r.p_bar), r.shots ? r.mc_frequency : std::nan(""),
                   r.lemma5_holds});
      log_inv_eps.push_back(std::log(1.0 / r.epsilon));
      total.push_back(r.total_time);
    }
    json chain_record = {{"family", e.family},
                         {"N", e.chain.dim()},
                         {"marked", e.marked},
                         {"lazy", lazy},
                         {"chain", markov::chain_to_json(work.transition(), e.marked)},
                         {"initial_overlap", overlaps.initial_overlap},
                         {"marked_overlap", overlaps.marked_overlap},
                         {"overlap_closed_form_error", overlaps.closed_form_error},
                         {"overlaps_hold", overlaps.holds},
                         {"gap_times_hitting_time", product.product},
                         {"runs", eps_records}};
    if (std::set<double>(log_inv_eps.begin(), log_inv_eps.end()).size() >= 2) {
      const auto fit = record::linear_fit(log_inv_eps, total);
      chain_record["total_time_vs_log_inv_eps"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
    }
    chain_records.push_back(chain_record);
  }
  result.record["chains"] = chain_records;
  result.record["summary"] = {{"all_hold", result.assertions_hold}, {"time_constant", c}};
  if (timing) result.record["wall_clock_seconds"] = seconds_since(t0);
  result.csv = csv.str();
  return result;
}

CommandResult cmd_bounds(const json& config, const RunContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const Fields f(config, ctx.config_name,
                 {"experiment", "seed", "instances", "max_dim", "t_min", "t_max", "summands", "self_test", "fault", "record_timing"});
  check_experiment(f, "bounds");
  const std::uint64_t seed = f.seed(ctx);
  const auto count = static_cast<std::size_t>(f.integer("instances", 200, 1, 1'000'000));
  const auto max_dim = static_cast<Index>(f.integer("max_dim", 10, 2, 64));
  const double t_min = f.real("t_min", 0.1, 1e-9, 1e12);
  const double t_max = f.real("t_max", 1000.0, t_min, 1e12);
  const auto ks = f.integers("summands", std::vector<long long>{1, 2, 3, 4}, 1, 64);
  const bool self_test = f.flag("self_test", false);
  const double fault = self_test ? f.real("fault", 1e-3, 0.0, 1.0) : 0.0;
  const bool timing = f.flag("record_timing", false);

  const auto rows = parallel_map<BoundsRow>(count, ctx.jobs, [&](std::size_t i) {
    return bounds_point(seed, i, max_dim, t_min, t_max, ks, fault);
  });

  CommandResult result;
  result.record = base_record("bounds", config, seed);
  record::CsvTable csv({"instance", "dim", "T", "k", "lemma1_slack", "lemma2_min_slack", "lemma3_slack", "lemma6_slack",
                        "eq8_condition", "implication_holds"});
  const char* names[4] = {"lemma1", "lemma2", "lemma3", "lemma6"};
  double min_slack[4];
  std::size_t argmin[4] = {0, 0, 0, 0};
  std::size_t failures[4] = {0, 0, 0, 0};
  std::fill(std::begin(min_slack), std::end(min_slack), std::numeric_limits<double>::infinity());
  std::size_t conditions = 0, implication_failures = 0, literal_failures = 0;
  json instances = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    for (int l = 0; l < 4; ++l) {
      if (r.slack[l] < min_slack[l]) {
        min_slack[l] = r.slack[l];
        argmin[l] = i;
      }
      if (r.slack[l] < -kBoundSlack) ++failures[l];
    }
    conditions += r.condition ? 1 : 0;
    implication_failures += r.implication ? 0 : 1;
    literal_failures += r.literal ? 0 : 1;
    instances.push_back(r.record);
    csv.add_row(r.csv);
  }
  json lemmas = json::object();
  result.assertions_hold = implication_failures == 0;
  for (int l = 0; l < 4; ++l) {
    lemmas[names[l]] = {{"min_slack", min_slack[l]}, {"argmin_instance", argmin[l]}, {"failures", failures[l]}};
    result.assertions_hold = result.assertions_hold && failures[l] == 0;
  }
  result.record["instances"] = instances;
  result.record["summary"] = {{"instances", count},
                              {"self_test", self_test},
                              {"fault", fault},
                              {"lemmas", lemmas},
                              {"eq8_condition_count", conditions},
                              {"eq8_implication_failures", implication_failures},
                              {"eq8_literal_implication_failures", literal_failures},
                              {"all_hold", result.assertions_hold}};
  if (timing) result.record["wall_clock_seconds"] = seconds_since(t0);
  result.csv = csv.str();
  return result;
}

int run(const Invocation& inv, std::ostream& out, std::ostream& err) {
  try {
    if (inv.command != "gluedtrees" && inv.command != "search" && inv.command != "bounds")
      throw ConfigError("unknown command '" + inv.command + "'");
    if (inv.jobs < 1) throw ConfigError("--jobs must be >= 1");
    std::ifstream in(inv.config);
    if (!in) throw ConfigError(inv.config.string() + ": cannot read config file");
    json config;
    try {
      config = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(inv.config.string() + ": invalid JSON: " + e.what());
    }
    RunContext ctx{inv.config.string(), inv.seed, inv.jobs};
    // Relative chain files resolve against the config's directory.
    if (inv.command == "search" && config.is_object() && !config.contains("base_dir"))
      config["base_dir"] = inv.config.parent_path().string();
    const CommandResult result = inv.command == "gluedtrees" ? cmd_gluedtrees(config, ctx)
                                 : inv.command == "search"   ? cmd_search(config, ctx)
                                                             : cmd_bounds(config, ctx);
    std::error_code ec;
    std::filesystem::create_directories(inv.out, ec);
    if (ec) throw ConfigError(inv.out.string() + ": cannot create output directory: " + ec.message());
    for (const auto& [ext, text] : {std::pair{".json", record::dump(result.record)}, std::pair{".csv", result.csv}}) {
      const auto path = inv.out / (inv.command + ext);
      std::ofstream f(path, std::ios::binary);
      f << text;
      if (!f) throw ConfigError(path.string() + ": cannot write output");
      out << "wrote " << path.string() << '\n';
    }
    out << inv.command << ": " << (result.assertions_hold ? "all assertions hold" : "ASSERTION FAILURE") << '\n';
    return result.assertions_hold ? kExitOk : kExitAssertion;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalInconsistency& e) {
    err << "numerical inconsistency: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "numerical inconsistency: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ctqw::cli
