/*
 * Copyright 2026 The treeval Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "treeval/sim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

#include "treeval/contrast.hpp"
#include "treeval/error.hpp"
#include "treeval/inference.hpp"
#include "treeval/rng.hpp"

namespace treeval::sim {
namespace {

constexpr double kDetectionAri = 0.75;
constexpr int kTrueSplits = 4;

double choose2(double k) { return k * (k - 1.0) / 2.0; }

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(count, static_cast<std::size_t>(threads)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct Cell {
  double a;
  double b;
};

std::vector<Cell> cells_of(const SimConfig& cfg) {
  std::vector<Cell> out;
  for (double a : cfg.a_values) {
    for (double b : cfg.b_values) out.push_back({a, b});
  }
  return out;
}

struct ReplicateOutput {
  std::vector<SimRow> rows;
  std::size_t errors = 0;
  std::size_t skipped = 0;
};

double mean_over(std::span<const double> y, std::span<const int> idx) {
  double s = 0.0;
  for (int i : idx) s += y[i];
  return s / static_cast<double>(idx.size());
}

std::vector<int> intersect_sorted(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Membership of every observation of `d` in each region of `t`, routed by
// the region thresholds (t may have been fitted on another sample).
std::vector<std::vector<int>> route_all(const Tree& t, const Dataset& d) {
  std::vector<std::vector<int>> out(t.size());
  for (std::size_t i = 0; i < d.n(); ++i) {
    int cur = t.root;
    out[cur].push_back(static_cast<int>(i));
    while (!t.regions[cur].terminal()) {
      const Region& r = t.regions[cur];
      cur = d.x(i, r.split_feature) <= r.threshold ? r.left : r.right;
      out[cur].push_back(static_cast<int>(i));
    }
  }
  return out;
}

struct SampleSplit {
  Tree tree;
  std::vector<std::vector<int>> members;  // full-sample routing
  std::vector<int> test;
};

SampleSplit sample_split(const SimConfig& cfg, const Dataset& d, std::mt19937_64& rng) {
  std::vector<int> perm(d.n());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t half = d.n() / 2;
  std::vector<int> train(perm.begin(), perm.begin() + half);
  std::vector<int> test(perm.begin() + half, perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  const Dataset dt = d.subset(train);
  SampleSplit out{fit(dt, dt.y(), cfg.stop, cfg.lambda), {}, std::move(test)};
  out.members = route_all(out.tree, d);
  return out;
}

SimRow base_row(std::size_t rep, const Cell& c, const char* method, const char* target,
                int level) {
  SimRow r;
  r.replicate = rep;
  r.a = c.a;
  r.b = c.b;
  r.method = method;
  r.target = target;
  r.level = level;
  return r;
}

void fill_interval(SimRow& row, double lo, double hi) {
  row.ci_lo = lo;
  row.ci_hi = hi;
  row.covered = (lo <= row.parameter && row.parameter <= hi) ? 1 : 0;
}

// Split and region intervals for every method on one simulated dataset.
ReplicateOutput inference_replicate(const SimConfig& cfg, const Cell& cell, std::size_t rep,
                                    bool regions) {
  ReplicateOutput out;
  auto rng = stream_rng(cfg.seed, rep);
  const SimData sd = generate(cfg, cell.a, cell.b, rng);
  const Dataset& d = sd.data;
  const auto y = d.y();
  const double sigma = cfg.estimate_sigma ? estimate_sigma(y) : cfg.sigma;
  const Tree t = fit(d, y, cfg.stop, cfg.lambda);
  InferenceOptions opts;
  opts.alpha = cfg.alpha;
  opts.mode = cfg.mode;

  for (int pid : t.internal_regions()) {
    const Region& a = t.regions[t.regions[pid].left];
    const Region& b = t.regions[t.regions[pid].right];
    const Contrast nu = nu_sib(a.members, b.members, d.n());
    const double param = nu.dot(sd.mu);
    const double stat = nu.dot(y);
    const double sdv = sigma * std::sqrt(nu.norm2);
    if (cfg.selective) {
      try {
        const InferenceResult r = infer_split(t, pid, d, y, sigma, opts);
        SimRow row = base_row(rep, cell, "selective", "split", a.level);
        row.statistic = r.statistic;
        row.parameter = param;
        row.p_value = r.p_value;
        fill_interval(row, r.ci_lo, r.ci_hi);
        out.rows.push_back(row);
      } catch (const Error&) {
        ++out.errors;
      }
    }
    if (cfg.naive) {
      const NaiveResult nz = naive_z(stat, sdv, cfg.alpha);
      SimRow row = base_row(rep, cell, "naive", "split", a.level);
      row.statistic = stat;
      row.parameter = param;
      row.p_value = nz.p_value;
      fill_interval(row, nz.lo, nz.hi);
      out.rows.push_back(row);
    }
  }
  if (regions) {
    for (const Region& r : t.regions) {
      const Contrast nu = nu_reg(r.members, d.n());
      const double param = nu.dot(sd.mu);
      const double stat = nu.dot(y);
      if (cfg.selective) {
        try {
          const InferenceResult res = infer_region(t, r.id, d, y, sigma, opts);
          SimRow row = base_row(rep, cell, "selective", "region", r.level);
          row.statistic = res.statistic;
          row.parameter = param;
          row.p_value = res.p_value;
          fill_interval(row, res.ci_lo, res.ci_hi);
          out.rows.push_back(row);
        } catch (const Error&) {
          ++out.errors;
        }
      }
      if (cfg.naive) {
        const NaiveResult nz = naive_z(stat, sigma * std::sqrt(nu.norm2), cfg.alpha);
        SimRow row = base_row(rep, cell, "naive", "region", r.level);
        row.statistic = stat;
        row.parameter = param;
        row.p_value = nz.p_value;
        fill_interval(row, nz.lo, nz.hi);
        out.rows.push_back(row);
      }
    }
  }
  if (cfg.sample_split) {
    const SampleSplit ss = sample_split(cfg, d, rng);
    for (int pid : ss.tree.internal_regions()) {
      const Region& pr = ss.tree.regions[pid];
      const auto& a_all = ss.members[pr.left];
      const auto& b_all = ss.members[pr.right];
      SimRow row = base_row(rep, cell, "split", "split", pr.level + 1);
      const auto a_test = intersect_sorted(a_all, ss.test);
      const auto b_test = intersect_sorted(b_all, ss.test);
      if (a_test.empty() || b_test.empty()) {
        row.parameter = nu_sib(a_all, b_all, d.n()).dot(sd.mu);
        row.covered = 0;
        row.rejected = 0;
      } else {
        row.parameter = mean_over(sd.mu, a_test) - mean_over(sd.mu, b_test);
        row.statistic = mean_over(y, a_test) - mean_over(y, b_test);
        const double sdv = sigma * std::sqrt(1.0 / static_cast<double>(a_test.size()) +
                                             1.0 / static_cast<double>(b_test.size()));
        const NaiveResult nz = naive_z(row.statistic, sdv, cfg.alpha);
        row.p_value = nz.p_value;
        fill_interval(row, nz.lo, nz.hi);
      }
      out.rows.push_back(row);
    }
    if (regions) {
      for (const Region& r : ss.tree.regions) {
        const auto& all = ss.members[r.id];
        SimRow row = base_row(rep, cell, "split", "region", r.level);
        row.parameter = all.empty() ? std::nan("") : mean_over(sd.mu, all);
        const auto test = intersect_sorted(all, ss.test);
        if (test.empty()) {
          row.covered = 0;
        } else {
          row.parameter = mean_over(sd.mu, test);
          row.statistic = mean_over(y, test);
          const NaiveResult nz = naive_z(
              row.statistic, sigma / std::sqrt(static_cast<double>(test.size())), cfg.alpha);
          row.p_value = nz.p_value;
          fill_interval(row, nz.lo, nz.hi);
        }
        out.rows.push_back(row);
      }
    }
  }
  return out;
}

struct TrueSplit {
  int level;
  std::vector<int> left;
  std::vector<int> right;
};

std::vector<TrueSplit> true_splits(const Dataset& d) {
  std::vector<TrueSplit> out(kTrueSplits);
  out[0].level = 1;
  out[1].level = 2;
  out[2].level = 3;
  out[3].level = 3;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const int id = static_cast<int>(i);
    const bool x1 = d.x(i, 0) <= 0.0;
    const bool x2 = d.x(i, 1) <= 0.0;
    const bool x3 = d.x(i, 2) <= 0.0;
    (x1 ? out[0].left : out[0].right).push_back(id);
    if (!x1) continue;
    (x2 ? out[1].left : out[1].right).push_back(id);
    (x3 ? out[x2 ? 2 : 3].left : out[x2 ? 2 : 3].right).push_back(id);
  }
  return out;
}

double split_ari(const TrueSplit& ts, std::span<const int> est_left,
                 std::span<const int> est_right, std::size_t n) {
  std::vector<char> col(n, 2);
  for (int i : est_left) col[i] = 0;
  for (int i : est_right) col[i] = 1;
  Table2x3 tab{};
  for (int i : ts.left) ++tab[0][col[i]];
  for (int i : ts.right) ++tab[1][col[i]];
  return adjusted_rand(tab);
}

struct EstimatedSplit {
  int parent;
  const std::vector<int>* left;
  const std::vector<int>* right;
};

// Parent id of the estimated split with the largest ARI, and that ARI.
std::pair<int, double> best_match(const TrueSplit& ts, const std::vector<EstimatedSplit>& est,
                                  std::size_t n) {
  int best = -1;
  double best_ari = -std::numeric_limits<double>::infinity();
  for (const EstimatedSplit& e : est) {
    const double ari = split_ari(ts, *e.left, *e.right, n);
    if (ari > best_ari) {
      best_ari = ari;
      best = e.parent;
    }
  }
  return {best, best_ari};
}

ReplicateOutput power_replicate(const SimConfig& cfg, const Cell& cell, std::size_t rep) {
  ReplicateOutput out;
  auto rng = stream_rng(cfg.seed, rep);
  const SimData sd = generate(cfg, cell.a, cell.b, rng);
  const Dataset& d = sd.data;
  const auto y = d.y();
  const double sigma = cfg.estimate_sigma ? estimate_sigma(y) : cfg.sigma;
  const auto truth = true_splits(d);
  static const char* kTargets[kTrueSplits] = {"true_split_1", "true_split_2", "true_split_3",
                                              "true_split_4"};
  InferenceOptions opts;
  opts.alpha = cfg.alpha;

  if (cfg.selective) {
    const Tree t = fit(d, y, cfg.stop, cfg.lambda);
    std::vector<EstimatedSplit> est;
    for (int pid : t.internal_regions()) {
      est.push_back({pid, &t.regions[t.regions[pid].left].members,
                     &t.regions[t.regions[pid].right].members});
    }
    for (int k = 0; k < kTrueSplits; ++k) {
      const TrueSplit& ts = truth[k];
      if (ts.left.empty() || ts.right.empty()) {
        ++out.skipped;
        continue;
      }
      SimRow row = base_row(rep, cell, "selective", kTargets[k], ts.level);
      const auto [pid, ari] = best_match(ts, est, d.n());
      row.ari = pid >= 0 ? ari : 0.0;
      row.detected = (pid >= 0 && ari > kDetectionAri) ? 1 : 0;
      row.rejected = 0;
      if (row.detected) {
        try {
          const InferenceResult r = infer_split(t, pid, d, y, sigma, opts);
          row.statistic = r.statistic;
          row.p_value = r.p_value;
          row.rejected = r.p_value < cfg.alpha ? 1 : 0;
        } catch (const Error&) {
          ++out.errors;
        }
      }
      out.rows.push_back(row);
    }
  }
  if (cfg.sample_split) {
    const SampleSplit ss = sample_split(cfg, d, rng);
    std::vector<EstimatedSplit> est;
    for (int pid : ss.tree.internal_regions()) {
      est.push_back({pid, &ss.members[ss.tree.regions[pid].left],
                     &ss.members[ss.tree.regions[pid].right]});
    }
    for (int k = 0; k < kTrueSplits; ++k) {
      const TrueSplit& ts = truth[k];
      if (ts.left.empty() || ts.right.empty()) {
        ++out.skipped;
        continue;
      }
      SimRow row = base_row(rep, cell, "split", kTargets[k], ts.level);
      const auto [pid, ari] = best_match(ts, est, d.n());
      row.ari = pid >= 0 ? ari : 0.0;
      row.detected = (pid >= 0 && ari > kDetectionAri) ? 1 : 0;
      row.rejected = 0;
      if (row.detected) {
        const Region& pr = ss.tree.regions[pid];
        const auto a_test = intersect_sorted(ss.members[pr.left], ss.test);
        const auto b_test = intersect_sorted(ss.members[pr.right], ss.test);
        if (!a_test.empty() && !b_test.empty()) {
          row.statistic = mean_over(y, a_test) - mean_over(y, b_test);
          const double sdv = sigma * std::sqrt(1.0 / static_cast<double>(a_test.size()) +
                                               1.0 / static_cast<double>(b_test.size()));
          row.p_value = naive_z(row.statistic, sdv, cfg.alpha).p_value;
          row.rejected = row.p_value < cfg.alpha ? 1 : 0;
        }
      }
      out.rows.push_back(row);
    }
  }
  return out;
}

StudyResult run_cells(const std::string& name, const SimConfig& cfg,
                      const std::vector<Cell>& cells,
                      const std::function<ReplicateOutput(const Cell&, std::size_t)>& fn) {
  cfg.validate();
  const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
  const std::size_t total = cells.size() * reps;
  std::vector<ReplicateOutput> outs(total);
  parallel_for(total, cfg.threads > 0 ? cfg.threads : default_threads(),
               [&](std::size_t k) { outs[k] = fn(cells[k / reps], k); });
  StudyResult res;
  res.study = name;
  for (auto& o : outs) {
    res.errors += o.errors;
    res.skipped += o.skipped;
    for (auto& r : o.rows) res.rows.push_back(std::move(r));
  }
  return res;
}

struct Tally {
  std::size_t count = 0;
  std::size_t hits = 0;
  std::size_t hits2 = 0;
};

nlohmann::json ks_block(std::vector<double> p) {
  const std::size_t n = p.size();
  if (n == 0) return {{"count", 0}};
  const double ks = ks_uniform(p);
  const double crit = ks_critical_1pct(n);
  return {{"count", n}, {"ks", ks}, {"critical_1pct", crit}, {"uniform_at_1pct", ks < crit}};
}

}  // namespace

void SimConfig::validate() const {
  if (n < 4) throw Error(ErrorCode::kInvalidArgument, "n must be >= 4");
  if (p < 3) throw Error(ErrorCode::kInvalidArgument, "p must be >= 3 (the mean uses x1..x3)");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma must be finite and > 0");
  }
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  if (replicates < 1) throw Error(ErrorCode::kInvalidArgument, "replicates must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1)");
  }
  treeval::validate(stop);
}

nlohmann::json SimConfig::to_json() const {
  return {{"n", n},
          {"p", p},
          {"sigma", sigma},
          {"lambda", lambda},
          {"max_level", stop.max_level},
          {"min_node_size", stop.min_node_size},
          {"min_gain", stop.min_gain},
          {"replicates", replicates},
          {"seed", seed},
          {"alpha", alpha},
          {"estimate_sigma", estimate_sigma},
          {"mode", treeval::to_string(mode)},
          {"a_values", a_values},
          {"b_values", b_values}};
}

double true_mean(double a, double b, double x1, double x2, double x3) {
  if (!(x1 <= 0.0)) return 0.0;
  return b * (1.0 + a * (x2 > 0.0 ? 1.0 : 0.0) + (x2 * x3 > 0.0 ? 1.0 : 0.0));
}

SimData generate(const SimConfig& cfg, double a, double b, std::mt19937_64& rng) {
  if (cfg.p < 3 || cfg.n < 2) {
    throw Error(ErrorCode::kInvalidArgument, "simulation needs n >= 2 and p >= 3");
  }
  std::normal_distribution<double> z;
  const std::size_t n = static_cast<std::size_t>(cfg.n);
  std::vector<std::vector<double>> cols(cfg.p, std::vector<double>(n));
  std::vector<std::string> names;
  for (int j = 0; j < cfg.p; ++j) {
    names.push_back("x" + std::to_string(j + 1));
    for (auto& v : cols[j]) v = z(rng);
  }
  std::vector<double> mu(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = true_mean(a, b, cols[0][i], cols[1][i], cols[2][i]);
    y[i] = mu[i] + cfg.sigma * z(rng);
  }
  return {Dataset(std::move(names), std::move(cols), std::move(y)), std::move(mu)};
}

double adjusted_rand(const Table2x3& tab) {
  double total = 0.0;
  double index = 0.0;
  std::array<double, 2> rows{};
  std::array<double, 3> cols{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (tab[i][j] < 0) throw Error(ErrorCode::kInvalidArgument, "negative table cell");
      const double v = static_cast<double>(tab[i][j]);
      total += v;
      index += choose2(v);
      rows[i] += v;
      cols[j] += v;
    }
  }
  if (total == 0.0) throw Error(ErrorCode::kInvalidArgument, "empty contingency table");
  double row_pairs = 0.0;
  double col_pairs = 0.0;
  for (double r : rows) row_pairs += choose2(r);
  for (double c : cols) col_pairs += choose2(c);
  const double all_pairs = choose2(total);
  const double expected = all_pairs > 0.0 ? row_pairs * col_pairs / all_pairs : 0.0;
  const double max_index = 0.5 * (row_pairs + col_pairs);
  if (max_index == expected) {
    // Identical partitions: every nonempty row meets exactly one column and
    // vice versa.
    int nonzero = 0;
    int nonempty_rows = 0;
    int nonempty_cols = 0;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 3; ++j) nonzero += tab[i][j] > 0;
      nonempty_rows += rows[i] > 0.0;
    }
    for (double c : cols) nonempty_cols += c > 0.0;
    return (nonzero == nonempty_rows && nonzero == nonempty_cols) ? 1.0 : 0.0;
  }
  return (index - expected) / (max_index - expected);
}

double ks_uniform(std::vector<double> p) {
  if (p.empty()) throw Error(ErrorCode::kInvalidArgument, "no p-values");
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double v = std::clamp(p[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - v, v - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_1pct(std::size_t count) {
  return 1.6276 / std::sqrt(static_cast<double>(count));
}

int default_threads() {
  if (const char* env = std::getenv("TREEVAL_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

StudyResult run_null_study(const SimConfig& cfg) {
  StudyResult res = run_cells("null", cfg, {{0.0, 0.0}}, [&](const Cell& c, std::size_t k) {
    return inference_replicate(cfg, c, k, false);
  });
  std::map<std::string, std::vector<double>> pooled;
  std::map<std::pair<std::string, int>, std::vector<double>> by_level;
  for (const SimRow& r : res.rows) {
    if (std::isnan(r.p_value)) continue;
    pooled[r.method].push_back(r.p_value);
    by_level[{r.method, r.level}].push_back(r.p_value);
  }
  nlohmann::json methods = nlohmann::json::object();
  for (auto& [m, ps] : pooled) methods[m] = ks_block(ps);
  nlohmann::json levels = nlohmann::json::array();
  for (auto& [key, ps] : by_level) {
    nlohmann::json b = ks_block(ps);
    b["method"] = key.first;
    b["level"] = key.second;
    levels.push_back(std::move(b));
  }
  res.summary = {{"study", "null"},
                 {"config", cfg.to_json()},
                 {"methods", methods},
                 {"levels", levels},
                 {"rows", res.rows.size()},
                 {"errors", res.errors}};
  return res;
}

StudyResult run_coverage_study(const SimConfig& cfg) {
  StudyResult res = run_cells("coverage", cfg, cells_of(cfg), [&](const Cell& c, std::size_t k) {
    return inference_replicate(cfg, c, k, true);
  });
  std::map<std::tuple<std::string, std::string, int>, Tally> tally;
  for (const SimRow& r : res.rows) {
    if (r.covered < 0) continue;
    Tally& t = tally[{r.target, r.method, r.level}];
    ++t.count;
    t.hits += r.covered;
  }
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& [key, t] : tally) {
    groups.push_back({{"target", std::get<0>(key)},
                      {"method", std::get<1>(key)},
                      {"level", std::get<2>(key)},
                      {"count", t.count},
                      {"covered", t.hits},
                      {"coverage", static_cast<double>(t.hits) / static_cast<double>(t.count)}});
  }
  res.summary = {{"study", "coverage"},
                 {"config", cfg.to_json()},
                 {"groups", groups},
                 {"rows", res.rows.size()},
                 {"errors", res.errors}};
  return res;
}

StudyResult run_power_study(const SimConfig& cfg) {
  StudyResult res = run_cells("power", cfg, cells_of(cfg), [&](const Cell& c, std::size_t k) {
    return power_replicate(cfg, c, k);
  });
  std::map<std::tuple<std::string, int>, Tally> overall;
  std::map<std::tuple<double, double, std::string, int>, Tally> per_cell;
  for (const SimRow& r : res.rows) {
    for (Tally* t : {&overall[{r.method, r.level}], &per_cell[{r.a, r.b, r.method, r.level}]}) {
      ++t->count;
      t->hits += r.detected > 0;
      t->hits2 += r.rejected > 0;
    }
  }
  auto rate = [](std::size_t k, std::size_t n) {
    return n ? static_cast<double>(k) / static_cast<double>(n) : 0.0;
  };
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& [key, t] : overall) {
    levels.push_back({{"method", std::get<0>(key)},
                      {"level", std::get<1>(key)},
                      {"count", t.count},
                      {"detection_rate", rate(t.hits, t.count)},
                      {"rejection_rate", rate(t.hits2, t.count)}});
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, t] : per_cell) {
    cells.push_back({{"a", std::get<0>(key)},
                     {"b", std::get<1>(key)},
                     {"method", std::get<2>(key)},
                     {"level", std::get<3>(key)},
                     {"count", t.count},
                     {"detection_rate", rate(t.hits, t.count)},
                     {"rejection_rate", rate(t.hits2, t.count)}});
  }
  res.summary = {{"study", "power"},
                 {"config", cfg.to_json()},
                 {"levels", levels},
                 {"cells", cells},
                 {"rows", res.rows.size()},
                 {"skipped_true_splits", res.skipped},
                 {"errors", res.errors}};
  return res;
}

StudyResult run_study(const std::string& name, const SimConfig& cfg) {
  if (name == "null") return run_null_study(cfg);
  if (name == "power") return run_power_study(cfg);
  if (name == "coverage") return run_coverage_study(cfg);
  throw Error(ErrorCode::kInvalidArgument,
              "unknown study '" + name + "' (expected null, power or coverage)");
}

namespace {

void put(std::string& out, double v) {
  if (std::isnan(v)) return;
  if (std::isinf(v)) {
    out += v > 0 ? "inf" : "-inf";
    return;
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

void put(std::string& out, int v, bool unset_negative) {
  if (unset_negative && v < 0) return;
  out += std::to_string(v);
}

}  // namespace

std::string to_csv(const StudyResult& r) {
  std::string out =
      "study,replicate,a,b,method,target,level,statistic,parameter,p_value,ci_lo,ci_hi,"
      "covered,ari,detected,rejected\n";
  for (const SimRow& row : r.rows) {
    out += r.study;
    out += ',' + std::to_string(row.replicate) + ',';
    put(out, row.a);
    out += ',';
    put(out, row.b);
    out += ',' + row.method + ',' + row.target + ',';
    put(out, row.level, false);
    for (double v : {row.statistic, row.parameter, row.p_value, row.ci_lo, row.ci_hi}) {
      out += ',';
      put(out, v);
    }
    out += ',';
    put(out, row.covered, true);
    out += ',';
    put(out, row.ari);
    out += ',';
    put(out, row.detected, true);
    out += ',';
    put(out, row.rejected, true);
    out += '\n';
  }
  return out;
}

void write_csv(const StudyResult& r, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path);
  f << to_csv(r);
  if (!f) throw Error(ErrorCode::kIo, "failed writing " + path);
}

}  // namespace treeval::sim
