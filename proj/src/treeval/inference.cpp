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

#include "treeval/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "treeval/error.hpp"
#include "treeval/normal.hpp"

namespace treeval {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSupportTol = 1e-9;

double support_tolerance(double stat, double sd) {
  return kSupportTol * std::max({1.0, std::abs(stat), sd});
}

void require_in_support(double stat, const TruncatedNormal& tn) {
  const double dist = tn.support().distance(stat);
  if (dist > support_tolerance(stat, tn.sd())) {
    throw Error(ErrorCode::kInconsistent,
                "statistic " + std::to_string(stat) + " lies outside the truncation set " +
                    tn.support().to_string());
  }
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

// Nearest point of the closure of `set` to x.
double project(const IntervalSet& set, double x) {
  double best = x;
  double best_dist = kInf;
  for (const Interval& iv : set.intervals()) {
    const double p = std::clamp(x, iv.lo, iv.hi);
    if (std::abs(p - x) < best_dist) {
      best_dist = std::abs(p - x);
      best = p;
    }
  }
  return best;
}

double find_mean(double stat, double sd, const IntervalSet& support, double target) {
  auto f = [&](double m) { return TruncatedNormal(m, sd, support).cdf(stat); };
  // f decreases in m; find lo <= root <= hi.
  const double limit = kBracketLimitSd * sd;
  double lo = stat - sd;
  double hi = stat + sd;
  double step = sd;
  while (f(lo) < target) {
    if (lo <= stat - limit) return -kInf;
    step *= 2.0;
    lo = std::max(stat - step, stat - limit);
  }
  step = sd;
  while (f(hi) > target) {
    if (hi >= stat + limit) return kInf;
    step *= 2.0;
    hi = std::min(stat + step, stat + limit);
  }
  for (int it = 0; it < kBisectionIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = f(mid);
    if (v == target) return mid;
    (v > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TruncatedNormal::TruncatedNormal(double mean, double sd, IntervalSet support)
    : mean_(mean), sd_(sd), support_(std::move(support)) {
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    throw Error(ErrorCode::kInvalidArgument, "truncated normal needs a finite sd > 0");
  }
  if (!std::isfinite(mean)) throw Error(ErrorCode::kInvalidArgument, "mean must be finite");
  log_total_ = log_mass_between(-kInf, kInf);
  if (log_total_ == kNegInf || std::isnan(log_total_)) {
    throw Error(ErrorCode::kDegenerate,
                "truncation set " + support_.to_string() + " carries no probability mass");
  }
}

double TruncatedNormal::log_mass_between(double lo, double hi) const {
  double acc = kNegInf;
  for (const Interval& iv : support_.intervals()) {
    const double a = std::max(iv.lo, lo);
    const double b = std::min(iv.hi, hi);
    if (!(a < b)) continue;
    acc = log_add_exp(acc, log_std_mass((a - mean_) / sd_, (b - mean_) / sd_));
  }
  return acc;
}

double TruncatedNormal::cdf(double x) const {
  return clamp01(std::exp(log_mass_between(-kInf, x) - log_total_));
}

double TruncatedNormal::sf(double x) const {
  return clamp01(std::exp(log_mass_between(x, kInf) - log_total_));
}

double tn_cdf(double x, const TruncatedNormal& tn) { return tn.cdf(x); }

double p_region(double stat, double center, const TruncatedNormal& tn_null) {
  require_in_support(stat, tn_null);
  const double r = std::abs(stat - center);
  if (r == 0.0) return 1.0;
  return clamp01(tn_null.sf(center + r) + tn_null.cdf(center - r));
}

double p_sibling(double stat, const TruncatedNormal& tn_null) {
  return p_region(stat, 0.0, tn_null);
}

ConfidenceInterval selective_ci(double stat, double sd, const IntervalSet& support,
                                double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1)");
  }
  if (!(sd > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sd must be > 0");
  if (support.distance(stat) > support_tolerance(stat, sd)) {
    throw Error(ErrorCode::kInconsistent, "statistic lies outside the truncation set");
  }
  const double at = support.contains(stat) ? stat : project(support, stat);
  ConfidenceInterval ci;
  ci.lo = find_mean(at, sd, support, 1.0 - 0.5 * alpha);
  ci.hi = find_mean(at, sd, support, 0.5 * alpha);
  return ci;
}

double estimate_sigma(std::span<const double> y) {
  if (y.size() < 2) throw Error(ErrorCode::kTooFewRows, "need at least two responses");
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  const double s = std::sqrt(ss / (n - 1.0));
  if (!(s > 0.0)) throw Error(ErrorCode::kDegenerate, "constant response: sigma estimate is 0");
  return s;
}

NaiveResult naive_z(double stat, double sd, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1)");
  }
  if (!(sd > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sd must be > 0");
  const double z = two_sided_quantile(alpha);
  NaiveResult r;
  r.p_value = clamp01(std::erfc(std::abs(stat) / sd / std::sqrt(2.0)));
  r.lo = stat - z * sd;
  r.hi = stat + z * sd;
  return r;
}

namespace {

InferenceResult finish(InferenceResult r, const Contrast& nu, std::span<const double> y,
                       double sigma, const IntervalSet& set, const InferenceOptions& opts) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma must be finite and > 0");
  }
  r.statistic = nu.dot(y);
  r.sigma = sigma;
  r.sd = sigma * std::sqrt(nu.norm2);
  r.alpha = opts.alpha;
  r.truncation = set;
  const TruncatedNormal tn(r.null_value, r.sd, set);
  r.p_value = p_region(r.statistic, r.null_value, tn);
  const ConfidenceInterval ci = selective_ci(r.statistic, r.sd, set, opts.alpha);
  r.ci_lo = ci.lo;
  r.ci_hi = ci.hi;
  r.naive = naive_z(r.statistic - r.null_value, r.sd, opts.alpha);
  r.naive.lo += r.null_value;
  r.naive.hi += r.null_value;
  return r;
}

}  // namespace

InferenceResult infer_split(const Tree& t, int parent_id, const Dataset& d,
                            std::span<const double> y, double sigma,
                            const InferenceOptions& opts) {
  const Region& parent = t.region(parent_id);
  if (parent.terminal()) {
    throw Error(ErrorCode::kInvalidArgument,
                "region " + std::to_string(parent_id) + " is terminal and has no split");
  }
  const Region& a = t.regions[parent.left];
  const Region& b = t.regions[parent.right];
  const Contrast nu = nu_sib(a.members, b.members, d.n());
  const TruncationSet ts = s_sib(t, a.id, d, y, opts.truncation);
  InferenceResult r;
  r.target = "split";
  r.kind = ContrastKind::kSibling;
  r.region_a = a.id;
  r.region_b = b.id;
  r.level = a.level;
  r.count_a = a.count();
  r.count_b = b.count();
  r.null_value = 0.0;
  r.mode = "branch";
  return finish(std::move(r), nu, y, sigma, ts.set, opts);
}

InferenceResult infer_region(const Tree& t, int region_id, const Dataset& d,
                             std::span<const double> y, double sigma,
                             const InferenceOptions& opts) {
  const Region& a = t.region(region_id);
  const Contrast nu = nu_reg(a.members, d.n());
  const TruncationSet ts = s_reg(t, region_id, d, y, opts.mode, opts.truncation);
  InferenceResult r;
  r.target = "region";
  r.kind = ContrastKind::kRegion;
  r.region_a = a.id;
  r.level = a.level;
  r.count_a = a.count();
  r.null_value = opts.null_value;
  r.mode = to_string(opts.mode);
  return finish(std::move(r), nu, y, sigma, ts.set, opts);
}

std::vector<InferenceResult> infer_all(const Tree& t, const Dataset& d,
                                       std::span<const double> y, double sigma,
                                       const InferenceOptions& opts) {
  std::vector<InferenceResult> out;
  for (int id : t.internal_regions()) out.push_back(infer_split(t, id, d, y, sigma, opts));
  for (const Region& r : t.regions) out.push_back(infer_region(t, r.id, d, y, sigma, opts));
  return out;
}

nlohmann::json to_json(const InferenceResult& r) {
  nlohmann::json j = {{"target", r.target},
                      {"contrast", r.kind == ContrastKind::kSibling ? "sibling" : "region"},
                      {"region_a", r.region_a},
                      {"level", r.level},
                      {"n_a", r.count_a},
                      {"statistic", r.statistic},
                      {"null_value", r.null_value},
                      {"sigma", r.sigma},
                      {"sigma_source", r.sigma_source == SigmaSource::kGiven ? "given"
                                                                            : "estimated"},
                      {"sd", r.sd},
                      {"alpha", r.alpha},
                      {"p_value", r.p_value},
                      {"ci", {double_to_json(r.ci_lo), double_to_json(r.ci_hi)}},
                      {"naive",
                       {{"p_value", r.naive.p_value},
                        {"ci", {double_to_json(r.naive.lo), double_to_json(r.naive.hi)}}}},
                      {"truncation_set", to_json(r.truncation)},
                      {"mode", r.mode}};
  if (r.region_b >= 0) {
    j["region_b"] = r.region_b;
    j["n_b"] = r.count_b;
  }
  return j;
}

}  // namespace treeval
