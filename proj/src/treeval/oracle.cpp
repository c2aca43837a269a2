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

#include "treeval/oracle.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "treeval/error.hpp"
#include "treeval/rng.hpp"

namespace treeval::oracle {

std::vector<double> GridSpec::points(bool far_probes) const {
  if (!(lo < hi) || count < 2) throw Error(ErrorCode::kInvalidArgument, "bad grid");
  std::vector<double> out;
  out.reserve(count + 2);
  if (far_probes) out.push_back(-kFarProbe);
  for (int k = 0; k < count; ++k) {
    out.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1));
  }
  if (far_probes) out.push_back(kFarProbe);
  return out;
}

GridSpec default_grid(const Contrast& nu, std::span<const double> y, double sigma) {
  const double center = nu.dot(y);
  const double half = kGridHalfWidthSd * sigma * std::sqrt(nu.norm2);
  return {center - half, center + half, 2001};
}

bool event_holds(const Tree& t, const Event& e) {
  switch (e.kind) {
    case EventKind::kSiblings: {
      const auto a = t.find_by_members(e.region_a);
      if (!a) return false;
      const int s = t.sibling(*a);
      if (s < 0) return false;
      const auto& sm = t.regions[s].members;
      return sm.size() == e.region_b.size() &&
             std::equal(sm.begin(), sm.end(), e.region_b.begin());
    }
    case EventKind::kRegion:
      return t.find_by_members(e.region_a).has_value();
    case EventKind::kBranch: {
      int prev = -1;
      for (std::size_t l = 0; l < e.branch.regions.size(); ++l) {
        const auto id = t.find_by_members(e.branch.regions[l]);
        if (!id) return false;
        if (l > 0 && t.regions[*id].parent != prev) return false;
        prev = *id;
      }
      return true;
    }
  }
  return false;
}

std::vector<char> brute_force_membership(const Dataset& d, std::span<const double> y,
                                         const StoppingRule& stop, double lambda,
                                         const Contrast& nu, const Event& e,
                                         std::span<const double> phis) {
  std::vector<char> out;
  out.reserve(phis.size());
  for (double phi : phis) {
    const std::vector<double> yp = y_prime(phi, nu, y);
    out.push_back(event_holds(fit(d, yp, stop, lambda), e) ? 1 : 0);
  }
  return out;
}

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix gain_matrix(std::span<const int> region, const Dataset& d, int feature, int rank) {
  const std::size_t n = d.n();
  const double threshold = d.order_statistic(feature, rank);
  std::vector<double> in_r(n, 0.0);
  std::vector<double> in_l(n, 0.0);
  std::vector<double> in_rr(n, 0.0);
  double nr = 0.0;
  double nl = 0.0;
  for (int i : region) {
    in_r[i] = 1.0;
    nr += 1.0;
    if (d.x(i, feature) <= threshold) {
      in_l[i] = 1.0;
      nl += 1.0;
    } else {
      in_rr[i] = 1.0;
    }
  }
  if (nl == 0.0 || nl == nr) throw Error(ErrorCode::kInvalidArgument, "empty child");
  Matrix m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      m[i][k] = in_l[i] * in_l[k] / nl + in_rr[i] * in_rr[k] / (nr - nl) -
                in_r[i] * in_r[k] / nr;
    }
  }
  return m;
}

double form(const Matrix& m, std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double row = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) row += m[i][k] * v[k];
    s += u[i] * row;
  }
  return s;
}

}  // namespace

CoefficientTriple dense_gain_quadratic(std::span<const int> region, const Dataset& d,
                                       int feature, int rank, const Contrast& nu,
                                       std::span<const double> y) {
  const Matrix m = gain_matrix(region, d, feature, rank);
  const std::vector<double> v = nu.dense();
  double vv = 0.0;
  double vy = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    vv += v[i] * v[i];
    vy += v[i] * y[i];
  }
  std::vector<double> w(y.begin(), y.end());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= vy / vv * v[i];
  return {form(m, v, v) / (vv * vv), 2.0 * form(m, v, w) / vv, form(m, w, w)};
}

double dense_quadratic_form(std::span<const int> region, const Dataset& d, int feature,
                            int rank, std::span<const double> v) {
  return form(gain_matrix(region, d, feature, rank), v, v);
}

Agreement compare_membership(const IntervalSet& analytic, std::span<const double> phis,
                             std::span<const char> brute, double exclusion) {
  Agreement a;
  const std::vector<double> ends = analytic.finite_endpoints();
  for (std::size_t k = 0; k < phis.size(); ++k) {
    const double phi = phis[k];
    bool near = false;
    for (double e : ends) {
      if (std::abs(phi - e) <= exclusion) {
        near = true;
        break;
      }
    }
    ++a.probes;
    if (near) {
      ++a.excluded;
      continue;
    }
    if ((analytic.contains(phi) ? 1 : 0) != (brute[k] ? 1 : 0)) {
      if (a.mismatches == 0) a.first_mismatch = phi;
      ++a.mismatches;
    }
  }
  return a;
}

nlohmann::json StudyReport::to_json() const {
  return {{"instances", instances},
          {"sibling_sets", sibling_sets},
          {"region_sets", region_sets},
          {"probes", probes},
          {"excluded", excluded},
          {"mismatches", mismatches},
          {"fast_path_checks", fast_path_checks},
          {"fast_path_differences", fast_path_differences},
          {"fast_path_fallbacks", fast_path_fallbacks},
          {"seconds", seconds},
          {"failures", failures}};
}

StudyReport run_study(const StudyConfig& cfg) {
  if (cfg.instances < 1 || cfg.n_min < 2 || cfg.n_max < cfg.n_min || cfg.p_max < 1 ||
      cfg.lambdas.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid oracle study configuration");
  }
  const auto start = std::chrono::steady_clock::now();
  StudyReport rep;
  constexpr double kSigma = 1.0;
  for (int inst = 0; inst < cfg.instances; ++inst) {
    auto rng = stream_rng(cfg.seed, static_cast<std::uint64_t>(inst));
    std::uniform_int_distribution<int> n_dist(cfg.n_min, cfg.n_max);
    std::uniform_int_distribution<int> p_dist(1, cfg.p_max);
    std::normal_distribution<double> z;
    const int n = n_dist(rng);
    const int p = p_dist(rng);
    std::vector<std::vector<double>> cols(p, std::vector<double>(n));
    std::vector<std::string> names;
    for (int j = 0; j < p; ++j) {
      names.push_back("x" + std::to_string(j + 1));
      for (int i = 0; i < n; ++i) cols[j][i] = z(rng);
    }
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = 2.0 * (cols[0][i] <= 0.0) + (p > 1 ? 1.5 * (cols[1][i] > 0.0) : 0.0) + z(rng);
    }
    const Dataset d(names, cols, y);
    StoppingRule stop;
    stop.max_level = cfg.max_level;
    const double lambda = cfg.lambdas[inst % cfg.lambdas.size()];
    const Tree t = fit(d, y, stop, lambda);
    ++rep.instances;

    auto check = [&](const IntervalSet& analytic, const Contrast& nu, const Event& e,
                     const char* what, int region) {
      const GridSpec g = default_grid(nu, y, kSigma);
      const auto phis = g.points();
      const auto brute = brute_force_membership(d, y, stop, lambda, nu, e, phis);
      const Agreement a = compare_membership(analytic, phis, brute, 1e-6 * (g.hi - g.lo));
      rep.probes += a.probes;
      rep.excluded += a.excluded;
      rep.mismatches += a.mismatches;
      if (a.mismatches > 0) {
        rep.failures.push_back({{"instance", inst},
                                {"kind", what},
                                {"region", region},
                                {"lambda", lambda},
                                {"mismatches", a.mismatches},
                                {"first_mismatch", a.first_mismatch},
                                {"set", treeval::to_json(analytic)}});
      }
    };

    for (int pid : t.internal_regions()) {
      const Region& parent = t.regions[pid];
      const Region& a = t.regions[parent.left];
      const Region& b = t.regions[parent.right];
      const Contrast nu = nu_sib(a.members, b.members, d.n());
      TruncationOptions fast;
      TruncationOptions generic;
      generic.fast_path = false;
      const TruncationSet s_fast = s_sib(t, a.id, d, y, fast);
      const TruncationSet s_slow = s_sib(t, a.id, d, y, generic);
      ++rep.fast_path_checks;
      if (!(s_fast.set == s_slow.set)) ++rep.fast_path_differences;
      if (!s_fast.fast_path) ++rep.fast_path_fallbacks;
      Event e{EventKind::kSiblings, a.members, b.members, {}};
      check(s_fast.set, nu, e, "sibling", a.id);
      ++rep.sibling_sets;
    }
    for (const Region& r : t.regions) {
      if (r.parent < 0) continue;
      const Contrast nu = nu_reg(r.members, d.n());
      const TruncationSet s = s_reg(t, r.id, d, y);
      Event e{EventKind::kBranch, {}, {}, branch_of(t, d, r.id)};
      check(s.set, nu, e, "region", r.id);
      ++rep.region_sets;
    }
  }
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace treeval::oracle
