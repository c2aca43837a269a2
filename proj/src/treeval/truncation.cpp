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

#include "treeval/truncation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "treeval/error.hpp"

namespace treeval {
namespace {

constexpr double kSnapTol = 1e-12;
constexpr double kConditionTol = 1e-12;

std::vector<int> restrict_to(const Dataset& d, std::span<const int> members, const Split& s) {
  const double threshold = d.order_statistic(s.feature, s.rank);
  const auto col = d.column(s.feature);
  std::vector<int> out;
  for (int i : members) {
    if ((col[i] <= threshold) == (s.side == 1)) out.push_back(i);
  }
  return out;
}

double sample_sd(std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return y.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

CoefficientTriple minus(const CoefficientTriple& x, const CoefficientTriple& y) {
  return {x.a - y.a, x.b - y.b, x.c - y.c};
}

// Regions of the branch located in `t` by membership, root first; nullopt
// unless each one is a child of the previous.
std::optional<std::vector<int>> chain_ids(const Tree& t, const Branch& b) {
  std::vector<int> ids;
  for (std::size_t l = 0; l < b.regions.size(); ++l) {
    const auto id = t.find_by_members(b.regions[l]);
    if (!id) return std::nullopt;
    if (l > 0 && t.regions[*id].parent != ids.back()) return std::nullopt;
    ids.push_back(*id);
  }
  return ids;
}

struct ConstraintSets {
  std::vector<LevelCoefficients> levels;
  std::vector<IntervalSet> sets;
  std::vector<ConstraintRecord> records;
  bool infeasible = false;
};

void add_constraint(ConstraintSets& out, const QuadraticConstraint& q, const char* kind,
                    int level, int feature, int rank, bool record) {
  IntervalSet sol = solve_quadratic(q);
  if (record) {
    out.records.push_back(
        ConstraintRecord{kind, level, feature, rank, {q.a, q.b, q.c}, q.sense, sol});
  }
  if (!sol.is_real_line()) out.sets.push_back(std::move(sol));
}

ConstraintSets grow_constraints(const Branch& b, const Contrast& nu, const Dataset& d,
                                std::span<const double> y, const StoppingRule& stop,
                                bool record) {
  ConstraintSets out;
  if (static_cast<int>(b.level()) > stop.max_level) {
    out.infeasible = true;
    return out;
  }
  out.levels = stream_coefficients(b, nu, d, y, stop.min_node_size);
  for (const LevelCoefficients& lc : out.levels) {
    if (lc.branch_index < 0) {
      out.infeasible = true;
      return out;
    }
  }
  for (const LevelCoefficients& lc : out.levels) {
    const CoefficientTriple& chosen = lc.candidates[lc.branch_index].q;
    const CoefficientTriple& scale = lc.candidates[lc.branch_index].scale;
    for (std::size_t k = 0; k < lc.candidates.size(); ++k) {
      if (static_cast<int>(k) == lc.branch_index) continue;
      const Candidate& cand = lc.candidates[k];
      const CoefficientTriple diff = minus(cand.q, chosen);
      QuadraticConstraint q{diff.a,
                            diff.b,
                            diff.c,
                            Sense::kLessEqual,
                            std::max(cand.scale.a, scale.a),
                            std::max(cand.scale.b, scale.b),
                            std::max(cand.scale.c, scale.c)};
      add_constraint(out, q, "grow", lc.level, cand.feature, cand.rank, record);
    }
    if (stop.min_gain > 0.0) {
      const Candidate& br = lc.candidates[lc.branch_index];
      QuadraticConstraint q{chosen.a,
                            chosen.b,
                            chosen.c - stop.min_gain,
                            Sense::kGreaterEqual,
                            scale.a,
                            scale.b,
                            std::max(scale.c, stop.min_gain)};
      add_constraint(out, q, "min_gain", lc.level, br.feature, br.rank, record);
    }
  }
  return out;
}

IntervalSet reduce(std::span<const IntervalSet> sets, bool try_fast, bool& used_fast) {
  used_fast = false;
  if (try_fast) {
    if (auto fast = fast_intersect(sets)) {
      used_fast = true;
      return *std::move(fast);
    }
  }
  return intersect_all(sets);
}

}  // namespace

Branch make_branch(const Dataset& d, std::vector<Split> steps) {
  Branch b;
  std::vector<int> all(d.n());
  std::iota(all.begin(), all.end(), 0);
  b.regions.push_back(std::move(all));
  for (const Split& s : steps) {
    if (s.feature < 0 || static_cast<std::size_t>(s.feature) >= d.p()) {
      throw Error(ErrorCode::kOutOfRange, "branch split feature out of range");
    }
    if (s.side != 0 && s.side != 1) {
      throw Error(ErrorCode::kInvalidArgument, "branch split side must be 0 or 1");
    }
    auto next = restrict_to(d, b.regions.back(), s);
    if (next.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "branch induces an empty region");
    }
    b.regions.push_back(std::move(next));
  }
  b.steps = std::move(steps);
  return b;
}

Branch branch_of(const Tree& t, const Dataset& d, int region_id) {
  t.region(region_id);
  std::vector<Split> steps;
  for (int cur = region_id; t.regions[cur].parent >= 0; cur = t.regions[cur].parent) {
    steps.push_back(t.regions[cur].from_parent);
  }
  std::reverse(steps.begin(), steps.end());
  return make_branch(d, std::move(steps));
}

Branch permute(const Dataset& d, const Branch& b, std::span<const int> perm) {
  const std::size_t l = b.level();
  std::vector<char> seen(l, 0);
  if (perm.size() != l) throw Error(ErrorCode::kInvalidArgument, "permutation length mismatch");
  std::vector<Split> steps;
  for (int k : perm) {
    if (k < 0 || static_cast<std::size_t>(k) >= l || seen[k]) {
      throw Error(ErrorCode::kInvalidArgument, "not a permutation of the branch levels");
    }
    seen[k] = 1;
    steps.push_back(b.steps[k]);
  }
  return make_branch(d, std::move(steps));
}

void check_condition_one(const Branch& b, const Contrast& nu) {
  const std::vector<double> v = nu.dense();
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  const double tol = kConditionTol * scale;
  const std::size_t l = b.level();
  std::vector<char> where(v.size(), 0);  // 0 outside, 1 sibling side, 2 target
  if (l > 0) {
    for (int i : b.regions[l - 1]) where[i] = 1;
  }
  for (int i : b.target()) where[i] = 2;
  double level_value[3] = {0.0, 0.0, 0.0};
  bool seen[3] = {true, false, false};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int w = where[i];
    if (!seen[w]) {
      seen[w] = true;
      level_value[w] = v[i];
    }
    if (std::abs(v[i] - level_value[w]) > tol) {
      throw Error(ErrorCode::kInconsistent,
                  "contrast is not constant on the target region and its sibling side and "
                  "zero elsewhere");
    }
  }
}

std::vector<LevelCoefficients> stream_coefficients(const Branch& b, const Contrast& nu,
                                                   const Dataset& d,
                                                   std::span<const double> y,
                                                   int min_node_size) {
  if (nu.n != d.n() || y.size() != d.n()) {
    throw Error(ErrorCode::kInvalidArgument, "contrast, response and dataset sizes differ");
  }
  check_condition_one(b, nu);
  const std::vector<double> v = nu.dense();
  const std::vector<double> w = perp(nu, y);
  const double inv = 1.0 / nu.norm2;
  const double inv2 = inv * inv;
  const std::size_t n = d.n();
  const std::size_t min_node = static_cast<std::size_t>(min_node_size);
  std::vector<char> in_region(n, 0);

  std::vector<LevelCoefficients> out;
  out.reserve(b.level());
  for (std::size_t l = 1; l <= b.level(); ++l) {
    const auto& region = b.regions[l - 1];
    const std::size_t total = region.size();
    const double nn = static_cast<double>(total);
    double vsum = 0.0;
    double vsum_abs = 0.0;
    double wsum = 0.0;
    for (int i : region) {
      in_region[i] = 1;
      vsum += v[i];
      vsum_abs += std::abs(v[i]);
      wsum += w[i];
    }
    const double vbar_scale = vsum_abs / nn;
    const double vbar = std::abs(vsum) <= kSnapTol * vsum_abs ? 0.0 : vsum / nn;
    const double wbar = wsum / nn;
    const Split& step = b.steps[l - 1];
    const std::size_t child = b.regions[l].size();
    const std::size_t branch_left = step.side == 1 ? child : total - child;

    LevelCoefficients lc;
    lc.level = static_cast<int>(l);
    lc.candidates.reserve(d.p() * total);
    for (std::size_t j = 0; j < d.p(); ++j) {
      const auto idx = d.sort_index(j);
      std::size_t cnt = 0;
      std::size_t last_cnt = 0;
      double sv = 0.0;
      double sv_abs = 0.0;
      double sw = 0.0;
      double sw_abs = 0.0;
      std::size_t pos = 0;
      while (pos < n) {
        const std::size_t end = static_cast<std::size_t>(d.tie_end(j, pos));
        for (std::size_t q = pos; q <= end; ++q) {
          const int i = idx[q];
          if (in_region[i]) {
            ++cnt;
            sv += v[i] - vbar;
            sv_abs += std::abs(v[i]) + vbar_scale;
            sw += w[i] - wbar;
            sw_abs += std::abs(w[i]) + std::abs(wbar);
          }
        }
        pos = end + 1;
        if (cnt == total) break;
        if (cnt == last_cnt) continue;
        last_cnt = cnt;
        if (cnt < min_node || total - cnt < min_node) continue;
        const double nl = static_cast<double>(cnt);
        const double t = nn / (nl * (nn - nl));
        const double vt = std::abs(sv) <= kSnapTol * sv_abs ? 0.0 : sv;
        Candidate c;
        c.feature = static_cast<int>(j);
        c.rank = static_cast<int>(end) + 1;
        c.left_count = static_cast<int>(cnt);
        c.q = {t * vt * vt * inv2, 2.0 * t * vt * sw * inv, t * sw * sw};
        c.scale = {t * sv_abs * sv_abs * inv2, 2.0 * t * sv_abs * sw_abs * inv,
                   t * sw_abs * sw_abs};
        if (static_cast<int>(j) == step.feature && cnt == branch_left) {
          lc.branch_index = static_cast<int>(lc.candidates.size());
        }
        lc.candidates.push_back(c);
      }
    }
    for (int i : region) in_region[i] = 0;
    out.push_back(std::move(lc));
  }
  return out;
}

std::optional<IntervalSet> fast_intersect(std::span<const IntervalSet> sets) {
  Interval box = Interval::real_line();
  bool have_gap = false;
  double c_min = kInf;
  bool c_min_closed = true;
  double d_max = -kInf;
  bool d_max_closed = true;
  double c_max = -kInf;
  double d_min = kInf;

  for (const IntervalSet& s : sets) {
    if (s.empty()) return IntervalSet::empty_set();
    if (s.is_real_line()) continue;
    const auto& parts = s.intervals();
    if (parts.size() == 1) {
      const Interval& iv = parts[0];
      if (iv.lo > box.lo) {
        box.lo = iv.lo;
        box.lo_closed = iv.lo_closed;
      } else if (iv.lo == box.lo) {
        box.lo_closed = box.lo_closed && iv.lo_closed;
      }
      if (iv.hi < box.hi) {
        box.hi = iv.hi;
        box.hi_closed = iv.hi_closed;
      } else if (iv.hi == box.hi) {
        box.hi_closed = box.hi_closed && iv.hi_closed;
      }
      continue;
    }
    if (parts.size() != 2 || parts[0].lo != -kInf || parts[1].hi != kInf) return std::nullopt;
    have_gap = true;
    const double c = parts[0].hi;
    const double dd = parts[1].lo;
    if (c < c_min) {
      c_min = c;
      c_min_closed = parts[0].hi_closed;
    } else if (c == c_min) {
      c_min_closed = c_min_closed && parts[0].hi_closed;
    }
    if (dd > d_max) {
      d_max = dd;
      d_max_closed = parts[1].lo_closed;
    } else if (dd == d_max) {
      d_max_closed = d_max_closed && parts[1].lo_closed;
    }
    c_max = std::max(c_max, c);
    d_min = std::min(d_min, dd);
  }
  if (have_gap && !(c_max < d_min)) return std::nullopt;

  IntervalSet result(box);
  if (have_gap) {
    IntervalSet rays(std::vector<Interval>{{-kInf, c_min, false, c_min_closed},
                                           {d_max, kInf, d_max_closed, false}});
    result = intersect(result, rays);
  }
  return result;
}

TruncationSet s_grow(const Branch& b, const Contrast& nu, const Dataset& d,
                     std::span<const double> y, const StoppingRule& stop,
                     const TruncationOptions& opts) {
  ConstraintSets parts = grow_constraints(b, nu, d, y, stop, opts.record);
  TruncationSet out;
  if (parts.infeasible) {
    out.set = out.grow_set = IntervalSet::empty_set();
  } else {
    out.set = reduce(parts.sets, opts.fast_path && nu.kind == ContrastKind::kSibling,
                     out.fast_path);
    out.grow_set = out.set;
  }
  out.records = std::move(parts.records);
  return out;
}

double select_phi(const IntervalSet& set, double center, double half_width) {
  if (set.empty()) throw Error(ErrorCode::kDegenerate, "cannot pick a point of an empty set");
  const double lo_clip = center - half_width;
  const double hi_clip = center + half_width;
  double best_width = -1.0;
  double best = 0.0;
  for (const Interval& iv : set.intervals()) {
    const double lo = std::max(iv.lo, lo_clip);
    const double hi = std::min(iv.hi, hi_clip);
    if (hi >= lo && hi - lo > best_width) {
      best_width = hi - lo;
      best = 0.5 * (lo + hi);
    }
  }
  if (best_width >= 0.0) return best;

  const Interval* nearest = nullptr;
  double nearest_dist = kInf;
  for (const Interval& iv : set.intervals()) {
    const double dist = iv.hi < center ? center - iv.hi : iv.lo - center;
    if (dist < nearest_dist) {
      nearest_dist = dist;
      nearest = &iv;
    }
  }
  const double step = 0.1 * half_width;
  if (std::isinf(nearest->lo)) return nearest->hi - step;
  if (std::isinf(nearest->hi)) return nearest->lo + step;
  return 0.5 * (nearest->lo + nearest->hi);
}

PruningTree build_pruning_tree(const Branch& b, const Contrast& nu, double lambda,
                               const Dataset& d, std::span<const double> y,
                               const StoppingRule& stop, const Tree* fitted,
                               const IntervalSet& grow_set, std::optional<double> phi) {
  if (fitted && !phi && chain_ids(*fitted, b)) {
    return PruningTree{*fitted, std::vector<double>(y.begin(), y.end()), true, nu.dot(y)};
  }
  if (grow_set.empty()) {
    throw Error(ErrorCode::kInconsistent, "branch is never grown: empty growth set");
  }
  const double center = nu.dot(y);
  double scale = sample_sd(y);
  if (!(scale > 0.0)) scale = 1.0;
  const double half_width = 10.0 * std::sqrt(nu.norm2) * scale;

  std::vector<double> tries;
  if (phi) {
    tries.push_back(*phi);
  } else {
    tries.push_back(select_phi(grow_set, center, half_width));
    for (const Interval& iv : grow_set.intervals()) {
      tries.push_back(select_phi(IntervalSet(iv), center, half_width));
    }
  }
  const std::vector<double> w = perp(nu, y);
  const std::size_t l = b.level();
  for (double at : tries) {
    std::vector<double> yp = y_prime_from_perp(at, nu, w);
    Tree grown = grow(d, yp, stop);
    const auto ids = chain_ids(grown, b);
    if (!ids) continue;
    std::vector<int> tail(ids->rbegin() + 1, ids->rend());
    const auto order = bottom_up_ordering(grown, tail);
    Tree pruned = prune(grown, yp, lambda, order, grown.size() - l);
    return PruningTree{std::move(pruned), std::move(yp), false, at};
  }
  throw Error(ErrorCode::kInternal,
              "no point of the growth set reproduces the branch when refitting");
}

TruncationSet s_pruned(const Branch& b, const Contrast& nu, double lambda, const Dataset& d,
                       std::span<const double> y, const StoppingRule& stop,
                       const Tree* fitted, const TruncationOptions& opts) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be >= 0");
  ConstraintSets parts = grow_constraints(b, nu, d, y, stop, opts.record);
  const bool try_fast = opts.fast_path && nu.kind == ContrastKind::kSibling;
  TruncationSet out;
  if (parts.infeasible) {
    out.set = out.grow_set = IntervalSet::empty_set();
    out.records = std::move(parts.records);
    return out;
  }
  bool grow_fast = false;
  out.grow_set = reduce(parts.sets, try_fast, grow_fast);
  const std::size_t depth = b.level();
  if (out.grow_set.empty() || lambda == 0.0 || depth == 0) {
    out.set = out.grow_set;
    out.fast_path = grow_fast;
    out.records = std::move(parts.records);
    return out;
  }

  const PruningTree pt = build_pruning_tree(b, nu, lambda, d, y, stop, fitted, out.grow_set);
  out.pruning_tree_from_fit = pt.from_fit;
  out.phi = pt.phi;
  const Tree& tree = pt.tree;
  const auto ids = chain_ids(tree, b);
  if (!ids) throw Error(ErrorCode::kInternal, "pruning tree lost the branch");

  const std::size_t first_prune = parts.sets.size();
  double fixed_gain = subtree_gain(tree, (*ids)[depth], pt.response);
  CoefficientTriple lhs;
  CoefficientTriple lhs_abs;
  for (std::size_t k = depth; k-- > 0;) {
    fixed_gain += subtree_gain(tree, tree.sibling((*ids)[k + 1]), pt.response);
    const LevelCoefficients& lc = parts.levels[k];
    const Candidate& chosen = lc.candidates[lc.branch_index];
    const CoefficientTriple& q = chosen.q;
    lhs = {lhs.a + q.a, lhs.b + q.b, lhs.c + q.c};
    lhs_abs = {lhs_abs.a + chosen.scale.a, lhs_abs.b + chosen.scale.b,
               lhs_abs.c + chosen.scale.c};
    const double terms = static_cast<double>(tree.terminals((*ids)[k]).size());
    const double gamma = lambda * (terms - 1.0) - fixed_gain;
    QuadraticConstraint c{lhs.a,     lhs.b,     lhs.c - gamma,
                          Sense::kGreaterEqual, lhs_abs.a, lhs_abs.b,
                          std::max(lhs_abs.c, std::abs(gamma))};
    add_constraint(parts, c, "prune", static_cast<int>(k), -1, 0, opts.record);
  }
  std::vector<IntervalSet> final_sets{out.grow_set};
  final_sets.insert(final_sets.end(), parts.sets.begin() + first_prune, parts.sets.end());
  bool prune_fast = false;
  out.set = reduce(final_sets, try_fast, prune_fast);
  out.fast_path = grow_fast && prune_fast;
  out.records = std::move(parts.records);
  return out;
}

TruncationSet s_sib(const Tree& t, int region_a, const Dataset& d, std::span<const double> y,
                    const TruncationOptions& opts) {
  const Region& a = t.region(region_a);
  if (a.parent < 0) {
    throw Error(ErrorCode::kInvalidArgument, "the root region has no sibling");
  }
  const Region& bside = t.regions[t.sibling(region_a)];
  const Contrast nu = nu_sib(a.members, bside.members, d.n());
  const Branch b = branch_of(t, d, region_a);
  return s_pruned(b, nu, t.lambda, d, y, t.stop, &t, opts);
}

PermutationSpec parse_permutation_mode(const std::string& text) {
  if (text == "identity") return {};
  if (text == "full") return {PermutationMode::kFull, 0};
  const std::string prefix = "budget:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t k = 0;
    const char* first = text.data() + prefix.size();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, k);
    if (ec == std::errc() && ptr == last && k >= 1) return {PermutationMode::kBudget, k};
  }
  throw Error(ErrorCode::kInvalidArgument,
              "mode must be 'identity', 'full' or 'budget:K' with K >= 1, got '" + text + "'");
}

std::string to_string(const PermutationSpec& spec) {
  switch (spec.mode) {
    case PermutationMode::kIdentity:
      return "identity";
    case PermutationMode::kFull:
      return "full";
    case PermutationMode::kBudget:
      return "budget:" + std::to_string(spec.budget);
  }
  return "identity";
}

std::vector<std::vector<int>> enumerate_permutations(std::size_t level,
                                                     const PermutationSpec& spec) {
  std::vector<int> perm(level);
  std::iota(perm.begin(), perm.end(), 0);
  if (spec.mode == PermutationMode::kIdentity) return {perm};
  if (spec.mode == PermutationMode::kFull && level > kMaxFullPermutationLevel) {
    throw Error(ErrorCode::kInvalidArgument,
                "full permutation mode refuses regions deeper than level " +
                    std::to_string(kMaxFullPermutationLevel) + "; use budget:K");
  }
  const std::size_t cap =
      spec.mode == PermutationMode::kBudget ? spec.budget : static_cast<std::size_t>(-1);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(perm);
  } while (out.size() < cap && std::next_permutation(perm.begin(), perm.end()));
  return out;
}

TruncationSet s_reg(const Tree& t, int region_a, const Dataset& d, std::span<const double> y,
                    const PermutationSpec& spec, const TruncationOptions& opts) {
  const Region& a = t.region(region_a);
  const Contrast nu = nu_reg(a.members, d.n());
  const Branch b = branch_of(t, d, region_a);
  TruncationOptions generic = opts;
  generic.fast_path = false;

  std::vector<IntervalSet> sets;
  std::vector<IntervalSet> grow_sets;
  TruncationSet out;
  bool first = true;
  for (const auto& perm : enumerate_permutations(b.level(), spec)) {
    const bool identity = std::is_sorted(perm.begin(), perm.end());
    const Branch pb = identity ? b : permute(d, b, perm);
    TruncationSet part = s_pruned(pb, nu, t.lambda, d, y, t.stop, &t, generic);
    if (first) {
      out.pruning_tree_from_fit = part.pruning_tree_from_fit;
      out.phi = part.phi;
      first = false;
    }
    sets.push_back(std::move(part.set));
    grow_sets.push_back(std::move(part.grow_set));
    for (auto& r : part.records) out.records.push_back(std::move(r));
  }
  out.set = union_all(sets);
  out.grow_set = union_all(grow_sets);
  return out;
}

nlohmann::json to_json(const ConstraintRecord& r) {
  return {{"kind", r.kind},
          {"level", r.level},
          {"feature", r.feature},
          {"rank", r.rank},
          {"a", r.q.a},
          {"b", r.q.b},
          {"c", r.q.c},
          {"sense", r.sense == Sense::kLessEqual ? "<=0" : ">=0"},
          {"solution", to_json(r.solution)}};
}

}  // namespace treeval
