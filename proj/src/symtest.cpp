#include "permsym/symtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "permsym/invariants.hpp"

namespace permsym {

std::string outcome_key(std::span<const double> values) {
  std::string key;
  char buf[40];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    if (i) key += ',';
    key += buf;
  }
  return key;
}

TestReport check_invariance_exhaustive(const std::string& name,
                                       const ArrayFn& fn, const DenseArray& x,
                                       const GroupSpec& spec, double tol) {
  TestReport r;
  r.name = name;
  DenseArray baseline = fn(x);
  for_each_element(spec, [&](const PermTuple& g) {
    DenseArray out = fn(act(g, x, spec));
    r.max_deviation = std::max(r.max_deviation,
                               max_rel_deviation(baseline, out));
    ++r.cases_checked;
  });
  r.statistic = r.max_deviation;
  r.passed = r.max_deviation <= tol;
  return r;
}

TestReport check_invariance_exhaustive(const std::string& name,
                                       const CoPermFn& fn, const DenseArray& x,
                                       const GroupSpec& spec, double tol) {
  TestReport r;
  r.name = name;
  std::vector<std::size_t> arity_sizes;
  for (std::size_t k = 0; k < spec.tuple_arity(); ++k)
    arity_sizes.push_back(spec.kind == GroupSpec::Kind::Joint ? spec.joint_n
                                                              : spec.dims[k]);
  DenseArray baseline = fn(x, PermTuple::identity(arity_sizes));
  for_each_element(spec, [&](const PermTuple& g) {
    DenseArray out = fn(act(g, x, spec), g);
    r.max_deviation = std::max(r.max_deviation,
                               max_rel_deviation(baseline, out));
    ++r.cases_checked;
  });
  r.statistic = r.max_deviation;
  r.passed = r.max_deviation <= tol;
  return r;
}

TestReport check_equivariance_exhaustive(
    const std::string& name, const CoPermFn& fn, const DenseArray& x,
    const GroupSpec& spec, double tol,
    const std::optional<GroupSpec>& out_spec) {
  TestReport r;
  r.name = name;
  std::vector<std::size_t> arity_sizes;
  for (std::size_t k = 0; k < spec.tuple_arity(); ++k)
    arity_sizes.push_back(spec.kind == GroupSpec::Kind::Joint ? spec.joint_n
                                                              : spec.dims[k]);
  PermTuple id = PermTuple::identity(arity_sizes);
  DenseArray baseline = fn(x, id);
  const GroupSpec& ospec = out_spec ? *out_spec : spec;
  for_each_element(spec, [&](const PermTuple& g) {
    DenseArray lhs = act(g, baseline, ospec);
    DenseArray rhs = fn(act(g, x, spec), g);
    r.max_deviation = std::max(r.max_deviation, max_rel_deviation(lhs, rhs));
    ++r.cases_checked;
  });
  r.statistic = r.max_deviation;
  r.passed = r.max_deviation <= tol;
  return r;
}

namespace {

// All alphabet-valued arrays compatible with the spec; in joint mode only
// symmetric ones, generated from the upper triangle.
std::vector<DenseArray> enumerate_inputs(const GroupSpec& spec,
                                         const std::vector<double>& alphabet) {
  std::vector<std::size_t> shape;
  std::size_t free_cells = 0;
  if (spec.kind == GroupSpec::Kind::Joint) {
    if (spec.acted_axes() != 2)
      throw std::invalid_argument("verify_maximal_invariant: joint mode "
                                  "supports matrices only");
    shape = {spec.joint_n, spec.joint_n};
    free_cells = spec.joint_n * (spec.joint_n + 1) / 2;
  } else {
    shape = spec.dims;
    free_cells = 1;
    for (std::size_t d : shape) free_cells *= d;
  }
  double total = std::pow(static_cast<double>(alphabet.size()),
                          static_cast<double>(free_cells));
  if (total * spec.order() > 1e7)
    throw FeasibilityError("verify_maximal_invariant: input space too large");

  std::vector<DenseArray> inputs;
  std::size_t count = static_cast<std::size_t>(total);
  inputs.reserve(count);
  for (std::size_t code = 0; code < count; ++code) {
    DenseArray x = DenseArray::zeros(shape);
    std::size_t rem = code;
    if (spec.kind == GroupSpec::Kind::Joint) {
      std::size_t n = spec.joint_n;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
          double v = alphabet[rem % alphabet.size()];
          rem /= alphabet.size();
          x.at2(i, j) = v;
          x.at2(j, i) = v;
        }
    } else {
      for (std::size_t c = 0; c < x.size(); ++c) {
        x[c] = alphabet[rem % alphabet.size()];
        rem /= alphabet.size();
      }
    }
    inputs.push_back(std::move(x));
  }
  return inputs;
}

}  // namespace

TestReport verify_maximal_invariant(const std::string& name,
                                    const StatKeyFn& m, const GroupSpec& spec,
                                    const std::vector<double>& alphabet) {
  TestReport r;
  r.name = name;
  std::vector<DenseArray> inputs = enumerate_inputs(spec, alphabet);

  // orbit id: the lexicographically least element of the orbit
  auto orbit_id = [&](const DenseArray& x) {
    std::vector<double> best;
    for_each_element(spec, [&](const PermTuple& g) {
      std::vector<double> y = act(g, x, spec).data();
      if (best.empty() || y < best) best = std::move(y);
    });
    return best;
  };

  std::map<std::vector<double>, std::vector<double>> orbit_to_stat;
  std::map<std::vector<double>, std::vector<double>> stat_to_orbit;
  bool constant_on_orbits = true, separates_orbits = true;
  for (const DenseArray& x : inputs) {
    std::vector<double> orbit = orbit_id(x);
    std::vector<double> stat = m(x);
    auto [it, fresh] = orbit_to_stat.emplace(orbit, stat);
    if (!fresh && it->second != stat) constant_on_orbits = false;
    auto [jt, fresh2] = stat_to_orbit.emplace(stat, orbit);
    if (!fresh2 && jt->second != orbit) separates_orbits = false;
    ++r.cases_checked;
  }
  r.passed = constant_on_orbits && separates_orbits;
  r.detail = std::string(constant_on_orbits ? "" : "not constant on orbits; ") +
             (separates_orbits ? "" : "fails to separate orbits; ");
  if (r.passed)
    r.detail = "orbits=" + std::to_string(orbit_to_stat.size());
  return r;
}

double chi2_tail(double statistic, std::size_t df) {
  if (df == 0) return 1.0;
  double k = static_cast<double>(df);
  double z = (std::cbrt(statistic / k) - (1.0 - 2.0 / (9.0 * k))) /
             std::sqrt(2.0 / (9.0 * k));
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

namespace {

struct MergedCells {
  std::vector<std::vector<std::string>> members;
  std::vector<double> pooled;  // pooled counts (or expected mass) per cell
};

// Merge outcomes, smallest first, until each cell's weight reaches
// `min_weight`; a light tail joins the last cell.
MergedCells merge_outcomes(const std::map<std::string, double>& weight,
                           double min_weight) {
  std::vector<std::pair<double, std::string>> order;
  order.reserve(weight.size());
  for (const auto& [key, w] : weight) order.emplace_back(w, key);
  std::sort(order.begin(), order.end());
  MergedCells cells;
  std::vector<std::string> bucket;
  double mass = 0.0;
  for (const auto& [w, key] : order) {
    bucket.push_back(key);
    mass += w;
    if (mass >= min_weight) {
      cells.members.push_back(std::move(bucket));
      cells.pooled.push_back(mass);
      bucket.clear();
      mass = 0.0;
    }
  }
  if (!bucket.empty()) {
    if (cells.members.empty()) {
      cells.members.push_back(std::move(bucket));
      cells.pooled.push_back(mass);
    } else {
      auto& last = cells.members.back();
      last.insert(last.end(), bucket.begin(), bucket.end());
      cells.pooled.back() += mass;
    }
  }
  return cells;
}

std::map<std::string, double> count_map(const std::vector<std::string>& xs) {
  std::map<std::string, double> c;
  for (const auto& k : xs) c[k] += 1.0;
  return c;
}

}  // namespace

TestReport chi2_two_sample(const std::string& name,
                           const std::vector<std::string>& a,
                           const std::vector<std::string>& b, double alpha) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("chi2_two_sample: empty sample");
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double n = na + nb;
  std::map<std::string, double> pooled = count_map(a);
  for (const auto& [k, c] : count_map(b)) pooled[k] += c;

  // expected >= 5 per cell for both groups
  double min_pool = 5.0 * n / std::min(na, nb);
  MergedCells cells = merge_outcomes(pooled, min_pool);
  if (cells.members.size() < 2)
    throw std::invalid_argument("chi2_two_sample: too few samples per cell");

  std::map<std::string, std::size_t> cell_of;
  for (std::size_t c = 0; c < cells.members.size(); ++c)
    for (const auto& k : cells.members[c]) cell_of[k] = c;
  std::vector<double> ca(cells.members.size(), 0.0),
      cb(cells.members.size(), 0.0);
  for (const auto& k : a) ca[cell_of[k]] += 1.0;
  for (const auto& k : b) cb[cell_of[k]] += 1.0;

  double stat = 0.0;
  for (std::size_t c = 0; c < cells.members.size(); ++c) {
    double ea = na * cells.pooled[c] / n;
    double eb = nb * cells.pooled[c] / n;
    stat += (ca[c] - ea) * (ca[c] - ea) / ea;
    stat += (cb[c] - eb) * (cb[c] - eb) / eb;
  }
  TestReport r;
  r.name = name;
  r.statistic = stat;
  r.cases_checked = a.size() + b.size();
  r.p_value = chi2_tail(stat, cells.members.size() - 1);
  r.passed = *r.p_value >= alpha;
  r.detail = "cells=" + std::to_string(cells.members.size());
  return r;
}

TestReport chi2_gof(const std::string& name,
                    const std::vector<std::string>& samples,
                    const std::map<std::string, double>& pmf, double alpha) {
  if (samples.empty()) throw std::invalid_argument("chi2_gof: empty sample");
  TestReport r;
  r.name = name;
  r.cases_checked = samples.size();
  double n = static_cast<double>(samples.size());

  std::map<std::string, double> counts = count_map(samples);
  for (const auto& [k, c] : counts)
    if (!pmf.contains(k)) {
      r.passed = false;
      r.detail = "sample outside the pmf support: " + k;
      r.statistic = std::numeric_limits<double>::max();
      r.p_value = 0.0;
      return r;
    }

  std::map<std::string, double> expected;
  for (const auto& [k, p] : pmf) expected[k] = n * p;
  MergedCells cells = merge_outcomes(expected, 5.0);
  if (cells.members.size() < 2)
    throw std::invalid_argument("chi2_gof: too few samples per cell");

  double stat = 0.0;
  for (std::size_t c = 0; c < cells.members.size(); ++c) {
    double obs = 0.0;
    for (const auto& k : cells.members[c])
      if (auto it = counts.find(k); it != counts.end()) obs += it->second;
    double e = cells.pooled[c];
    stat += (obs - e) * (obs - e) / e;
  }
  r.statistic = stat;
  r.p_value = chi2_tail(stat, cells.members.size() - 1);
  r.passed = *r.p_value >= alpha;
  r.detail = "cells=" + std::to_string(cells.members.size());
  return r;
}

namespace {

// Equal-probability bin boundaries from pooled per-component values.
std::vector<std::vector<double>> bin_boundaries(
    const std::vector<DenseArray>& ys, std::size_t bins) {
  std::size_t dim = ys[0].size();
  std::vector<std::vector<double>> bounds(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    std::vector<double> vals;
    vals.reserve(ys.size());
    for (const auto& y : ys) vals.push_back(y[c]);
    std::sort(vals.begin(), vals.end());
    for (std::size_t b = 1; b < bins; ++b) {
      std::size_t rank = b * vals.size() / bins;
      bounds[c].push_back(vals[rank]);
    }
  }
  return bounds;
}

std::string binned_key(const DenseArray& y,
                       const std::vector<std::vector<double>>& bounds) {
  std::string key;
  for (std::size_t c = 0; c < y.size(); ++c) {
    const auto& b = bounds[c];
    std::size_t bin = std::upper_bound(b.begin(), b.end(), y[c]) - b.begin();
    if (c) key += ',';
    key += std::to_string(bin);
  }
  return key;
}

}  // namespace

TestReport joint_invariance_test(const std::string& name,
                                 const PairSampler& sampler,
                                 const GroupSpec& spec_x,
                                 const std::optional<GroupSpec>& y_action,
                                 std::size_t n_samples, double alpha,
                                 NoiseSource src, std::size_t y_bins) {
  std::vector<DenseArray> xs_a, ys_a, xs_b, ys_b;
  xs_a.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    auto [x, y] = sampler(noise_fork(src, {1, i}));
    xs_a.push_back(std::move(x));
    ys_a.push_back(std::move(y));
  }
  for (std::size_t i = 0; i < n_samples; ++i) {
    auto [x, y] = sampler(noise_fork(src, {2, i}));
    auto [g, rest] = sample_haar(spec_x, noise_fork(src, {3, i}));
    (void)rest;
    xs_b.push_back(act(g, x, spec_x));
    ys_b.push_back(y_action ? act(g, y, *y_action) : std::move(y));
  }

  std::vector<DenseArray> pooled_y = ys_a;
  pooled_y.insert(pooled_y.end(), ys_b.begin(), ys_b.end());
  auto bounds = bin_boundaries(pooled_y, y_bins);

  std::vector<std::string> keys_a(n_samples), keys_b(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    keys_a[i] = outcome_key(std::span<const double>(xs_a[i].data())) + "|" +
                binned_key(ys_a[i], bounds);
    keys_b[i] = outcome_key(std::span<const double>(xs_b[i].data())) + "|" +
                binned_key(ys_b[i], bounds);
  }
  TestReport r = chi2_two_sample(name, keys_a, keys_b, alpha);
  return r;
}

TestReport cond_indep_test(
    const std::string& name,
    const std::vector<std::pair<DenseArray, DenseArray>>& samples,
    const StatKeyFn& m, double alpha) {
  TestReport r;
  r.name = name;
  r.cases_checked = samples.size();

  // fiber -> x -> y -> count
  std::map<std::string, std::map<std::string, std::map<std::string, double>>>
      fibers;
  for (const auto& [x, y] : samples) {
    std::vector<double> stat = m(x);
    fibers[outcome_key(stat)][outcome_key(std::span<const double>(x.data()))]
          [outcome_key(std::span<const double>(y.data()))] += 1.0;
  }

  std::size_t vacuous = 0, undersampled = 0;
  std::vector<double> p_values;
  double worst_stat = 0.0;
  for (const auto& [mkey, by_x] : fibers) {
    if (by_x.size() < 2) {
      ++vacuous;
      continue;
    }
    // pooled y counts for column merging
    std::map<std::string, double> ycount;
    double total = 0.0;
    double min_row = std::numeric_limits<double>::max();
    for (const auto& [xkey, ys] : by_x) {
      double row = 0.0;
      for (const auto& [ykey, c] : ys) {
        ycount[ykey] += c;
        row += c;
      }
      total += row;
      min_row = std::min(min_row, row);
    }
    // expected(min_row, col) >= 5
    double min_col = 5.0 * total / min_row;
    MergedCells cols = merge_outcomes(ycount, min_col);
    if (cols.members.size() < 2 || min_row < 10.0) {
      ++undersampled;
      continue;
    }
    std::map<std::string, std::size_t> col_of;
    for (std::size_t c = 0; c < cols.members.size(); ++c)
      for (const auto& k : cols.members[c]) col_of[k] = c;

    double stat = 0.0;
    for (const auto& [xkey, ys] : by_x) {
      std::vector<double> obs(cols.members.size(), 0.0);
      double row = 0.0;
      for (const auto& [ykey, c] : ys) {
        obs[col_of[ykey]] += c;
        row += c;
      }
      for (std::size_t c = 0; c < cols.members.size(); ++c) {
        double e = row * cols.pooled[c] / total;
        stat += (obs[c] - e) * (obs[c] - e) / e;
      }
    }
    std::size_t df = (by_x.size() - 1) * (cols.members.size() - 1);
    p_values.push_back(chi2_tail(stat, df));
    worst_stat = std::max(worst_stat, stat);
  }

  r.statistic = worst_stat;
  r.detail = "fibers=" + std::to_string(fibers.size()) +
             " tested=" + std::to_string(p_values.size()) +
             " vacuous=" + std::to_string(vacuous) +
             " undersampled=" + std::to_string(undersampled);
  if (p_values.empty()) {
    r.passed = true;
    r.detail += " (vacuously passed)";
    return r;
  }
  double min_p = *std::min_element(p_values.begin(), p_values.end());
  r.p_value = min_p;
  double bonferroni = alpha / static_cast<double>(p_values.size());
  r.passed = min_p >= bonferroni;
  return r;
}

TestReport sufficiency_test(const std::string& name, const DiscreteLaw& law,
                            std::size_t n, double tol) {
  TestReport r;
  r.name = name;
  double total = 0.0;
  for (const auto& [seq, p] : law.outcomes) {
    if (seq.size() != n)
      throw std::invalid_argument("sufficiency_test: sequence length mismatch");
    if (p < 0.0)
      throw std::invalid_argument("sufficiency_test: negative probability");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw std::invalid_argument("sufficiency_test: pmf does not sum to 1");

  // fibers of the empirical measure
  std::map<std::string, std::map<std::string, double>> fibers;
  std::map<std::string, std::vector<double>> rep_of;
  for (const auto& [seq, p] : law.outcomes) {
    std::vector<double> sorted = seq;
    std::sort(sorted.begin(), sorted.end());
    std::string mkey = outcome_key(sorted);
    fibers[mkey][outcome_key(seq)] += p;
    rep_of.emplace(mkey, sorted);
  }

  for (const auto& [mkey, cond] : fibers) {
    double fiber_mass = 0.0;
    for (const auto& [k, p] : cond) fiber_mass += p;
    if (fiber_mass == 0.0) continue;
    DiscreteDist orbit =
        orbit_law_pmf(DenseArray::vector(rep_of.at(mkey)), GroupSpec::seq(n));
    std::map<std::string, double> orbit_pmf;
    for (std::size_t i = 0; i < orbit.support.size(); ++i)
      orbit_pmf[outcome_key(std::span<const double>(
          orbit.support[i].data()))] = orbit.pmf[i];
    std::set<std::string> keys;
    for (const auto& [k, p] : cond) keys.insert(k);
    for (const auto& [k, p] : orbit_pmf) keys.insert(k);
    for (const auto& k : keys) {
      double c = cond.contains(k) ? cond.at(k) / fiber_mass : 0.0;
      double o = orbit_pmf.contains(k) ? orbit_pmf.at(k) : 0.0;
      r.max_deviation = std::max(r.max_deviation, std::fabs(c - o));
      ++r.cases_checked;
    }
  }
  r.statistic = r.max_deviation;
  r.passed = r.max_deviation <= tol;
  return r;
}

}  // namespace permsym
