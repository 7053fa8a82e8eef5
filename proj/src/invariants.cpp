#include "permsym/invariants.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <map>
#include <numeric>
#include <stdexcept>

namespace permsym {

EmpiricalMeasure empirical_measure(const std::vector<Encoding>& x) {
  EmpiricalMeasure m;
  m.entries = x;
  std::sort(m.entries.begin(), m.entries.end());
  return m;
}

EmpiricalMeasure empirical_measure(std::span<const double> x) {
  std::vector<Encoding> enc;
  enc.reserve(x.size());
  for (double v : x) enc.push_back({v});
  return empirical_measure(enc);
}

SortResult sort_tau(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  SortResult r;
  r.rep.reserve(x.size());
  for (std::size_t i : order) r.rep.push_back(x[i]);
  // act(tau^{-1}, x)_r = x[tau(r)] = x[order[r]] = rep_r
  r.tau = Permutation(std::move(order));
  return r;
}

std::vector<double> AugCanon::flatten() const {
  std::vector<double> out;
  out.reserve(1 + base.canon.size());
  out.push_back(center_value);
  out.insert(out.end(), base.canon.data().begin(), base.canon.data().end());
  return out;
}

namespace {

AugCanon z_augment_separate(const DenseArray& x,
                            std::span<const std::size_t> index,
                            const GroupSpec& spec, std::size_t p) {
  std::size_t d = spec.dims.size();
  if (d < 2)
    throw std::invalid_argument("z_augment: separate mode needs >= 2 axes");
  if (x.rank() != d)
    throw std::invalid_argument("z_augment: array rank must equal axis count");
  if (index.size() != d)
    throw std::invalid_argument("z_augment: index rank mismatch");
  for (std::size_t k = 0; k < d; ++k) {
    if (index[k] >= spec.dims[k])
      throw std::out_of_range("z_augment: index out of range");
    if (spec.dims[k] < 2)
      throw FeasibilityError("z_augment: empty remainder along an axis");
  }
  if (p > d) throw std::invalid_argument("z_augment: p exceeds array rank");

  // Broadcast channels: one per non-empty proper axis subset of size <= p,
  // in (size, mask) order.
  std::vector<std::uint32_t> masks;
  std::uint32_t full = (1u << d) - 1u;
  for (std::size_t q = 1; q <= std::min(p, d); ++q)
    for (std::uint32_t mask = 1; mask < full; ++mask)
      if (static_cast<std::size_t>(std::popcount(mask)) == q)
        masks.push_back(mask);

  std::vector<std::size_t> rem_dims(d);
  for (std::size_t k = 0; k < d; ++k) rem_dims[k] = spec.dims[k] - 1;
  std::size_t cells = 1;
  for (std::size_t m : rem_dims) cells *= m;
  std::size_t channel = 1 + masks.size();

  std::vector<std::size_t> z_shape = rem_dims;
  z_shape.push_back(channel);
  DenseArray z = DenseArray::zeros(z_shape);

  std::vector<std::size_t> rem_idx(d), orig(d), probe(d);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t rem = cell;
    for (std::size_t k = d; k-- > 0;) {
      rem_idx[k] = rem % rem_dims[k];
      rem /= rem_dims[k];
    }
    for (std::size_t k = 0; k < d; ++k)
      orig[k] = rem_idx[k] < index[k] ? rem_idx[k] : rem_idx[k] + 1;
    z[cell * channel] = x.at(orig);
    for (std::size_t s = 0; s < masks.size(); ++s) {
      for (std::size_t k = 0; k < d; ++k)
        probe[k] = (masks[s] >> k) & 1u ? index[k] : orig[k];
      z[cell * channel + 1 + s] = x.at(probe);
    }
  }

  AugCanon out;
  out.base = canon_array(z, GroupSpec::separate(rem_dims));
  out.center_value = x.at(index);
  out.mode = d == 2 ? AugMode::Separate : AugMode::Darray;
  out.p = p;
  out.index.assign(index.begin(), index.end());
  return out;
}

AugCanon z_augment_joint(const DenseArray& x,
                         std::span<const std::size_t> index,
                         const GroupSpec& spec) {
  if (spec.acted_axes() != 2)
    throw std::invalid_argument("z_augment: joint mode supports matrices only");
  std::size_t n = spec.joint_n;
  if (x.rank() != 2 || !x.is_symmetric() || x.shape()[0] != n)
    throw std::invalid_argument("z_augment: joint mode needs a symmetric "
                                "matrix matching the spec");
  if (index.size() != 2)
    throw std::invalid_argument("z_augment: joint index must be a pair");
  std::size_t i = index[0], j = index[1];
  if (i >= n || j >= n)
    throw std::out_of_range("z_augment: index out of range");

  std::vector<std::size_t> remaining;
  for (std::size_t k = 0; k < n; ++k)
    if (k != i && k != j) remaining.push_back(k);
  std::size_t m = remaining.size();
  if (m == 0) throw FeasibilityError("z_augment: empty remainder");

  // Cell channels: base value, then the two distinguished-pair broadcasts as
  // sorted pairs, the pair of pairs itself sorted.
  constexpr std::size_t kChannel = 5;
  DenseArray z = DenseArray::zeros({m, m, kChannel});
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      std::size_t k = remaining[a], l = remaining[b];
      std::array<double, 2> col_pair{x.at2(i, l), x.at2(j, l)};
      std::array<double, 2> row_pair{x.at2(k, i), x.at2(k, j)};
      std::sort(col_pair.begin(), col_pair.end());
      std::sort(row_pair.begin(), row_pair.end());
      if (row_pair < col_pair) std::swap(col_pair, row_pair);
      double* cell = z.data().data() + (a * m + b) * kChannel;
      cell[0] = x.at2(k, l);
      cell[1] = col_pair[0];
      cell[2] = col_pair[1];
      cell[3] = row_pair[0];
      cell[4] = row_pair[1];
    }

  AugCanon out;
  out.base = canon_array(z, GroupSpec::joint(m));
  out.center_value = x.at2(i, j);
  out.mode = AugMode::Joint;
  out.p = 0;
  out.index.assign(index.begin(), index.end());
  return out;
}

}  // namespace

AugCanon z_augment(const DenseArray& x, std::span<const std::size_t> index,
                   const GroupSpec& spec, std::size_t p) {
  switch (spec.kind) {
    case GroupSpec::Kind::Separate:
      return z_augment_separate(x, index, spec, p);
    case GroupSpec::Kind::Joint:
      return z_augment_joint(x, index, spec);
    case GroupSpec::Kind::Seq:
      throw std::invalid_argument("z_augment: sequences use the empirical "
                                  "measure, not an augmented canonical form");
  }
  throw std::invalid_argument("z_augment: bad spec");
}

DenseArray broadcast_vertex(std::span<const double> xn,
                            const DenseArray& xsym) {
  if (xsym.rank() != 2 || !xsym.is_symmetric())
    throw std::invalid_argument("broadcast_vertex: matrix must be symmetric");
  std::size_t n = xsym.shape()[0];
  if (xn.size() != n)
    throw std::invalid_argument("broadcast_vertex: length mismatch");
  DenseArray out = DenseArray::zeros({n, n, 3});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double* cell = out.data().data() + (i * n + j) * 3;
      cell[0] = xsym.at2(i, j);
      cell[1] = std::min(xn[i], xn[j]);
      cell[2] = std::max(xn[i], xn[j]);
    }
  return out;
}

DiscreteDist orbit_law_pmf(const DenseArray& rep, const GroupSpec& spec,
                           std::size_t limit) {
  std::map<std::vector<double>, std::size_t> counts;
  std::size_t order = 0;
  for_each_element(
      spec,
      [&](const PermTuple& g) {
        counts[act(g, rep, spec).data()] += 1;
        ++order;
      },
      limit);
  DiscreteDist dist;
  dist.group_order = order;
  for (const auto& [data, count] : counts) {
    dist.support.emplace_back(rep.shape(), data);
    dist.counts.push_back(count);
    dist.pmf.push_back(static_cast<double>(count) /
                       static_cast<double>(order));
  }
  return dist;
}

std::pair<DenseArray, NoiseSource> orbit_law_sample(const DenseArray& rep,
                                                    const GroupSpec& spec,
                                                    NoiseSource src) {
  auto [g, next] = sample_haar(spec, src);
  return {act(g, rep, spec), next};
}

SemigroupStat semigroup_fold(std::span<const double> x,
                             const std::function<double(double)>& encode,
                             SemigroupOp op) {
  if (x.empty() && (op == SemigroupOp::Max || op == SemigroupOp::Min))
    throw std::invalid_argument("semigroup_fold: empty fold for an op "
                                "without identity");
  SemigroupStat s;
  s.op = op;
  switch (op) {
    case SemigroupOp::Sum:
    case SemigroupOp::Product: {
      double acc = op == SemigroupOp::Sum ? 0.0 : 1.0;
      for (double v : x)
        acc = op == SemigroupOp::Sum ? acc + encode(v) : acc * encode(v);
      s.value = {acc};
      break;
    }
    case SemigroupOp::Max:
    case SemigroupOp::Min: {
      double acc = encode(x[0]);
      for (std::size_t i = 1; i < x.size(); ++i)
        acc = op == SemigroupOp::Max ? std::max(acc, encode(x[i]))
                                     : std::min(acc, encode(x[i]));
      s.value = {acc};
      break;
    }
    case SemigroupOp::Multiset: {
      s.value.reserve(x.size());
      for (double v : x) s.value.push_back(encode(v));
      std::sort(s.value.begin(), s.value.end());
      break;
    }
  }
  return s;
}

SemigroupStat semigroup_fold(std::span<const double> x, SemigroupOp op) {
  return semigroup_fold(x, [](double v) { return v; }, op);
}

SemigroupStat semigroup_merge(const SemigroupStat& a, const SemigroupStat& b) {
  if (a.op != b.op)
    throw std::invalid_argument("semigroup_merge: mismatched ops");
  SemigroupStat s;
  s.op = a.op;
  switch (a.op) {
    case SemigroupOp::Sum: s.value = {a.value[0] + b.value[0]}; break;
    case SemigroupOp::Product: s.value = {a.value[0] * b.value[0]}; break;
    case SemigroupOp::Max: s.value = {std::max(a.value[0], b.value[0])}; break;
    case SemigroupOp::Min: s.value = {std::min(a.value[0], b.value[0])}; break;
    case SemigroupOp::Multiset: {
      s.value.resize(a.value.size() + b.value.size());
      std::merge(a.value.begin(), a.value.end(), b.value.begin(),
                 b.value.end(), s.value.begin());
      break;
    }
  }
  return s;
}

}  // namespace permsym
