#ifndef PERMSYM_INVARIANTS_HPP
#define PERMSYM_INVARIANTS_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "permsym/canon.hpp"
#include "permsym/dense_array.hpp"
#include "permsym/noise.hpp"
#include "permsym/perm.hpp"

namespace permsym {

/// Element encoding: a scalar is a length-1 vector, vector-valued elements
/// compare lexicographically.
using Encoding = std::vector<double>;

/// Multiset of a sequence's values, stored sorted ascending.
struct EmpiricalMeasure {
  std::vector<Encoding> entries;

  bool operator==(const EmpiricalMeasure&) const = default;
};

EmpiricalMeasure empirical_measure(const std::vector<Encoding>& x);
EmpiricalMeasure empirical_measure(std::span<const double> x);

/// Sorting witness: rep = act(tau^{-1}, x) is ascending, ties broken by
/// original index, so an already-sorted input gets tau = identity. rep equals
/// empirical_measure(x) read as a sequence.
struct SortResult {
  Permutation tau;
  std::vector<double> rep;
};

SortResult sort_tau(std::span<const double> x);

enum class AugMode { Separate, Joint, Darray };

/// Canonical form of the remainder array around a distinguished index, with
/// the distinguished slices broadcast as extra channels; the conditioning
/// statistic for equivariant array outputs. Invariant under the group action
/// applied jointly to (input, index).
struct AugCanon {
  CanonResult base;           // canonized remainder array, channels last
  double center_value = 0.0;  // input at the distinguished index
  AugMode mode = AugMode::Separate;
  std::size_t p = 0;
  std::vector<std::size_t> index;

  /// Identity of the statistic (witness bookkeeping excluded).
  bool same_statistic(const AugCanon& other) const {
    return mode == other.mode && p == other.p &&
           center_value == other.center_value &&
           base.canon == other.base.canon;
  }
  /// Flattened statistic: center value followed by the canonized remainder.
  std::vector<double> flatten() const;
};

/// Separate/d-array modes build the remainder array over indices differing
/// from `index` in every axis; each cell carries the base value plus one
/// broadcast channel per proper non-empty axis subset of size <= p (a fixed
/// axis takes the distinguished component). Joint mode takes index = (i, j)
/// on a symmetric matrix and stores the paired broadcasts as sorted pairs.
/// The remainder is then canonized under the reduced group.
AugCanon z_augment(const DenseArray& x, std::span<const std::size_t> index,
                   const GroupSpec& spec, std::size_t p);

/// Vertex features broadcast over a symmetric matrix: channels per (i, j)
/// entry are (xsym[i][j], min(xn[i], xn[j]), max(xn[i], xn[j])); output shape
/// (n, n, 3), symmetric channel-wise.
DenseArray broadcast_vertex(std::span<const double> xn, const DenseArray& xsym);

/// Distribution over finitely many arrays; pmf entries are exact integer
/// counts over the group order, converted to floats at the end.
struct DiscreteDist {
  std::vector<DenseArray> support;     // sorted by flattened data
  std::vector<std::size_t> counts;     // multiplicity of each outcome
  std::vector<double> pmf;
  std::size_t group_order = 0;
};

/// pmf(y) = #{g : act(g, rep) = y} / |G|; support is the orbit of rep.
DiscreteDist orbit_law_pmf(const DenseArray& rep, const GroupSpec& spec,
                           std::size_t limit = 1000000);

/// One draw from the orbit law: a Haar element applied to rep.
std::pair<DenseArray, NoiseSource> orbit_law_sample(const DenseArray& rep,
                                                    const GroupSpec& spec,
                                                    NoiseSource src);

enum class SemigroupOp { Sum, Max, Min, Product, Multiset };

/// Permutation-invariant statistic with an associative commutative merge,
/// so variable-size inputs fold incrementally.
struct SemigroupStat {
  SemigroupOp op = SemigroupOp::Sum;
  std::vector<double> value;  // scalar ops use a single entry

  bool operator==(const SemigroupStat&) const = default;
};

SemigroupStat semigroup_fold(std::span<const double> x,
                             const std::function<double(double)>& encode,
                             SemigroupOp op);
SemigroupStat semigroup_fold(std::span<const double> x, SemigroupOp op);
SemigroupStat semigroup_merge(const SemigroupStat& a, const SemigroupStat& b);

}  // namespace permsym

#endif
