#ifndef PERMSYM_CANON_HPP
#define PERMSYM_CANON_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "permsym/dense_array.hpp"
#include "permsym/perm.hpp"

namespace permsym {

/// Canonical form of an array under a group action, with the witness
/// permutation tuple: act(witness, input) == canon exactly. The canonical
/// form is the lexicographic minimum of the orbit under row-major flattening
/// (trailing channel axes compare as part of each cell); among permutations
/// achieving it, the witness is the lexicographically least PermTuple.
struct CanonResult {
  DenseArray canon;
  PermTuple witness;
};

enum class CanonAlgo {
  Auto,   // pruned search where implemented, brute force otherwise
  Brute,  // plain enumeration; the test oracle
  Pruned  // branch-and-bound; must match Brute bit-exactly
};

/// Lex-min orbit representative. Feasibility limits: seq n <= 9, joint
/// n <= 8, separate with two axes <= 6 each, higher-dimensional arrays
/// while the group order stays <= 1e6.
CanonResult canon_array(const DenseArray& x, const GroupSpec& spec,
                        CanonAlgo algo = CanonAlgo::Auto);

/// Number of distinct arrays in the orbit of x (|G| / |stabilizer|).
std::size_t orbit_size(const DenseArray& x, const GroupSpec& spec);

}  // namespace permsym

#endif
