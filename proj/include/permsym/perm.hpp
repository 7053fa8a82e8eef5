#ifndef PERMSYM_PERM_HPP
#define PERMSYM_PERM_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "permsym/dense_array.hpp"
#include "permsym/noise.hpp"

namespace permsym {

/// Bijection of {0, ..., n-1}, stored as its image vector: image[i] = pi(i).
class Permutation {
public:
  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> image);
  static Permutation identity(std::size_t n);

  std::size_t n() const { return image_.size(); }
  std::size_t operator()(std::size_t i) const { return image_[i]; }
  const std::vector<std::size_t>& image() const { return image_; }

  Permutation inverse() const;
  bool is_identity() const;

  auto operator<=>(const Permutation&) const = default;

private:
  std::vector<std::size_t> image_;
};

/// (p o q)(i) = p(q(i)).
Permutation perm_compose(const Permutation& p, const Permutation& q);

/// Element of a direct product S_{n1} x ... x S_{nd} (a single factor for
/// sequence and joint actions).
struct PermTuple {
  std::vector<Permutation> parts;

  static PermTuple identity(std::span<const std::size_t> sizes);
  static PermTuple single(Permutation p) { return PermTuple{{std::move(p)}}; }
  PermTuple inverse() const;
  bool is_identity() const;

  auto operator<=>(const PermTuple&) const = default;
};

PermTuple perm_compose(const PermTuple& p, const PermTuple& q);

/// Which group acts, and on what index set.
///
/// - seq(n): S_n permuting the first axis of a rank >= 1 array.
/// - separate(n1, ..., nd): S_n1 x ... x S_nd, one factor per axis.
/// - joint(n, d): S_n acting simultaneously on d axes of a symmetric array.
///
/// Arrays may carry extra trailing axes (channels); only the leading axes are
/// acted on. The action uses inverse images, (g . x)[i] = x[g^{-1}(i)]
/// componentwise, so that act(g, act(h, x)) == act(compose(g, h), x) holds
/// exactly. The other common index convention, [pi . x]_i = x_{pi(i)},
/// composes the opposite way; switching between the two only changes which
/// permutation a witness names, never any invariance or distributional
/// statement.
struct GroupSpec {
  enum class Kind { Seq, Separate, Joint };
  Kind kind = Kind::Seq;
  std::vector<std::size_t> dims;  // acted-on extents, one per leading axis
  std::size_t joint_n = 0;        // Joint only

  static GroupSpec seq(std::size_t n);
  static GroupSpec separate(std::vector<std::size_t> dims);
  static GroupSpec joint(std::size_t n, std::size_t d = 2);

  /// Number of leading array axes the action touches.
  std::size_t acted_axes() const { return dims.size(); }
  /// Number of independent permutation factors in a PermTuple.
  std::size_t tuple_arity() const {
    return kind == Kind::Joint ? 1 : dims.size();
  }
  /// Group order as a double (exact for desk-scale sizes).
  double order() const;
};

/// Checks g against spec (factor count and degrees); throws on mismatch.
void validate_element(const GroupSpec& spec, const PermTuple& g);

/// Left action of g on x; joint mode requires x symmetric in the acted axes.
DenseArray act(const PermTuple& g, const DenseArray& x, const GroupSpec& spec);

/// Every group element exactly once, in lexicographic image-vector order
/// (last factor varies fastest). Throws FeasibilityError above `limit`.
void for_each_element(const GroupSpec& spec,
                      const std::function<void(const PermTuple&)>& fn,
                      std::size_t limit = 1000000);
std::vector<PermTuple> enumerate_group(const GroupSpec& spec,
                                       std::size_t limit = 1000000);

/// Uniform (Haar) element via Fisher-Yates per factor.
std::pair<PermTuple, NoiseSource> sample_haar(const GroupSpec& spec,
                                              NoiseSource src);

/// Elements g with g(fixed) = fixed componentwise; `fixed` has one entry per
/// permutation factor (a single index for seq and joint specs).
std::vector<PermTuple> stabilizer_elements(const GroupSpec& spec,
                                           std::span<const std::size_t> fixed,
                                           std::size_t limit = 1000000);

}  // namespace permsym

#endif
