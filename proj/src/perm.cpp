#include "permsym/perm.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace permsym {

Permutation::Permutation(std::vector<std::size_t> image)
    : image_(std::move(image)) {
  std::vector<bool> seen(image_.size(), false);
  for (std::size_t v : image_) {
    if (v >= image_.size() || seen[v])
      throw std::invalid_argument("Permutation: image is not a bijection");
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> img(n);
  std::iota(img.begin(), img.end(), 0);
  return Permutation(std::move(img));
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(image_.size());
  for (std::size_t i = 0; i < image_.size(); ++i) inv[image_[i]] = i;
  return Permutation(std::move(inv));
}

bool Permutation::is_identity() const {
  for (std::size_t i = 0; i < image_.size(); ++i)
    if (image_[i] != i) return false;
  return true;
}

Permutation perm_compose(const Permutation& p, const Permutation& q) {
  if (p.n() != q.n())
    throw std::invalid_argument("perm_compose: size mismatch");
  std::vector<std::size_t> img(p.n());
  for (std::size_t i = 0; i < p.n(); ++i) img[i] = p(q(i));
  return Permutation(std::move(img));
}

PermTuple PermTuple::identity(std::span<const std::size_t> sizes) {
  PermTuple t;
  t.parts.reserve(sizes.size());
  for (std::size_t n : sizes) t.parts.push_back(Permutation::identity(n));
  return t;
}

PermTuple PermTuple::inverse() const {
  PermTuple t;
  t.parts.reserve(parts.size());
  for (const auto& p : parts) t.parts.push_back(p.inverse());
  return t;
}

bool PermTuple::is_identity() const {
  return std::all_of(parts.begin(), parts.end(),
                     [](const Permutation& p) { return p.is_identity(); });
}

PermTuple perm_compose(const PermTuple& p, const PermTuple& q) {
  if (p.parts.size() != q.parts.size())
    throw std::invalid_argument("perm_compose: arity mismatch");
  PermTuple t;
  t.parts.reserve(p.parts.size());
  for (std::size_t k = 0; k < p.parts.size(); ++k)
    t.parts.push_back(perm_compose(p.parts[k], q.parts[k]));
  return t;
}

GroupSpec GroupSpec::seq(std::size_t n) {
  if (n == 0) throw std::invalid_argument("GroupSpec: size must be >= 1");
  GroupSpec s;
  s.kind = Kind::Seq;
  s.dims = {n};
  return s;
}

GroupSpec GroupSpec::separate(std::vector<std::size_t> dims) {
  if (dims.empty()) throw std::invalid_argument("GroupSpec: empty dims");
  for (std::size_t d : dims)
    if (d == 0) throw std::invalid_argument("GroupSpec: size must be >= 1");
  GroupSpec s;
  s.kind = Kind::Separate;
  s.dims = std::move(dims);
  return s;
}

GroupSpec GroupSpec::joint(std::size_t n, std::size_t d) {
  if (n == 0 || d < 2) throw std::invalid_argument("GroupSpec: bad joint spec");
  GroupSpec s;
  s.kind = Kind::Joint;
  s.dims.assign(d, n);
  s.joint_n = n;
  return s;
}

double GroupSpec::order() const {
  auto factorial = [](std::size_t n) {
    double f = 1.0;
    for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
    return f;
  };
  if (kind == Kind::Joint) return factorial(joint_n);
  double total = 1.0;
  for (std::size_t d : dims) total *= factorial(d);
  return total;
}

void validate_element(const GroupSpec& spec, const PermTuple& g) {
  if (g.parts.size() != spec.tuple_arity())
    throw std::invalid_argument("group element: arity mismatch");
  if (spec.kind == GroupSpec::Kind::Joint) {
    if (g.parts[0].n() != spec.joint_n)
      throw std::invalid_argument("group element: degree mismatch");
    return;
  }
  for (std::size_t k = 0; k < spec.dims.size(); ++k)
    if (g.parts[k].n() != spec.dims[k])
      throw std::invalid_argument("group element: degree mismatch");
}

namespace {

void check_acted_shape(const GroupSpec& spec, const DenseArray& x) {
  if (x.rank() < spec.acted_axes())
    throw std::invalid_argument("act: array rank below acted axes");
  for (std::size_t k = 0; k < spec.acted_axes(); ++k)
    if (x.shape()[k] != spec.dims[k])
      throw std::invalid_argument("act: array shape incompatible with spec");
}

// Channel symmetry check for joint mode: x symmetric in its leading d axes,
// entrywise over any trailing channel block.
bool jointly_symmetric(const DenseArray& x, std::size_t d) {
  std::size_t n = x.shape()[0];
  std::size_t channel = 1;
  for (std::size_t k = d; k < x.rank(); ++k) channel *= x.shape()[k];
  std::vector<std::size_t> idx(d, 0);
  std::size_t cells = 1;
  for (std::size_t k = 0; k < d; ++k) cells *= n;
  for (std::size_t flat = 0; flat < cells; ++flat) {
    std::size_t rem = flat;
    for (std::size_t k = d; k-- > 0;) {
      idx[k] = rem % n;
      rem /= n;
    }
    std::vector<std::size_t> sorted_idx = idx;
    std::sort(sorted_idx.begin(), sorted_idx.end());
    if (sorted_idx == idx) continue;
    std::size_t a = 0, b = 0;
    for (std::size_t k = 0; k < d; ++k) {
      a = a * n + idx[k];
      b = b * n + sorted_idx[k];
    }
    for (std::size_t c = 0; c < channel; ++c)
      if (x[a * channel + c] != x[b * channel + c]) return false;
  }
  return true;
}

}  // namespace

DenseArray act(const PermTuple& g, const DenseArray& x, const GroupSpec& spec) {
  validate_element(spec, g);
  check_acted_shape(spec, x);
  std::size_t d = spec.acted_axes();
  if (spec.kind == GroupSpec::Kind::Joint && !jointly_symmetric(x, d))
    throw std::invalid_argument("act: joint mode requires a symmetric array");

  std::vector<const Permutation*> axis_perm(d);
  for (std::size_t k = 0; k < d; ++k)
    axis_perm[k] =
        spec.kind == GroupSpec::Kind::Joint ? &g.parts[0] : &g.parts[k];
  std::vector<Permutation> inverses;
  inverses.reserve(d);
  for (std::size_t k = 0; k < d; ++k) inverses.push_back(axis_perm[k]->inverse());

  std::size_t channel = 1;
  for (std::size_t k = d; k < x.rank(); ++k) channel *= x.shape()[k];
  std::size_t cells = x.size() / channel;

  DenseArray out = DenseArray::zeros(x.shape());
  std::vector<std::size_t> idx(d), src_idx(d);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t rem = cell;
    for (std::size_t k = d; k-- > 0;) {
      idx[k] = rem % x.shape()[k];
      rem /= x.shape()[k];
    }
    for (std::size_t k = 0; k < d; ++k) src_idx[k] = inverses[k](idx[k]);
    std::size_t src_cell = 0;
    for (std::size_t k = 0; k < d; ++k)
      src_cell = src_cell * x.shape()[k] + src_idx[k];
    for (std::size_t c = 0; c < channel; ++c)
      out[cell * channel + c] = x[src_cell * channel + c];
  }
  return out;
}

void for_each_element(const GroupSpec& spec,
                      const std::function<void(const PermTuple&)>& fn,
                      std::size_t limit) {
  if (spec.order() > static_cast<double>(limit))
    throw FeasibilityError("group enumeration exceeds size limit");

  std::size_t arity = spec.tuple_arity();
  std::vector<std::size_t> degree(arity);
  if (spec.kind == GroupSpec::Kind::Joint)
    degree[0] = spec.joint_n;
  else
    degree = spec.dims;

  // Odometer over factors; next_permutation yields lexicographic image order.
  std::vector<std::vector<std::size_t>> images(arity);
  for (std::size_t k = 0; k < arity; ++k) {
    images[k].resize(degree[k]);
    std::iota(images[k].begin(), images[k].end(), 0);
  }
  while (true) {
    PermTuple g;
    g.parts.reserve(arity);
    for (const auto& img : images) g.parts.emplace_back(img);
    fn(g);
    std::size_t k = arity;
    while (k-- > 0) {
      if (std::next_permutation(images[k].begin(), images[k].end())) break;
      // wrapped back to identity; carry to the previous factor
      if (k == 0) return;
    }
  }
}

std::vector<PermTuple> enumerate_group(const GroupSpec& spec,
                                       std::size_t limit) {
  std::vector<PermTuple> out;
  out.reserve(static_cast<std::size_t>(spec.order()));
  for_each_element(spec, [&](const PermTuple& g) { out.push_back(g); }, limit);
  return out;
}

std::pair<PermTuple, NoiseSource> sample_haar(const GroupSpec& spec,
                                              NoiseSource src) {
  std::size_t arity = spec.tuple_arity();
  PermTuple g;
  g.parts.reserve(arity);
  for (std::size_t k = 0; k < arity; ++k) {
    std::size_t n =
        spec.kind == GroupSpec::Kind::Joint ? spec.joint_n : spec.dims[k];
    std::vector<std::size_t> img(n);
    std::iota(img.begin(), img.end(), 0);
    for (std::size_t i = n; i-- > 1;) {
      auto [j, next] = noise_below(src, i + 1);
      src = next;
      std::swap(img[i], img[j]);
    }
    g.parts.emplace_back(std::move(img));
  }
  return {std::move(g), src};
}

std::vector<PermTuple> stabilizer_elements(const GroupSpec& spec,
                                           std::span<const std::size_t> fixed,
                                           std::size_t limit) {
  if (fixed.size() != spec.tuple_arity())
    throw std::invalid_argument("stabilizer_elements: index arity mismatch");
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    std::size_t n =
        spec.kind == GroupSpec::Kind::Joint ? spec.joint_n : spec.dims[k];
    if (fixed[k] >= n)
      throw std::out_of_range("stabilizer_elements: index out of range");
  }
  std::vector<PermTuple> out;
  for_each_element(
      spec,
      [&](const PermTuple& g) {
        for (std::size_t k = 0; k < fixed.size(); ++k)
          if (g.parts[k](fixed[k]) != fixed[k]) return;
        out.push_back(g);
      },
      limit);
  return out;
}

}  // namespace permsym
