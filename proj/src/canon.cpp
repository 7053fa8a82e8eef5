#include "permsym/canon.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace permsym {

namespace {

// Cell-oriented view: the acted axes index cells, trailing axes form the
// channel block each cell carries.
struct CellView {
  const DenseArray* x;
  std::vector<std::size_t> dims;  // acted extents
  std::size_t channel;            // floats per cell

  const double* cell(std::size_t flat_cell) const {
    return x->data().data() + flat_cell * channel;
  }
};

CellView make_view(const DenseArray& x, const GroupSpec& spec) {
  if (x.rank() < spec.acted_axes())
    throw std::invalid_argument("canon_array: rank below acted axes");
  CellView v;
  v.x = &x;
  v.dims.assign(x.shape().begin(), x.shape().begin() + spec.acted_axes());
  for (std::size_t k = 0; k < spec.acted_axes(); ++k)
    if (v.dims[k] != spec.dims[k])
      throw std::invalid_argument("canon_array: shape incompatible with spec");
  v.channel = 1;
  for (std::size_t k = spec.acted_axes(); k < x.rank(); ++k)
    v.channel *= x.shape()[k];
  return v;
}

int compare_cells(const double* a, const double* b, std::size_t channel) {
  for (std::size_t c = 0; c < channel; ++c) {
    if (a[c] < b[c]) return -1;
    if (a[c] > b[c]) return 1;
  }
  return 0;
}

// Lexicographic comparison of act(g, x) against a flat reference, without
// materializing the acted array. Returns as soon as a cell differs.
int compare_acted(const CellView& v, const GroupSpec& spec, const PermTuple& g,
                  const std::vector<double>& ref) {
  std::size_t d = v.dims.size();
  std::vector<Permutation> inv;
  inv.reserve(d);
  for (std::size_t k = 0; k < d; ++k) {
    const Permutation& part =
        spec.kind == GroupSpec::Kind::Joint ? g.parts[0] : g.parts[k];
    inv.push_back(part.inverse());
  }
  std::size_t cells = 1;
  for (std::size_t e : v.dims) cells *= e;
  std::vector<std::size_t> idx(d);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t rem = cell;
    for (std::size_t k = d; k-- > 0;) {
      idx[k] = rem % v.dims[k];
      rem /= v.dims[k];
    }
    std::size_t src = 0;
    for (std::size_t k = 0; k < d; ++k) src = src * v.dims[k] + inv[k](idx[k]);
    int c = compare_cells(v.cell(src), ref.data() + cell * v.channel,
                          v.channel);
    if (c != 0) return c;
  }
  return 0;
}

std::vector<double> materialize_acted(const CellView& v, const GroupSpec& spec,
                                      const PermTuple& g) {
  std::size_t d = v.dims.size();
  std::vector<Permutation> inv;
  inv.reserve(d);
  for (std::size_t k = 0; k < d; ++k) {
    const Permutation& part =
        spec.kind == GroupSpec::Kind::Joint ? g.parts[0] : g.parts[k];
    inv.push_back(part.inverse());
  }
  std::size_t cells = 1;
  for (std::size_t e : v.dims) cells *= e;
  std::vector<double> out(cells * v.channel);
  std::vector<std::size_t> idx(d);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t rem = cell;
    for (std::size_t k = d; k-- > 0;) {
      idx[k] = rem % v.dims[k];
      rem /= v.dims[k];
    }
    std::size_t src = 0;
    for (std::size_t k = 0; k < d; ++k) src = src * v.dims[k] + inv[k](idx[k]);
    std::copy_n(v.cell(src), v.channel, out.data() + cell * v.channel);
  }
  return out;
}

void check_feasible(const GroupSpec& spec) {
  switch (spec.kind) {
    case GroupSpec::Kind::Seq:
      if (spec.dims[0] > 9)
        throw FeasibilityError("canon_array: sequence length > 9");
      break;
    case GroupSpec::Kind::Joint:
      if (spec.joint_n > 8)
        throw FeasibilityError("canon_array: joint size > 8");
      break;
    case GroupSpec::Kind::Separate:
      if (spec.dims.size() == 2)
        for (std::size_t e : spec.dims)
          if (e > 6) throw FeasibilityError("canon_array: matrix axis > 6");
      break;
  }
  if (spec.order() > 1e6)
    throw FeasibilityError("canon_array: group order exceeds 1e6");
}

// First element in lexicographic enumeration order whose action reproduces
// `canon`; this is the lexicographically least achieving PermTuple.
PermTuple find_lexmin_witness(const CellView& v, const GroupSpec& spec,
                              const std::vector<double>& canon) {
  std::optional<PermTuple> found;
  for_each_element(spec, [&](const PermTuple& g) {
    if (found) return;
    if (compare_acted(v, spec, g, canon) == 0) found = g;
  });
  if (!found) throw std::logic_error("canon witness not found");
  return *found;
}

CanonResult brute_canon(const CellView& v, const GroupSpec& spec) {
  std::vector<double> best;
  PermTuple witness;
  for_each_element(spec, [&](const PermTuple& g) {
    if (best.empty()) {
      best = materialize_acted(v, spec, g);
      witness = g;
      return;
    }
    if (compare_acted(v, spec, g, best) < 0) {
      best = materialize_acted(v, spec, g);
      witness = g;
    }
  });
  return CanonResult{DenseArray(v.x->shape(), std::move(best)),
                     std::move(witness)};
}

// ---------------------------------------------------------------------------
// Pruned search, separate action on two axes.
//
// Columns are assigned to target positions depth-first; for a fixed column
// order the optimal row order is ascending row sort, and the candidate's
// first row restricted to the assigned columns equals the minimum over rows
// of that restriction. A branch is abandoned when that minimal prefix is
// already lexicographically greater than the incumbent's first-row prefix.
// Candidate columns are visited in ascending column-sum order so a strong
// incumbent appears early.
// ---------------------------------------------------------------------------
struct SeparatePruner {
  const CellView& v;
  std::size_t n_rows, n_cols, channel;
  std::vector<std::size_t> col_order;    // heuristic visit order
  std::vector<std::size_t> chosen;       // chosen[t] = source column
  std::vector<bool> used;
  std::vector<double> incumbent;

  explicit SeparatePruner(const CellView& view)
      : v(view),
        n_rows(view.dims[0]),
        n_cols(view.dims[1]),
        channel(view.channel) {
    col_order.resize(n_cols);
    std::iota(col_order.begin(), col_order.end(), 0);
    std::vector<double> sums(n_cols, 0.0);
    for (std::size_t j = 0; j < n_cols; ++j)
      for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t c = 0; c < channel; ++c)
          sums[j] += v.cell(i * n_cols + j)[c];
    std::stable_sort(col_order.begin(), col_order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return sums[a] < sums[b];
                     });
    used.assign(n_cols, false);
  }

  // min over rows of the row restricted to the chosen columns, compared to
  // the incumbent's leading cells; >0 means the branch cannot win.
  bool prefix_beaten() const {
    if (incumbent.empty() || chosen.empty()) return false;
    std::size_t depth = chosen.size();
    std::vector<double> best_prefix;
    for (std::size_t i = 0; i < n_rows; ++i) {
      std::vector<double> prefix;
      prefix.reserve(depth * channel);
      for (std::size_t t = 0; t < depth; ++t) {
        const double* cell = v.cell(i * n_cols + chosen[t]);
        prefix.insert(prefix.end(), cell, cell + channel);
      }
      if (best_prefix.empty() || prefix < best_prefix)
        best_prefix = std::move(prefix);
    }
    return std::lexicographical_compare(
        incumbent.begin(), incumbent.begin() + depth * channel,
        best_prefix.begin(), best_prefix.end());
  }

  void leaf() {
    std::vector<std::vector<double>> rows(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) {
      rows[i].reserve(n_cols * channel);
      for (std::size_t t = 0; t < n_cols; ++t) {
        const double* cell = v.cell(i * n_cols + chosen[t]);
        rows[i].insert(rows[i].end(), cell, cell + channel);
      }
    }
    std::sort(rows.begin(), rows.end());
    std::vector<double> candidate;
    candidate.reserve(n_rows * n_cols * channel);
    for (auto& r : rows)
      candidate.insert(candidate.end(), r.begin(), r.end());
    if (incumbent.empty() || candidate < incumbent)
      incumbent = std::move(candidate);
  }

  void dfs() {
    if (chosen.size() == n_cols) {
      leaf();
      return;
    }
    for (std::size_t j : col_order) {
      if (used[j]) continue;
      used[j] = true;
      chosen.push_back(j);
      if (!prefix_beaten()) dfs();
      chosen.pop_back();
      used[j] = false;
    }
  }
};

// Pruned search, joint action. Target positions take source indices
// depth-first; after k assignments the first k cells of the candidate's
// first row are known and bound the branch.
struct JointPruner {
  const CellView& v;
  std::size_t n, channel;
  std::vector<std::size_t> visit_order;
  std::vector<std::size_t> assign;  // assign[t] = source index of target t
  std::vector<bool> used;
  std::vector<double> incumbent;

  explicit JointPruner(const CellView& view)
      : v(view), n(view.dims[0]), channel(view.channel) {
    visit_order.resize(n);
    std::iota(visit_order.begin(), visit_order.end(), 0);
    std::vector<double> sums(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < channel; ++c)
          sums[i] += v.cell(i * n + j)[c];
    std::stable_sort(visit_order.begin(), visit_order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return sums[a] < sums[b];
                     });
    used.assign(n, false);
  }

  bool prefix_beaten() const {
    if (incumbent.empty()) return false;
    std::size_t depth = assign.size();
    std::vector<double> prefix;
    prefix.reserve(depth * channel);
    for (std::size_t t = 0; t < depth; ++t) {
      const double* cell = v.cell(assign[0] * n + assign[t]);
      prefix.insert(prefix.end(), cell, cell + channel);
    }
    return std::lexicographical_compare(incumbent.begin(),
                                        incumbent.begin() + depth * channel,
                                        prefix.begin(), prefix.end());
  }

  void leaf() {
    std::vector<double> candidate;
    candidate.reserve(n * n * channel);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        const double* cell = v.cell(assign[a] * n + assign[b]);
        candidate.insert(candidate.end(), cell, cell + channel);
      }
    if (incumbent.empty() || candidate < incumbent)
      incumbent = std::move(candidate);
  }

  void dfs() {
    if (assign.size() == n) {
      leaf();
      return;
    }
    for (std::size_t s : visit_order) {
      if (used[s]) continue;
      used[s] = true;
      assign.push_back(s);
      if (!prefix_beaten()) dfs();
      assign.pop_back();
      used[s] = false;
    }
  }
};

}  // namespace

CanonResult canon_array(const DenseArray& x, const GroupSpec& spec,
                        CanonAlgo algo) {
  check_feasible(spec);
  CellView v = make_view(x, spec);
  if (spec.kind == GroupSpec::Kind::Joint) {
    // reuse the symmetry validation inside act()
    act(PermTuple::identity(std::span(&spec.joint_n, 1)), x, spec);
  }

  bool pruned_available =
      (spec.kind == GroupSpec::Kind::Separate && spec.dims.size() == 2) ||
      (spec.kind == GroupSpec::Kind::Joint && spec.acted_axes() == 2);
  bool use_pruned = algo == CanonAlgo::Pruned ||
                    (algo == CanonAlgo::Auto && pruned_available);
  if (algo == CanonAlgo::Pruned && !pruned_available)
    throw std::invalid_argument("canon_array: pruned search not implemented "
                                "for this spec");
  if (!use_pruned) return brute_canon(v, spec);

  std::vector<double> best;
  if (spec.kind == GroupSpec::Kind::Separate) {
    SeparatePruner pruner(v);
    pruner.dfs();
    best = std::move(pruner.incumbent);
  } else {
    JointPruner pruner(v);
    pruner.dfs();
    best = std::move(pruner.incumbent);
  }
  PermTuple witness = find_lexmin_witness(v, spec, best);
  return CanonResult{DenseArray(x.shape(), std::move(best)),
                     std::move(witness)};
}

std::size_t orbit_size(const DenseArray& x, const GroupSpec& spec) {
  check_feasible(spec);
  CellView v = make_view(x, spec);
  std::size_t stabilizer = 0;
  for_each_element(spec, [&](const PermTuple& g) {
    if (compare_acted(v, spec, g, x.data()) == 0) ++stabilizer;
  });
  return static_cast<std::size_t>(spec.order()) / stabilizer;
}

}  // namespace permsym
