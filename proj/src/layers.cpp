#include "permsym/layers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace permsym {

namespace {

// Substream tags keep the per-layer noise keys from colliding.
constexpr std::uint64_t kTagGlobal = 1;
constexpr std::uint64_t kTagPool = 2;
constexpr std::uint64_t kTagEdge = 3;
constexpr std::uint64_t kTagVertexRow = 4;
constexpr std::uint64_t kTagVertexCol = 5;
constexpr std::uint64_t kTagEntry = 6;
constexpr std::uint64_t kTagCell = 7;
constexpr std::uint64_t kTagLayer = 10;

double apply_activation(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Identity: return z;
  }
  return z;
}

std::vector<std::vector<double>> elements_of(const DenseArray& x) {
  if (x.rank() == 1) {
    std::vector<std::vector<double>> out;
    out.reserve(x.size());
    for (double v : x.data()) out.push_back({v});
    return out;
  }
  if (x.rank() == 2) {
    std::size_t n = x.shape()[0], k = x.shape()[1];
    std::vector<std::vector<double>> out(n);
    for (std::size_t i = 0; i < n; ++i)
      out[i].assign(x.data().begin() + i * k, x.data().begin() + (i + 1) * k);
    return out;
  }
  throw std::invalid_argument("set layer: input must be rank 1 or 2");
}

DenseArray seq_output(const std::vector<std::vector<double>>& per_element,
                      bool input_was_rank1) {
  std::size_t n = per_element.size();
  std::size_t out = per_element[0].size();
  if (out == 1 && input_was_rank1) {
    std::vector<double> flat(n);
    for (std::size_t i = 0; i < n; ++i) flat[i] = per_element[i][0];
    return DenseArray::vector(std::move(flat));
  }
  std::vector<double> flat;
  flat.reserve(n * out);
  for (const auto& row : per_element)
    flat.insert(flat.end(), row.begin(), row.end());
  return DenseArray({n, out}, std::move(flat));
}

double sum_values(std::vector<double> v, bool bitexact) {
  if (bitexact) std::sort(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc;
}

std::vector<double> sum_vectors(std::vector<std::vector<double>> vs,
                                bool bitexact) {
  if (bitexact) std::sort(vs.begin(), vs.end());
  std::vector<double> acc(vs[0].size(), 0.0);
  for (const auto& v : vs)
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += v[c];
  return acc;
}

std::vector<double> draw_from(const NoiseSource& src,
                              std::initializer_list<std::uint64_t> key,
                              std::size_t n) {
  return noise_draw(noise_fork(src, key), n);
}

std::size_t relabel(const Permutation* inv, std::size_t i) {
  return inv ? (*inv)(i) : i;
}

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned long long r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;  // exact: the running product is a binomial
    if (r > (1ull << 62)) return static_cast<std::size_t>(1ull << 62);
  }
  return static_cast<std::size_t>(r);
}

std::vector<double> pool(const std::vector<std::vector<double>>& embeddings,
                         Pooling tag, bool bitexact) {
  require(!embeddings.empty(), "pool: empty input");
  std::size_t dim = embeddings[0].size();
  for (const auto& e : embeddings)
    require(e.size() == dim, "pool: embedding size mismatch");
  switch (tag) {
    case Pooling::Sum:
      return sum_vectors(embeddings, bitexact);
    case Pooling::Mean: {
      auto s = sum_vectors(embeddings, bitexact);
      for (double& v : s) v /= static_cast<double>(embeddings.size());
      return s;
    }
    case Pooling::Max: {
      std::vector<double> acc = embeddings[0];
      for (std::size_t i = 1; i < embeddings.size(); ++i)
        for (std::size_t c = 0; c < dim; ++c)
          acc[c] = std::max(acc[c], embeddings[i][c]);
      return acc;
    }
    case Pooling::LogSumExp: {
      std::vector<double> out(dim);
      for (std::size_t c = 0; c < dim; ++c) {
        std::vector<double> col;
        col.reserve(embeddings.size());
        for (const auto& e : embeddings) col.push_back(e[c]);
        double m = *std::max_element(col.begin(), col.end());
        for (double& v : col) v = std::exp(v - m);
        out[c] = m + std::log(sum_values(std::move(col), bitexact));
      }
      return out;
    }
    case Pooling::UStat:
      throw std::invalid_argument("pool: ustat pooling needs pool_ustat");
  }
  throw std::invalid_argument("pool: bad tag");
}

UStatResult pool_ustat(const std::vector<std::vector<double>>& elements,
                       std::size_t k, const SubsetFn& phi_k, NoiseSource src,
                       std::size_t exact_limit, std::size_t sample_count,
                       bool bitexact) {
  std::size_t n = elements.size();
  require(n > 0, "pool_ustat: empty input");
  require(k >= 1 && k <= n, "pool_ustat: k out of range");
  std::size_t dim = elements[0].size();

  auto eval_subset = [&](std::vector<std::size_t> idx) {
    std::vector<std::vector<double>> subset;
    subset.reserve(k);
    for (std::size_t i : idx) subset.push_back(elements[i]);
    std::sort(subset.begin(), subset.end());
    std::vector<double> in;
    in.reserve(k * dim);
    for (const auto& e : subset) in.insert(in.end(), e.begin(), e.end());
    return phi_k(std::span<const double>(in));
  };

  UStatResult res;
  std::size_t total = binomial(n, k);
  res.subsets = total;
  std::vector<std::vector<double>> outputs;
  if (total <= exact_limit) {
    // lexicographic combination enumeration
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    bool more = true;
    while (more) {
      outputs.push_back(eval_subset(idx));
      more = false;
      for (std::size_t t = k; t-- > 0;) {
        if (idx[t] < n - k + t) {
          ++idx[t];
          for (std::size_t u = t + 1; u < k; ++u) idx[u] = idx[u - 1] + 1;
          more = true;
          break;
        }
      }
    }
  } else {
    res.sampled = true;
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t s = 0; s < sample_count; ++s) {
      std::vector<std::size_t> deck = all;
      for (std::size_t t = 0; t < k; ++t) {
        auto [j, next] = noise_below(src, n - t);
        src = next;
        std::swap(deck[t], deck[t + j]);
      }
      outputs.push_back(eval_subset({deck.begin(), deck.begin() + k}));
    }
  }
  res.value = sum_vectors(std::move(outputs), bitexact);
  double denom = res.sampled ? static_cast<double>(sample_count)
                             : static_cast<double>(total);
  for (double& v : res.value) v /= denom;
  return res;
}

UStatResult pool_ustat(const std::vector<std::vector<double>>& elements,
                       std::size_t k, const MlpParams& phi_k, NoiseSource src,
                       std::size_t exact_limit, std::size_t sample_count,
                       bool bitexact) {
  require(!elements.empty(), "pool_ustat: empty input");
  std::size_t dim = elements[0].size();
  require(phi_k.input_size() == k * dim, "pool_ustat: phi_k input size");
  SubsetFn fn = [&phi_k](std::span<const double> in) {
    return mlp_forward(phi_k, in);
  };
  return pool_ustat(elements, k, fn, src, exact_limit, sample_count, bitexact);
}

namespace {

std::vector<double> pooled_embedding(const SetLayerParams& p,
                                     const std::vector<std::vector<double>>& el,
                                     const NoiseSource& src) {
  if (p.pooling == Pooling::UStat) {
    return pool_ustat(el, p.ustat_k, p.phi, noise_fork(src, {kTagPool}),
                      100000, 10000, p.bitexact)
        .value;
  }
  std::vector<std::vector<double>> emb;
  emb.reserve(el.size());
  for (const auto& e : el)
    emb.push_back(mlp_forward(p.phi, std::span<const double>(e)));
  return pool(emb, p.pooling, p.bitexact);
}

}  // namespace

DenseArray invariant_set_layer(const SetLayerParams& p, const DenseArray& x,
                               NoiseSource src) {
  auto el = elements_of(x);
  require(!el.empty(), "invariant_set_layer: empty input");
  std::vector<double> pooled = pooled_embedding(p, el, src);
  std::vector<double> in = draw_from(src, {kTagGlobal}, p.noise_dims);
  in.insert(in.end(), pooled.begin(), pooled.end());
  require(p.rho.input_size() == in.size(),
          "invariant_set_layer: rho input size mismatch");
  return DenseArray::vector(mlp_forward(p.rho, std::span<const double>(in)));
}

DenseArray equivariant_set_layer(const SetLayerParams& p, const DenseArray& x,
                                 NoiseSource src, const Permutation* applied) {
  auto el = elements_of(x);
  require(!el.empty(), "equivariant_set_layer: empty input");
  std::optional<Permutation> inv;
  if (applied) inv = applied->inverse();
  std::vector<double> pooled = pooled_embedding(p, el, src);
  std::vector<std::vector<double>> out;
  out.reserve(el.size());
  for (std::size_t i = 0; i < el.size(); ++i) {
    std::uint64_t id = relabel(inv ? &*inv : nullptr, i);
    std::vector<double> in = draw_from(src, {kTagGlobal, id}, p.noise_dims);
    in.insert(in.end(), el[i].begin(), el[i].end());
    in.insert(in.end(), pooled.begin(), pooled.end());
    require(p.rho.input_size() == in.size(),
            "equivariant_set_layer: rho input size mismatch");
    out.push_back(mlp_forward(p.rho, std::span<const double>(in)));
  }
  return seq_output(out, x.rank() == 1);
}

SetLayerParams equivariant_linear_params(double theta0, double theta1) {
  SetLayerParams p;
  p.phi = identity_mlp(1);
  p.rho = linear_mlp({{theta0, theta1}}, {0.0});
  p.pooling = Pooling::Sum;
  return p;
}

SetLayerParams invariant_sum_params() {
  SetLayerParams p;
  p.phi = identity_mlp(1);
  p.rho = identity_mlp(1);
  p.pooling = Pooling::Sum;
  return p;
}

namespace {

struct MatrixSums {
  std::vector<double> row, col;
  double grand = 0.0;
};

MatrixSums matrix_sums(const DenseArray& x, bool bitexact) {
  std::size_t n1 = x.shape()[0], n2 = x.shape()[1];
  MatrixSums s;
  s.row.resize(n1);
  s.col.resize(n2);
  for (std::size_t i = 0; i < n1; ++i) {
    std::vector<double> vals(x.data().begin() + i * n2,
                             x.data().begin() + (i + 1) * n2);
    s.row[i] = sum_values(std::move(vals), bitexact);
  }
  for (std::size_t j = 0; j < n2; ++j) {
    std::vector<double> vals(n1);
    for (std::size_t i = 0; i < n1; ++i) vals[i] = x.at2(i, j);
    s.col[j] = sum_values(std::move(vals), bitexact);
  }
  s.grand = sum_values(x.data(), bitexact);
  return s;
}

void matrix_relabel(const PermTuple* applied, MatrixMode mode, std::size_t i,
                    std::size_t j, std::size_t& ri, std::size_t& rj) {
  ri = i;
  rj = j;
  if (!applied) return;
  if (mode == MatrixMode::Separate) {
    ri = applied->parts[0].inverse()(i);
    rj = applied->parts[1].inverse()(j);
  } else {
    ri = applied->parts[0].inverse()(i);
    rj = applied->parts[0].inverse()(j);
  }
}

}  // namespace

DenseArray exch_matrix_layer(const MatrixLayerParams& p, const DenseArray& x,
                             NoiseSource src, MatrixMode mode,
                             const PermTuple* applied) {
  require(x.rank() == 2, "exch_matrix_layer: rank-2 input required");
  if (mode == MatrixMode::Joint)
    require(x.is_symmetric(), "exch_matrix_layer: joint mode needs symmetry");
  if (p.mlp) {
    bool thetas_clear = std::all_of(p.thetas.begin(), p.thetas.end(),
                                    [](double t) { return t == 0.0; });
    require(thetas_clear,
            "exch_matrix_layer: exactly one of {thetas, mlp} may be active");
  }
  std::size_t n1 = x.shape()[0], n2 = x.shape()[1];
  MatrixSums s = matrix_sums(x, p.bitexact);

  DenseArray y = DenseArray::zeros({n1, n2});
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) {
      double v;
      if (!p.mlp) {
        v = p.thetas[0] + p.thetas[1] * x.at2(i, j) + p.thetas[2] * s.row[i] +
            p.thetas[3] * s.col[j] + p.thetas[4] * s.grand;
        v = apply_activation(p.activation, v);
      } else {
        std::size_t ri, rj;
        matrix_relabel(applied, mode, i, j, ri, rj);
        std::vector<double> in;
        if (p.use_noise) {
          std::uint64_t a = ri, b = rj;
          if (mode == MatrixMode::Joint && a > b) std::swap(a, b);
          in = draw_from(src, {kTagEntry, a, b}, 1);
        }
        in.insert(in.end(), {x.at2(i, j), s.row[i], s.col[j], s.grand});
        require(p.mlp->input_size() == in.size(),
                "exch_matrix_layer: mlp input size mismatch");
        v = mlp_forward(*p.mlp, std::span<const double>(in))[0];
      }
      y.at2(i, j) = v;
    }
  if (mode == MatrixMode::Joint)
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = i + 1; j < n2; ++j) {
        double m = 0.5 * (y.at2(i, j) + y.at2(j, i));
        y.at2(i, j) = m;
        y.at2(j, i) = m;
      }
  return y;
}

DenseArray exch_matrix_layer_maximal(const MlpParams& f, const DenseArray& x,
                                     NoiseSource src, bool use_noise,
                                     const PermTuple* applied) {
  require(x.rank() == 2, "exch_matrix_layer_maximal: rank-2 input required");
  std::size_t n1 = x.shape()[0], n2 = x.shape()[1];
  GroupSpec spec = GroupSpec::separate({n1, n2});
  DenseArray y = DenseArray::zeros({n1, n2});
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) {
      std::vector<std::size_t> idx{i, j};
      AugCanon aug = z_augment(x, idx, spec, 2);
      std::size_t ri, rj;
      matrix_relabel(applied, MatrixMode::Separate, i, j, ri, rj);
      std::vector<double> in;
      if (use_noise) in = draw_from(src, {kTagEntry, ri, rj}, 1);
      auto flat = aug.flatten();
      in.insert(in.end(), flat.begin(), flat.end());
      require(f.input_size() == in.size(),
              "exch_matrix_layer_maximal: mlp input size mismatch");
      y.at2(i, j) = mlp_forward(f, std::span<const double>(in))[0];
    }
  return y;
}

DenseArray exch_matrix_layer_maximal_joint(const MlpParams& f_off,
                                           const MlpParams& f_diag,
                                           const DenseArray& x,
                                           NoiseSource src, bool use_noise,
                                           const PermTuple* applied) {
  require(x.rank() == 2 && x.is_symmetric(),
          "exch_matrix_layer_maximal_joint: symmetric input required");
  std::size_t n = x.shape()[0];
  GroupSpec spec = GroupSpec::joint(n);
  DenseArray y = DenseArray::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      std::vector<std::size_t> idx{i, j};
      AugCanon aug = z_augment(x, idx, spec, 0);
      std::size_t ri, rj;
      matrix_relabel(applied, MatrixMode::Joint, i, j, ri, rj);
      std::uint64_t a = ri, b = rj;
      if (a > b) std::swap(a, b);
      std::vector<double> in;
      if (use_noise) in = draw_from(src, {kTagEntry, a, b}, 1);
      auto flat = aug.flatten();
      in.insert(in.end(), flat.begin(), flat.end());
      const MlpParams& f = i == j ? f_diag : f_off;
      require(f.input_size() == in.size(),
              "exch_matrix_layer_maximal_joint: mlp input size mismatch");
      double v = mlp_forward(f, std::span<const double>(in))[0];
      y.at2(i, j) = v;
      y.at2(j, i) = v;
    }
  return y;
}

DenseArray invariant_array_layer(const MlpParams& f, const DenseArray& x,
                                 const GroupSpec& spec, NoiseSource src,
                                 std::size_t noise_dims) {
  CanonResult canon = canon_array(x, spec);
  std::vector<double> in = draw_from(src, {kTagGlobal}, noise_dims);
  in.insert(in.end(), canon.canon.data().begin(), canon.canon.data().end());
  require(f.input_size() == in.size(),
          "invariant_array_layer: mlp input size mismatch");
  return DenseArray::vector(mlp_forward(f, std::span<const double>(in)));
}

std::pair<DenseArray, DenseArray> vertex_edge_layer(const VertexEdgeParams& p,
                                                    const DenseArray& xn,
                                                    const DenseArray& xsym,
                                                    NoiseSource src,
                                                    const Permutation* applied) {
  require(xsym.rank() == 2 && xsym.is_symmetric(),
          "vertex_edge_layer: symmetric matrix required");
  std::size_t n = xsym.shape()[0];
  require(xn.rank() == 1 && xn.size() == n,
          "vertex_edge_layer: vertex feature length mismatch");
  require(p.f_e.output_size() == 1, "vertex_edge_layer: f_e must be scalar");

  std::optional<Permutation> inv;
  if (applied) inv = applied->inverse();
  auto rid = [&](std::size_t i) {
    return relabel(inv ? &*inv : nullptr, i);
  };

  std::vector<double> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> vals(xsym.data().begin() + i * n,
                             xsym.data().begin() + (i + 1) * n);
    rows[i] = sum_values(std::move(vals), p.bitexact);
  }
  double grand = sum_values(xsym.data(), p.bitexact);
  double vsum = sum_values(xn.data(), p.bitexact);

  // stage one: edges, computed once per unordered pair
  DenseArray ysym = DenseArray::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      std::uint64_t a = rid(i), b = rid(j);
      if (a > b) std::swap(a, b);
      std::vector<double> in;
      if (p.edge_noise) in = draw_from(src, {kTagEdge, a, b}, 1);
      double lox = std::min(xn[i], xn[j]), hix = std::max(xn[i], xn[j]);
      double lor = std::min(rows[i], rows[j]), hir = std::max(rows[i], rows[j]);
      in.insert(in.end(), {xsym.at2(i, j), lox, hix, lor, hir, grand, vsum});
      require(p.f_e.input_size() == in.size(),
              "vertex_edge_layer: f_e input size mismatch");
      double v = mlp_forward(p.f_e, std::span<const double>(in))[0];
      ysym.at2(i, j) = v;
      ysym.at2(j, i) = v;
    }

  // stage two: vertices, pooling messages over the incident edges
  require(p.f_m.input_size() == 4, "vertex_edge_layer: f_m consumes "
                                   "(x_i, x_j, xbar_ij, ybar_ij)");
  std::vector<std::vector<double>> yn_rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::vector<double>> msgs(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> min{xn[i], xn[j], xsym.at2(i, j), ysym.at2(i, j)};
      msgs[j] = mlp_forward(p.f_m, std::span<const double>(min));
      if (p.gate_messages && !(xsym.at2(i, j) > 0.0))
        std::fill(msgs[j].begin(), msgs[j].end(), 0.0);
    }
    std::vector<double> pooled = sum_vectors(std::move(msgs), p.bitexact);
    std::vector<double> in;
    if (p.vertex_noise) in = draw_from(src, {kTagVertexRow, rid(i)}, 1);
    in.insert(in.end(), {xn[i], xsym.at2(i, i), ysym.at2(i, i)});
    in.insert(in.end(), pooled.begin(), pooled.end());
    require(p.f_v.input_size() == in.size(),
            "vertex_edge_layer: f_v input size mismatch");
    yn_rows[i] = mlp_forward(p.f_v, std::span<const double>(in));
  }
  return {seq_output(yn_rows, true), std::move(ysym)};
}

BipartiteOutput bipartite_feature_layer(const BipartiteLayerParams& p,
                                        const DenseArray& xrow,
                                        const DenseArray& xcol,
                                        const DenseArray& x, NoiseSource src,
                                        const PermTuple* applied) {
  require(x.rank() == 2, "bipartite_feature_layer: rank-2 matrix required");
  std::size_t n1 = x.shape()[0], n2 = x.shape()[1];
  require(xrow.rank() == 1 && xrow.size() == n1,
          "bipartite_feature_layer: row feature length mismatch");
  require(xcol.rank() == 1 && xcol.size() == n2,
          "bipartite_feature_layer: column feature length mismatch");
  require(p.f_e.output_size() == 1, "bipartite_feature_layer: f_e scalar");

  MatrixSums s = matrix_sums(x, p.bitexact);
  double sr = sum_values(xrow.data(), p.bitexact);
  double sc = sum_values(xcol.data(), p.bitexact);

  std::optional<Permutation> inv1, inv2;
  if (applied) {
    inv1 = applied->parts[0].inverse();
    inv2 = applied->parts[1].inverse();
  }
  auto rid1 = [&](std::size_t i) { return relabel(inv1 ? &*inv1 : nullptr, i); };
  auto rid2 = [&](std::size_t j) { return relabel(inv2 ? &*inv2 : nullptr, j); };

  DenseArray y = DenseArray::zeros({n1, n2});
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) {
      std::vector<double> in;
      if (p.edge_noise) in = draw_from(src, {kTagEdge, rid1(i), rid2(j)}, 1);
      in.insert(in.end(), {x.at2(i, j), xrow[i], xcol[j], s.row[i], s.col[j],
                           s.grand, sr, sc});
      require(p.f_e.input_size() == in.size(),
              "bipartite_feature_layer: f_e input size mismatch");
      y.at2(i, j) = mlp_forward(p.f_e, std::span<const double>(in))[0];
    }

  MatrixSums sy = matrix_sums(y, p.bitexact);
  std::vector<std::vector<double>> yr(n1), yc(n2);
  for (std::size_t i = 0; i < n1; ++i) {
    std::vector<double> in;
    if (p.vertex_noise) in = draw_from(src, {kTagVertexRow, rid1(i)}, 1);
    in.insert(in.end(), {xrow[i], s.row[i], sy.row[i], s.grand, sy.grand, sr,
                         sc});
    require(p.f_v1.input_size() == in.size(),
            "bipartite_feature_layer: f_v1 input size mismatch");
    yr[i] = mlp_forward(p.f_v1, std::span<const double>(in));
  }
  for (std::size_t j = 0; j < n2; ++j) {
    std::vector<double> in;
    if (p.vertex_noise) in = draw_from(src, {kTagVertexCol, rid2(j)}, 1);
    in.insert(in.end(), {xcol[j], s.col[j], sy.col[j], s.grand, sy.grand, sr,
                         sc});
    require(p.f_v2.input_size() == in.size(),
            "bipartite_feature_layer: f_v2 input size mismatch");
    yc[j] = mlp_forward(p.f_v2, std::span<const double>(in));
  }
  return {seq_output(yr, true), seq_output(yc, true), std::move(y)};
}

DenseArray darray_layer(const DarrayLayerParams& p, const DenseArray& x,
                        NoiseSource src, const PermTuple* applied) {
  std::size_t d = x.rank();
  require(d >= 1 && d <= 4, "darray_layer: rank must be 1..4");
  for (std::size_t e : x.shape())
    require(e <= 6, "darray_layer: axis extent above desk scale");
  std::size_t n_masks = std::size_t{1} << d;
  if (!p.mlp)
    require(p.theta.size() == n_masks,
            "darray_layer: theta needs one entry per axis subset");

  // pooled[mask]: sums over the axes outside mask, indexed by the kept
  // coordinates in axis order
  std::vector<std::vector<double>> pooled(n_masks);
  std::vector<std::vector<std::vector<double>>> buckets(n_masks);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    std::size_t kept = 1;
    for (std::size_t k = 0; k < d; ++k)
      if ((mask >> k) & 1u) kept *= x.shape()[k];
    buckets[mask].assign(kept, {});
  }
  std::vector<std::size_t> idx(d);
  for (std::size_t flat = 0; flat < x.size(); ++flat) {
    std::size_t rem = flat;
    for (std::size_t k = d; k-- > 0;) {
      idx[k] = rem % x.shape()[k];
      rem /= x.shape()[k];
    }
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      std::size_t key = 0;
      for (std::size_t k = 0; k < d; ++k)
        if ((mask >> k) & 1u) key = key * x.shape()[k] + idx[k];
      buckets[mask][key].push_back(x[flat]);
    }
  }
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    pooled[mask].reserve(buckets[mask].size());
    for (auto& vals : buckets[mask])
      pooled[mask].push_back(sum_values(std::move(vals), p.bitexact));
  }

  std::vector<std::optional<Permutation>> inv(d);
  if (applied)
    for (std::size_t k = 0; k < d; ++k) inv[k] = applied->parts[k].inverse();

  DenseArray y = DenseArray::zeros(x.shape());
  for (std::size_t flat = 0; flat < x.size(); ++flat) {
    std::size_t rem = flat;
    for (std::size_t k = d; k-- > 0;) {
      idx[k] = rem % x.shape()[k];
      rem /= x.shape()[k];
    }
    std::vector<double> feats(n_masks);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      std::size_t key = 0;
      for (std::size_t k = 0; k < d; ++k)
        if ((mask >> k) & 1u) key = key * x.shape()[k] + idx[k];
      feats[mask] = pooled[mask][key];
    }
    double v;
    if (!p.mlp) {
      // accumulate most-specific subsets first (the entry term leads, the
      // grand sum closes), matching the matrix layer's evaluation order so
      // the d = 2 case agrees with exch_matrix_layer bit for bit
      v = p.bias;
      for (std::size_t pc = d + 1; pc-- > 0;)
        for (std::size_t mask = 0; mask < n_masks; ++mask)
          if (static_cast<std::size_t>(std::popcount(mask)) == pc)
            v += p.theta[mask] * feats[mask];
      v = apply_activation(p.activation, v);
    } else {
      std::vector<double> in;
      if (p.use_noise) {
        std::vector<std::uint64_t> key{kTagCell};
        for (std::size_t k = 0; k < d; ++k)
          key.push_back(inv[k] ? (*inv[k])(idx[k]) : idx[k]);
        in = noise_draw(noise_fork(src, key), 1);
      }
      in.insert(in.end(), feats.begin(), feats.end());
      require(p.mlp->input_size() == in.size(),
              "darray_layer: mlp input size mismatch");
      v = mlp_forward(*p.mlp, std::span<const double>(in))[0];
    }
    y[flat] = v;
  }
  return y;
}

TauResult tau_equivariant_apply(const MlpParams& b, const DenseArray& x,
                                NoiseSource src, std::size_t noise_dims) {
  require(x.rank() == 1, "tau_equivariant_apply: rank-1 input required");
  std::size_t n = x.size();
  SortResult sr = sort_tau(std::span<const double>(x.data()));
  require(b.input_size() == noise_dims + n,
          "tau_equivariant_apply: b input size mismatch");
  require(b.output_size() == n,
          "tau_equivariant_apply: b output size mismatch");

  std::vector<double> in = draw_from(src, {kTagGlobal}, noise_dims);
  in.insert(in.end(), sr.rep.begin(), sr.rep.end());
  std::vector<double> z = mlp_forward(b, std::span<const double>(in));

  TauResult out;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (sr.rep[i] == sr.rep[i + 1]) out.tie_warning = true;
  Permutation tau_inv = sr.tau.inverse();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = z[tau_inv(i)];
  out.y = DenseArray::vector(std::move(y));
  return out;
}

LayerDesc LayerDesc::equivariant(SetLayerParams p) {
  LayerDesc d;
  d.kind = Kind::EquivariantSet;
  d.set = std::move(p);
  return d;
}

LayerDesc LayerDesc::invariant(SetLayerParams p) {
  LayerDesc d;
  d.kind = Kind::InvariantSet;
  d.set = std::move(p);
  return d;
}

LayerDesc LayerDesc::tau(MlpParams b, std::size_t noise_dims) {
  LayerDesc d;
  d.kind = Kind::TauApply;
  d.tau_b = std::move(b);
  d.tau_noise_dims = noise_dims;
  return d;
}

void validate_stack(const LayerStack& s) {
  require(!s.layers.empty(), "stack: empty");
  for (std::size_t l = 0; l < s.layers.size(); ++l)
    if (s.layers[l].kind == LayerDesc::Kind::InvariantSet)
      require(l + 1 == s.layers.size(),
              "stack: an invariant layer must be last");
}

DenseArray stack_forward(const LayerStack& s, const DenseArray& x,
                         NoiseSource src, const Permutation* applied) {
  validate_stack(s);
  DenseArray h = x;
  for (std::size_t l = 0; l < s.layers.size(); ++l) {
    NoiseSource layer_src = noise_fork(src, {kTagLayer, l});
    const LayerDesc& desc = s.layers[l];
    switch (desc.kind) {
      case LayerDesc::Kind::EquivariantSet:
        h = equivariant_set_layer(desc.set, h, layer_src, applied);
        break;
      case LayerDesc::Kind::InvariantSet:
        h = invariant_set_layer(desc.set, h, layer_src);
        break;
      case LayerDesc::Kind::TauApply:
        h = tau_equivariant_apply(desc.tau_b, h, layer_src,
                                  desc.tau_noise_dims)
                .y;
        break;
    }
  }
  return h;
}

}  // namespace permsym
