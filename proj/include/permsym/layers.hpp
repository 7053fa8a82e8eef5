#ifndef PERMSYM_LAYERS_HPP
#define PERMSYM_LAYERS_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "permsym/dense_array.hpp"
#include "permsym/invariants.hpp"
#include "permsym/mlp.hpp"
#include "permsym/noise.hpp"
#include "permsym/perm.hpp"

namespace permsym {

// Stochastic layers draw their noise from index-keyed substreams, so a layer
// is a deterministic function of (params, input, source). Equivariance is a
// pointwise contract: permuting the input while co-permuting the noise index
// assignment permutes the output. Layer entry points accept the group element
// already applied to the input (`applied`); position i then draws the noise
// of the position it came from. Sums reassociate under permutation, so
// outputs agree to ~1e-9 relative by default; `bitexact` pools in sorted
// order, which makes the agreement bitwise.

enum class Pooling { Sum, Max, Mean, LogSumExp, UStat };

/// Componentwise pooling of equal-length embeddings. Empty input is an error.
std::vector<double> pool(const std::vector<std::vector<double>>& embeddings,
                         Pooling tag, bool bitexact = false);

struct UStatResult {
  std::vector<double> value;
  bool sampled = false;
  std::size_t subsets = 0;
};

/// Function of one k-subset, fed as the concatenated elements.
using SubsetFn =
    std::function<std::vector<double>(std::span<const double>)>;

/// Average of phi_k over k-element subsets, each subset fed in ascending
/// value order (so a non-symmetric phi_k still yields a permutation-invariant
/// statistic). Exact enumeration while C(n, k) <= exact_limit, otherwise
/// `sample_count` uniformly sampled subsets.
UStatResult pool_ustat(const std::vector<std::vector<double>>& elements,
                       std::size_t k, const SubsetFn& phi_k, NoiseSource src,
                       std::size_t exact_limit = 100000,
                       std::size_t sample_count = 10000,
                       bool bitexact = false);
UStatResult pool_ustat(const std::vector<std::vector<double>>& elements,
                       std::size_t k, const MlpParams& phi_k, NoiseSource src,
                       std::size_t exact_limit = 100000,
                       std::size_t sample_count = 10000,
                       bool bitexact = false);

std::size_t binomial(std::size_t n, std::size_t k);

/// Deep-Sets style layer: phi embeds elements, a symmetric pooling collapses
/// them, rho produces the output.
struct SetLayerParams {
  MlpParams phi;
  MlpParams rho;
  Pooling pooling = Pooling::Sum;
  std::size_t ustat_k = 2;
  std::size_t noise_dims = 0;
  bool bitexact = false;
};

/// Y = rho(eta, pool(phi(x_i))). Invariant under input permutation.
DenseArray invariant_set_layer(const SetLayerParams& p, const DenseArray& x,
                               NoiseSource src);

/// Y_i = rho(eta_i, x_i, pool(phi(x_j))).
DenseArray equivariant_set_layer(const SetLayerParams& p, const DenseArray& x,
                                 NoiseSource src,
                                 const Permutation* applied = nullptr);

/// Y_i = theta0 * x_i + theta1 * sum_j x_j, as a SetLayerParams instance.
SetLayerParams equivariant_linear_params(double theta0, double theta1);
/// Y = sum_i x_i (identity phi and rho, sum pooling).
SetLayerParams invariant_sum_params();

enum class MatrixMode { Separate, Joint };

/// Exchangeable matrix layer. The linear form is
///   Y_ij = sigma(theta0 + theta1 X_ij + theta2 row_i + theta3 col_j
///               + theta4 grand);
/// the general form runs `mlp` on [eta?, X_ij, row_i, col_j, grand].
/// Exactly one of {thetas, mlp} is active. Joint mode requires a symmetric
/// input, shares noise across (i, j)/(j, i), and averages the output with its
/// transpose so the symmetry invariant survives asymmetric parameters.
struct MatrixLayerParams {
  std::array<double, 5> thetas{};
  std::optional<MlpParams> mlp;
  Activation activation = Activation::Identity;
  bool use_noise = false;
  bool bitexact = false;
};

DenseArray exch_matrix_layer(const MatrixLayerParams& p, const DenseArray& x,
                             NoiseSource src, MatrixMode mode,
                             const PermTuple* applied = nullptr);

/// Maximal-statistic variants: the conditioning statistic is the augmented
/// canonical form around each entry, flattened into the MLP input
/// [eta?, center, canonized remainder...]. Canonization-feasible sizes only.
DenseArray exch_matrix_layer_maximal(const MlpParams& f, const DenseArray& x,
                                     NoiseSource src, bool use_noise,
                                     const PermTuple* applied = nullptr);
/// Joint variant; diagonal entries condition on a differently-shaped
/// statistic and use their own head.
DenseArray exch_matrix_layer_maximal_joint(const MlpParams& f_off,
                                           const MlpParams& f_diag,
                                           const DenseArray& x,
                                           NoiseSource src, bool use_noise,
                                           const PermTuple* applied = nullptr);

/// Invariant array head: f(eta, canonical form of x), exactly invariant.
DenseArray invariant_array_layer(const MlpParams& f, const DenseArray& x,
                                 const GroupSpec& spec, NoiseSource src,
                                 std::size_t noise_dims = 0);

/// Two-stage layer on a symmetric matrix with vertex features.
/// Edges first:   Ybar_ij = f_e(eta_ij?, Xbar_ij, lo/hi{X_i, X_j},
///                              lo/hi{row_i, row_j}, grand, vertex_sum)
/// then vertices: Y_i = f_v(eta_i?, X_i, Xbar_ii, Ybar_ii, sum_j msg_ij)
/// with msg_ij = [gate] * f_m(X_i, X_j, Xbar_ij, Ybar_ij); the optional gate
/// is the indicator Xbar_ij > 0 (message passing on weighted graphs).
struct VertexEdgeParams {
  MlpParams f_e;
  MlpParams f_m;
  MlpParams f_v;
  bool edge_noise = false;
  bool vertex_noise = false;
  bool gate_messages = false;
  bool bitexact = false;
};

std::pair<DenseArray, DenseArray> vertex_edge_layer(
    const VertexEdgeParams& p, const DenseArray& xn, const DenseArray& xsym,
    NoiseSource src, const Permutation* applied = nullptr);

/// Three-stage layer on a bipartite feature array (row features, column
/// features, matrix), equivariant under S_{n1} x S_{n2}.
struct BipartiteLayerParams {
  MlpParams f_e;   // [eta?, X_ij, xr_i, xc_j, row_i, col_j, grand, sr, sc]
  MlpParams f_v1;  // [eta?, xr_i, row_i(X), row_i(Y), grand(X), grand(Y), sr, sc]
  MlpParams f_v2;  // [eta?, xc_j, col_j(X), col_j(Y), grand(X), grand(Y), sr, sc]
  bool edge_noise = false;
  bool vertex_noise = false;
  bool bitexact = false;
};

struct BipartiteOutput {
  DenseArray yrow;
  DenseArray ycol;
  DenseArray y;
};

BipartiteOutput bipartite_feature_layer(const BipartiteLayerParams& p,
                                        const DenseArray& xrow,
                                        const DenseArray& xcol,
                                        const DenseArray& x, NoiseSource src,
                                        const PermTuple* applied = nullptr);

/// d-array layer with one coefficient per axis subset: theta[mask] multiplies
/// the sum of x over the axes outside `mask` (mask = all axes gives X_i, the
/// empty mask the grand sum), broadcast back to each position:
///   Y_i = sigma(bias + sum_mask theta[mask] * pooled_mask(i)).
/// The general form runs `mlp` on [eta?, pooled_0(i), ..., pooled_{2^d-1}(i)].
struct DarrayLayerParams {
  std::vector<double> theta;  // size 2^d
  double bias = 0.0;
  std::optional<MlpParams> mlp;
  Activation activation = Activation::Identity;
  bool use_noise = false;
  bool bitexact = false;
};

DenseArray darray_layer(const DarrayLayerParams& p, const DenseArray& x,
                        NoiseSource src, const PermTuple* applied = nullptr);

/// Representative-equivariant constructor: y = act(tau, b(eta, rep)) with
/// (tau, rep) = sort_tau(x). Exactly equivariant on distinct-entry inputs
/// with shared noise; ties void the pointwise guarantee and set the flag.
struct TauResult {
  DenseArray y;
  bool tie_warning = false;
};

TauResult tau_equivariant_apply(const MlpParams& b, const DenseArray& x,
                                NoiseSource src, std::size_t noise_dims = 0);

/// Sequence-domain layer stack; equivariant layers compose, an invariant
/// layer may close the stack. Per-layer noise substreams are disjoint.
struct LayerDesc {
  enum class Kind { EquivariantSet, InvariantSet, TauApply };
  Kind kind = Kind::EquivariantSet;
  SetLayerParams set;
  MlpParams tau_b;
  std::size_t tau_noise_dims = 0;

  static LayerDesc equivariant(SetLayerParams p);
  static LayerDesc invariant(SetLayerParams p);
  static LayerDesc tau(MlpParams b, std::size_t noise_dims = 0);
};

struct LayerStack {
  std::vector<LayerDesc> layers;
};

void validate_stack(const LayerStack& s);
DenseArray stack_forward(const LayerStack& s, const DenseArray& x,
                         NoiseSource src,
                         const Permutation* applied = nullptr);

}  // namespace permsym

#endif
