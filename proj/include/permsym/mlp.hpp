#ifndef PERMSYM_MLP_HPP
#define PERMSYM_MLP_HPP

#include <cstddef>
#include <vector>

#include "permsym/dense_array.hpp"
#include "permsym/noise.hpp"

namespace permsym {

enum class Activation { Relu, Tanh, Identity };

/// Weights, biases, and activation of a small dense network.
///
/// weights[l] has shape {layer_sizes[l+1], layer_sizes[l]}; the activation is
/// applied after every affine layer except the last, which stays linear.
struct MlpParams {
  std::vector<std::size_t> layer_sizes;
  std::vector<DenseArray> weights;
  std::vector<DenseArray> biases;
  Activation activation = Activation::Identity;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return weights.size(); }
  std::size_t parameter_count() const;
};

/// Throws std::invalid_argument when layer dimensions and weight shapes disagree.
void validate_mlp(const MlpParams& p);

/// n-to-n single-layer identity map.
MlpParams identity_mlp(std::size_t n);

/// Single linear layer: out = W x + b.
MlpParams linear_mlp(const std::vector<std::vector<double>>& w,
                     const std::vector<double>& b);

/// Uniform(-scale, scale) initialization, deterministic in the source.
MlpParams random_mlp(std::vector<std::size_t> layer_sizes, Activation act,
                     NoiseSource src, double scale = 0.5);

std::vector<double> mlp_forward(const MlpParams& p,
                                std::span<const double> x);
DenseArray mlp_forward(const MlpParams& p, const DenseArray& x);

struct MlpGrads {
  std::vector<DenseArray> d_weights;
  std::vector<DenseArray> d_biases;
  std::vector<double> d_input;
};

/// Exact reverse-mode gradients of the forward map contracted with `upstream`.
MlpGrads mlp_backward(const MlpParams& p, std::span<const double> x,
                      std::span<const double> upstream);

struct GradReport {
  double max_rel_error = 0.0;
  std::size_t worst_parameter_index = 0;
  bool passed = false;
};

/// Compares mlp_backward of sum(forward(p, x)) against central finite
/// differences (h = 1e-5) over every weight and bias.
GradReport grad_check(const MlpParams& p, const DenseArray& x, double tol);

/// Flat parameter access, ordered (W0, b0, W1, b1, ...) row-major.
std::vector<double> mlp_flatten(const MlpParams& p);
void mlp_unflatten(MlpParams& p, std::span<const double> flat);
std::vector<double> grads_flatten(const MlpParams& p, const MlpGrads& g);

}  // namespace permsym

#endif
