#ifndef PERMSYM_TRAIN_HPP
#define PERMSYM_TRAIN_HPP

#include <cstddef>
#include <vector>

#include "permsym/layers.hpp"
#include "permsym/noise.hpp"

namespace permsym {

struct Dataset {
  std::vector<DenseArray> inputs;
  std::vector<double> targets;
};

enum class SetTask { Mean, Sum, Max, Variance };

/// Sets of `set_size` Unif[0,1] scalars with the task statistic as target.
Dataset make_set_dataset(SetTask task, std::size_t count, std::size_t set_size,
                         NoiseSource src);

/// Unif[0,1] matrices with the grand sum as regression target.
Dataset make_matrix_dataset(std::size_t count, std::size_t n1, std::size_t n2,
                            NoiseSource src);

struct TrainConfig {
  std::size_t epochs = 30;
  double lr = 0.05;
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::vector<double> loss_trace;  // mean squared error per epoch
  double final_train_mse = 0.0;
  double test_mse = 0.0;
};

/// Plain SGD on squared error through a deterministic stack (equivariant set
/// layers followed by an invariant head, all with noise_dims == 0).
/// Deterministic given the seed; throws std::runtime_error on divergence
/// (NaN loss). Zero epochs leaves the parameters untouched.
TrainResult sgd_train(LayerStack& stack, const Dataset& train,
                      const Dataset& test, const TrainConfig& cfg);

/// SGD on the linear exchangeable-matrix layer with a mean-pooled readout.
TrainResult sgd_train_matrix(MatrixLayerParams& params, const Dataset& train,
                             const Dataset& test, const TrainConfig& cfg);

/// Stock architectures for the synthetic tasks.
LayerStack deep_sets_stack(SetTask task, NoiseSource init);

double stack_mse(const LayerStack& stack, const Dataset& data);

}  // namespace permsym

#endif
