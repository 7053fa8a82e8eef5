#include "permsym/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace permsym {

Dataset make_set_dataset(SetTask task, std::size_t count, std::size_t set_size,
                         NoiseSource src) {
  Dataset d;
  d.inputs.reserve(count);
  d.targets.reserve(count);
  for (std::size_t e = 0; e < count; ++e) {
    NoiseSource row = noise_fork(src, {e});
    std::vector<double> x(set_size);
    for (std::size_t i = 0; i < set_size; ++i) {
      auto [u, next] = noise_next(row);
      row = next;
      x[i] = u;
    }
    double mean = std::accumulate(x.begin(), x.end(), 0.0) /
                  static_cast<double>(set_size);
    double target = 0.0;
    switch (task) {
      case SetTask::Mean: target = mean; break;
      case SetTask::Sum:
        target = std::accumulate(x.begin(), x.end(), 0.0);
        break;
      case SetTask::Max:
        target = *std::max_element(x.begin(), x.end());
        break;
      case SetTask::Variance: {
        double ss = 0.0;
        for (double v : x) ss += (v - mean) * (v - mean);
        target = ss / static_cast<double>(set_size - 1);
        break;
      }
    }
    d.inputs.push_back(DenseArray::vector(std::move(x)));
    d.targets.push_back(target);
  }
  return d;
}

Dataset make_matrix_dataset(std::size_t count, std::size_t n1, std::size_t n2,
                            NoiseSource src) {
  Dataset d;
  d.inputs.reserve(count);
  for (std::size_t e = 0; e < count; ++e) {
    NoiseSource row = noise_fork(src, {e});
    DenseArray x = DenseArray::zeros({n1, n2});
    double grand = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto [u, next] = noise_next(row);
      row = next;
      x[i] = u;
      grand += u;
    }
    d.inputs.push_back(std::move(x));
    d.targets.push_back(grand);
  }
  return d;
}

namespace {

// Forward pass with everything backward needs. Training runs the stack
// deterministically (noise_dims must be zero throughout).
struct LayerCache {
  std::vector<std::vector<double>> elements;
  std::vector<std::vector<double>> embeddings;   // per element (non-ustat)
  std::vector<double> pooled;
  std::vector<std::vector<double>> rho_inputs;   // per position; single entry
                                                 // for the invariant head
  std::vector<std::vector<double>> outputs;
  // ustat bookkeeping: the ordered original indices and inputs per subset
  std::vector<std::vector<std::size_t>> subset_order;
  std::vector<std::vector<double>> subset_inputs;
};

std::vector<std::vector<double>> to_elements(const DenseArray& x) {
  std::vector<std::vector<double>> out;
  if (x.rank() == 1) {
    for (double v : x.data()) out.push_back({v});
    return out;
  }
  std::size_t n = x.shape()[0], k = x.shape()[1];
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i].assign(x.data().begin() + i * k, x.data().begin() + (i + 1) * k);
  return out;
}

void check_trainable(const SetLayerParams& p) {
  if (p.noise_dims != 0)
    throw std::invalid_argument("sgd_train: stochastic layers are not "
                                "trainable; set noise_dims = 0");
  switch (p.pooling) {
    case Pooling::Sum:
    case Pooling::Mean:
    case Pooling::Max:
    case Pooling::UStat:
      return;
    case Pooling::LogSumExp:
      throw std::invalid_argument("sgd_train: logsumexp pooling untrained");
  }
}

LayerCache forward_set_layer(const SetLayerParams& p,
                             const std::vector<std::vector<double>>& elements,
                             bool invariant) {
  LayerCache c;
  c.elements = elements;
  std::size_t n = elements.size();
  if (p.pooling == Pooling::UStat) {
    std::size_t k = p.ustat_k;
    if (k < 1 || k > n)
      throw std::invalid_argument("sgd_train: ustat k out of range");
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    bool more = true;
    std::vector<double> acc(p.phi.output_size(), 0.0);
    while (more) {
      std::vector<std::size_t> order = idx;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) {
                  return elements[a] < elements[b];
                });
      std::vector<double> in;
      for (std::size_t i : order)
        in.insert(in.end(), elements[i].begin(), elements[i].end());
      std::vector<double> out = mlp_forward(p.phi, std::span<const double>(in));
      for (std::size_t u = 0; u < acc.size(); ++u) acc[u] += out[u];
      c.subset_order.push_back(std::move(order));
      c.subset_inputs.push_back(std::move(in));
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
    double denom = static_cast<double>(c.subset_order.size());
    for (double& v : acc) v /= denom;
    c.pooled = std::move(acc);
  } else {
    for (const auto& e : elements)
      c.embeddings.push_back(
          mlp_forward(p.phi, std::span<const double>(e)));
    std::vector<double> acc = c.embeddings[0];
    if (p.pooling == Pooling::Max) {
      for (std::size_t i = 1; i < n; ++i)
        for (std::size_t u = 0; u < acc.size(); ++u)
          acc[u] = std::max(acc[u], c.embeddings[i][u]);
    } else {
      for (std::size_t i = 1; i < n; ++i)
        for (std::size_t u = 0; u < acc.size(); ++u)
          acc[u] += c.embeddings[i][u];
      if (p.pooling == Pooling::Mean)
        for (double& v : acc) v /= static_cast<double>(n);
    }
    c.pooled = std::move(acc);
  }

  if (invariant) {
    c.rho_inputs.push_back(c.pooled);
    c.outputs.push_back(
        mlp_forward(p.rho, std::span<const double>(c.rho_inputs[0])));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> in = elements[i];
      in.insert(in.end(), c.pooled.begin(), c.pooled.end());
      c.outputs.push_back(mlp_forward(p.rho, std::span<const double>(in)));
      c.rho_inputs.push_back(std::move(in));
    }
  }
  return c;
}

struct LayerGrads {
  std::vector<double> d_phi;
  std::vector<double> d_rho;
};

// Backward through one set layer; returns gradients w.r.t. the layer inputs.
std::vector<std::vector<double>> backward_set_layer(
    const SetLayerParams& p, const LayerCache& c,
    const std::vector<std::vector<double>>& upstream, bool invariant,
    LayerGrads& grads) {
  std::size_t n = c.elements.size();
  std::size_t elem_dim = c.elements[0].size();
  std::vector<double> d_pooled(c.pooled.size(), 0.0);
  std::vector<std::vector<double>> d_elements(
      n, std::vector<double>(elem_dim, 0.0));
  grads.d_phi.assign(p.phi.parameter_count(), 0.0);
  grads.d_rho.assign(p.rho.parameter_count(), 0.0);

  auto accumulate = [](std::vector<double>& into,
                       const std::vector<double>& from) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
  };

  if (invariant) {
    MlpGrads rg = mlp_backward(p.rho, std::span<const double>(c.rho_inputs[0]),
                               std::span<const double>(upstream[0]));
    accumulate(grads.d_rho, grads_flatten(p.rho, rg));
    d_pooled = rg.d_input;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      MlpGrads rg =
          mlp_backward(p.rho, std::span<const double>(c.rho_inputs[i]),
                       std::span<const double>(upstream[i]));
      accumulate(grads.d_rho, grads_flatten(p.rho, rg));
      for (std::size_t u = 0; u < elem_dim; ++u)
        d_elements[i][u] += rg.d_input[u];
      for (std::size_t u = 0; u < d_pooled.size(); ++u)
        d_pooled[u] += rg.d_input[elem_dim + u];
    }
  }

  if (p.pooling == Pooling::UStat) {
    double denom = static_cast<double>(c.subset_order.size());
    std::vector<double> per_subset = d_pooled;
    for (double& v : per_subset) v /= denom;
    for (std::size_t s = 0; s < c.subset_order.size(); ++s) {
      MlpGrads pg =
          mlp_backward(p.phi, std::span<const double>(c.subset_inputs[s]),
                       std::span<const double>(per_subset));
      accumulate(grads.d_phi, grads_flatten(p.phi, pg));
      const auto& order = c.subset_order[s];
      for (std::size_t t = 0; t < order.size(); ++t)
        for (std::size_t u = 0; u < elem_dim; ++u)
          d_elements[order[t]][u] += pg.d_input[t * elem_dim + u];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> de(c.pooled.size(), 0.0);
      switch (p.pooling) {
        case Pooling::Sum: de = d_pooled; break;
        case Pooling::Mean:
          de = d_pooled;
          for (double& v : de) v /= static_cast<double>(n);
          break;
        case Pooling::Max:
          for (std::size_t u = 0; u < de.size(); ++u) {
            // subgradient: the first element achieving the max
            std::size_t arg = 0;
            for (std::size_t j = 1; j < n; ++j)
              if (c.embeddings[j][u] > c.embeddings[arg][u]) arg = j;
            if (arg == i) de[u] = d_pooled[u];
          }
          break;
        default: break;
      }
      MlpGrads pg = mlp_backward(p.phi, std::span<const double>(c.elements[i]),
                                 std::span<const double>(de));
      accumulate(grads.d_phi, grads_flatten(p.phi, pg));
      for (std::size_t u = 0; u < elem_dim; ++u)
        d_elements[i][u] += pg.d_input[u];
    }
  }
  return d_elements;
}

void sgd_step(MlpParams& p, std::span<const double> grad, double lr) {
  std::vector<double> theta = mlp_flatten(p);
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
  mlp_unflatten(p, theta);
}

double stack_predict(const LayerStack& stack, const DenseArray& x) {
  DenseArray out = stack_forward(stack, x, NoiseSource{0, 0, 0});
  if (out.size() != 1)
    throw std::invalid_argument("sgd_train: scalar-output stacks only");
  return out[0];
}

}  // namespace

double stack_mse(const LayerStack& stack, const Dataset& data) {
  double acc = 0.0;
  for (std::size_t e = 0; e < data.inputs.size(); ++e) {
    double err = stack_predict(stack, data.inputs[e]) - data.targets[e];
    acc += err * err;
  }
  return acc / static_cast<double>(data.inputs.size());
}

TrainResult sgd_train(LayerStack& stack, const Dataset& train,
                      const Dataset& test, const TrainConfig& cfg) {
  validate_stack(stack);
  if (stack.layers.back().kind != LayerDesc::Kind::InvariantSet)
    throw std::invalid_argument("sgd_train: the stack must end invariant");
  for (const auto& l : stack.layers) {
    if (l.kind == LayerDesc::Kind::TauApply)
      throw std::invalid_argument("sgd_train: tau layers are not trainable");
    check_trainable(l.set);
  }
  if (train.inputs.empty())
    throw std::invalid_argument("sgd_train: empty training set");

  TrainResult res;
  NoiseSource shuffle_src{cfg.seed, 0xD1CE, 0};
  std::vector<std::size_t> order(train.inputs.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) {
      auto [j, next] = noise_below(shuffle_src, i + 1);
      shuffle_src = next;
      std::swap(order[i], order[j]);
    }
    std::vector<double> sq_err(train.inputs.size(), 0.0);
    for (std::size_t e : order) {
      // forward through every layer, caching
      std::vector<LayerCache> caches;
      std::vector<std::vector<double>> h = to_elements(train.inputs[e]);
      for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        bool inv = stack.layers[l].kind == LayerDesc::Kind::InvariantSet;
        caches.push_back(forward_set_layer(stack.layers[l].set, h, inv));
        if (!inv) h = caches.back().outputs;
      }
      double pred = caches.back().outputs[0][0];
      double err = pred - train.targets[e];
      sq_err[e] = err * err;

      // backward
      std::vector<std::vector<double>> upstream{{2.0 * err}};
      for (std::size_t l = stack.layers.size(); l-- > 0;) {
        bool inv = stack.layers[l].kind == LayerDesc::Kind::InvariantSet;
        LayerGrads g;
        upstream = backward_set_layer(stack.layers[l].set, caches[l], upstream,
                                      inv, g);
        sgd_step(stack.layers[l].set.phi, g.d_phi, cfg.lr);
        sgd_step(stack.layers[l].set.rho, g.d_rho, cfg.lr);
      }
    }
    // summed in example order so the trace is reproducible under lr = 0
    double epoch_loss = 0.0;
    for (double v : sq_err) epoch_loss += v;
    epoch_loss /= static_cast<double>(train.inputs.size());
    if (!std::isfinite(epoch_loss))
      throw std::runtime_error("sgd_train: training diverged (non-finite "
                               "loss)");
    res.loss_trace.push_back(epoch_loss);
  }
  res.final_train_mse = stack_mse(stack, train);
  res.test_mse = test.inputs.empty() ? 0.0 : stack_mse(stack, test);
  return res;
}

TrainResult sgd_train_matrix(MatrixLayerParams& params, const Dataset& train,
                             const Dataset& test, const TrainConfig& cfg) {
  if (params.mlp)
    throw std::invalid_argument("sgd_train_matrix: linear thetas only");
  if (params.activation != Activation::Identity)
    throw std::invalid_argument("sgd_train_matrix: identity activation only");

  auto predict = [&](const DenseArray& x) {
    DenseArray y = exch_matrix_layer(params, x, NoiseSource{0, 0, 0},
                                     MatrixMode::Separate);
    double acc = 0.0;
    for (double v : y.data()) acc += v;
    return acc / static_cast<double>(y.size());
  };
  auto mse = [&](const Dataset& d) {
    double acc = 0.0;
    for (std::size_t e = 0; e < d.inputs.size(); ++e) {
      double err = predict(d.inputs[e]) - d.targets[e];
      acc += err * err;
    }
    return acc / static_cast<double>(d.inputs.size());
  };

  TrainResult res;
  NoiseSource shuffle_src{cfg.seed, 0xD1CE, 0};
  std::vector<std::size_t> order(train.inputs.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) {
      auto [j, next] = noise_below(shuffle_src, i + 1);
      shuffle_src = next;
      std::swap(order[i], order[j]);
    }
    std::vector<double> sq_err(train.inputs.size(), 0.0);
    for (std::size_t e : order) {
      const DenseArray& x = train.inputs[e];
      std::size_t n1 = x.shape()[0], n2 = x.shape()[1];
      double cells = static_cast<double>(n1 * n2);
      double grand = 0.0;
      for (double v : x.data()) grand += v;
      // mean-pooled prediction is linear in the thetas
      double mean_x = grand / cells;
      double feat_row = grand / static_cast<double>(n1);
      double feat_col = grand / static_cast<double>(n2);
      double pred = params.thetas[0] + params.thetas[1] * mean_x +
                    params.thetas[2] * feat_row + params.thetas[3] * feat_col +
                    params.thetas[4] * grand;
      double err = pred - train.targets[e];
      sq_err[e] = err * err;
      double g = 2.0 * err;
      params.thetas[0] -= cfg.lr * g;
      params.thetas[1] -= cfg.lr * g * mean_x;
      params.thetas[2] -= cfg.lr * g * feat_row;
      params.thetas[3] -= cfg.lr * g * feat_col;
      params.thetas[4] -= cfg.lr * g * grand;
    }
    double epoch_loss = 0.0;
    for (double v : sq_err) epoch_loss += v;
    epoch_loss /= static_cast<double>(train.inputs.size());
    if (!std::isfinite(epoch_loss))
      throw std::runtime_error("sgd_train_matrix: training diverged");
    res.loss_trace.push_back(epoch_loss);
  }
  res.final_train_mse = mse(train);
  res.test_mse = test.inputs.empty() ? 0.0 : mse(test);
  return res;
}

LayerStack deep_sets_stack(SetTask task, NoiseSource init) {
  SetLayerParams p;
  switch (task) {
    case SetTask::Mean:
    case SetTask::Sum:
      p.phi = random_mlp({1, 8}, Activation::Identity, noise_fork(init, {1}),
                         0.3);
      p.rho = random_mlp({8, 1}, Activation::Identity, noise_fork(init, {2}),
                         0.3);
      p.pooling = Pooling::Sum;
      break;
    case SetTask::Max:
      p.phi = random_mlp({1, 8}, Activation::Identity, noise_fork(init, {1}),
                         0.3);
      p.rho = random_mlp({8, 1}, Activation::Identity, noise_fork(init, {2}),
                         0.3);
      p.pooling = Pooling::Max;
      break;
    case SetTask::Variance:
      p.phi = random_mlp({2, 16, 1}, Activation::Tanh, noise_fork(init, {1}),
                         0.5);
      p.rho = random_mlp({1, 1}, Activation::Identity, noise_fork(init, {2}),
                         0.3);
      p.pooling = Pooling::UStat;
      p.ustat_k = 2;
      break;
  }
  LayerStack s;
  s.layers.push_back(LayerDesc::invariant(std::move(p)));
  return s;
}

}  // namespace permsym
