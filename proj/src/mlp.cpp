#include "permsym/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace permsym {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Identity: return z;
  }
  return z;
}

double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

// Pre-activation values per layer, plus the final output.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;   // z_l = W_l h_{l-1} + b_l
  std::vector<std::vector<double>> post;  // h_l (post[0] is the input)
};

ForwardTrace run_forward(const MlpParams& p, std::span<const double> x) {
  ForwardTrace t;
  t.post.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    std::size_t out_n = p.layer_sizes[l + 1];
    std::size_t in_n = p.layer_sizes[l];
    const auto& w = p.weights[l];
    const auto& b = p.biases[l];
    std::vector<double> z(out_n);
    for (std::size_t r = 0; r < out_n; ++r) {
      double acc = b[r];
      for (std::size_t c = 0; c < in_n; ++c)
        acc += w[r * in_n + c] * t.post.back()[c];
      z[r] = acc;
    }
    t.pre.push_back(z);
    bool last = (l + 1 == p.num_layers());
    if (!last)
      for (double& v : z) v = activate(p.activation, v);
    t.post.push_back(std::move(z));
  }
  return t;
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += layer_sizes[l + 1] * (layer_sizes[l] + 1);
  return n;
}

void validate_mlp(const MlpParams& p) {
  if (p.layer_sizes.size() < 2)
    throw std::invalid_argument("mlp: need at least one layer");
  for (std::size_t s : p.layer_sizes)
    if (s == 0) throw std::invalid_argument("mlp: zero layer size");
  if (p.weights.size() + 1 != p.layer_sizes.size() ||
      p.biases.size() != p.weights.size())
    throw std::invalid_argument("mlp: layer count mismatch");
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    std::vector<std::size_t> want{p.layer_sizes[l + 1], p.layer_sizes[l]};
    if (p.weights[l].shape() != want)
      throw std::invalid_argument("mlp: weight shape mismatch");
    if (p.biases[l].shape() != std::vector<std::size_t>{p.layer_sizes[l + 1]})
      throw std::invalid_argument("mlp: bias shape mismatch");
  }
}

MlpParams identity_mlp(std::size_t n) {
  MlpParams p;
  p.layer_sizes = {n, n};
  DenseArray w = DenseArray::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) w[i * n + i] = 1.0;
  p.weights = {std::move(w)};
  p.biases = {DenseArray::zeros({n})};
  p.activation = Activation::Identity;
  return p;
}

MlpParams linear_mlp(const std::vector<std::vector<double>>& w,
                     const std::vector<double>& b) {
  MlpParams p;
  DenseArray wm = DenseArray::matrix(w);
  p.layer_sizes = {wm.shape()[1], wm.shape()[0]};
  p.weights = {std::move(wm)};
  p.biases = {DenseArray::vector(b)};
  p.activation = Activation::Identity;
  validate_mlp(p);
  return p;
}

MlpParams random_mlp(std::vector<std::size_t> layer_sizes, Activation act,
                     NoiseSource src, double scale) {
  MlpParams p;
  p.layer_sizes = std::move(layer_sizes);
  p.activation = act;
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    std::size_t out_n = p.layer_sizes[l + 1];
    std::size_t in_n = p.layer_sizes[l];
    DenseArray w = DenseArray::zeros({out_n, in_n});
    for (std::size_t i = 0; i < w.size(); ++i) {
      auto [u, next] = noise_next(src);
      src = next;
      w[i] = scale * (2.0 * u - 1.0);
    }
    DenseArray b = DenseArray::zeros({out_n});
    for (std::size_t i = 0; i < b.size(); ++i) {
      auto [u, next] = noise_next(src);
      src = next;
      b[i] = scale * (2.0 * u - 1.0);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  validate_mlp(p);
  return p;
}

std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> x) {
  if (x.size() != p.input_size())
    throw std::invalid_argument("mlp_forward: input size mismatch");
  return run_forward(p, x).post.back();
}

DenseArray mlp_forward(const MlpParams& p, const DenseArray& x) {
  return DenseArray::vector(mlp_forward(p, std::span(x.data())));
}

MlpGrads mlp_backward(const MlpParams& p, std::span<const double> x,
                      std::span<const double> upstream) {
  if (x.size() != p.input_size())
    throw std::invalid_argument("mlp_backward: input size mismatch");
  if (upstream.size() != p.output_size())
    throw std::invalid_argument("mlp_backward: upstream size mismatch");
  ForwardTrace t = run_forward(p, x);

  MlpGrads g;
  g.d_weights.resize(p.num_layers());
  g.d_biases.resize(p.num_layers());
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t l = p.num_layers(); l-- > 0;) {
    std::size_t out_n = p.layer_sizes[l + 1];
    std::size_t in_n = p.layer_sizes[l];
    bool last = (l + 1 == p.num_layers());
    if (!last)
      for (std::size_t r = 0; r < out_n; ++r)
        delta[r] *= activate_grad(p.activation, t.pre[l][r]);
    DenseArray dw = DenseArray::zeros({out_n, in_n});
    DenseArray db = DenseArray::zeros({out_n});
    for (std::size_t r = 0; r < out_n; ++r) {
      db[r] = delta[r];
      for (std::size_t c = 0; c < in_n; ++c)
        dw[r * in_n + c] = delta[r] * t.post[l][c];
    }
    std::vector<double> prev(in_n, 0.0);
    const auto& w = p.weights[l];
    for (std::size_t c = 0; c < in_n; ++c)
      for (std::size_t r = 0; r < out_n; ++r)
        prev[c] += w[r * in_n + c] * delta[r];
    g.d_weights[l] = std::move(dw);
    g.d_biases[l] = std::move(db);
    delta = std::move(prev);
  }
  g.d_input = std::move(delta);
  return g;
}

std::vector<double> mlp_flatten(const MlpParams& p) {
  std::vector<double> flat;
  flat.reserve(p.parameter_count());
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    flat.insert(flat.end(), p.weights[l].data().begin(), p.weights[l].data().end());
    flat.insert(flat.end(), p.biases[l].data().begin(), p.biases[l].data().end());
  }
  return flat;
}

void mlp_unflatten(MlpParams& p, std::span<const double> flat) {
  std::size_t pos = 0;
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    for (auto& v : p.weights[l].data()) v = flat[pos++];
    for (auto& v : p.biases[l].data()) v = flat[pos++];
  }
  if (pos != flat.size())
    throw std::invalid_argument("mlp_unflatten: length mismatch");
}

std::vector<double> grads_flatten(const MlpParams& p, const MlpGrads& g) {
  std::vector<double> flat;
  flat.reserve(p.parameter_count());
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    flat.insert(flat.end(), g.d_weights[l].data().begin(), g.d_weights[l].data().end());
    flat.insert(flat.end(), g.d_biases[l].data().begin(), g.d_biases[l].data().end());
  }
  return flat;
}

GradReport grad_check(const MlpParams& p, const DenseArray& x, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("grad_check: tol must be > 0");
  std::vector<double> ones(p.output_size(), 1.0);
  MlpGrads analytic = mlp_backward(p, std::span(x.data()), ones);
  std::vector<double> grad = grads_flatten(p, analytic);

  const double h = 1e-5;
  std::vector<double> theta = mlp_flatten(p);
  MlpParams probe = p;
  auto loss = [&](const std::vector<double>& params) {
    mlp_unflatten(probe, params);
    std::vector<double> out = mlp_forward(probe, std::span(x.data()));
    double s = 0.0;
    for (double v : out) s += v;
    return s;
  };

  GradReport report;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    std::vector<double> up = theta, down = theta;
    up[i] += h;
    down[i] -= h;
    double fd = (loss(up) - loss(down)) / (2.0 * h);
    double err = max_rel_deviation(grad[i], fd);
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_parameter_index = i;
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace permsym
