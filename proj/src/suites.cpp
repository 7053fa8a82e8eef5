#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "permsym/layers.hpp"
#include "permsym/symtest.hpp"

// Named verification suites behind the `check` subcommand. Each suite is
// deterministic in (seed, tol, bitexact); negative controls are inverted so
// a suite passes exactly when its controls reject.

namespace permsym {

namespace {

NoiseSource seeded(std::uint64_t seed, std::uint64_t stream) {
  return NoiseSource{seed, stream, 0};
}

TestReport invert(TestReport inner, const std::string& name) {
  TestReport r = std::move(inner);
  r.name = name;
  r.passed = !r.passed;
  r.detail = "negative control; rejection expected. " + r.detail;
  return r;
}

DenseArray bernoulli_seq(NoiseSource src, std::size_t n, double p) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [u, next] = noise_next(src);
    src = next;
    x[i] = u < p ? 1.0 : 0.0;
  }
  return DenseArray::vector(std::move(x));
}

std::vector<double> sorted_copy(const DenseArray& x) {
  std::vector<double> v = x.data();
  std::sort(v.begin(), v.end());
  return v;
}

SetLayerParams random_invariant_params(NoiseSource src, std::size_t noise_dims,
                                       bool bitexact) {
  SetLayerParams p;
  p.phi = random_mlp({1, 4, 4}, Activation::Tanh, noise_fork(src, {1}));
  p.rho = random_mlp({noise_dims + 4, 4, 1}, Activation::Tanh,
                     noise_fork(src, {2}));
  p.pooling = Pooling::Sum;
  p.noise_dims = noise_dims;
  p.bitexact = bitexact;
  return p;
}

SetLayerParams random_equivariant_params(NoiseSource src,
                                         std::size_t noise_dims,
                                         bool bitexact) {
  SetLayerParams p;
  p.phi = random_mlp({1, 3, 3}, Activation::Tanh, noise_fork(src, {1}));
  p.rho = random_mlp({noise_dims + 1 + 3, 4, 1}, Activation::Tanh,
                     noise_fork(src, {2}));
  p.pooling = Pooling::Sum;
  p.noise_dims = noise_dims;
  p.bitexact = bitexact;
  return p;
}

DenseArray random_array(NoiseSource src, std::vector<std::size_t> shape) {
  DenseArray x = DenseArray::zeros(std::move(shape));
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto [u, next] = noise_next(src);
    src = next;
    x[i] = 2.0 * u - 1.0;
  }
  return x;
}

DenseArray random_symmetric(NoiseSource src, std::size_t n) {
  DenseArray x = DenseArray::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      auto [u, next] = noise_next(src);
      src = next;
      x.at2(i, j) = 2.0 * u - 1.0;
      x.at2(j, i) = x.at2(i, j);
    }
  return x;
}

std::vector<TestReport> suite_set_invariant(std::uint64_t seed, double tol,
                                    bool bitexact) {
  std::vector<TestReport> out;
  const std::size_t n = 4;
  GroupSpec spec = GroupSpec::seq(n);

  // exhaustive invariance of the stochastic invariant layer
  {
    TestReport worst;
    worst.name = "set_invariant/invariant_layer_exhaustive";
    worst.passed = true;
    for (std::size_t trial = 0; trial < 50; ++trial) {
      SetLayerParams p = random_invariant_params(
          seeded(seed, 10 + trial), 2, bitexact);
      DenseArray x = random_array(seeded(seed, 40 + trial), {n});
      NoiseSource layer_src = seeded(seed, 70 + trial);
      auto fn = [&](const DenseArray& v) {
        return invariant_set_layer(p, v, layer_src);
      };
      TestReport r = check_invariance_exhaustive(worst.name, fn, x, spec,
                                                 bitexact ? 0.0 : tol);
      worst.max_deviation = std::max(worst.max_deviation, r.max_deviation);
      worst.cases_checked += r.cases_checked;
      worst.passed = worst.passed && r.passed;
    }
    worst.statistic = worst.max_deviation;
    out.push_back(worst);
  }

  // distributional joint invariance, Y from the stochastic layer
  {
    SetLayerParams p = random_invariant_params(seeded(seed, 100), 2, bitexact);
    PairSampler sampler = [&](NoiseSource src) {
      DenseArray x = bernoulli_seq(noise_fork(src, {1}), 3, 0.7);
      DenseArray y = invariant_set_layer(p, x, noise_fork(src, {2}));
      return std::make_pair(std::move(x), std::move(y));
    };
    out.push_back(joint_invariance_test("set_invariant/joint_invariance", sampler,
                                        GroupSpec::seq(3), std::nullopt,
                                        100000, 0.001, seeded(seed, 101)));
  }

  // conditional independence given the empirical measure
  StatKeyFn empirical = [](const DenseArray& x) { return sorted_copy(x); };
  {
    std::vector<std::pair<DenseArray, DenseArray>> samples;
    samples.reserve(50000);
    for (std::size_t i = 0; i < 50000; ++i) {
      NoiseSource src = noise_fork(seeded(seed, 102), {i});
      DenseArray x = bernoulli_seq(noise_fork(src, {1}), 3, 0.7);
      auto [u, rest] = noise_next(noise_fork(src, {2}));
      (void)rest;
      double mean = (x[0] + x[1] + x[2]) / 3.0;
      DenseArray y = DenseArray::scalar(u < 0.2 + 0.5 * mean ? 1.0 : 0.0);
      samples.emplace_back(std::move(x), std::move(y));
    }
    out.push_back(cond_indep_test("set_invariant/cond_indep_noise_outsourced", samples,
                                  empirical, 0.001));

    // negative control: Y reads the first coordinate
    std::vector<std::pair<DenseArray, DenseArray>> bad;
    bad.reserve(samples.size());
    for (const auto& [x, y] : samples)
      bad.emplace_back(x, DenseArray::scalar(x[0]));
    out.push_back(invert(
        cond_indep_test("inner", bad, empirical, 0.001),
        "set_invariant/cond_indep_first_entry_rejected"));
  }
  return out;
}

std::vector<TestReport> suite_set_equivariant(std::uint64_t seed, double tol,
                                    bool bitexact) {
  std::vector<TestReport> out;
  const std::size_t n = 4;
  GroupSpec spec = GroupSpec::seq(n);

  {
    TestReport worst;
    worst.name = "set_equivariant/equivariant_layer_exhaustive";
    worst.passed = true;
    for (std::size_t trial = 0; trial < 50; ++trial) {
      SetLayerParams p = random_equivariant_params(
          seeded(seed, 10 + trial), 2, bitexact);
      DenseArray x = random_array(seeded(seed, 40 + trial), {n});
      NoiseSource layer_src = seeded(seed, 70 + trial);
      auto fn = [&](const DenseArray& v, const PermTuple& g) {
        return equivariant_set_layer(p, v, layer_src, &g.parts[0]);
      };
      TestReport r = check_equivariance_exhaustive(worst.name, fn, x, spec,
                                                   bitexact ? 0.0 : tol);
      worst.max_deviation = std::max(worst.max_deviation, r.max_deviation);
      worst.cases_checked += r.cases_checked;
      worst.passed = worst.passed && r.passed;
    }
    worst.statistic = worst.max_deviation;
    out.push_back(worst);
  }

  // the two-parameter linear layer is exact on integer inputs
  {
    SetLayerParams lin = equivariant_linear_params(2.0, 1.0);
    DenseArray x = DenseArray::vector({1.0, 2.0, 3.0, -1.0});
    auto fn = [&](const DenseArray& v, const PermTuple& g) {
      return equivariant_set_layer(lin, v, seeded(seed, 1), &g.parts[0]);
    };
    out.push_back(check_equivariance_exhaustive("set_equivariant/linear_layer_exact", fn,
                                                x, spec, 0.0));
  }

  // composition: two equivariant layers plus an invariant head is invariant
  {
    LayerStack stack;
    stack.layers.push_back(
        LayerDesc::equivariant(random_equivariant_params(seeded(seed, 3), 1,
                                                         bitexact)));
    stack.layers.push_back(
        LayerDesc::equivariant(random_equivariant_params(seeded(seed, 4), 1,
                                                         bitexact)));
    stack.layers.push_back(LayerDesc::invariant(
        random_invariant_params(seeded(seed, 5), 2, bitexact)));
    DenseArray x = random_array(seeded(seed, 6), {n});
    NoiseSource stack_src = seeded(seed, 7);
    auto fn = [&](const DenseArray& v, const PermTuple& g) {
      return stack_forward(stack, v, stack_src, &g.parts[0]);
    };
    out.push_back(check_invariance_exhaustive("set_equivariant/stack_invariant_head", fn,
                                              x, spec, bitexact ? 0.0 : tol));
  }
  return out;
}

std::vector<TestReport> suite_tau(std::uint64_t seed, double, bool) {
  std::vector<TestReport> out;
  const std::size_t n = 4;
  GroupSpec spec = GroupSpec::seq(n);
  MlpParams b = random_mlp({2 + n, 6, n}, Activation::Tanh, seeded(seed, 1));

  TestReport worst;
  worst.name = "tau/equivariance_exact";
  worst.passed = true;
  for (std::size_t trial = 0; trial < 1000; ++trial) {
    DenseArray x = random_array(seeded(seed, 10 + trial), {n});
    bool distinct = true;
    std::vector<double> sorted = sorted_copy(x);
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (sorted[i] == sorted[i + 1]) distinct = false;
    if (!distinct) continue;
    NoiseSource layer_src = seeded(seed, 5000 + trial);
    auto fn = [&](const DenseArray& v, const PermTuple& g) {
      (void)g;  // shared noise: the tau construction needs no co-permutation
      return tau_equivariant_apply(b, v, layer_src, 2).y;
    };
    TestReport r = check_equivariance_exhaustive(worst.name, fn, x, spec, 0.0);
    worst.max_deviation = std::max(worst.max_deviation, r.max_deviation);
    worst.cases_checked += r.cases_checked;
    worst.passed = worst.passed && r.passed;
  }
  worst.statistic = worst.max_deviation;
  out.push_back(worst);
  return out;
}

std::vector<TestReport> suite_arrays(std::uint64_t seed, double tol,
                                     bool bitexact) {
  std::vector<TestReport> out;
  double eff_tol = bitexact ? 0.0 : tol;

  // separately exchangeable matrix layer, general form
  {
    TestReport worst;
    worst.name = "arrays/exch_matrix_separate";
    worst.passed = true;
    GroupSpec spec = GroupSpec::separate({3, 4});
    for (std::size_t trial = 0; trial < 10; ++trial) {
      MatrixLayerParams p;
      p.mlp = random_mlp({5, 4, 1}, Activation::Tanh, seeded(seed, 10 + trial));
      p.use_noise = true;
      p.bitexact = bitexact;
      DenseArray x = random_array(seeded(seed, 40 + trial), {3, 4});
      NoiseSource layer_src = seeded(seed, 70 + trial);
      auto fn = [&](const DenseArray& v, const PermTuple& g) {
        return exch_matrix_layer(p, v, layer_src, MatrixMode::Separate, &g);
      };
      TestReport r =
          check_equivariance_exhaustive(worst.name, fn, x, spec, eff_tol);
      worst.max_deviation = std::max(worst.max_deviation, r.max_deviation);
      worst.cases_checked += r.cases_checked;
      worst.passed = worst.passed && r.passed;
    }
    worst.statistic = worst.max_deviation;
    out.push_back(worst);
  }

  // jointly exchangeable matrix layer
  {
    TestReport worst;
    worst.name = "arrays/exch_matrix_joint";
    worst.passed = true;
    GroupSpec spec = GroupSpec::joint(3);
    for (std::size_t trial = 0; trial < 10; ++trial) {
      MatrixLayerParams p;
      p.mlp = random_mlp({5, 4, 1}, Activation::Tanh, seeded(seed, 10 + trial));
      p.use_noise = true;
      p.bitexact = bitexact;
      DenseArray x = random_symmetric(seeded(seed, 40 + trial), 3);
      NoiseSource layer_src = seeded(seed, 70 + trial);
      auto fn = [&](const DenseArray& v, const PermTuple& g) {
        return exch_matrix_layer(p, v, layer_src, MatrixMode::Joint, &g);
      };
      TestReport r =
          check_equivariance_exhaustive(worst.name, fn, x, spec, eff_tol);
      worst.max_deviation = std::max(worst.max_deviation, r.max_deviation);
      worst.cases_checked += r.cases_checked;
      worst.passed = worst.passed && r.passed;
    }
    worst.statistic = worst.max_deviation;
    out.push_back(worst);
  }

  // maximal-statistic variants condition on the augmented canonical form
  {
    GroupSpec spec = GroupSpec::separate({3, 3});
    MlpParams f = random_mlp({1 + 1 + 4 * 3, 4, 1}, Activation::Tanh,
                             seeded(seed, 200));
    DenseArray x = random_array(seeded(seed, 201), {3, 3});
    NoiseSource layer_src = seeded(seed, 202);
    auto fn = [&](const DenseArray& v, const PermTuple& g) {
      return exch_matrix_layer_maximal(f, v, layer_src, true, &g);
    };
    out.push_back(check_equivariance_exhaustive("arrays/maximal_separate", fn,
                                                x, spec, 0.0));
  }
  {
    GroupSpec spec = GroupSpec::joint(3);
    MlpParams f_off = random_mlp({1 + 1 + 1 * 1 * 5, 4, 1}, Activation::Tanh,
                                 seeded(seed, 210));
    MlpParams f_diag = random_mlp({1 + 1 + 2 * 2 * 5, 4, 1}, Activation::Tanh,
                                  seeded(seed, 211));
    DenseArray x = random_symmetric(seeded(seed, 212), 3);
    NoiseSource layer_src = seeded(seed, 213);
    auto fn = [&](const DenseArray& v, const PermTuple& g) {
      return exch_matrix_layer_maximal_joint(f_off, f_diag, v, layer_src, true,
                                             &g);
    };
    out.push_back(check_equivariance_exhaustive("arrays/maximal_joint", fn, x,
                                                spec, 0.0));
  }

  // vertex features over a symmetric matrix (edges then vertices)
  {
    const std::size_t n = 4;
    VertexEdgeParams p;
    p.f_e = random_mlp({1 + 7, 4, 1}, Activation::Tanh, seeded(seed, 220));
    p.f_m = random_mlp({4, 3, 2}, Activation::Tanh, seeded(seed, 221));
    p.f_v = random_mlp({1 + 3 + 2, 4, 1}, Activation::Tanh, seeded(seed, 222));
    p.edge_noise = true;
    p.vertex_noise = true;
    p.bitexact = bitexact;
    DenseArray xn = random_array(seeded(seed, 223), {n});
    DenseArray xsym = random_symmetric(seeded(seed, 224), n);
    NoiseSource layer_src = seeded(seed, 225);
    GroupSpec spec = GroupSpec::joint(n);
    GroupSpec vec_spec = GroupSpec::seq(n);

    auto baseline = vertex_edge_layer(p, xn, xsym, layer_src, nullptr);
    TestReport r;
    r.name = "arrays/vertex_edge";
    r.passed = true;
    for_each_element(spec, [&](const PermTuple& g) {
      DenseArray pxn = act(PermTuple::single(g.parts[0]), xn, vec_spec);
      DenseArray pxsym = act(g, xsym, spec);
      auto moved = vertex_edge_layer(p, pxn, pxsym, layer_src, &g.parts[0]);
      double dev = std::max(
          max_rel_deviation(
              act(PermTuple::single(g.parts[0]), baseline.first, vec_spec),
              moved.first),
          max_rel_deviation(act(g, baseline.second, spec), moved.second));
      r.max_deviation = std::max(r.max_deviation, dev);
      ++r.cases_checked;
    });
    r.statistic = r.max_deviation;
    r.passed = r.max_deviation <= eff_tol;
    out.push_back(r);
  }

  // bipartite feature array (rows, columns, matrix)
  {
    BipartiteLayerParams p;
    p.f_e = random_mlp({1 + 8, 4, 1}, Activation::Tanh, seeded(seed, 230));
    p.f_v1 = random_mlp({1 + 7, 4, 1}, Activation::Tanh, seeded(seed, 231));
    p.f_v2 = random_mlp({1 + 7, 4, 1}, Activation::Tanh, seeded(seed, 232));
    p.edge_noise = true;
    p.vertex_noise = true;
    p.bitexact = bitexact;
    DenseArray xr = random_array(seeded(seed, 233), {2});
    DenseArray xc = random_array(seeded(seed, 234), {3});
    DenseArray x = random_array(seeded(seed, 235), {2, 3});
    NoiseSource layer_src = seeded(seed, 236);
    GroupSpec spec = GroupSpec::separate({2, 3});

    auto baseline = bipartite_feature_layer(p, xr, xc, x, layer_src, nullptr);
    TestReport r;
    r.name = "arrays/bipartite";
    r.passed = true;
    for_each_element(spec, [&](const PermTuple& g) {
      DenseArray pxr =
          act(PermTuple::single(g.parts[0]), xr, GroupSpec::seq(2));
      DenseArray pxc =
          act(PermTuple::single(g.parts[1]), xc, GroupSpec::seq(3));
      DenseArray px = act(g, x, spec);
      auto moved = bipartite_feature_layer(p, pxr, pxc, px, layer_src, &g);
      double dev = std::max(
          {max_rel_deviation(act(PermTuple::single(g.parts[0]), baseline.yrow,
                                 GroupSpec::seq(2)),
                             moved.yrow),
           max_rel_deviation(act(PermTuple::single(g.parts[1]), baseline.ycol,
                                 GroupSpec::seq(3)),
                             moved.ycol),
           max_rel_deviation(act(g, baseline.y, spec), moved.y)});
      r.max_deviation = std::max(r.max_deviation, dev);
      ++r.cases_checked;
    });
    r.statistic = r.max_deviation;
    r.passed = r.max_deviation <= eff_tol;
    out.push_back(r);
  }

  // d = 3 array layer
  {
    GroupSpec spec = GroupSpec::separate({2, 2, 2});
    DarrayLayerParams p;
    p.theta.resize(8);
    NoiseSource src = seeded(seed, 240);
    for (double& t : p.theta) {
      auto [u, next] = noise_next(src);
      src = next;
      t = 2.0 * u - 1.0;
    }
    p.bias = 0.25;
    p.activation = Activation::Tanh;
    p.bitexact = bitexact;
    DenseArray x = random_array(seeded(seed, 241), {2, 2, 2});
    auto fn = [&](const DenseArray& v, const PermTuple& g) {
      return darray_layer(p, v, seeded(seed, 242), &g);
    };
    out.push_back(check_equivariance_exhaustive("arrays/darray_d3", fn, x,
                                                spec, eff_tol));
  }

  // d = 2 array layer agrees with the matrix layer
  {
    TestReport r;
    r.name = "arrays/darray_matches_matrix";
    r.passed = true;
    for (std::size_t trial = 0; trial < 100; ++trial) {
      NoiseSource src = seeded(seed, 300 + trial);
      std::vector<double> th(5);
      for (double& t : th) {
        auto [u, next] = noise_next(src);
        src = next;
        t = 2.0 * u - 1.0;
      }
      MatrixLayerParams mp;
      mp.thetas = {th[0], th[1], th[2], th[3], th[4]};
      mp.activation = Activation::Tanh;
      DarrayLayerParams dp;
      dp.theta = {th[4], th[2], th[3], th[1]};  // masks: {}, {0}, {1}, {0,1}
      dp.bias = th[0];
      dp.activation = Activation::Tanh;
      DenseArray x = random_array(seeded(seed, 400 + trial), {3, 4});
      DenseArray a =
          exch_matrix_layer(mp, x, seeded(seed, 1), MatrixMode::Separate);
      DenseArray b = darray_layer(dp, x, seeded(seed, 1));
      r.max_deviation =
          std::max(r.max_deviation, max_rel_deviation(a, b));
      ++r.cases_checked;
    }
    r.passed = r.max_deviation == 0.0;
    r.statistic = r.max_deviation;
    out.push_back(r);
  }
  return out;
}

std::vector<TestReport> suite_maximal(std::uint64_t seed, double, bool) {
  (void)seed;
  std::vector<TestReport> out;
  StatKeyFn empirical = [](const DenseArray& x) { return sorted_copy(x); };
  for (std::size_t n = 2; n <= 4; ++n)
    out.push_back(verify_maximal_invariant(
        "maximal/empirical_measure_n" + std::to_string(n), empirical,
        GroupSpec::seq(n), {0.0, 1.0, 2.0}));

  StatKeyFn canon_sep = [](const DenseArray& x) {
    return canon_array(x, GroupSpec::separate({3, 3})).canon.data();
  };
  out.push_back(verify_maximal_invariant("maximal/canon_separate_3x3",
                                         canon_sep,
                                         GroupSpec::separate({3, 3}),
                                         {0.0, 1.0}));

  StatKeyFn canon_joint = [](const DenseArray& x) {
    return canon_array(x, GroupSpec::joint(3)).canon.data();
  };
  out.push_back(verify_maximal_invariant("maximal/canon_joint_3x3",
                                         canon_joint, GroupSpec::joint(3),
                                         {0.0, 1.0}));

  // the plain sum is invariant but not maximal: (0,2) vs (1,1)
  StatKeyFn sum_stat = [](const DenseArray& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    return std::vector<double>{s};
  };
  out.push_back(invert(verify_maximal_invariant("inner", sum_stat,
                                                GroupSpec::seq(2),
                                                {0.0, 1.0, 2.0}),
                       "maximal/sum_fails_separation"));
  return out;
}

std::vector<TestReport> suite_orbit(std::uint64_t seed, double, bool) {
  std::vector<TestReport> out;

  // exact disintegration for an i.i.d. Bernoulli(0.7) triple
  {
    DiscreteLaw law;
    for (std::size_t code = 0; code < 8; ++code) {
      std::vector<double> seq(3);
      double p = 1.0;
      for (std::size_t i = 0; i < 3; ++i) {
        seq[i] = (code >> i) & 1u ? 1.0 : 0.0;
        p *= seq[i] == 1.0 ? 0.7 : 0.3;
      }
      law.outcomes.emplace_back(std::move(seq), p);
    }
    out.push_back(sufficiency_test("orbit/bernoulli_disintegration", law, 3));
  }

  // exchangeable mixture of i.i.d. laws
  {
    DiscreteLaw law;
    for (std::size_t code = 0; code < 8; ++code) {
      std::vector<double> seq(3);
      double p3 = 1.0, p8 = 1.0;
      for (std::size_t i = 0; i < 3; ++i) {
        seq[i] = (code >> i) & 1u ? 1.0 : 0.0;
        p3 *= seq[i] == 1.0 ? 0.3 : 0.7;
        p8 *= seq[i] == 1.0 ? 0.8 : 0.2;
      }
      law.outcomes.emplace_back(std::move(seq), 0.5 * p3 + 0.5 * p8);
    }
    out.push_back(sufficiency_test("orbit/mixture_disintegration", law, 3));
  }

  // negative control: a Markov-biased, non-exchangeable law
  {
    DiscreteLaw law;
    for (std::size_t code = 0; code < 8; ++code) {
      std::vector<double> seq(3);
      for (std::size_t i = 0; i < 3; ++i)
        seq[i] = (code >> i) & 1u ? 1.0 : 0.0;
      double p = 0.5;  // first coordinate fair
      for (std::size_t i = 1; i < 3; ++i)
        p *= seq[i] == seq[i - 1] ? 0.8 : 0.2;  // sticky chain
      law.outcomes.emplace_back(std::move(seq), p);
    }
    out.push_back(invert(sufficiency_test("inner", law, 3),
                         "orbit/markov_law_detected"));
  }

  // sampler calibration against the exact orbit law
  {
    DenseArray rep = DenseArray::vector({1.0, 1.0, 2.0});
    GroupSpec spec = GroupSpec::seq(3);
    DiscreteDist exact = orbit_law_pmf(rep, spec);
    std::map<std::string, double> pmf;
    for (std::size_t i = 0; i < exact.support.size(); ++i)
      pmf[outcome_key(std::span<const double>(exact.support[i].data()))] =
          exact.pmf[i];
    std::vector<std::string> samples;
    samples.reserve(100000);
    NoiseSource src = seeded(seed, 1);
    for (std::size_t i = 0; i < 100000; ++i) {
      auto [draw, next] = orbit_law_sample(rep, spec, src);
      src = next;
      samples.push_back(outcome_key(std::span<const double>(draw.data())));
    }
    out.push_back(chi2_gof("orbit/sampler_calibration", samples, pmf, 0.001));
  }

  // Haar sampling is uniform on S_3
  {
    GroupSpec spec = GroupSpec::seq(3);
    std::map<std::string, double> pmf;
    for_each_element(spec, [&](const PermTuple& g) {
      std::vector<double> img;
      for (std::size_t i = 0; i < 3; ++i)
        img.push_back(static_cast<double>(g.parts[0](i)));
      pmf[outcome_key(img)] = 1.0 / 6.0;
    });
    std::vector<std::string> samples;
    samples.reserve(60000);
    NoiseSource src = seeded(seed, 2);
    for (std::size_t i = 0; i < 60000; ++i) {
      auto [g, next] = sample_haar(spec, src);
      src = next;
      std::vector<double> img;
      for (std::size_t k = 0; k < 3; ++k)
        img.push_back(static_cast<double>(g.parts[0](k)));
      samples.push_back(outcome_key(img));
    }
    out.push_back(chi2_gof("orbit/haar_uniform_s3", samples, pmf, 0.001));
  }
  return out;
}

std::vector<TestReport> suite_semigroup(std::uint64_t seed, double, bool) {
  (void)seed;
  std::vector<TestReport> out;

  TestReport r;
  r.name = "semigroup/fold_permutation_invariant";
  r.passed = true;
  std::vector<double> base{3.0, -1.0, 4.0, 1.0, 5.0};
  for (std::size_t n = 1; n <= 5; ++n) {
    std::vector<double> x(base.begin(), base.begin() + n);
    GroupSpec spec = GroupSpec::seq(n);
    for (SemigroupOp op : {SemigroupOp::Sum, SemigroupOp::Max,
                           SemigroupOp::Min, SemigroupOp::Product,
                           SemigroupOp::Multiset}) {
      SemigroupStat ref = semigroup_fold(x, op);
      for_each_element(spec, [&](const PermTuple& g) {
        DenseArray px = act(g, DenseArray::vector(x), spec);
        SemigroupStat s = semigroup_fold(std::span<const double>(px.data()),
                                         op);
        if (!(s == ref)) r.passed = false;
        ++r.cases_checked;
      });
    }
  }
  out.push_back(r);

  TestReport m;
  m.name = "semigroup/merge_matches_fold";
  m.passed = true;
  for (std::size_t cut = 0; cut <= base.size(); ++cut) {
    for (SemigroupOp op : {SemigroupOp::Sum, SemigroupOp::Product,
                           SemigroupOp::Multiset}) {
      std::span<const double> all(base);
      SemigroupStat whole = semigroup_fold(all, op);
      SemigroupStat merged = semigroup_merge(
          semigroup_fold(all.subspan(0, cut), op),
          semigroup_fold(all.subspan(cut), op));
      if (!(whole == merged)) m.passed = false;
      ++m.cases_checked;
    }
  }
  out.push_back(m);
  return out;
}

std::vector<TestReport> suite_negative_demo(std::uint64_t, double tol, bool) {
  // deliberately failing check, exercising the nonzero-exit contract
  ArrayFn first_entry = [](const DenseArray& x) {
    return DenseArray::scalar(x[0]);
  };
  DenseArray x = DenseArray::vector({1.0, 2.0});
  return {check_invariance_exhaustive("negative_demo/first_entry_invariance",
                                      first_entry, x, GroupSpec::seq(2), tol)};
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"set_invariant", "set_equivariant", "tau",       "arrays",
          "maximal",       "orbit",           "semigroup", "negative_demo"};
}

std::vector<TestReport> run_suite(const std::string& name, std::uint64_t seed,
                                  double tol, bool bitexact) {
  if (name == "set_invariant") return suite_set_invariant(seed, tol, bitexact);
  if (name == "set_equivariant") return suite_set_equivariant(seed, tol, bitexact);
  if (name == "tau") return suite_tau(seed, tol, bitexact);
  if (name == "arrays") return suite_arrays(seed, tol, bitexact);
  if (name == "maximal") return suite_maximal(seed, tol, bitexact);
  if (name == "orbit") return suite_orbit(seed, tol, bitexact);
  if (name == "semigroup") return suite_semigroup(seed, tol, bitexact);
  if (name == "negative_demo") return suite_negative_demo(seed, tol, bitexact);
  throw std::invalid_argument("unknown suite: " + name);
}

}  // namespace permsym
