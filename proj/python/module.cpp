#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "permsym/canon.hpp"
#include "permsym/invariants.hpp"
#include "permsym/layers.hpp"
#include "permsym/symtest.hpp"
#include "permsym/train.hpp"

namespace py = pybind11;
using namespace permsym;

namespace {

GroupSpec spec_from(const std::string& mode, const DenseArray& x) {
  if (mode == "seq") return GroupSpec::seq(x.shape()[0]);
  if (mode == "separate") return GroupSpec::separate(x.shape());
  if (mode == "joint") {
    if (x.rank() != 2 || !x.is_symmetric())
      throw std::invalid_argument("joint mode needs a symmetric matrix");
    return GroupSpec::joint(x.shape()[0]);
  }
  throw std::invalid_argument("mode must be seq, separate or joint");
}

DenseArray array_from(const std::vector<std::vector<double>>& rows) {
  return DenseArray::matrix(rows);
}

py::dict report_dict(const TestReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["passed"] = r.passed;
  d["statistic"] = r.statistic;
  d["max_deviation"] = r.max_deviation;
  d["cases_checked"] = r.cases_checked;
  if (r.p_value) d["p_value"] = *r.p_value;
  if (!r.detail.empty()) d["detail"] = r.detail;
  return d;
}

std::vector<std::vector<double>> to_rows(const DenseArray& x) {
  if (x.rank() != 2) throw std::invalid_argument("rank-2 array expected");
  std::vector<std::vector<double>> rows(x.shape()[0]);
  for (std::size_t i = 0; i < x.shape()[0]; ++i)
    rows[i].assign(x.data().begin() + i * x.shape()[1],
                   x.data().begin() + (i + 1) * x.shape()[1]);
  return rows;
}

}  // namespace

PYBIND11_MODULE(_permsym, m) {
  m.doc() = "permutation-invariant and -equivariant stochastic layers: "
            "canonical forms, orbit laws, symmetry checks";

  m.def(
      "canon_matrix",
      [](const std::vector<std::vector<double>>& rows,
         const std::string& mode) {
        DenseArray x = array_from(rows);
        GroupSpec spec = spec_from(mode, x);
        CanonResult r = canon_array(x, spec);
        py::dict out;
        out["canon"] = to_rows(r.canon);
        py::list witness;
        for (const auto& p : r.witness.parts) witness.append(p.image());
        out["witness"] = witness;
        out["orbit_size"] = orbit_size(x, spec);
        return out;
      },
      py::arg("matrix"), py::arg("mode") = "separate",
      "Lex-min canonical form, witness images, and the orbit size.");

  m.def(
      "canon_sequence",
      [](const std::vector<double>& xs) {
        DenseArray x = DenseArray::vector(xs);
        CanonResult r = canon_array(x, GroupSpec::seq(xs.size()));
        return py::make_tuple(r.canon.data(), r.witness.parts[0].image());
      },
      py::arg("sequence"));

  m.def(
      "empirical_measure",
      [](const std::vector<double>& xs) {
        std::vector<double> out;
        for (const auto& e : empirical_measure(std::span(xs)).entries)
          out.push_back(e[0]);
        return out;
      },
      py::arg("sequence"), "Sorted multiset of values.");

  m.def(
      "sort_tau",
      [](const std::vector<double>& xs) {
        SortResult r = sort_tau(std::span(xs));
        return py::make_tuple(r.tau.image(), r.rep);
      },
      py::arg("sequence"),
      "Representative-equivariant witness: (tau image, sorted orbit "
      "representative).");

  m.def(
      "orbit_law_pmf",
      [](const std::vector<double>& rep) {
        DiscreteDist d = orbit_law_pmf(DenseArray::vector(rep),
                                       GroupSpec::seq(rep.size()));
        py::list out;
        for (std::size_t i = 0; i < d.support.size(); ++i)
          out.append(py::make_tuple(d.support[i].data(), d.counts[i],
                                    d.pmf[i]));
        return out;
      },
      py::arg("rep"),
      "Urn law of a sequence: [(outcome, count, probability)].");

  m.def(
      "orbit_law_sample",
      [](const std::vector<double>& rep, std::uint64_t seed, std::size_t n) {
        NoiseSource src{seed, 0, 0};
        GroupSpec spec = GroupSpec::seq(rep.size());
        DenseArray r = DenseArray::vector(rep);
        std::vector<std::vector<double>> draws;
        draws.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
          auto [draw, next] = orbit_law_sample(r, spec, src);
          src = next;
          draws.push_back(draw.data());
        }
        return draws;
      },
      py::arg("rep"), py::arg("seed"), py::arg("n") = 1);

  m.def(
      "noise_stream",
      [](std::uint64_t seed, std::uint64_t stream, std::size_t n) {
        return noise_draw(NoiseSource{seed, stream, 0}, n);
      },
      py::arg("seed"), py::arg("stream") = 0, py::arg("n") = 1,
      "Deterministic uniform [0,1) stream.");

  m.def(
      "deep_sets_linear",
      [](const std::vector<double>& xs, double theta0, double theta1,
         std::uint64_t seed) {
        SetLayerParams p = equivariant_linear_params(theta0, theta1);
        return equivariant_set_layer(p, DenseArray::vector(xs),
                                     NoiseSource{seed, 0, 0})
            .data();
      },
      py::arg("sequence"), py::arg("theta0"), py::arg("theta1"),
      py::arg("seed") = 0,
      "Equivariant linear layer: y_i = theta0 x_i + theta1 sum_j x_j.");

  m.def(
      "exch_matrix_linear",
      [](const std::vector<std::vector<double>>& rows,
         const std::vector<double>& thetas, const std::string& mode,
         std::uint64_t seed) {
        if (thetas.size() != 5)
          throw std::invalid_argument("five thetas expected");
        MatrixLayerParams p;
        std::copy(thetas.begin(), thetas.end(), p.thetas.begin());
        DenseArray y = exch_matrix_layer(
            p, array_from(rows), NoiseSource{seed, 0, 0},
            mode == "joint" ? MatrixMode::Joint : MatrixMode::Separate);
        return to_rows(y);
      },
      py::arg("matrix"), py::arg("thetas"), py::arg("mode") = "separate",
      py::arg("seed") = 0,
      "Exchangeable matrix layer in the five-parameter linear form.");

  m.def(
      "z_augment_matrix",
      [](const std::vector<std::vector<double>>& rows, std::size_t i,
         std::size_t j, const std::string& mode) {
        DenseArray x = array_from(rows);
        GroupSpec spec = spec_from(mode, x);
        std::vector<std::size_t> idx{i, j};
        AugCanon aug = z_augment(x, idx, spec, 2);
        py::dict out;
        out["center"] = aug.center_value;
        out["canon_flat"] = aug.base.canon.data();
        out["canon_shape"] = aug.base.canon.shape();
        return out;
      },
      py::arg("matrix"), py::arg("i"), py::arg("j"),
      py::arg("mode") = "separate",
      "Augmented canonical form around a distinguished entry.");

  m.def(
      "run_suite",
      [](const std::string& name, std::uint64_t seed, double tol,
         bool bitexact) {
        py::list out;
        for (const auto& r : run_suite(name, seed, tol, bitexact))
          out.append(report_dict(r));
        return out;
      },
      py::arg("name"), py::arg("seed") = 0, py::arg("tol") = 1e-9,
      py::arg("bitexact") = false);

  m.def("suite_names", &suite_names);

  m.def(
      "grad_check_random",
      [](std::uint64_t seed) {
        MlpParams p = random_mlp({2, 4, 3, 1}, Activation::Tanh,
                                 NoiseSource{seed, 1, 0});
        std::vector<double> x = noise_draw(NoiseSource{seed, 2, 0}, 2);
        GradReport r = grad_check(p, DenseArray::vector(x), 1e-5);
        py::dict out;
        out["passed"] = r.passed;
        out["max_rel_error"] = r.max_rel_error;
        out["worst_parameter_index"] = r.worst_parameter_index;
        return out;
      },
      py::arg("seed") = 0,
      "Finite-difference check of a random tanh network.");

  m.def(
      "train_mean_task",
      [](std::uint64_t seed, std::size_t examples, std::size_t epochs,
         double lr) {
        Dataset train = make_set_dataset(SetTask::Mean, examples, 5,
                                         NoiseSource{seed, 1, 0});
        Dataset test = make_set_dataset(SetTask::Mean, examples / 10 + 1, 5,
                                        NoiseSource{seed, 2, 0});
        LayerStack stack =
            deep_sets_stack(SetTask::Mean, NoiseSource{seed, 3, 0});
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.lr = lr;
        cfg.seed = seed;
        TrainResult res = sgd_train(stack, train, test, cfg);
        py::dict out;
        out["train_mse"] = res.final_train_mse;
        out["test_mse"] = res.test_mse;
        out["loss_trace"] = res.loss_trace;
        return out;
      },
      py::arg("seed") = 0, py::arg("examples") = 2000, py::arg("epochs") = 20,
      py::arg("lr") = 0.02, "Toy deep-sets regression on the mean of a set.");
}
