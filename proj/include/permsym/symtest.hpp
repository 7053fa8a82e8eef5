#ifndef PERMSYM_SYMTEST_HPP
#define PERMSYM_SYMTEST_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "permsym/dense_array.hpp"
#include "permsym/noise.hpp"
#include "permsym/perm.hpp"

namespace permsym {

struct TestReport {
  std::string name;
  bool passed = false;
  double statistic = 0.0;
  std::optional<double> p_value;
  double max_deviation = 0.0;
  std::size_t cases_checked = 0;
  std::string detail;
};

using ArrayFn = std::function<DenseArray(const DenseArray&)>;
/// Function under an equivariance check; receives the group element already
/// applied to its input so stochastic layers can co-permute their noise.
using CoPermFn = std::function<DenseArray(const DenseArray&, const PermTuple&)>;
/// Statistic with comparable output (exact equality on the key).
using StatKeyFn = std::function<std::vector<double>(const DenseArray&)>;

/// fn(act(g, x)) == fn(x) over every group element.
TestReport check_invariance_exhaustive(const std::string& name,
                                       const ArrayFn& fn, const DenseArray& x,
                                       const GroupSpec& spec, double tol);

/// Same, for functions built from equivariant internals whose noise must
/// co-permute with the input (stacks ending in an invariant head).
TestReport check_invariance_exhaustive(const std::string& name,
                                       const CoPermFn& fn, const DenseArray& x,
                                       const GroupSpec& spec, double tol);

/// act(g, fn(x)) == fn(act(g, x)) over every group element; `out_spec` tells
/// how the group acts on outputs (defaults to the input spec).
TestReport check_equivariance_exhaustive(
    const std::string& name, const CoPermFn& fn, const DenseArray& x,
    const GroupSpec& spec, double tol,
    const std::optional<GroupSpec>& out_spec = std::nullopt);

/// Both maximal-invariant directions against the brute-force orbit
/// partition: M constant on each orbit, distinct across orbits. Inputs are
/// all alphabet-valued arrays of the spec's shape (symmetric ones in joint
/// mode). Guard: #inputs * |G| <= 1e7.
TestReport verify_maximal_invariant(const std::string& name,
                                    const StatKeyFn& m, const GroupSpec& spec,
                                    const std::vector<double>& alphabet);

/// Upper tail of the chi-square distribution with `df` degrees of freedom,
/// via the Wilson-Hilferty cube-root normal approximation.
double chi2_tail(double statistic, std::size_t df);

/// Pearson homogeneity test on pooled support; outcomes with expected count
/// below 5 are merged (smallest first) before testing.
TestReport chi2_two_sample(const std::string& name,
                           const std::vector<std::string>& a,
                           const std::vector<std::string>& b, double alpha);

/// Goodness of fit of samples against an exact pmf, same merging rule.
TestReport chi2_gof(const std::string& name,
                    const std::vector<std::string>& samples,
                    const std::map<std::string, double>& pmf, double alpha);

/// Draws N samples of (X, Y) and N of (g.X, g.Y) for Haar g, then compares
/// the discretized joint laws. Continuous Y entries are binned into
/// `y_bins` equal-probability bins estimated from the pooled samples; pass
/// y_action = nullopt when the group acts trivially on Y.
using PairSampler =
    std::function<std::pair<DenseArray, DenseArray>(NoiseSource)>;
TestReport joint_invariance_test(const std::string& name,
                                 const PairSampler& sampler,
                                 const GroupSpec& spec_x,
                                 const std::optional<GroupSpec>& y_action,
                                 std::size_t n_samples, double alpha,
                                 NoiseSource src, std::size_t y_bins = 8);

/// Within every fiber of M, tests equality of P(Y | X = x) across the x in
/// that fiber (chi-square homogeneity, Bonferroni across fibers).
/// Undersampled fibers are skipped and reported in `detail`, never silently
/// passed; a run where every fiber is vacuous passes with a warning.
TestReport cond_indep_test(
    const std::string& name,
    const std::vector<std::pair<DenseArray, DenseArray>>& samples,
    const StatKeyFn& m, double alpha);

/// Finite discrete law on sequences of length n, given in closed form.
struct DiscreteLaw {
  std::vector<std::pair<std::vector<double>, double>> outcomes;
};

/// Exact disintegration check: the conditional law of X given its empirical
/// measure must equal the orbit law on every fiber (to `tol`); detects
/// non-exchangeable laws as a negative control.
TestReport sufficiency_test(const std::string& name, const DiscreteLaw& law,
                            std::size_t n, double tol = 1e-12);

/// 17-significant-digit key for discrete outcome encoding.
std::string outcome_key(std::span<const double> values);

/// Named verification suites, runnable from the CLI.
std::vector<std::string> suite_names();
std::vector<TestReport> run_suite(const std::string& name, std::uint64_t seed,
                                  double tol, bool bitexact);

}  // namespace permsym

#endif
