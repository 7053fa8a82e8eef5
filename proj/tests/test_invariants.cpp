#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <map>

#include "permsym/invariants.hpp"

using namespace permsym;

namespace {

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
      x.at2(i, j) = u;
      x.at2(j, i) = u;
    }
  return x;
}

}  // namespace

TEST_CASE("empirical measure sorts and forgets order") {
  EmpiricalMeasure m = empirical_measure(std::vector<double>{2.0, 1.0, 2.0});
  CHECK(m.entries == std::vector<Encoding>{{1.0}, {2.0}, {2.0}});
  EmpiricalMeasure p = empirical_measure(std::vector<double>{2.0, 2.0, 1.0});
  CHECK(m == p);
  CHECK(empirical_measure(std::vector<Encoding>{}).entries.empty());
}

TEST_CASE("sort_tau: witness, ties, and the order statistic") {
  {
    auto r = sort_tau(std::vector<double>{1.0, 2.0, 3.0});
    CHECK(r.tau.is_identity());
    CHECK(r.rep == std::vector<double>{1.0, 2.0, 3.0});
  }
  {
    std::vector<double> x{3.0, 1.0, 2.0};
    auto r = sort_tau(x);
    CHECK(r.rep == std::vector<double>{1.0, 2.0, 3.0});
    // the witness sigma = tau^{-1} satisfies act(sigma, x) = rep
    GroupSpec spec = GroupSpec::seq(3);
    DenseArray permuted =
        act(PermTuple::single(r.tau.inverse()), DenseArray::vector(x), spec);
    CHECK(permuted.data() == r.rep);
    // rep coincides with the empirical measure read as a sequence
    auto m = empirical_measure(x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(m.entries[i][0] == r.rep[i]);
  }
  {
    auto r = sort_tau(std::vector<double>{5.0, 5.0});
    CHECK(r.tau.is_identity());  // stable tie-break
  }
}

TEST_CASE("z-array around an entry of a 2x2 matrix") {
  // distinguished index (0,0): single remaining cell carries
  // (X11, X01, X10) and the center stores X00
  DenseArray x = DenseArray::matrix({{1.0, 2.0}, {3.0, 4.0}});
  std::vector<std::size_t> idx{0, 0};
  AugCanon aug = z_augment(x, idx, GroupSpec::separate({2, 2}), 2);
  CHECK(aug.base.canon.shape() == std::vector<std::size_t>{1, 1, 3});
  CHECK(aug.base.canon.data() == std::vector<double>{4.0, 2.0, 3.0});
  CHECK(aug.center_value == 1.0);
  CHECK(aug.mode == AugMode::Separate);
}

TEST_CASE("d = 3 augmentation has one broadcast channel per fixed axis") {
  DenseArray x = random_array(NoiseSource{1, 0, 0}, {2, 2, 2});
  std::vector<std::size_t> idx{0, 0, 0};
  AugCanon aug = z_augment(x, idx, GroupSpec::separate({2, 2, 2}), 1);
  // channels: base value plus the three size-1 axis subsets
  CHECK(aug.base.canon.shape() ==
        std::vector<std::size_t>{1, 1, 1, 4});
  CHECK(aug.mode == AugMode::Darray);
}

TEST_CASE("separate augmentation is invariant under co-moved indices") {
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    DenseArray x = random_array(NoiseSource{trial, 3, 0}, {3, 2});
    GroupSpec spec = GroupSpec::separate({3, 2});
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        std::vector<std::size_t> idx{i, j};
        AugCanon ref = z_augment(x, idx, spec, 2);
        for_each_element(spec, [&](const PermTuple& g) {
          std::vector<std::size_t> moved{g.parts[0](i), g.parts[1](j)};
          AugCanon other = z_augment(act(g, x, spec), moved, spec, 2);
          CHECK(ref.same_statistic(other));
        });
      }
  }
}

TEST_CASE("joint augmentation is invariant under co-moved pairs") {
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    std::size_t n = 4;
    DenseArray x = random_symmetric(NoiseSource{trial, 4, 0}, n);
    GroupSpec spec = GroupSpec::joint(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        std::vector<std::size_t> idx{i, j};
        AugCanon ref = z_augment(x, idx, spec, 0);
        for_each_element(spec, [&](const PermTuple& g) {
          std::vector<std::size_t> moved{g.parts[0](i), g.parts[0](j)};
          AugCanon other = z_augment(act(g, x, spec), moved, spec, 0);
          CHECK(ref.same_statistic(other));
        });
      }
  }
}

TEST_CASE("augmentation rejects bad arguments") {
  DenseArray x = DenseArray::matrix({{1.0, 2.0}, {3.0, 4.0}});
  std::vector<std::size_t> idx{0, 0};
  CHECK_THROWS_AS(z_augment(x, idx, GroupSpec::separate({2, 2}), 3),
                  std::invalid_argument);
  std::vector<std::size_t> oob{2, 0};
  CHECK_THROWS_AS(z_augment(x, oob, GroupSpec::separate({2, 2}), 1),
                  std::out_of_range);
  // joint remainder empty at n = 2 with i != j
  std::vector<std::size_t> pair{0, 1};
  DenseArray sym = DenseArray::matrix({{0.0, 1.0}, {1.0, 0.0}});
  CHECK_THROWS_AS(z_augment(sym, pair, GroupSpec::joint(2), 0),
                  FeasibilityError);
}

TEST_CASE("vertex broadcast: construction, symmetry, equivariance") {
  {
    DenseArray zero = DenseArray::matrix({{0.0, 0.0}, {0.0, 0.0}});
    std::vector<double> xn{5.0, 2.0};
    DenseArray b = broadcast_vertex(xn, zero);
    CHECK(b.shape() == std::vector<std::size_t>{2, 2, 3});
    // entry (0,1): edge 0, sorted pair {2,5}
    CHECK(b.data()[3 * 1 + 0] == 0.0);
    CHECK(b.data()[3 * 1 + 1] == 2.0);
    CHECK(b.data()[3 * 1 + 2] == 5.0);
    // diagonal entry (1,1) repeats the vertex value
    CHECK(b.data()[3 * 3 + 1] == 2.0);
    CHECK(b.data()[3 * 3 + 2] == 2.0);
  }
  {
    DenseArray xsym = random_symmetric(NoiseSource{8, 0, 0}, 3);
    std::vector<double> constant{1.5, 1.5, 1.5};
    DenseArray b = broadcast_vertex(constant, xsym);
    for (std::size_t c = 0; c < 9; ++c) {
      CHECK(b.data()[3 * c + 1] == 1.5);
      CHECK(b.data()[3 * c + 2] == 1.5);
    }
  }
  {
    // permuting (xn, xsym) jointly permutes the broadcast array jointly
    std::size_t n = 3;
    GroupSpec spec = GroupSpec::joint(n);
    DenseArray xsym = random_symmetric(NoiseSource{9, 0, 0}, n);
    DenseArray xn = random_array(NoiseSource{10, 0, 0}, {n});
    DenseArray base = broadcast_vertex(std::span(xn.data()), xsym);
    for_each_element(spec, [&](const PermTuple& g) {
      DenseArray pn =
          act(PermTuple::single(g.parts[0]), xn, GroupSpec::seq(n));
      DenseArray moved = broadcast_vertex(std::span(pn.data()),
                                          act(g, xsym, spec));
      CHECK(moved == act(g, base, spec));
    });
  }
  DenseArray asym = DenseArray::matrix({{0.0, 1.0}, {2.0, 0.0}});
  std::vector<double> xn{1.0, 2.0};
  CHECK_THROWS_AS(broadcast_vertex(xn, asym), std::invalid_argument);
  std::vector<double> wrong{1.0};
  DenseArray sym = DenseArray::matrix({{0.0, 1.0}, {1.0, 0.0}});
  CHECK_THROWS_AS(broadcast_vertex(wrong, sym), std::invalid_argument);
}

TEST_CASE("orbit law pmf: urn-law counts over the group order") {
  {
    DiscreteDist d = orbit_law_pmf(DenseArray::vector({1.0, 2.0}),
                                   GroupSpec::seq(2));
    CHECK(d.support.size() == 2);
    CHECK(d.pmf == std::vector<double>{0.5, 0.5});
  }
  {
    DiscreteDist d = orbit_law_pmf(DenseArray::vector({1.0, 1.0}),
                                   GroupSpec::seq(2));
    CHECK(d.support.size() == 1);
    CHECK(d.pmf == std::vector<double>{1.0});
  }
  {
    DiscreteDist d = orbit_law_pmf(DenseArray::vector({1.0, 1.0, 2.0}),
                                   GroupSpec::seq(3));
    CHECK(d.support.size() == 3);
    std::size_t total = 0;
    for (std::size_t c : d.counts) {
      CHECK(c == 2);  // stabilizer of the duplicate pair
      total += c;
    }
    CHECK(total == d.group_order);  // exact rational mass before division
    double mass = 0.0;
    for (double p : d.pmf) {
      CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
      CHECK(p >= 0.0);
      mass += p;
    }
    CHECK(std::fabs(mass - 1.0) <= 1e-12);
  }
}

TEST_CASE("orbit law sampling matches the exact pmf") {
  NoiseSource src{31, 0, 0};
  {
    DenseArray rep = DenseArray::vector({4.0, 4.0});
    auto [draw, next] = orbit_law_sample(rep, GroupSpec::seq(2), src);
    CHECK(draw == rep);  // constant representative is a fixed point
    src = next;
  }
  auto frequencies = [&](const DenseArray& rep, std::size_t n_draws) {
    std::map<std::vector<double>, double> freq;
    GroupSpec spec = GroupSpec::seq(rep.size());
    for (std::size_t i = 0; i < n_draws; ++i) {
      auto [draw, next] = orbit_law_sample(rep, spec, src);
      src = next;
      freq[draw.data()] += 1.0;
    }
    for (auto& [k, v] : freq) v /= static_cast<double>(n_draws);
    return freq;
  };
  {
    auto freq = frequencies(DenseArray::vector({1.0, 2.0}), 100000);
    CHECK(freq.size() == 2);
    for (const auto& [k, f] : freq) CHECK(std::fabs(f - 0.5) < 0.005);
  }
  {
    auto freq = frequencies(DenseArray::vector({1.0, 1.0, 2.0}), 100000);
    CHECK(freq.size() == 3);
    for (const auto& [k, f] : freq) CHECK(std::fabs(f - 1.0 / 3.0) < 0.005);
  }
}

TEST_CASE("semigroup folds and merges") {
  std::vector<double> x{1.0, 5.0, 3.0};
  CHECK(semigroup_fold(x, SemigroupOp::Max).value ==
        std::vector<double>{5.0});
  CHECK(semigroup_fold(x, SemigroupOp::Min).value ==
        std::vector<double>{1.0});
  CHECK(semigroup_fold(x, SemigroupOp::Sum).value ==
        std::vector<double>{9.0});

  // merge(fold(1,5), fold(3)) = fold(1,5,3)
  std::span<const double> all(x);
  for (SemigroupOp op : {SemigroupOp::Sum, SemigroupOp::Max, SemigroupOp::Min,
                         SemigroupOp::Product, SemigroupOp::Multiset})
    CHECK(semigroup_merge(semigroup_fold(all.subspan(0, 2), op),
                          semigroup_fold(all.subspan(2), op)) ==
          semigroup_fold(all, op));

  // the multiset fold is the empirical measure
  SemigroupStat ms = semigroup_fold(x, SemigroupOp::Multiset);
  EmpiricalMeasure m = empirical_measure(x);
  REQUIRE(ms.value.size() == m.entries.size());
  for (std::size_t i = 0; i < ms.value.size(); ++i)
    CHECK(ms.value[i] == m.entries[i][0]);

  std::vector<double> empty;
  CHECK_THROWS_AS(semigroup_fold(empty, SemigroupOp::Max),
                  std::invalid_argument);
  CHECK_NOTHROW(semigroup_fold(empty, SemigroupOp::Sum));

  // encoded fold: log transform under summation
  SemigroupStat logsum = semigroup_fold(
      x, [](double v) { return std::log(v); }, SemigroupOp::Sum);
  CHECK(logsum.value[0] ==
        doctest::Approx(std::log(1.0) + std::log(5.0) + std::log(3.0)));
}

TEST_CASE("semigroup folds are permutation-invariant, exhaustively to n=5") {
  // integer-valued inputs keep the sums exact under reordering
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
        CHECK(semigroup_fold(std::span<const double>(px.data()), op) == ref);
      });
    }
  }
}
