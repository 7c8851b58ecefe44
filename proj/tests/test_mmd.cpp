#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "da/error.hpp"
#include "da/mmd.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using da::Matrix;
using da::mmd::KernelKind;
using da::mmd::KernelSpec;

TEST_CASE("linear MMD of a sample with itself is zero") {
  Matrix x = test_util::random_matrix(8, 3, 5);
  CHECK(da::mmd::mmd_linear(x, x) == 0.0);
}

TEST_CASE("linear MMD of singletons is the point distance") {
  Matrix a(1, 2), b(1, 2);
  a << 1, 0;
  b << 0, 1;
  CHECK(da::mmd::mmd_linear(a, b) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("linear MMD is the distance between means") {
  Matrix a(2, 1), b(2, 1);
  a << 0, 2;
  b << 1, 3;
  CHECK(da::mmd::mmd_linear(a, b) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("linear MMD rejects mismatched or empty input") {
  Matrix a = test_util::random_matrix(3, 2, 1);
  Matrix b = test_util::random_matrix(3, 3, 2);
  CHECK_THROWS_AS(da::mmd::mmd_linear(a, b), da::InvalidArgumentError);
  CHECK_THROWS_AS(da::mmd::mmd_linear(Matrix(0, 2), a),
                  da::InvalidArgumentError);
}

TEST_CASE("biased kernel MMD^2 of identical samples is zero") {
  Matrix x = test_util::random_matrix(7, 4, 9);
  for (auto kind : {KernelKind::Linear, KernelKind::Rbf}) {
    KernelSpec spec{kind, 0.7};
    CHECK(std::abs(da::mmd::mmd2_kernel(x, x, spec, false)) < 1e-12);
  }
}

TEST_CASE("rbf MMD^2 of two singletons expands in closed form") {
  Matrix a(1, 3), b(1, 3);
  a << 1, 2, 3;
  b << 2, 0, 3;
  const double gamma = 0.3;
  const double d2 = (a - b).squaredNorm();
  KernelSpec spec{KernelKind::Rbf, gamma};
  CHECK(da::mmd::mmd2_kernel(a, b, spec, false) ==
        doctest::Approx(2.0 - 2.0 * std::exp(-gamma * d2)).epsilon(1e-14));
}

TEST_CASE("kernel MMD^2 matches the double-loop oracle") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rows_a = Eigen::Index(5 + gen() % 16);
    const auto rows_b = Eigen::Index(5 + gen() % 16);
    const auto dim = Eigen::Index(2 + gen() % 7);
    Matrix a = test_util::random_matrix(rows_a, dim, gen());
    Matrix b = test_util::random_matrix(rows_b, dim, gen());

    for (auto kind : {KernelKind::Linear, KernelKind::Rbf}) {
      for (bool unbiased : {false, true}) {
        KernelSpec spec{kind, 0.4};
        const auto oracle_kind = kind == KernelKind::Linear
                                     ? oracles::Kernel::Linear
                                     : oracles::Kernel::Rbf;
        const double got = da::mmd::mmd2_kernel(a, b, spec, unbiased);
        const double want =
            oracles::mmd2_bruteforce(a, b, oracle_kind, 0.4, unbiased);
        CHECK(std::abs(got - want) < 1e-10);
      }
    }
  }
}

TEST_CASE("unbiased estimator rejects singleton samples") {
  Matrix a = test_util::random_matrix(1, 2, 3);
  Matrix b = test_util::random_matrix(5, 2, 4);
  KernelSpec spec{KernelKind::Linear, 1.0};
  CHECK_THROWS_AS(da::mmd::mmd2_kernel(a, b, spec, true),
                  da::InvalidArgumentError);
}

TEST_CASE("mmd estimators are symmetric, scale-covariant, permutation-invariant") {
  std::mt19937_64 gen(123);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix a = test_util::random_matrix(6, 3, gen());
    Matrix b = test_util::random_matrix(9, 3, gen());

    CHECK(da::mmd::mmd_linear(a, b) ==
          doctest::Approx(da::mmd::mmd_linear(b, a)).epsilon(1e-14));

    const double c = -2.5;
    CHECK(da::mmd::mmd_linear(c * a, c * b) ==
          doctest::Approx(std::abs(c) * da::mmd::mmd_linear(a, b))
              .epsilon(1e-12));

    Matrix shuffled = b;
    shuffled.row(0).swap(shuffled.row(5));
    shuffled.row(2).swap(shuffled.row(8));
    CHECK(da::mmd::mmd_linear(a, shuffled) ==
          doctest::Approx(da::mmd::mmd_linear(a, b)).epsilon(1e-14));

    KernelSpec rbf{KernelKind::Rbf, 0.9};
    CHECK(da::mmd::mmd2_kernel(a, b, rbf, true) ==
          doctest::Approx(da::mmd::mmd2_kernel(b, a, rbf, true))
              .epsilon(1e-12));
    CHECK(da::mmd::mmd2_kernel(a, shuffled, rbf, false) ==
          doctest::Approx(da::mmd::mmd2_kernel(a, b, rbf, false))
              .epsilon(1e-12));
  }
}

TEST_CASE("squared linear MMD equals the linear-kernel biased estimator") {
  std::mt19937_64 gen(321);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = test_util::random_matrix(5 + trial % 4, 4, gen());
    Matrix b = test_util::random_matrix(7, 4, gen());
    const double lin = da::mmd::mmd_linear(a, b);
    const double k = da::mmd::mmd2_kernel(a, b, {KernelKind::Linear, 1.0},
                                          false);
    CHECK(std::abs(lin * lin - k) < 1e-10);
  }
}

TEST_CASE("biased estimator never goes below -1e-12") {
  std::mt19937_64 gen(55);
  for (int trial = 0; trial < 40; ++trial) {
    Matrix a = test_util::random_matrix(4 + trial % 5, 3, gen());
    Matrix b = test_util::random_matrix(6, 3, gen());
    for (auto kind : {KernelKind::Linear, KernelKind::Rbf}) {
      CHECK(da::mmd::mmd2_kernel(a, b, {kind, 1.3}, false) >= -1e-12);
    }
  }
}

TEST_CASE("median heuristic bandwidth is sane") {
  Matrix a(2, 1), b(1, 1);
  a << 0, 2;
  b << 1;
  // pooled distances {1, 2, 1}; median 1 => gamma = 1/2
  CHECK(da::mmd::rbf_median_gamma(a, b) == doctest::Approx(0.5).epsilon(1e-12));

  Matrix same = Matrix::Zero(3, 2);
  CHECK(da::mmd::rbf_median_gamma(same, same) == 1.0);  // degenerate fallback
}

TEST_CASE("mmd reports carry the producing estimator tag") {
  Matrix a = test_util::random_matrix(6, 3, 91);
  Matrix b = test_util::random_matrix(9, 3, 92);

  auto lin = da::mmd::mmd_linear_report(a, b);
  CHECK(lin.estimator == "linear");
  CHECK(lin.value == da::mmd::mmd_linear(a, b));
  CHECK(lin.n_source == 6);
  CHECK(lin.n_target == 9);

  KernelSpec rbf{KernelKind::Rbf, 0.5};
  auto k = da::mmd::mmd2_kernel_report(a, b, rbf, true);
  CHECK(k.estimator == "kernel2_rbf_unbiased");
  CHECK(k.value == da::mmd::mmd2_kernel(a, b, rbf, true));

  auto k2 = da::mmd::mmd2_kernel_report(a, b, {KernelKind::Linear, 1.0}, false);
  CHECK(k2.estimator == "kernel2_linear_biased");
}

TEST_CASE("representation ranking orders by mean shift") {
  std::vector<da::mmd::RepresentationPair> candidates;
  std::mt19937_64 gen(2024);
  for (double shift : {1.0, 0.1, 5.0}) {
    Matrix src = test_util::random_matrix(30, 4, gen());
    Matrix tgt = test_util::random_matrix(30, 4, gen());
    tgt.col(0).array() += shift;
    candidates.push_back({"shift" + std::to_string(shift), src, tgt});
  }

  auto ranked = da::mmd::rank_representations(candidates);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].name == "shift0.100000");
  CHECK(ranked[2].name == "shift5.000000");
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& c = *std::find_if(candidates.begin(), candidates.end(),
                                  [&](const auto& p) {
                                    return p.name == ranked[i].name;
                                  });
    CHECK(ranked[i].mmd ==
          doctest::Approx(da::mmd::mmd_linear(c.source, c.target))
              .epsilon(1e-14));
    if (i > 0) CHECK(ranked[i].mmd >= ranked[i - 1].mmd);
  }
}

TEST_CASE("single candidate ranks first; ties keep input order") {
  Matrix src = test_util::random_matrix(5, 2, 10);
  Matrix tgt = test_util::random_matrix(5, 2, 11);
  auto one = da::mmd::rank_representations({{"only", src, tgt}});
  REQUIRE(one.size() == 1);
  CHECK(one[0].name == "only");

  auto tied = da::mmd::rank_representations(
      {{"first", src, tgt}, {"second", src, tgt}});
  CHECK(tied[0].name == "first");
  CHECK(tied[1].name == "second");

  CHECK_THROWS_AS(da::mmd::rank_representations({}), da::InvalidArgumentError);
}

TEST_CASE("width selection returns the recomputed argmin") {
  std::mt19937_64 gen(555);
  std::vector<da::mmd::WidthCandidate> results;
  for (int w : {4, 8, 16}) {
    Matrix src = test_util::random_matrix(20, w, gen());
    Matrix tgt = test_util::random_matrix(20, w, gen());
    results.push_back({w, src, tgt});
  }

  int best = results.front().width;
  double best_mmd = oracles::mmd_linear_bruteforce(results[0].source_repr,
                                                   results[0].target_repr);
  for (const auto& r : results) {
    const double v =
        oracles::mmd_linear_bruteforce(r.source_repr, r.target_repr);
    if (v < best_mmd) {
      best_mmd = v;
      best = r.width;
    }
  }
  CHECK(da::mmd::select_width(results) == best);
}

TEST_CASE("width selection tie-breaks toward the smaller width") {
  Matrix src = test_util::random_matrix(6, 3, 77);
  Matrix tgt = test_util::random_matrix(6, 3, 78);
  std::vector<da::mmd::WidthCandidate> results = {{32, src, tgt}, {8, src, tgt}};
  CHECK(da::mmd::select_width(results) == 8);

  CHECK(da::mmd::select_width({{16, src, tgt}}) == 16);
  CHECK_THROWS_AS(da::mmd::select_width({}), da::InvalidArgumentError);
}
