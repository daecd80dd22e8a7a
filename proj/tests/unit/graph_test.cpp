#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "../common/test_util.hpp"
#include "centraprune/graph.hpp"

using namespace centraprune;
using testing::random_matrix;

namespace {

Matrix from_columns(const std::vector<std::vector<double>>& cols) {
  Matrix m(cols[0].size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t r = 0; r < cols[j].size(); ++r) {
      m(r, j) = cols[j][r];
    }
  }
  return m;
}

std::set<std::pair<std::uint32_t, std::uint32_t>> edge_set(
    const SimilarityGraph& g) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> s;
  for (const Edge& e : g.edges()) s.insert({e.i, e.j});
  return s;
}

}  // namespace

TEST_CASE("normalize_columns scales to unit norm") {
  Matrix w = from_columns({{3.0, 4.0}, {0.0, 0.0}, {5.0, 0.0}});
  Matrix w_hat = normalize_columns(w, 1e-8);

  CHECK(w_hat(0, 0) == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(w_hat(1, 0) == doctest::Approx(0.8).epsilon(1e-7));

  // zero column stays zero
  CHECK(w_hat(0, 1) == 0.0);
  CHECK(w_hat(1, 1) == 0.0);

  // the +epsilon denominator keeps norms strictly below 1
  double norm2 = w_hat(0, 2) * w_hat(0, 2) + w_hat(1, 2) * w_hat(1, 2);
  CHECK(norm2 < 1.0);
  CHECK(std::sqrt(norm2) > 1.0 - 10.0 * 1e-8);
}

TEST_CASE("normalize_columns rejects non-finite input") {
  Matrix w(2, 2);
  w(0, 0) = std::nan("");
  try {
    normalize_columns(w, 1e-8);
    FAIL("expected NonFiniteInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFiniteInput);
  }
}

TEST_CASE("similarity matrix hits the textbook angles") {
  double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Matrix w_hat = from_columns({{1.0, 0.0},
                               {1.0, 0.0},
                               {0.0, 1.0},
                               {inv_sqrt2, inv_sqrt2}});
  SimilarityMatrix s = similarity_matrix(w_hat);

  CHECK(s.s(0, 1) == doctest::Approx(1.0));       // identical
  CHECK(s.s(0, 2) == doctest::Approx(0.0));       // orthogonal
  CHECK(s.s(0, 3) == doctest::Approx(inv_sqrt2).epsilon(1e-12));  // 45 degrees

  for (std::size_t i = 0; i < s.n; ++i) {
    CHECK(s.s(i, i) == 1.0);
    for (std::size_t j = 0; j < s.n; ++j) {
      CHECK(s.s(i, j) == s.s(j, i));
      CHECK(s.s(i, j) <= 1.0);
      CHECK(s.s(i, j) >= -1.0);
    }
  }
}

TEST_CASE("similarity entries match the per-pair cosine oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t d = 2 + rng.uniform_int(6);
    std::size_t n = 2 + rng.uniform_int(19);  // n <= 20
    Matrix w = random_matrix(rng, d, n, -2.0, 2.0);
    double epsilon = 1e-8;
    SimilarityMatrix s = similarity_matrix(normalize_columns(w, epsilon));

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double expect = w.column_dot(i, j) /
                        ((w.column_norm(i) + epsilon) *
                         (w.column_norm(j) + epsilon));
        CHECK(std::abs(s.s(i, j) - expect) < 1e-12);
      }
    }
  }
}

TEST_CASE("build_graph thresholds edges") {
  SimilarityMatrix s;
  s.n = 3;
  s.s = Matrix(3, 3);
  double vals[3][3] = {{1, 1, 0}, {1, 1, 0}, {0, 0, 1}};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) s.s(i, j) = vals[i][j];
  }

  SimilarityGraph g = build_graph(s, 0.5);
  auto edges = g.edges();
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].i == 0);
  CHECK(edges[0].j == 1);
  CHECK(edges[0].weight == 1.0);
  CHECK(g.degree(2) == 0);

  SUBCASE("threshold above every off-diagonal empties the edge set") {
    s.s(0, 1) = s.s(1, 0) = 0.8;
    SimilarityGraph empty = build_graph(s, 0.999);
    CHECK(empty.edge_count() == 0);
  }

  SUBCASE("negative or >= 1 threshold is invalid") {
    for (double tau : {-0.1, 1.0, 1.5}) {
      try {
        build_graph(s, tau);
        FAIL("expected InvalidThreshold");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kInvalidThreshold);
      }
    }
  }
}

TEST_CASE("raising tau never adds edges") {
  Rng rng(13);
  Matrix w = random_matrix(rng, 6, 15, -1.0, 1.0);
  std::vector<double> taus = {0.0, 0.2, 0.5, 0.8};
  std::vector<std::set<std::pair<std::uint32_t, std::uint32_t>>> sets;
  for (double tau : taus) {
    sets.push_back(edge_set(build_layer_graph(w, tau)));
  }
  for (std::size_t i = 1; i < sets.size(); ++i) {
    CHECK(std::includes(sets[i - 1].begin(), sets[i - 1].end(),
                        sets[i].begin(), sets[i].end()));
  }
}

TEST_CASE("graph construction is permutation equivariant") {
  Rng rng(17);
  std::size_t n = 12;
  Matrix w = random_matrix(rng, 5, n, -1.0, 1.0);
  double tau = 0.3;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);

  Matrix permuted(w.rows(), n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t r = 0; r < w.rows(); ++r) {
      permuted(r, j) = w(r, perm[j]);
    }
  }

  // relabel the base graph's edges through the permutation
  std::vector<std::size_t> inverse(n);
  for (std::size_t j = 0; j < n; ++j) inverse[perm[j]] = j;

  auto base = build_layer_graph(w, tau).edges();
  std::set<std::pair<std::uint32_t, std::uint32_t>> relabeled;
  for (const Edge& e : base) {
    auto a = static_cast<std::uint32_t>(inverse[e.i]);
    auto b = static_cast<std::uint32_t>(inverse[e.j]);
    relabeled.insert({std::min(a, b), std::max(a, b)});
  }

  CHECK(edge_set(build_layer_graph(permuted, tau)) == relabeled);
}

TEST_CASE("edge sets are stable under column rescaling") {
  Rng rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    std::size_t n = 10;
    Matrix w = random_matrix(rng, 4, n, -1.0, 1.0);
    // keep norms comfortably above the 1e-3 regime the bound needs
    for (std::size_t j = 0; j < n; ++j) {
      REQUIRE(w.column_norm(j) >= 1e-3);
    }
    SimilarityMatrix s = similarity_matrix(normalize_columns(w, 1e-8));

    Matrix scaled = w;
    double alpha = rng.uniform(1.0, 100.0);
    std::size_t target = rng.uniform_int(n);
    for (std::size_t r = 0; r < w.rows(); ++r) scaled(r, target) *= alpha;
    SimilarityMatrix s2 = similarity_matrix(normalize_columns(scaled, 1e-8));

    double max_delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        max_delta = std::max(max_delta, std::abs(s.s(i, j) - s2.s(i, j)));
      }
    }
    CHECK(max_delta < 1e-4);

    // pick a tau with margin >= 1e-3 from every entry, then compare edges
    double tau = 0.5;
    bool has_margin = true;
    for (std::size_t i = 0; i < n && has_margin; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (std::abs(s.s(i, j) - tau) < 1e-3) {
          has_margin = false;
          break;
        }
      }
    }
    if (has_margin) {
      CHECK(edge_set(build_graph(s, tau)) == edge_set(build_graph(s2, tau)));
    }
  }
}

TEST_CASE("zero-norm neurons are isolated") {
  Matrix w = from_columns({{1.0, 0.0}, {0.9, 0.1}, {0.0, 0.0}});
  SimilarityGraph g = build_layer_graph(w, 0.2);
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 1);
  CHECK(g.degree(2) == 0);
}
