#include "centraprune/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace centraprune {

namespace {

double norm2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

// Zeroes every connected component whose scores all decayed below the cutoff.
// Components are independent under A, so this leaves the residual of the kept
// part untouched and removes the non-dominant remnants exactly.
void zero_decayed_components(const SimilarityGraph& g,
                             std::vector<double>& scores, double cutoff) {
  std::size_t n = g.node_count();
  std::vector<int> component(n, -1);
  int num_components = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    int id = num_components++;
    component[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (std::uint32_t v : g.neighbors(u)) {
        if (component[v] < 0) {
          component[v] = id;
          stack.push_back(v);
        }
      }
    }
  }

  std::vector<double> max_score(static_cast<std::size_t>(num_components), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    max_score[component[i]] = std::max(max_score[component[i]], scores[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (max_score[component[i]] < cutoff) scores[i] = 0.0;
  }
}

}  // namespace

CentralityScores eigenvector_centrality(const SimilarityGraph& g, double tol,
                                        int max_iter) {
  std::size_t n = g.node_count();
  if (n == 0) {
    throw Error(ErrorCode::kEmptyGraph, "graph has no nodes");
  }
  if (tol <= 0.0 || max_iter < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "tol must be > 0 and max_iter >= 1");
  }

  CentralityScores result;
  if (g.edge_count() == 0) {
    result.scores.assign(n, 0.0);
    result.lambda = 0.0;
    result.iterations = 0;
    result.converged = true;
    return result;
  }

  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> av(n, 0.0);
  double lambda = 0.0;

  for (int it = 1; it <= max_iter; ++it) {
    g.multiply(v, av);
    lambda = std::inner_product(v.begin(), v.end(), av.begin(), 0.0);

    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = av[i] - lambda * v[i];
      residual += r * r;
    }
    residual = std::sqrt(residual);

    result.iterations = it;
    if (lambda > 0.0 && residual <= tol * lambda) {
      result.converged = true;
      break;
    }
    // keep the (v, lambda) pair the residual was measured on, so the
    // best-so-far result of a non-convergent run is self-consistent
    if (it == max_iter) break;

    double nrm = norm2(av);
    if (nrm == 0.0) {
      // A v vanished: v lives in the null space. With a positive start this
      // only happens when every positive-degree node cancelled out, which a
      // nonnegative A cannot do, so treat it as a degenerate all-zero result.
      std::fill(v.begin(), v.end(), 0.0);
      lambda = 0.0;
      result.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = av[i] / nrm;
  }

  // Nonnegative orientation: flip so the sum is >= 0, then clamp rounding
  //-level negatives.
  double sum = std::accumulate(v.begin(), v.end(), 0.0);
  if (sum < 0.0) {
    for (double& x : v) x = -x;
  }
  for (double& x : v) {
    if (x < 0.0 && x >= -1e-12) x = 0.0;
  }

  zero_decayed_components(g, v, 1e-9);

  double nrm = norm2(v);
  if (nrm > 0.0) {
    for (double& x : v) x /= nrm;
  }

  result.scores = std::move(v);
  result.lambda = std::max(lambda, 0.0);
  return result;
}

std::vector<std::size_t> rank_neurons(const CentralityScores& c) {
  if (c.scores.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no scores to rank");
  }
  std::vector<std::size_t> order(c.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (c.scores[a] != c.scores[b]) return c.scores[a] < c.scores[b];
    return a < b;
  });
  return order;
}

}  // namespace centraprune
