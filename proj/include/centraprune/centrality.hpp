#pragma once

#include <cstddef>
#include <vector>

#include "centraprune/graph.hpp"

namespace centraprune {

inline constexpr double kDefaultTolerance = 1e-10;
inline constexpr int kDefaultMaxIterations = 1000;

struct CentralityScores {
  std::vector<double> scores;  // nonnegative, unit L2 norm when any nonzero
  double lambda = 0.0;         // dominant eigenvalue estimate, >= 0
  int iterations = 0;
  bool converged = false;
};

// Power iteration for the dominant eigenpair of the adjacency matrix:
// uniform start, L2 renormalization each step, convergence declared when the
// relative residual ||A c - lambda c|| <= tol * lambda. When max_iter runs
// out the best-so-far vector is returned with converged = false (bipartite
// components make this genuinely reachable: their -lambda eigenvalue keeps
// the iterates oscillating).
//
// Post-processing: the vector is sign-flipped to nonnegative orientation,
// rounding-level negatives are clamped to 0, and components whose scores all
// decayed below 1e-9 are zeroed outright, so isolated neurons score exactly 0.
CentralityScores eigenvector_centrality(const SimilarityGraph& g,
                                        double tol = kDefaultTolerance,
                                        int max_iter = kDefaultMaxIterations);

// Neuron indices in ascending score order, ties broken by ascending index.
std::vector<std::size_t> rank_neurons(const CentralityScores& c);

}  // namespace centraprune
