#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "centraprune/errors.hpp"
#include "centraprune/matrix.hpp"

namespace centraprune {

inline constexpr double kDefaultEpsilon = 1e-8;

struct Edge {
  std::uint32_t i = 0;
  std::uint32_t j = 0;  // i < j
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

// Symmetric n x n cosine-similarity matrix over neuron columns. Entries are
// clamped to [-1, 1]; the diagonal is pinned to exactly 1 for nonzero-norm
// neurons (0 for zero neurons) since it never reaches the graph anyway.
struct SimilarityMatrix {
  std::size_t n = 0;
  Matrix s;
};

// Thresholded neuron-similarity graph: undirected, weighted, zero diagonal.
// Stored in compressed sparse rows with both edge directions present so
// matrix-vector products stream one row at a time.
class SimilarityGraph {
 public:
  static SimilarityGraph from_edges(std::size_t n, std::span<const Edge> edges,
                                    double tau, double epsilon);

  std::size_t node_count() const { return n_; }
  std::size_t edge_count() const { return weights_.size() / 2; }
  double tau() const { return tau_; }
  double epsilon() const { return epsilon_; }

  std::size_t degree(std::size_t i) const {
    return offsets_[i + 1] - offsets_[i];
  }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {cols_.data() + offsets_[i], degree(i)};
  }
  std::span<const double> edge_weights(std::size_t i) const {
    return {weights_.data() + offsets_[i], degree(i)};
  }

  // out = A * in, accumulated in fixed column order per row.
  void multiply(std::span<const double> in, std::span<double> out) const;

  // Upper-triangular edge list, sorted lexicographically by (i, j).
  std::vector<Edge> edges() const;

 private:
  std::size_t n_ = 0;
  double tau_ = 0.0;
  double epsilon_ = kDefaultEpsilon;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> weights_;
};

// Column-wise L2 normalization: column j maps to w_j / (||w_j|| + epsilon).
// Zero columns stay zero.
Matrix normalize_columns(const Matrix& w, double epsilon);

// S = W_hat^T W_hat, computed on the upper triangle and mirrored so symmetry
// is exact. The O(n^2 d) pair loop is the dominant cost of the pipeline.
SimilarityMatrix similarity_matrix(const Matrix& w_hat);

// Keeps edge (i, j) iff i != j and s[i][j] > tau. tau must lie in [0, 1):
// negative thresholds would admit negative edge weights and break the
// nonnegativity the centrality stage relies on.
SimilarityGraph build_graph(const SimilarityMatrix& s, double tau,
                            double epsilon = kDefaultEpsilon);

// normalize -> similarity -> threshold in one call.
SimilarityGraph build_layer_graph(const Matrix& weights, double tau,
                                  double epsilon = kDefaultEpsilon);

}  // namespace centraprune
