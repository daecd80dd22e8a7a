#include "centraprune/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace centraprune {

Matrix normalize_columns(const Matrix& w, double epsilon) {
  if (epsilon <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  }
  if (!w.all_finite()) {
    throw Error(ErrorCode::kNonFiniteInput,
                "weight matrix contains NaN or Inf");
  }
  Matrix out(w.rows(), w.cols());
  for (std::size_t j = 0; j < w.cols(); ++j) {
    double inv = 1.0 / (w.column_norm(j) + epsilon);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      out(r, j) = w(r, j) * inv;
    }
  }
  return out;
}

SimilarityMatrix similarity_matrix(const Matrix& w_hat) {
  std::size_t n = w_hat.cols();
  SimilarityMatrix sim;
  sim.n = n;
  sim.s = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    // The diagonal would be (||w||/(||w||+eps))^2, a hair under 1; pin it to
    // exactly 1 for nonzero neurons since Eq. (3) drops i == j regardless.
    sim.s(i, i) = w_hat.column_dot(i, i) > 0.0 ? 1.0 : 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = std::clamp(w_hat.column_dot(i, j), -1.0, 1.0);
      sim.s(i, j) = v;
      sim.s(j, i) = v;
    }
  }
  return sim;
}

SimilarityGraph build_graph(const SimilarityMatrix& s, double tau,
                            double epsilon) {
  if (tau < 0.0 || tau >= 1.0) {
    throw Error(ErrorCode::kInvalidThreshold,
                "tau must lie in [0, 1), got " + std::to_string(tau));
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t j = i + 1; j < s.n; ++j) {
      if (s.s(i, j) > tau) {
        edges.push_back({static_cast<std::uint32_t>(i),
                         static_cast<std::uint32_t>(j), s.s(i, j)});
      }
    }
  }
  return SimilarityGraph::from_edges(s.n, edges, tau, epsilon);
}

SimilarityGraph build_layer_graph(const Matrix& weights, double tau,
                                  double epsilon) {
  return build_graph(similarity_matrix(normalize_columns(weights, epsilon)),
                     tau, epsilon);
}

SimilarityGraph SimilarityGraph::from_edges(std::size_t n,
                                            std::span<const Edge> edges,
                                            double tau, double epsilon) {
  if (tau < 0.0 || tau >= 1.0) {
    throw Error(ErrorCode::kInvalidThreshold,
                "tau must lie in [0, 1), got " + std::to_string(tau));
  }
  SimilarityGraph g;
  g.n_ = n;
  g.tau_ = tau;
  g.epsilon_ = epsilon;

  std::vector<std::size_t> deg(n, 0);
  for (const Edge& e : edges) {
    if (e.i >= n || e.j >= n || e.i == e.j) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                      ") is not a valid off-diagonal pair for n = " +
                      std::to_string(n));
    }
    if (!(e.weight > tau)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge weight " + std::to_string(e.weight) +
                      " does not exceed tau");
    }
    ++deg[e.i];
    ++deg[e.j];
  }

  g.offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    g.offsets_[i + 1] = g.offsets_[i] + deg[i];
  }
  g.cols_.resize(g.offsets_[n]);
  g.weights_.resize(g.offsets_[n]);

  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const Edge& e : edges) {
    g.cols_[cursor[e.i]] = e.j;
    g.weights_[cursor[e.i]++] = e.weight;
    g.cols_[cursor[e.j]] = e.i;
    g.weights_[cursor[e.j]++] = e.weight;
  }

  // Sort each row by column so traversal order is canonical.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = g.offsets_[i], hi = g.offsets_[i + 1];
    std::vector<std::pair<std::uint32_t, double>> row;
    row.reserve(hi - lo);
    for (std::size_t k = lo; k < hi; ++k) {
      row.emplace_back(g.cols_[k], g.weights_[k]);
    }
    std::sort(row.begin(), row.end());
    for (std::size_t k = lo; k < hi; ++k) {
      if (k > lo && row[k - lo].first == row[k - lo - 1].first) {
        throw Error(ErrorCode::kInvalidArgument,
                    "duplicate edge at node " + std::to_string(i));
      }
      g.cols_[k] = row[k - lo].first;
      g.weights_[k] = row[k - lo].second;
    }
  }
  return g;
}

void SimilarityGraph::multiply(std::span<const double> in,
                               std::span<double> out) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      acc += weights_[k] * in[cols_[k]];
    }
    out[i] = acc;
  }
}

std::vector<Edge> SimilarityGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      if (cols_[k] > i) {
        out.push_back({static_cast<std::uint32_t>(i), cols_[k], weights_[k]});
      }
    }
  }
  return out;
}

}  // namespace centraprune
