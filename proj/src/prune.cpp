#include "centraprune/prune.hpp"

#include <algorithm>
#include <cmath>

namespace centraprune {

namespace {

void check_ratio(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw Error(ErrorCode::kInvalidRatio,
                "pruning ratio must lie in (0, 1), got " + std::to_string(p));
  }
}

PrunePlan plan_from_ranking(const std::vector<std::size_t>& ranking, double p,
                            std::size_t n) {
  PrunePlan plan;
  plan.n = n;
  plan.p = p;
  plan.k = pruned_count(p, n);
  plan.no_op = plan.k == 0;

  plan.pruned.assign(ranking.begin(),
                     ranking.begin() + static_cast<std::ptrdiff_t>(plan.k));
  plan.kept.assign(ranking.begin() + static_cast<std::ptrdiff_t>(plan.k),
                   ranking.end());
  std::sort(plan.pruned.begin(), plan.pruned.end());
  std::sort(plan.kept.begin(), plan.kept.end());
  return plan;
}

}  // namespace

std::size_t pruned_count(double p, std::size_t n) {
  return static_cast<std::size_t>(
      std::floor(p * static_cast<double>(n) + 1e-9));
}

PrunePlan make_plan(const CentralityScores& c, double p,
                    const PlanParams& params) {
  check_ratio(p);
  if (c.scores.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "plan needs at least one score");
  }
  PrunePlan plan = plan_from_ranking(rank_neurons(c), p, c.scores.size());
  plan.params = params;
  plan.scores = c;
  plan.method = "centrality";
  return plan;
}

PrunePlan magnitude_plan(const LayerBundle& layer, double p) {
  check_ratio(p);
  std::size_t n = layer.neuron_count();
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "layer has no neurons");
  }

  CentralityScores norms;
  norms.scores.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    norms.scores[j] = layer.weights.column_norm(j);
  }
  norms.converged = true;

  PrunePlan plan = plan_from_ranking(rank_neurons(norms), p, n);
  plan.scores = std::move(norms);
  plan.method = "magnitude";
  return plan;
}

PrunedLayer apply_plan(const LayerBundle& layer, const PrunePlan& plan) {
  if (plan.n != layer.neuron_count()) {
    throw Error(ErrorCode::kPlanMismatch,
                "plan covers " + std::to_string(plan.n) +
                    " neurons but layer has " +
                    std::to_string(layer.neuron_count()));
  }
  std::size_t d = layer.input_dim();
  PrunedLayer out;
  out.kept = plan.kept;
  out.weights = Matrix(d, plan.kept.size());
  out.bias.resize(plan.kept.size());
  for (std::size_t m = 0; m < plan.kept.size(); ++m) {
    std::size_t src = plan.kept[m];
    for (std::size_t r = 0; r < d; ++r) {
      out.weights(r, m) = layer.weights(r, src);
    }
    out.bias[m] = layer.bias[src];
  }
  return out;
}

Matrix slice_downstream(const Matrix& next_weights, const PrunePlan& plan) {
  if (next_weights.rows() != plan.n) {
    throw Error(ErrorCode::kPlanMismatch,
                "consumer expects " + std::to_string(next_weights.rows()) +
                    " inputs but plan covers " + std::to_string(plan.n) +
                    " neurons");
  }
  Matrix out(plan.kept.size(), next_weights.cols());
  for (std::size_t r = 0; r < plan.kept.size(); ++r) {
    for (std::size_t c = 0; c < next_weights.cols(); ++c) {
      out(r, c) = next_weights(plan.kept[r], c);
    }
  }
  return out;
}

}  // namespace centraprune
