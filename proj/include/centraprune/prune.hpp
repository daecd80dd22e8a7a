#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "centraprune/centrality.hpp"
#include "centraprune/tensor_io.hpp"

namespace centraprune {

struct PlanParams {
  double tau = 0.0;
  double epsilon = kDefaultEpsilon;
  double tol = kDefaultTolerance;
};

// Which neurons go and which stay, plus everything needed to audit the
// decision. `pruned` is exactly the first k entries of the ascending
// centrality ranking; both index lists are sorted ascending.
struct PrunePlan {
  std::size_t n = 0;
  double p = 0.0;
  std::size_t k = 0;
  std::vector<std::size_t> pruned;
  std::vector<std::size_t> kept;
  PlanParams params;
  CentralityScores scores;   // centrality scores, or column norms for the
                             // magnitude baseline
  std::string method = "centrality";
  bool no_op = false;        // k == 0: legal, flagged so sweeps never abort
};

struct PrunedLayer {
  Matrix weights;                 // d x (n - k)
  std::vector<double> bias;       // n - k
  std::vector<std::size_t> kept;  // new column -> original column
};

// k = floor(p * n) over the bottom of the ascending ranking. p must lie in
// (0, 1); k == 0 yields a no-op plan rather than an error.
PrunePlan make_plan(const CentralityScores& c, double p,
                    const PlanParams& params = {});

// Slices the kept columns of the weight matrix and the kept bias entries.
// Pure copying: output column m is bitwise-identical to input column kept[m].
PrunedLayer apply_plan(const LayerBundle& layer, const PrunePlan& plan);

// Removes the consumer's input rows that correspond to pruned neurons, so the
// rebuilt network stays dimensionally consistent. Row r of the output is
// bitwise row plan.kept[r] of the input.
Matrix slice_downstream(const Matrix& next_weights, const PrunePlan& plan);

// Structured magnitude baseline: prune the k neurons with the smallest
// column L2 norm, ties by ascending index. The plan's scores hold the norms.
PrunePlan magnitude_plan(const LayerBundle& layer, double p);

// floor(p * n) with a one-ulp guard so products like 0.35 * 180 that land a
// few ulps under the intended integer still floor to it.
std::size_t pruned_count(double p, std::size_t n);

}  // namespace centraprune
