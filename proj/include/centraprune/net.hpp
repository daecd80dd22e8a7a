#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "centraprune/dataset.hpp"
#include "centraprune/prune.hpp"
#include "centraprune/tensor_io.hpp"

namespace centraprune {

// Feed-forward classifier: one or more dense layers (relu or linear) chained
// into a softmax head. Dimensions chain: layer i's neuron count feeds layer
// i+1's input, and the last hidden layer feeds the head.
struct MlpModel {
  std::vector<LayerBundle> layers;
  LayerBundle head;
  std::uint64_t rng_seed = 0;

  std::size_t input_dim() const {
    return layers.empty() ? head.input_dim() : layers.front().input_dim();
  }
  std::size_t num_classes() const { return head.neuron_count(); }
};

struct TrainConfig {
  int epochs = 1;
  int batch_size = 32;
  double learning_rate = 0.1;
  std::uint64_t rng_seed = 0;
};

struct TrainResult {
  std::vector<double> loss_history;  // one mean cross-entropy per epoch
};

// Per-parameter gradients, aligned with model.layers plus the head last.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;
};

// Glorot-uniform initialized model with named layers dense0, dense1, ...,
// head. All randomness comes from the seed.
MlpModel make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                  std::size_t classes, std::uint64_t seed);

void validate_model(const MlpModel& m);

// Class probabilities, one row per example; every row sums to 1.
Matrix forward(const MlpModel& m, const Matrix& x);

// Head pre-activations, before the softmax.
Matrix forward_logits(const MlpModel& m, const Matrix& x);

// Mean cross-entropy over the batch; fills `grads` when non-null.
double loss_and_gradients(const MlpModel& m, const Matrix& x,
                          std::span<const int> y, Gradients* grads);

// Plain mini-batch SGD, one shuffle stream per call seeded by cfg.rng_seed.
// Mutates the model in place and throws NonFiniteLoss on divergence.
TrainResult train(MlpModel& m, const Dataset& data, const TrainConfig& cfg);

// Top-1 accuracy; argmax ties resolve to the lowest class index.
double evaluate(const MlpModel& m, const Dataset& data);

// Replaces the named hidden layer with its pruned version and slices the
// consumer's input rows to match, restoring the dimension chain.
MlpModel rebuild_with_plan(const MlpModel& m, const std::string& layer_name,
                           const PrunePlan& plan);

std::size_t parameter_count(const MlpModel& m);

// Model directory: model.json manifest plus one layer directory per entry.
MlpModel read_model(const std::filesystem::path& dir);
void write_model(const std::filesystem::path& dir, const MlpModel& m);

}  // namespace centraprune
