#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "centraprune/matrix.hpp"

namespace centraprune {

struct Dataset {
  Matrix x;            // examples x features
  std::vector<int> y;  // labels in [0, num_classes)
  int num_classes = 0;

  std::size_t size() const { return x.rows(); }
  std::size_t features() const { return x.cols(); }
};

// Gaussian class blobs: one random center per class, unit-scatter points
// around it scaled by `noise`. Labels are balanced round-robin.
Dataset make_blobs(std::size_t examples, std::size_t features, int classes,
                   double noise, std::uint64_t seed);

// Concentric rings in the first two feature dimensions (class c sits at
// radius c + 1); any extra dimensions carry pure noise. Harder than blobs
// because no single hyperplane separates the classes.
Dataset make_rings(std::size_t examples, std::size_t features, int classes,
                   double noise, std::uint64_t seed);

// Splits one generated pool into a train/test pair. Both halves come from
// the same draw (same blob centers, same ring geometry); generating the two
// sides with different seeds would silently produce two different tasks.
std::pair<Dataset, Dataset> split_dataset(const Dataset& all,
                                          std::size_t train_count);

// Dataset directory: `x` and `y` tensor files plus `meta.json` holding
// {"num_classes": int}. Labels travel as float64 (the tensor container has no
// integer dtype) and are checked for integrality on load.
Dataset read_dataset(const std::filesystem::path& dir);
void write_dataset(const std::filesystem::path& dir, const Dataset& data);

}  // namespace centraprune
