#include "centraprune/dataset.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <string>

#include "centraprune/errors.hpp"
#include "centraprune/rng.hpp"
#include "centraprune/tensor_io.hpp"

namespace centraprune {

namespace {

void check_task_args(std::size_t examples, std::size_t features, int classes) {
  if (examples == 0 || features == 0 || classes < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "need examples > 0, features > 0 and classes >= 2");
  }
}

}  // namespace

Dataset make_blobs(std::size_t examples, std::size_t features, int classes,
                   double noise, std::uint64_t seed) {
  check_task_args(examples, features, classes);
  Rng rng(seed);

  Matrix centers(static_cast<std::size_t>(classes), features);
  for (auto& v : centers.data()) v = 3.0 * rng.normal();

  Dataset data;
  data.num_classes = classes;
  data.x = Matrix(examples, features);
  data.y.resize(examples);
  for (std::size_t i = 0; i < examples; ++i) {
    int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    data.y[i] = label;
    for (std::size_t f = 0; f < features; ++f) {
      data.x(i, f) = centers(static_cast<std::size_t>(label), f) +
                     noise * rng.normal();
    }
  }
  return data;
}

Dataset make_rings(std::size_t examples, std::size_t features, int classes,
                   double noise, std::uint64_t seed) {
  check_task_args(examples, features, classes);
  if (features < 2) {
    throw Error(ErrorCode::kInvalidArgument, "rings need at least 2 features");
  }
  Rng rng(seed);

  Dataset data;
  data.num_classes = classes;
  data.x = Matrix(examples, features);
  data.y.resize(examples);
  for (std::size_t i = 0; i < examples; ++i) {
    int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    data.y[i] = label;
    double radius = static_cast<double>(label) + 1.0 + noise * rng.normal();
    double angle = 2.0 * std::numbers::pi * rng.uniform();
    data.x(i, 0) = radius * std::cos(angle);
    data.x(i, 1) = radius * std::sin(angle);
    for (std::size_t f = 2; f < features; ++f) {
      data.x(i, f) = noise * rng.normal();
    }
  }
  return data;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& all,
                                          std::size_t train_count) {
  if (train_count == 0 || train_count >= all.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "train split of " + std::to_string(train_count) +
                    " does not leave both halves nonempty");
  }
  Dataset train, test;
  train.num_classes = test.num_classes = all.num_classes;
  std::size_t features = all.features();
  std::size_t test_count = all.size() - train_count;
  train.x = Matrix(train_count, features);
  test.x = Matrix(test_count, features);
  train.y.resize(train_count);
  test.y.resize(test_count);
  for (std::size_t i = 0; i < all.size(); ++i) {
    Dataset& dst = i < train_count ? train : test;
    std::size_t row = i < train_count ? i : i - train_count;
    for (std::size_t c = 0; c < features; ++c) {
      dst.x(row, c) = all.x(i, c);
    }
    dst.y[row] = all.y[i];
  }
  return {std::move(train), std::move(test)};
}

Dataset read_dataset(const std::filesystem::path& dir) {
  auto x_path = dir / "x";
  auto y_path = dir / "y";
  auto meta_path = dir / "meta.json";
  for (const auto& p : {x_path, y_path, meta_path}) {
    if (!std::filesystem::exists(p)) {
      throw Error(ErrorCode::kMissingFile, p.string() + " not found");
    }
  }

  TensorFile xt = read_tensor(x_path);
  TensorFile yt = read_tensor(y_path);
  if (xt.shape.size() != 2 || yt.shape.size() != 1 ||
      xt.shape[0] != yt.shape[0]) {
    throw Error(ErrorCode::kShapeMismatch,
                "dataset needs x [n, d] and y [n] with matching n");
  }

  nlohmann::json meta;
  try {
    std::ifstream in(meta_path);
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader,
                "bad dataset meta in " + dir.string() + ": " + e.what());
  }
  if (!meta.contains("num_classes") || !meta["num_classes"].is_number_integer()) {
    throw Error(ErrorCode::kMalformedHeader,
                "dataset meta in " + dir.string() + " lacks num_classes");
  }

  Dataset data;
  data.num_classes = meta["num_classes"].get<int>();
  data.x = tensor_to_matrix(xt);
  data.y.resize(yt.data.size());
  for (std::size_t i = 0; i < yt.data.size(); ++i) {
    double v = yt.data[i];
    if (v != std::floor(v) || v < 0.0 ||
        v >= static_cast<double>(data.num_classes)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label " + std::to_string(v) + " at row " +
                      std::to_string(i) + " is not a class index");
    }
    data.y[i] = static_cast<int>(v);
  }
  return data;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  write_tensor(dir / "x", matrix_to_tensor(data.x));

  std::vector<double> labels(data.y.size());
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    labels[i] = static_cast<double>(data.y[i]);
  }
  write_tensor(dir / "y", vector_to_tensor(labels));

  nlohmann::ordered_json meta;
  meta["num_classes"] = data.num_classes;
  atomic_write_text(dir / "meta.json", meta.dump(2) + "\n");
}

}  // namespace centraprune
