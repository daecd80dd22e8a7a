#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "centraprune/errors.hpp"
#include "centraprune/matrix.hpp"

namespace centraprune {

enum class Dtype { kFloat32, kFloat64 };

const char* to_string(Dtype dtype);
std::size_t element_size(Dtype dtype);

// Single-tensor container. Values are held as float64 regardless of the file
// dtype; float32 payloads are widened on load and narrowed again on write,
// which round-trips bitwise because every float32 is exactly representable
// as a float64.
struct TensorFile {
  std::vector<std::uint64_t> shape;
  Dtype dtype = Dtype::kFloat64;
  std::vector<double> data;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

// File layout, bit-exact:
//   bytes 0-5   magic "\x93CPRUN"
//   byte  6     format version 0x01
//   bytes 7-8   header length H as little-endian u16
//   bytes 9..   ASCII header "dtype=<f32|f64>;shape=<d0,d1,...>;" padded
//               with spaces so the payload starts 16-byte aligned
//   remainder   raw little-endian row-major payload
TensorFile read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const TensorFile& t);

enum class Activation { kRelu, kLinear, kSoftmax };

const char* to_string(Activation a);
Activation parse_activation(const std::string& tag);

// One dense layer: weights [d, n] with neurons as columns, plus its bias.
struct LayerBundle {
  std::string name;
  Activation activation = Activation::kLinear;
  Matrix weights;            // d x n
  std::vector<double> bias;  // n

  std::size_t input_dim() const { return weights.rows(); }
  std::size_t neuron_count() const { return weights.cols(); }
};

// Layer directory: `weights` and `bias` tensor files plus a `meta` JSON
// manifest {"name": str, "activation": str, "d": int, "n": int}.
LayerBundle read_layer(const std::filesystem::path& dir);
void write_layer(const std::filesystem::path& dir, const LayerBundle& layer);

Matrix tensor_to_matrix(const TensorFile& t);
TensorFile matrix_to_tensor(const Matrix& m, Dtype dtype = Dtype::kFloat64);
TensorFile vector_to_tensor(const std::vector<double>& v,
                            Dtype dtype = Dtype::kFloat64);

// Writes `text` to a temporary sibling and renames it into place, so readers
// never observe a partially written file.
void atomic_write_text(const std::filesystem::path& path,
                       const std::string& text);

}  // namespace centraprune
