#include "centraprune/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

namespace centraprune {

namespace {

constexpr char kMagic[6] = {'\x93', 'C', 'P', 'R', 'U', 'N'};
constexpr std::uint8_t kVersion = 0x01;
constexpr std::size_t kAlignment = 16;

static_assert(std::endian::native == std::endian::little,
              "payload serialization assumes a little-endian host");

std::string format_header(const TensorFile& t) {
  std::string h = "dtype=";
  h += to_string(t.dtype);
  h += ";shape=";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) h += ',';
    h += std::to_string(t.shape[i]);
  }
  h += ';';
  std::size_t pad = (kAlignment - (9 + h.size()) % kAlignment) % kAlignment;
  h.append(pad, ' ');
  return h;
}

// Parses "dtype=<tok>;shape=<d0,d1,...>;" with optional trailing spaces.
void parse_header(const std::string& header, const std::filesystem::path& path,
                  TensorFile& out) {
  std::size_t pos = 0;
  auto expect = [&](const char* lit) {
    std::size_t len = std::strlen(lit);
    if (header.compare(pos, len, lit) != 0) {
      throw Error(ErrorCode::kMalformedHeader,
                  "bad tensor header in " + path.string());
    }
    pos += len;
  };

  expect("dtype=");
  std::size_t semi = header.find(';', pos);
  if (semi == std::string::npos) {
    throw Error(ErrorCode::kMalformedHeader,
                "bad tensor header in " + path.string());
  }
  std::string dtype_tok = header.substr(pos, semi - pos);
  if (dtype_tok == "f32") {
    out.dtype = Dtype::kFloat32;
  } else if (dtype_tok == "f64") {
    out.dtype = Dtype::kFloat64;
  } else {
    throw Error(ErrorCode::kUnsupportedDtype,
                "dtype '" + dtype_tok + "' in " + path.string());
  }
  pos = semi + 1;

  expect("shape=");
  semi = header.find(';', pos);
  if (semi == std::string::npos) {
    throw Error(ErrorCode::kMalformedHeader,
                "bad tensor header in " + path.string());
  }
  std::string dims = header.substr(pos, semi - pos);
  out.shape.clear();
  if (!dims.empty()) {
    std::size_t start = 0;
    while (start <= dims.size()) {
      std::size_t comma = dims.find(',', start);
      std::string tok = dims.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
        throw Error(ErrorCode::kMalformedHeader,
                    "bad shape token '" + tok + "' in " + path.string());
      }
      out.shape.push_back(std::stoull(tok));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  pos = semi + 1;

  if (header.find_first_not_of(' ', pos) != std::string::npos) {
    throw Error(ErrorCode::kMalformedHeader,
                "trailing bytes in tensor header of " + path.string());
  }
}

}  // namespace

const char* to_string(Dtype dtype) {
  return dtype == Dtype::kFloat32 ? "f32" : "f64";
}

std::size_t element_size(Dtype dtype) {
  return dtype == Dtype::kFloat32 ? 4 : 8;
}

TensorFile read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw Error(ErrorCode::kIoFailure, "read failed for " + path.string());
  }

  if (bytes.size() < 9 || std::memcmp(bytes.data(), kMagic, 6) != 0) {
    throw Error(ErrorCode::kMalformedHeader,
                "not a tensor file: " + path.string());
  }
  if (static_cast<std::uint8_t>(bytes[6]) != kVersion) {
    throw Error(ErrorCode::kMalformedHeader,
                "unsupported format version in " + path.string());
  }
  std::uint16_t header_len = static_cast<std::uint8_t>(bytes[7]) |
                             (static_cast<std::uint16_t>(
                                  static_cast<std::uint8_t>(bytes[8]))
                              << 8);
  if (bytes.size() < 9 + static_cast<std::size_t>(header_len) ||
      (9 + header_len) % kAlignment != 0) {
    throw Error(ErrorCode::kMalformedHeader,
                "bad header length in " + path.string());
  }

  TensorFile t;
  parse_header(bytes.substr(9, header_len), path, t);

  std::size_t payload_off = 9 + header_len;
  std::size_t payload_size = bytes.size() - payload_off;
  std::uint64_t count = t.element_count();
  if (payload_size != count * element_size(t.dtype)) {
    throw Error(ErrorCode::kShapeMismatch,
                "payload of " + path.string() + " holds " +
                    std::to_string(payload_size) + " bytes, header implies " +
                    std::to_string(count * element_size(t.dtype)));
  }

  t.data.resize(count);
  const char* p = bytes.data() + payload_off;
  if (t.dtype == Dtype::kFloat64) {
    std::memcpy(t.data.data(), p, payload_size);
  } else {
    for (std::uint64_t i = 0; i < count; ++i) {
      float v;
      std::memcpy(&v, p + i * 4, 4);
      t.data[i] = static_cast<double>(v);
    }
  }
  return t;
}

void write_tensor(const std::filesystem::path& path, const TensorFile& t) {
  if (t.data.size() != t.element_count()) {
    throw Error(ErrorCode::kShapeMismatch,
                "tensor has " + std::to_string(t.data.size()) +
                    " elements, shape implies " +
                    std::to_string(t.element_count()));
  }

  std::string header = format_header(t);
  std::string bytes;
  bytes.reserve(9 + header.size() + t.data.size() * element_size(t.dtype));
  bytes.append(kMagic, 6);
  bytes.push_back(static_cast<char>(kVersion));
  auto h = static_cast<std::uint16_t>(header.size());
  bytes.push_back(static_cast<char>(h & 0xFF));
  bytes.push_back(static_cast<char>(h >> 8));
  bytes += header;

  if (t.dtype == Dtype::kFloat64) {
    bytes.append(reinterpret_cast<const char*>(t.data.data()),
                 t.data.size() * 8);
  } else {
    for (double d : t.data) {
      float v = static_cast<float>(d);
      char buf[4];
      std::memcpy(buf, &v, 4);
      bytes.append(buf, 4);
    }
  }

  atomic_write_text(path, bytes);
}

void atomic_write_text(const std::filesystem::path& path,
                       const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIoFailure, "cannot open " + tmp.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::kIoFailure, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIoFailure, "rename failed for " + path.string());
  }
}

const char* to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kLinear: return "linear";
    case Activation::kSoftmax: return "softmax";
  }
  return "linear";
}

Activation parse_activation(const std::string& tag) {
  if (tag == "relu") return Activation::kRelu;
  if (tag == "linear") return Activation::kLinear;
  if (tag == "softmax") return Activation::kSoftmax;
  throw Error(ErrorCode::kMalformedHeader, "unknown activation '" + tag + "'");
}

Matrix tensor_to_matrix(const TensorFile& t) {
  if (t.shape.size() != 2) {
    throw Error(ErrorCode::kShapeMismatch,
                "expected a 2-d tensor, got rank " +
                    std::to_string(t.shape.size()));
  }
  return Matrix::from_data(t.shape[0], t.shape[1], t.data);
}

TensorFile matrix_to_tensor(const Matrix& m, Dtype dtype) {
  TensorFile t;
  t.shape = {m.rows(), m.cols()};
  t.dtype = dtype;
  t.data = m.data();
  return t;
}

TensorFile vector_to_tensor(const std::vector<double>& v, Dtype dtype) {
  TensorFile t;
  t.shape = {v.size()};
  t.dtype = dtype;
  t.data = v;
  return t;
}

LayerBundle read_layer(const std::filesystem::path& dir) {
  auto weights_path = dir / "weights";
  auto bias_path = dir / "bias";
  auto meta_path = dir / "meta";
  for (const auto& p : {weights_path, bias_path, meta_path}) {
    if (!std::filesystem::exists(p)) {
      throw Error(ErrorCode::kMissingFile, p.string() + " not found");
    }
  }

  TensorFile wt = read_tensor(weights_path);
  TensorFile bt = read_tensor(bias_path);
  if (wt.shape.size() != 2) {
    throw Error(ErrorCode::kShapeMismatch,
                "weights must be 2-d, got rank " +
                    std::to_string(wt.shape.size()));
  }
  if (bt.shape.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "bias must be 1-d, got rank " + std::to_string(bt.shape.size()));
  }
  if (wt.shape[1] != bt.shape[0]) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weights have " + std::to_string(wt.shape[1]) +
                    " columns but bias has " + std::to_string(bt.shape[0]) +
                    " entries");
  }

  nlohmann::json meta;
  try {
    std::ifstream in(meta_path);
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader,
                "bad meta manifest in " + dir.string() + ": " + e.what());
  }

  LayerBundle layer;
  try {
    layer.name = meta.at("name").get<std::string>();
    layer.activation = parse_activation(meta.at("activation").get<std::string>());
    auto d = meta.at("d").get<std::uint64_t>();
    auto n = meta.at("n").get<std::uint64_t>();
    if (d != wt.shape[0] || n != wt.shape[1]) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "meta declares [" + std::to_string(d) + ", " +
                      std::to_string(n) + "] but weights are [" +
                      std::to_string(wt.shape[0]) + ", " +
                      std::to_string(wt.shape[1]) + "]");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader,
                "bad meta manifest in " + dir.string() + ": " + e.what());
  }

  layer.weights = tensor_to_matrix(wt);
  layer.bias = std::move(bt.data);
  return layer;
}

void write_layer(const std::filesystem::path& dir, const LayerBundle& layer) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  write_tensor(dir / "weights", matrix_to_tensor(layer.weights));
  write_tensor(dir / "bias", vector_to_tensor(layer.bias));

  nlohmann::ordered_json meta;
  meta["name"] = layer.name;
  meta["activation"] = to_string(layer.activation);
  meta["d"] = layer.input_dim();
  meta["n"] = layer.neuron_count();
  atomic_write_text(dir / "meta", meta.dump(2) + "\n");
}

}  // namespace centraprune
