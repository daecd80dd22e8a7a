#include "centraprune/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "centraprune/rng.hpp"

namespace centraprune {

namespace {

// Pre-activation for a batch: out(r, j) = bias[j] + sum_k a(r, k) W(k, j),
// accumulated in fixed k order. Pruning tests rely on each output column
// being computed independently of which other columns exist.
Matrix affine(const Matrix& a, const LayerBundle& layer) {
  std::size_t batch = a.rows();
  std::size_t d = layer.input_dim();
  std::size_t n = layer.neuron_count();
  Matrix out(batch, n);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = layer.bias[j];
      for (std::size_t k = 0; k < d; ++k) {
        acc += a(r, k) * layer.weights(k, j);
      }
      out(r, j) = acc;
    }
  }
  return out;
}

void apply_activation(Matrix& z, Activation act) {
  if (act == Activation::kRelu) {
    for (double& v : z.data()) v = std::max(0.0, v);
  }
}

// Row-wise log-softmax, shifted by the row max for stability.
Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      mx = std::max(mx, logits(r, c));
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      sum += std::exp(logits(r, c) - mx);
    }
    double log_sum = std::log(sum);
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      out(r, c) = logits(r, c) - mx - log_sum;
    }
  }
  return out;
}

void check_input(const MlpModel& m, const Matrix& x) {
  if (x.cols() != m.input_dim()) {
    throw Error(ErrorCode::kShapeMismatch,
                "input has " + std::to_string(x.cols()) +
                    " features, model expects " +
                    std::to_string(m.input_dim()));
  }
}

void check_labels(const MlpModel& m, std::span<const int> y) {
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= m.num_classes()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "label " + std::to_string(label) + " outside [0, " +
                      std::to_string(m.num_classes()) + ")");
    }
  }
}

LayerBundle init_layer(const std::string& name, Activation act, std::size_t d,
                       std::size_t n, Rng& rng) {
  LayerBundle layer;
  layer.name = name;
  layer.activation = act;
  layer.weights = Matrix(d, n);
  layer.bias.assign(n, 0.0);
  double bound = std::sqrt(6.0 / static_cast<double>(d + n));
  for (double& v : layer.weights.data()) {
    v = rng.uniform(-bound, bound);
  }
  return layer;
}

}  // namespace

MlpModel make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                  std::size_t classes, std::uint64_t seed) {
  if (input_dim == 0 || hidden.empty() || classes < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "need input_dim > 0, at least one hidden layer and >= 2 "
                "classes");
  }
  Rng rng(derive_seed(seed, 0));
  MlpModel m;
  m.rng_seed = seed;
  std::size_t d = input_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    m.layers.push_back(init_layer("dense" + std::to_string(i),
                                  Activation::kRelu, d, hidden[i], rng));
    d = hidden[i];
  }
  m.head = init_layer("head", Activation::kSoftmax, d, classes, rng);
  validate_model(m);
  return m;
}

void validate_model(const MlpModel& m) {
  if (m.layers.empty()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model needs at least one hidden layer");
  }
  std::size_t d = m.layers.front().input_dim();
  for (const LayerBundle& layer : m.layers) {
    if (layer.activation == Activation::kSoftmax) {
      throw Error(ErrorCode::kInvalidArgument,
                  "softmax is reserved for the head");
    }
    if (layer.input_dim() != d || layer.bias.size() != layer.neuron_count()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "dimension chain breaks at layer " + layer.name);
    }
    d = layer.neuron_count();
  }
  if (m.head.activation != Activation::kSoftmax || m.head.input_dim() != d ||
      m.head.bias.size() != m.head.neuron_count()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "head does not close the dimension chain");
  }
  if (m.head.neuron_count() < 2) {
    throw Error(ErrorCode::kDimensionMismatch, "head needs >= 2 classes");
  }
}

Matrix forward_logits(const MlpModel& m, const Matrix& x) {
  check_input(m, x);
  Matrix a = x;
  for (const LayerBundle& layer : m.layers) {
    a = affine(a, layer);
    apply_activation(a, layer.activation);
  }
  return affine(a, m.head);
}

Matrix forward(const MlpModel& m, const Matrix& x) {
  Matrix logp = log_softmax(forward_logits(m, x));
  for (double& v : logp.data()) v = std::exp(v);
  return logp;
}

double loss_and_gradients(const MlpModel& m, const Matrix& x,
                          std::span<const int> y, Gradients* grads) {
  check_input(m, x);
  check_labels(m, y);
  std::size_t batch = x.rows();
  if (batch == 0 || y.size() != batch) {
    throw Error(ErrorCode::kShapeMismatch,
                "batch of " + std::to_string(batch) + " rows with " +
                    std::to_string(y.size()) + " labels");
  }

  // Forward, keeping pre- and post-activation values per layer.
  std::vector<Matrix> inputs;   // activation fed into layer i
  std::vector<Matrix> pre;      // pre-activation of layer i
  inputs.reserve(m.layers.size() + 1);
  Matrix a = x;
  for (const LayerBundle& layer : m.layers) {
    inputs.push_back(a);
    Matrix z = affine(a, layer);
    pre.push_back(z);
    apply_activation(z, layer.activation);
    a = std::move(z);
  }
  inputs.push_back(a);
  Matrix logits = affine(inputs.back(), m.head);
  Matrix logp = log_softmax(logits);

  double loss = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    loss -= logp(r, static_cast<std::size_t>(y[r]));
  }
  loss /= static_cast<double>(batch);

  if (grads == nullptr) return loss;

  std::size_t num_layers = m.layers.size();
  grads->weights.assign(num_layers + 1, Matrix());
  grads->bias.assign(num_layers + 1, {});

  // d(loss)/d(logits) = (softmax - onehot) / batch
  Matrix delta(batch, m.num_classes());
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
      double p = std::exp(logp(r, c));
      delta(r, c) = (p - (static_cast<std::size_t>(y[r]) == c ? 1.0 : 0.0)) /
                    static_cast<double>(batch);
    }
  }

  auto accumulate = [&](std::size_t slot, const LayerBundle& layer,
                        const Matrix& input, const Matrix& dz) {
    Matrix dw(layer.input_dim(), layer.neuron_count());
    std::vector<double> db(layer.neuron_count(), 0.0);
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t j = 0; j < layer.neuron_count(); ++j) {
        double g = dz(r, j);
        db[j] += g;
        for (std::size_t k = 0; k < layer.input_dim(); ++k) {
          dw(k, j) += input(r, k) * g;
        }
      }
    }
    grads->weights[slot] = std::move(dw);
    grads->bias[slot] = std::move(db);
  };

  accumulate(num_layers, m.head, inputs.back(), delta);

  const LayerBundle* consumer = &m.head;
  for (std::size_t i = num_layers; i-- > 0;) {
    // dA = delta * W_consumer^T, then gate by the activation derivative.
    const Matrix& w = consumer->weights;
    Matrix da(batch, w.rows());
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t k = 0; k < w.rows(); ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < w.cols(); ++j) {
          acc += delta(r, j) * w(k, j);
        }
        da(r, k) = acc;
      }
    }
    if (m.layers[i].activation == Activation::kRelu) {
      for (std::size_t idx = 0; idx < da.size(); ++idx) {
        if (pre[i].data()[idx] <= 0.0) da.data()[idx] = 0.0;
      }
    }
    accumulate(i, m.layers[i], inputs[i], da);
    delta = std::move(da);
    consumer = &m.layers[i];
  }

  return loss;
}

TrainResult train(MlpModel& m, const Dataset& data, const TrainConfig& cfg) {
  validate_model(m);
  if (data.size() == 0) {
    throw Error(ErrorCode::kEmptyDataset, "cannot train on an empty dataset");
  }
  check_input(m, data.x);
  check_labels(m, data.y);
  if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.learning_rate < 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "epochs must be >= 0, batch_size >= 1, learning_rate >= 0");
  }

  std::size_t total = data.size();
  auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  Rng shuffle_rng(derive_seed(cfg.rng_seed, 1));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  Gradients grads;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < total; start += batch_size) {
      std::size_t count = std::min(batch_size, total - start);
      Matrix bx(count, data.x.cols());
      std::vector<int> by(count);
      for (std::size_t r = 0; r < count; ++r) {
        std::size_t src = order[start + r];
        for (std::size_t c = 0; c < data.x.cols(); ++c) {
          bx(r, c) = data.x(src, c);
        }
        by[r] = data.y[src];
      }

      double loss = loss_and_gradients(m, bx, by, &grads);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "loss diverged at epoch " + std::to_string(epoch) +
                        ", batch " + std::to_string(start / batch_size));
      }
      epoch_loss += loss * static_cast<double>(count);

      for (std::size_t i = 0; i < m.layers.size() + 1; ++i) {
        LayerBundle& layer = i < m.layers.size() ? m.layers[i] : m.head;
        for (std::size_t idx = 0; idx < layer.weights.size(); ++idx) {
          layer.weights.data()[idx] -=
              cfg.learning_rate * grads.weights[i].data()[idx];
        }
        for (std::size_t j = 0; j < layer.bias.size(); ++j) {
          layer.bias[j] -= cfg.learning_rate * grads.bias[i][j];
        }
        if (!layer.weights.all_finite()) {
          throw Error(ErrorCode::kNonFiniteLoss,
                      "parameters diverged in " + layer.name + " at epoch " +
                          std::to_string(epoch) + ", batch " +
                          std::to_string(start / batch_size));
        }
      }
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(total));
  }
  return result;
}

double evaluate(const MlpModel& m, const Dataset& data) {
  if (data.size() == 0) {
    throw Error(ErrorCode::kEmptyDataset, "cannot evaluate an empty dataset");
  }
  Matrix probs = forward(m, data.x);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols(); ++c) {
      if (probs(r, c) > probs(r, best)) best = c;
    }
    if (static_cast<std::size_t>(data.y[r]) == best) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

MlpModel rebuild_with_plan(const MlpModel& m, const std::string& layer_name,
                           const PrunePlan& plan) {
  auto it = std::find_if(m.layers.begin(), m.layers.end(),
                         [&](const LayerBundle& l) { return l.name == layer_name; });
  if (it == m.layers.end()) {
    throw Error(ErrorCode::kUnknownLayer,
                layer_name == m.head.name
                    ? "the classification head is not prunable"
                    : "no hidden layer named '" + layer_name + "'");
  }
  std::size_t index = static_cast<std::size_t>(it - m.layers.begin());

  MlpModel out = m;
  PrunedLayer sliced = apply_plan(out.layers[index], plan);
  out.layers[index].weights = std::move(sliced.weights);
  out.layers[index].bias = std::move(sliced.bias);

  LayerBundle& consumer =
      index + 1 < out.layers.size() ? out.layers[index + 1] : out.head;
  consumer.weights = slice_downstream(consumer.weights, plan);

  validate_model(out);
  return out;
}

std::size_t parameter_count(const MlpModel& m) {
  std::size_t total = m.head.weights.size() + m.head.bias.size();
  for (const LayerBundle& layer : m.layers) {
    total += layer.weights.size() + layer.bias.size();
  }
  return total;
}

MlpModel read_model(const std::filesystem::path& dir) {
  auto manifest_path = dir / "model.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw Error(ErrorCode::kMissingFile, manifest_path.string() + " not found");
  }
  nlohmann::json manifest;
  try {
    std::ifstream in(manifest_path);
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader,
                "bad model manifest: " + std::string(e.what()));
  }

  MlpModel m;
  try {
    m.rng_seed = manifest.at("rng_seed").get<std::uint64_t>();
    for (const auto& name : manifest.at("layers")) {
      m.layers.push_back(read_layer(dir / name.get<std::string>()));
    }
    m.head = read_layer(dir / manifest.at("head").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader,
                "bad model manifest: " + std::string(e.what()));
  }
  validate_model(m);
  return m;
}

void write_model(const std::filesystem::path& dir, const MlpModel& m) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  nlohmann::ordered_json manifest;
  manifest["input_dim"] = m.input_dim();
  manifest["num_classes"] = m.num_classes();
  manifest["rng_seed"] = m.rng_seed;
  manifest["layers"] = nlohmann::json::array();
  for (const LayerBundle& layer : m.layers) {
    manifest["layers"].push_back(layer.name);
    write_layer(dir / layer.name, layer);
  }
  manifest["head"] = m.head.name;
  write_layer(dir / m.head.name, m.head);
  atomic_write_text(dir / "model.json", manifest.dump(2) + "\n");
}

}  // namespace centraprune
