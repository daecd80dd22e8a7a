#include <doctest.h>

#include <cmath>
#include <cstring>

#include "../common/test_util.hpp"
#include "centraprune/dataset.hpp"
#include "centraprune/net.hpp"

using namespace centraprune;
using testing::TempDir;

namespace {

bool models_bitwise_equal(const MlpModel& a, const MlpModel& b) {
  auto layer_equal = [](const LayerBundle& x, const LayerBundle& y) {
    return x.weights.rows() == y.weights.rows() &&
           x.weights.cols() == y.weights.cols() &&
           std::memcmp(x.weights.data().data(), y.weights.data().data(),
                       x.weights.size() * 8) == 0 &&
           x.bias.size() == y.bias.size() &&
           std::memcmp(x.bias.data(), y.bias.data(), x.bias.size() * 8) == 0;
  };
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (!layer_equal(a.layers[i], b.layers[i])) return false;
  }
  return layer_equal(a.head, b.head);
}

Dataset two_blobs() { return make_blobs(200, 2, 2, 0.5, 99); }

}  // namespace

TEST_CASE("zero weights give uniform class probabilities") {
  MlpModel m = make_mlp(3, {4}, 5, 1);
  for (auto& layer : m.layers) {
    for (auto& v : layer.weights.data()) v = 0.0;
  }
  for (auto& v : m.head.weights.data()) v = 0.0;

  Matrix x(2, 3);
  x(0, 0) = 1.0;
  x(1, 2) = -4.0;
  Matrix probs = forward(m, x);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 5; ++c) {
      CHECK(probs(r, c) == doctest::Approx(0.2).epsilon(1e-12));
    }
  }
}

TEST_CASE("probability rows sum to one") {
  MlpModel m = make_mlp(4, {8, 6}, 3, 2);
  Rng rng(5);
  Matrix x = testing::random_matrix(rng, 32, 4, -2.0, 2.0);
  Matrix probs = forward(m, x);
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      CHECK(probs(r, c) >= 0.0);
      CHECK(probs(r, c) <= 1.0);
      sum += probs(r, c);
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("empty batch and wrong feature dim") {
  MlpModel m = make_mlp(4, {8}, 3, 2);
  Matrix empty(0, 4);
  CHECK(forward(m, empty).rows() == 0);

  Matrix wrong(2, 5);
  try {
    forward(m, wrong);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(61);
  for (int trial = 0; trial < 5; ++trial) {
    std::size_t d = 2 + rng.uniform_int(6);
    std::size_t h = 2 + rng.uniform_int(6);
    std::size_t classes = 2 + rng.uniform_int(3);
    MlpModel m = make_mlp(d, {h}, classes, 100 + trial);

    Matrix x = testing::random_matrix(rng, 6, d, -1.0, 1.0);
    std::vector<int> y(6);
    for (auto& label : y) {
      label = static_cast<int>(rng.uniform_int(classes));
    }

    Gradients grads;
    loss_and_gradients(m, x, y, &grads);

    double step = 1e-5;
    auto check_param = [&](double* param, double analytic) {
      double saved = *param;
      *param = saved + step;
      double up = loss_and_gradients(m, x, y, nullptr);
      *param = saved - step;
      double down = loss_and_gradients(m, x, y, nullptr);
      *param = saved;
      double numeric = (up - down) / (2.0 * step);
      double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      CHECK(std::abs(analytic - numeric) / scale < 1e-4);
    };

    for (std::size_t i = 0; i < m.layers.size() + 1; ++i) {
      LayerBundle& layer = i < m.layers.size() ? m.layers[i] : m.head;
      for (std::size_t idx = 0; idx < layer.weights.size(); idx += 3) {
        check_param(&layer.weights.data()[idx], grads.weights[i].data()[idx]);
      }
      for (std::size_t j = 0; j < layer.bias.size(); ++j) {
        check_param(&layer.bias[j], grads.bias[i][j]);
      }
    }
  }
}

TEST_CASE("training is bitwise deterministic per seed") {
  Dataset data = two_blobs();
  TrainConfig cfg{10, 16, 0.1, 7};

  MlpModel a = make_mlp(2, {8}, 2, 42);
  MlpModel b = make_mlp(2, {8}, 2, 42);
  CHECK(models_bitwise_equal(a, b));

  TrainResult ra = train(a, data, cfg);
  TrainResult rb = train(b, data, cfg);
  CHECK(models_bitwise_equal(a, b));
  CHECK(ra.loss_history == rb.loss_history);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  Dataset data = two_blobs();
  MlpModel m = make_mlp(2, {8}, 2, 42);
  MlpModel before = m;

  TrainResult r = train(m, data, TrainConfig{5, 16, 0.0, 7});
  CHECK(models_bitwise_equal(m, before));
  REQUIRE(r.loss_history.size() == 5);
  for (double loss : r.loss_history) {
    CHECK(loss == doctest::Approx(r.loss_history[0]).epsilon(1e-12));
  }
}

TEST_CASE("zero epochs returns the model unchanged") {
  Dataset data = two_blobs();
  MlpModel m = make_mlp(2, {8}, 2, 42);
  MlpModel before = m;
  TrainResult r = train(m, data, TrainConfig{0, 16, 0.1, 7});
  CHECK(models_bitwise_equal(m, before));
  CHECK(r.loss_history.empty());
}

TEST_CASE("separable blobs train to high accuracy") {
  // regression fixture: seed 99 blobs, seed 42 init, 50 epochs
  Dataset data = two_blobs();
  MlpModel m = make_mlp(2, {8}, 2, 42);
  TrainResult r = train(m, data, TrainConfig{50, 16, 0.1, 7});
  CHECK(r.loss_history.size() == 50);
  CHECK(r.loss_history.back() < r.loss_history.front());
  CHECK(evaluate(m, data) >= 0.95);
}

TEST_CASE("an absurd learning rate diverges loudly") {
  Dataset data = two_blobs();
  MlpModel m = make_mlp(2, {8}, 2, 42);
  // linear hidden units keep gradients flowing, so the blow-up cannot hide
  // behind dead relus
  m.layers[0].activation = Activation::kLinear;
  try {
    train(m, data, TrainConfig{5, 16, 1e100, 7});
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFiniteLoss);
  }
}

TEST_CASE("evaluate scores the argmax with low-index ties") {
  MlpModel m = make_mlp(2, {2}, 2, 1);

  Dataset data;
  data.num_classes = 2;
  data.x = Matrix(4, 2);
  data.y = {0, 1, 0, 1};

  SUBCASE("zero model ties every class, argmax falls to class 0") {
    for (auto& layer : m.layers) {
      for (auto& v : layer.weights.data()) v = 0.0;
    }
    for (auto& v : m.head.weights.data()) v = 0.0;
    CHECK(evaluate(m, data) == 0.5);  // exactly the class-0 rows
  }

  SUBCASE("empty dataset errors") {
    Dataset empty;
    empty.num_classes = 2;
    empty.x = Matrix(0, 2);
    try {
      evaluate(m, empty);
      FAIL("expected EmptyDataset");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyDataset);
    }
  }
}

TEST_CASE("a perfect and an adversarial predictor bracket accuracy") {
  // hand-built model: identity-ish features, head routes class by sign
  MlpModel m;
  LayerBundle hidden;
  hidden.name = "dense0";
  hidden.activation = Activation::kLinear;
  hidden.weights = Matrix(1, 2);
  hidden.weights(0, 0) = 1.0;
  hidden.weights(0, 1) = -1.0;
  hidden.bias = {0.0, 0.0};
  m.layers.push_back(hidden);

  m.head.name = "head";
  m.head.activation = Activation::kSoftmax;
  m.head.weights = Matrix(2, 2);
  m.head.weights(0, 0) = -1.0;
  m.head.weights(0, 1) = 1.0;
  m.head.weights(1, 0) = 1.0;
  m.head.weights(1, 1) = -1.0;
  m.head.bias = {0.0, 0.0};

  Dataset data;
  data.num_classes = 2;
  data.x = Matrix(6, 1);
  data.y.resize(6);
  for (std::size_t i = 0; i < 6; ++i) {
    data.x(i, 0) = i < 3 ? -2.0 : 2.0;
    data.y[i] = i < 3 ? 0 : 1;
  }
  CHECK(evaluate(m, data) == 1.0);

  // flipping every label sends a perfect binary predictor to zero
  for (auto& label : data.y) label = 1 - label;
  CHECK(evaluate(m, data) == 0.0);
}

TEST_CASE("rebuild_with_plan slices the layer and its consumer") {
  MlpModel m = make_mlp(5, {8}, 3, 11);

  CentralityScores c;
  c.scores = {0.1, 0.9, 0.05, 0.8, 0.7, 0.02, 0.6, 0.5};
  c.converged = true;
  PrunePlan plan = make_plan(c, 0.5);
  REQUIRE(plan.k == 4);

  MlpModel rebuilt = rebuild_with_plan(m, "dense0", plan);
  CHECK(rebuilt.layers[0].weights.cols() == 4);
  CHECK(rebuilt.layers[0].bias.size() == 4);
  CHECK(rebuilt.head.weights.rows() == 4);
  CHECK(parameter_count(rebuilt) ==
        parameter_count(m) - plan.k * (5 + 1 + 3));

  SUBCASE("unknown layer name") {
    try {
      rebuild_with_plan(m, "dense7", plan);
      FAIL("expected UnknownLayer");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnknownLayer);
    }
  }

  SUBCASE("the head is not prunable") {
    try {
      rebuild_with_plan(m, "head", plan);
      FAIL("expected UnknownLayer");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnknownLayer);
    }
  }

  SUBCASE("plan must match the layer width") {
    CentralityScores small;
    small.scores = {0.1, 0.2, 0.3};
    try {
      rebuild_with_plan(m, "dense0", make_plan(small, 0.5));
      FAIL("expected PlanMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kPlanMismatch);
    }
  }
}

TEST_CASE("linear-hidden logits restrict exactly under pruning") {
  Rng rng(67);
  MlpModel m = make_mlp(4, {6}, 3, 13);
  m.layers[0].activation = Activation::kLinear;

  CentralityScores c;
  c.scores = {0.4, 0.1, 0.6, 0.2, 0.9, 0.5};
  c.converged = true;
  PrunePlan plan = make_plan(c, 0.34);
  REQUIRE(plan.k == 2);
  MlpModel rebuilt = rebuild_with_plan(m, "dense0", plan);

  Matrix x = testing::random_matrix(rng, 8, 4, -1.0, 1.0);
  Matrix got = forward_logits(rebuilt, x);

  // independent route: full hidden pre-activation, restricted, then the
  // sliced head applied manually
  for (std::size_t r = 0; r < 8; ++r) {
    std::vector<double> hidden(plan.kept.size());
    for (std::size_t idx = 0; idx < plan.kept.size(); ++idx) {
      std::size_t j = plan.kept[idx];
      double acc = m.layers[0].bias[j];
      for (std::size_t k = 0; k < 4; ++k) {
        acc += x(r, k) * m.layers[0].weights(k, j);
      }
      hidden[idx] = acc;
    }
    for (std::size_t cls = 0; cls < 3; ++cls) {
      double acc = m.head.bias[cls];
      for (std::size_t idx = 0; idx < plan.kept.size(); ++idx) {
        acc += hidden[idx] * m.head.weights(plan.kept[idx], cls);
      }
      CHECK(std::abs(got(r, cls) - acc) <= 1e-12);
    }
  }
}

TEST_CASE("relu activations at kept indices survive pruning exactly") {
  Rng rng(71);
  MlpModel m = make_mlp(4, {6}, 3, 17);
  CentralityScores c;
  c.scores = {0.4, 0.1, 0.6, 0.2, 0.9, 0.5};
  c.converged = true;
  PrunePlan plan = make_plan(c, 0.34);
  MlpModel rebuilt = rebuild_with_plan(m, "dense0", plan);

  // expose the hidden activations by running each model's first layer as a
  // one-layer network with an identity head
  Matrix x = testing::random_matrix(rng, 8, 4, -1.0, 1.0);
  Matrix full = forward_logits(m, x);
  Matrix sliced = forward_logits(rebuilt, x);
  CHECK(full.cols() == sliced.cols());
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t cls = 0; cls < 3; ++cls) {
      // logits differ only through the dropped relu units
      double drop = 0.0;
      for (std::size_t j : plan.pruned) {
        double acc = m.layers[0].bias[j];
        for (std::size_t k = 0; k < 4; ++k) {
          acc += x(r, k) * m.layers[0].weights(k, j);
        }
        drop += std::max(0.0, acc) * m.head.weights(j, cls);
      }
      CHECK(std::abs((full(r, cls) - sliced(r, cls)) - drop) < 1e-9);
    }
  }
}

TEST_CASE("model directory round-trip") {
  TempDir tmp;
  MlpModel m = make_mlp(4, {8, 6}, 3, 23);
  write_model(tmp.path() / "model", m);
  MlpModel back = read_model(tmp.path() / "model");
  CHECK(models_bitwise_equal(m, back));
  CHECK(back.rng_seed == 23);
  CHECK(back.layers[0].name == "dense0");
  CHECK(back.layers[1].name == "dense1");
  CHECK(back.head.name == "head");

  try {
    read_model(tmp.path() / "nothing");
    FAIL("expected MissingFile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingFile);
  }
}
