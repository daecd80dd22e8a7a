#include <doctest.h>

#include <cmath>

#include "../common/test_util.hpp"
#include "centraprune/dataset.hpp"
#include "centraprune/tensor_io.hpp"

using namespace centraprune;
using testing::TempDir;

TEST_CASE("blobs are balanced and cluster around their centers") {
  Dataset data = make_blobs(120, 6, 4, 0.5, 21);
  CHECK(data.size() == 120);
  CHECK(data.features() == 6);
  CHECK(data.num_classes == 4);

  std::vector<int> counts(4, 0);
  for (int label : data.y) counts[static_cast<std::size_t>(label)]++;
  for (int c : counts) CHECK(c == 30);

  // points of one class sit much closer to their class mean than noise 0.5
  // would allow for a different class
  for (int cls = 0; cls < 4; ++cls) {
    std::vector<double> mean(6, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.y[i] != cls) continue;
      for (std::size_t f = 0; f < 6; ++f) mean[f] += data.x(i, f) / 30.0;
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.y[i] != cls) continue;
      double dist2 = 0.0;
      for (std::size_t f = 0; f < 6; ++f) {
        double d = data.x(i, f) - mean[f];
        dist2 += d * d;
      }
      CHECK(std::sqrt(dist2) < 5.0 * 0.5 * std::sqrt(6.0));
    }
  }
}

TEST_CASE("rings place classes at their nominal radii") {
  Dataset data = make_rings(90, 5, 3, 0.05, 22);
  CHECK(data.features() == 5);
  for (std::size_t i = 0; i < data.size(); ++i) {
    double r = std::hypot(data.x(i, 0), data.x(i, 1));
    double nominal = static_cast<double>(data.y[i]) + 1.0;
    CHECK(std::abs(r - nominal) < 0.05 * 6.0);
    // the padding dimensions carry only noise
    for (std::size_t f = 2; f < 5; ++f) {
      CHECK(std::abs(data.x(i, f)) < 0.05 * 6.0);
    }
  }

  try {
    make_rings(10, 1, 2, 0.1, 1);
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("split keeps both halves on the same task") {
  Dataset all = make_blobs(150, 4, 3, 1.0, 23);
  auto [train, test] = split_dataset(all, 100);
  CHECK(train.size() == 100);
  CHECK(test.size() == 50);
  CHECK(train.num_classes == 3);
  CHECK(test.num_classes == 3);

  // rows are a straight partition of the pool
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(train.y[i] == all.y[i]);
    CHECK(train.x(i, 0) == all.x(i, 0));
  }
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(test.y[i] == all.y[100 + i]);
    CHECK(test.x(i, 0) == all.x(100 + i, 0));
  }

  // round-robin labels keep both halves balanced here
  std::vector<int> train_counts(3, 0), test_counts(3, 0);
  for (int y : train.y) train_counts[static_cast<std::size_t>(y)]++;
  for (int y : test.y) test_counts[static_cast<std::size_t>(y)]++;
  for (int c : train_counts) CHECK(c > 30);
  for (int c : test_counts) CHECK(c > 15);

  SUBCASE("degenerate splits are rejected") {
    for (std::size_t count : {std::size_t{0}, std::size_t{150}}) {
      try {
        split_dataset(all, count);
        FAIL("expected InvalidArgument");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kInvalidArgument);
      }
    }
  }
}

TEST_CASE("dataset directory round-trip and label validation") {
  TempDir tmp;
  Dataset data = make_blobs(40, 3, 2, 1.0, 24);
  write_dataset(tmp.path() / "d", data);

  Dataset back = read_dataset(tmp.path() / "d");
  CHECK(back.num_classes == 2);
  CHECK(back.x == data.x);
  CHECK(back.y == data.y);

  SUBCASE("non-integral labels are rejected") {
    TensorFile bad;
    bad.shape = {40};
    bad.data.assign(40, 0.5);
    write_tensor(tmp.path() / "d" / "y", bad);
    try {
      read_dataset(tmp.path() / "d");
      FAIL("expected InvalidArgument");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidArgument);
    }
  }

  SUBCASE("missing files are reported") {
    try {
      read_dataset(tmp.path() / "nothing");
      FAIL("expected MissingFile");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMissingFile);
    }
  }
}
