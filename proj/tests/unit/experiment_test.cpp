#include <doctest.h>

#include <cmath>

#include "../common/test_util.hpp"
#include "centraprune/experiment.hpp"
#include "centraprune/prune.hpp"

using namespace centraprune;

namespace {

// Small enough to run in well under a second per cell.
SweepSpec tiny_spec() {
  SweepSpec spec;
  spec.ratios = {0.3};
  spec.thresholds = {0.2};
  spec.methods = {"centrality"};
  spec.seeds = {0};
  spec.pretrain = {8, 16, 0.1};
  spec.finetune = {8, 16, 0.05};
  spec.task.kind = "blobs";
  spec.task.features = 8;
  spec.task.classes = 3;
  spec.task.train_examples = 96;
  spec.task.test_examples = 48;
  spec.task.noise = 1.0;
  spec.task.data_seed = 77;
  spec.task.hidden = {16};
  spec.task.prune_layer = "dense0";
  return spec;
}

}  // namespace

TEST_CASE("sweep spec JSON round-trips field for field") {
  SweepSpec spec = tiny_spec();
  std::string text = sweep_spec_to_json(spec);
  SweepSpec back = parse_sweep_spec(text);
  CHECK(sweep_spec_to_json(back) == text);

  SUBCASE("missing seeds are rejected") {
    SweepSpec no_seeds = spec;
    no_seeds.seeds.clear();
    try {
      validate_sweep_spec(no_seeds);
      FAIL("expected InvalidArgument");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidArgument);
    }
  }

  SUBCASE("bad ratio in spec") {
    SweepSpec bad = spec;
    bad.ratios = {1.2};
    try {
      validate_sweep_spec(bad);
      FAIL("expected InvalidRatio");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidRatio);
    }
  }
}

TEST_CASE("the control arm ignores ratio and threshold") {
  SweepSpec spec = tiny_spec();
  spec.methods = {"none"};
  spec.ratios = {0.3, 0.7};
  spec.thresholds = {0.1, 0.5};

  ExperimentReport report = run_sweep(spec);
  REQUIRE(report.cells.size() == 4);
  for (const CellResult& cell : report.cells) {
    CHECK(!cell.failed);
    CHECK(cell.accuracy == report.cells[0].accuracy);
    CHECK(cell.params_after == cell.params_before);
  }
}

TEST_CASE("two-seed std is half the absolute difference") {
  SweepSpec spec = tiny_spec();
  spec.seeds = {0, 1};

  ExperimentReport report = run_sweep(spec);
  REQUIRE(report.cells.size() == 2);
  REQUIRE(report.aggregates.size() == 1);
  double a = report.cells[0].accuracy;
  double b = report.cells[1].accuracy;
  CHECK(report.aggregates[0].num_seeds == 2);
  CHECK(report.aggregates[0].mean_accuracy ==
        doctest::Approx((a + b) / 2.0).epsilon(1e-12));
  CHECK(report.aggregates[0].std_accuracy ==
        doctest::Approx(std::abs(a - b) / 2.0).epsilon(1e-12));
}

TEST_CASE("identical specs produce identical reports") {
  SweepSpec spec = tiny_spec();
  spec.methods = {"centrality", "magnitude", "none"};

  ExperimentReport first = run_sweep(spec);
  ExperimentReport second = run_sweep(spec);
  CHECK(render_report(first, ReportFormat::kJson) ==
        render_report(second, ReportFormat::kJson));

  SUBCASE("worker threads do not change the report") {
    RunOptions opts;
    opts.jobs = 3;
    ExperimentReport threaded = run_sweep(spec, opts);
    CHECK(render_report(first, ReportFormat::kJson) ==
          render_report(threaded, ReportFormat::kJson));
  }
}

TEST_CASE("parameter bookkeeping matches the slicing arithmetic") {
  SweepSpec spec = tiny_spec();
  spec.ratios = {0.25, 0.5};
  ExperimentReport report = run_sweep(spec);

  std::size_t n = spec.task.hidden[0];
  std::size_t d = spec.task.features;
  auto m = static_cast<std::size_t>(spec.task.classes);
  for (const CellResult& cell : report.cells) {
    REQUIRE(!cell.failed);
    std::size_t k = pruned_count(cell.p, n);
    CHECK(cell.params_after == cell.params_before - k * (d + 1 + m));
    CHECK(cell.params_after < cell.params_before);
  }
}

TEST_CASE("failed cells are recorded without aborting the sweep") {
  SweepSpec spec = tiny_spec();
  spec.methods = {"centrality", "none"};
  spec.max_iter = 1;  // power iteration cannot converge in one step here

  ExperimentReport report = run_sweep(spec);
  REQUIRE(report.cells.size() == 2);
  CHECK(report.cells[0].method == "centrality");
  CHECK(report.cells[0].failed);
  CHECK(report.cells[0].error == "NotConverged");
  CHECK(report.cells[1].method == "none");
  CHECK(!report.cells[1].failed);

  // the run still renders, with empty aggregates for the failed group
  std::string md = render_report(report, ReportFormat::kMarkdown);
  CHECK(md.find("n/a") != std::string::npos);
}

TEST_CASE("report JSON and CSV round-trip losslessly") {
  SweepSpec spec = tiny_spec();
  spec.methods = {"centrality", "none"};
  spec.seeds = {0, 1};
  ExperimentReport report = run_sweep(spec);

  std::string json_text = render_report(report, ReportFormat::kJson);
  ExperimentReport parsed = parse_report(json_text);
  CHECK(render_report(parsed, ReportFormat::kJson) == json_text);

  std::string csv_text = render_report(report, ReportFormat::kCsv);
  ExperimentReport from_csv;
  from_csv.spec = spec;
  from_csv.cells = parse_cells_csv(csv_text);
  from_csv.aggregates = compute_aggregates(from_csv.cells);
  CHECK(render_report(from_csv, ReportFormat::kCsv) == csv_text);
  REQUIRE(from_csv.cells.size() == report.cells.size());
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    CHECK(from_csv.cells[i].accuracy == report.cells[i].accuracy);
    CHECK(from_csv.cells[i].seed == report.cells[i].seed);
  }
}

TEST_CASE("markdown report has one row per grid point") {
  SweepSpec spec = tiny_spec();
  spec.ratios = {0.3, 0.5};
  spec.thresholds = {0.2, 0.8};
  spec.methods = {"centrality", "magnitude", "none"};
  ExperimentReport report = run_sweep(spec);

  std::string md = render_report(report, ReportFormat::kMarkdown);
  CHECK(md.find("| Ratio | Tau | centrality | magnitude | none |") !=
        std::string::npos);
  std::size_t rows = 0;
  for (std::size_t pos = md.find("\n| 0."); pos != std::string::npos;
       pos = md.find("\n| 0.", pos + 1)) {
    ++rows;
  }
  // 4 grid rows in each of the two tables
  CHECK(rows == 8);
}

TEST_CASE("rendering an empty report errors") {
  ExperimentReport report;
  report.spec = tiny_spec();
  try {
    render_report(report, ReportFormat::kJson);
    FAIL("expected EmptyReport");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyReport);
  }
}
