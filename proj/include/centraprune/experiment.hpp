#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "centraprune/net.hpp"

namespace centraprune {

struct PhaseConfig {
  int epochs = 1;
  int batch_size = 32;
  double learning_rate = 0.1;
};

struct TaskSpec {
  std::string kind = "blobs";  // blobs | rings
  std::size_t features = 2;
  int classes = 2;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
  double noise = 1.0;
  std::uint64_t data_seed = 0;
  std::vector<std::size_t> hidden;  // hidden layer widths
  std::string prune_layer;          // defaults to the last hidden layer
};

// One grid of runs: every (method, ratio, threshold, seed) combination is a
// cell executed as pretrain -> plan -> rebuild -> fine-tune -> evaluate.
struct SweepSpec {
  std::vector<double> ratios;
  std::vector<double> thresholds;
  std::vector<std::string> methods;  // subset of centrality|magnitude|none
  std::vector<std::uint64_t> seeds;
  double epsilon = kDefaultEpsilon;
  double tol = kDefaultTolerance;
  int max_iter = kDefaultMaxIterations;
  PhaseConfig pretrain;
  PhaseConfig finetune;
  TaskSpec task;
};

// Wall-clock seconds per phase. Kept out of the canonical report JSON so two
// runs of the same spec stay byte-identical; the per-cell log carries them.
struct CellTiming {
  double graph_seconds = 0.0;
  double centrality_seconds = 0.0;
  double train_seconds = 0.0;
};

struct CellResult {
  std::string method;
  double p = 0.0;
  double tau = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;  // error code name when failed
  double accuracy = 0.0;
  std::size_t params_before = 0;
  std::size_t params_after = 0;
  CellTiming timing;
};

struct CellAggregate {
  std::string method;
  double p = 0.0;
  double tau = 0.0;
  std::size_t num_seeds = 0;  // seeds that completed
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over seeds
  std::size_t params_before = 0;
  std::size_t params_after = 0;
};

struct ExperimentReport {
  SweepSpec spec;
  std::vector<CellResult> cells;
  std::vector<CellAggregate> aggregates;
};

struct RunOptions {
  int jobs = 1;
  std::ostream* log = nullptr;  // per-cell progress lines
};

enum class ReportFormat { kJson, kCsv, kMarkdown };

SweepSpec parse_sweep_spec(const std::string& json_text);
std::string sweep_spec_to_json(const SweepSpec& spec);
void validate_sweep_spec(const SweepSpec& spec);

// Runs every cell, recording failures per cell instead of aborting the grid.
// Cells are ordered by (method, ratio, threshold, seed) following the spec's
// list order, independent of how many worker threads execute them.
ExperimentReport run_sweep(const SweepSpec& spec, const RunOptions& opts = {});

std::vector<CellAggregate> compute_aggregates(
    const std::vector<CellResult>& cells);

std::string render_report(const ExperimentReport& report, ReportFormat fmt);
ExperimentReport parse_report(const std::string& json_text);
std::vector<CellResult> parse_cells_csv(const std::string& csv_text);

}  // namespace centraprune
