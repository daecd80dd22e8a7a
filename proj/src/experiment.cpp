#include "centraprune/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <thread>

#include "centraprune/rng.hpp"

namespace centraprune {

namespace {

using nlohmann::ordered_json;

// Seed-stream tags. The data stream hangs off task.data_seed; everything
// else hangs off the per-cell seed so repeated seeds replay exactly.
constexpr std::uint64_t kDataStream = 10;
constexpr std::uint64_t kInitStream = 20;
constexpr std::uint64_t kPretrainStream = 21;
constexpr std::uint64_t kFinetuneStream = 22;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

Dataset generate(const TaskSpec& task, std::size_t examples,
                 std::uint64_t seed) {
  if (task.kind == "blobs") {
    return make_blobs(examples, task.features, task.classes, task.noise, seed);
  }
  if (task.kind == "rings") {
    return make_rings(examples, task.features, task.classes, task.noise, seed);
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown task kind '" + task.kind + "'");
}

TrainConfig phase_config(const PhaseConfig& phase, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = phase.epochs;
  cfg.batch_size = phase.batch_size;
  cfg.learning_rate = phase.learning_rate;
  cfg.rng_seed = seed;
  return cfg;
}

struct CellKey {
  std::string method;
  double p;
  double tau;
  std::uint64_t seed;
};

CellResult run_cell(const SweepSpec& spec, const CellKey& key,
                    const MlpModel& pretrained, const Dataset& train_data,
                    const Dataset& test_data) {
  CellResult cell;
  cell.method = key.method;
  cell.p = key.p;
  cell.tau = key.tau;
  cell.seed = key.seed;

  try {
    cell.params_before = parameter_count(pretrained);
    MlpModel model = pretrained;

    if (key.method != "none") {
      auto layer_it =
          std::find_if(model.layers.begin(), model.layers.end(),
                       [&](const LayerBundle& l) {
                         return l.name == spec.task.prune_layer;
                       });
      if (layer_it == model.layers.end()) {
        throw Error(ErrorCode::kUnknownLayer,
                    "no hidden layer named '" + spec.task.prune_layer + "'");
      }

      PrunePlan plan;
      if (key.method == "centrality") {
        auto t0 = std::chrono::steady_clock::now();
        SimilarityGraph graph =
            build_layer_graph(layer_it->weights, key.tau, spec.epsilon);
        cell.timing.graph_seconds = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        CentralityScores scores =
            eigenvector_centrality(graph, spec.tol, spec.max_iter);
        cell.timing.centrality_seconds = seconds_since(t0);
        if (!scores.converged) {
          throw Error(ErrorCode::kNotConverged,
                      "power iteration did not converge in " +
                          std::to_string(spec.max_iter) + " iterations");
        }
        plan = make_plan(scores, key.p, {key.tau, spec.epsilon, spec.tol});
      } else {
        plan = magnitude_plan(*layer_it, key.p);
      }
      model = rebuild_with_plan(model, spec.task.prune_layer, plan);
    }

    auto t0 = std::chrono::steady_clock::now();
    train(model, train_data,
          phase_config(spec.finetune, derive_seed(key.seed, kFinetuneStream)));
    cell.timing.train_seconds = seconds_since(t0);

    cell.accuracy = evaluate(model, test_data);
    cell.params_after = parameter_count(model);
  } catch (const Error& e) {
    cell.failed = true;
    cell.error = to_string(e.code());
  }
  return cell;
}

ordered_json phase_to_json(const PhaseConfig& p) {
  return ordered_json{{"epochs", p.epochs},
                      {"batch_size", p.batch_size},
                      {"learning_rate", p.learning_rate}};
}

PhaseConfig phase_from_json(const nlohmann::json& j) {
  PhaseConfig p;
  p.epochs = j.at("epochs").get<int>();
  p.batch_size = j.at("batch_size").get<int>();
  p.learning_rate = j.at("learning_rate").get<double>();
  return p;
}

}  // namespace

SweepSpec parse_sweep_spec(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader,
                "sweep spec is not valid JSON: " + std::string(e.what()));
  }

  SweepSpec spec;
  try {
    spec.ratios = j.at("ratios").get<std::vector<double>>();
    spec.thresholds = j.at("thresholds").get<std::vector<double>>();
    spec.methods = j.at("methods").get<std::vector<std::string>>();
    spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    spec.epsilon = j.value("epsilon", kDefaultEpsilon);
    spec.tol = j.value("tol", kDefaultTolerance);
    spec.max_iter = j.value("max_iter", kDefaultMaxIterations);
    spec.pretrain = phase_from_json(j.at("pretrain"));
    spec.finetune = phase_from_json(j.at("finetune"));

    const auto& t = j.at("task");
    spec.task.kind = t.at("kind").get<std::string>();
    spec.task.features = t.at("features").get<std::size_t>();
    spec.task.classes = t.at("classes").get<int>();
    spec.task.train_examples = t.at("train_examples").get<std::size_t>();
    spec.task.test_examples = t.at("test_examples").get<std::size_t>();
    spec.task.noise = t.at("noise").get<double>();
    spec.task.data_seed = t.at("data_seed").get<std::uint64_t>();
    spec.task.hidden = t.at("hidden").get<std::vector<std::size_t>>();
    spec.task.prune_layer = t.value("prune_layer", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader,
                "sweep spec is missing fields: " + std::string(e.what()));
  }
  if (spec.task.prune_layer.empty() && !spec.task.hidden.empty()) {
    spec.task.prune_layer =
        "dense" + std::to_string(spec.task.hidden.size() - 1);
  }
  validate_sweep_spec(spec);
  return spec;
}

std::string sweep_spec_to_json(const SweepSpec& spec) {
  ordered_json j;
  j["ratios"] = spec.ratios;
  j["thresholds"] = spec.thresholds;
  j["methods"] = spec.methods;
  j["seeds"] = spec.seeds;
  j["epsilon"] = spec.epsilon;
  j["tol"] = spec.tol;
  j["max_iter"] = spec.max_iter;
  j["pretrain"] = phase_to_json(spec.pretrain);
  j["finetune"] = phase_to_json(spec.finetune);
  j["task"] = ordered_json{{"kind", spec.task.kind},
                           {"features", spec.task.features},
                           {"classes", spec.task.classes},
                           {"train_examples", spec.task.train_examples},
                           {"test_examples", spec.task.test_examples},
                           {"noise", spec.task.noise},
                           {"data_seed", spec.task.data_seed},
                           {"hidden", spec.task.hidden},
                           {"prune_layer", spec.task.prune_layer}};
  return j.dump(2);
}

void validate_sweep_spec(const SweepSpec& spec) {
  if (spec.ratios.empty() || spec.thresholds.empty() || spec.methods.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "ratios, thresholds and methods must be nonempty");
  }
  if (spec.seeds.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "seeds must be explicit and nonempty");
  }
  for (double p : spec.ratios) {
    if (!(p > 0.0) || !(p < 1.0)) {
      throw Error(ErrorCode::kInvalidRatio,
                  "ratio " + std::to_string(p) + " outside (0, 1)");
    }
  }
  for (double tau : spec.thresholds) {
    if (tau < 0.0 || tau >= 1.0) {
      throw Error(ErrorCode::kInvalidThreshold,
                  "threshold " + std::to_string(tau) + " outside [0, 1)");
    }
  }
  for (const std::string& m : spec.methods) {
    if (m != "centrality" && m != "magnitude" && m != "none") {
      throw Error(ErrorCode::kInvalidArgument, "unknown method '" + m + "'");
    }
  }
  if (spec.pretrain.epochs < 0 || spec.finetune.epochs < 0 ||
      spec.pretrain.batch_size < 1 || spec.finetune.batch_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad phase config");
  }
  if (spec.task.hidden.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "task needs at least one hidden layer");
  }
  if (spec.task.train_examples == 0 || spec.task.test_examples == 0) {
    throw Error(ErrorCode::kInvalidArgument, "task needs train and test data");
  }
}

ExperimentReport run_sweep(const SweepSpec& spec, const RunOptions& opts) {
  validate_sweep_spec(spec);

  Dataset pool = generate(spec.task,
                          spec.task.train_examples + spec.task.test_examples,
                          derive_seed(spec.task.data_seed, kDataStream));
  auto [train_data, test_data] = split_dataset(pool, spec.task.train_examples);

  // Pretraining depends only on the seed, so it is shared across the grid.
  std::map<std::uint64_t, MlpModel> pretrained;
  for (std::uint64_t seed : spec.seeds) {
    if (pretrained.contains(seed)) continue;
    MlpModel model = make_mlp(spec.task.features, spec.task.hidden,
                              static_cast<std::size_t>(spec.task.classes),
                              derive_seed(seed, kInitStream));
    train(model, train_data,
          phase_config(spec.pretrain, derive_seed(seed, kPretrainStream)));
    pretrained.emplace(seed, std::move(model));
  }

  std::vector<CellKey> keys;
  for (const std::string& method : spec.methods) {
    for (double p : spec.ratios) {
      for (double tau : spec.thresholds) {
        for (std::uint64_t seed : spec.seeds) {
          keys.push_back({method, p, tau, seed});
        }
      }
    }
  }

  ExperimentReport report;
  report.spec = spec;
  report.cells.resize(keys.size());

  std::mutex log_mutex;
  auto worker = [&](std::size_t begin, std::size_t step) {
    for (std::size_t idx = begin; idx < keys.size(); idx += step) {
      const CellKey& key = keys[idx];
      CellResult cell = run_cell(spec, key, pretrained.at(key.seed),
                                 train_data, test_data);
      if (opts.log != nullptr) {
        std::lock_guard<std::mutex> lock(log_mutex);
        *opts.log << "[cell] method=" << cell.method << " p=" << cell.p
                  << " tau=" << cell.tau << " seed=" << cell.seed;
        if (cell.failed) {
          *opts.log << " FAILED error=" << cell.error;
        } else {
          *opts.log << " acc=" << cell.accuracy
                    << " params=" << cell.params_before << "->"
                    << cell.params_after;
        }
        *opts.log << " graph=" << cell.timing.graph_seconds
                  << "s centrality=" << cell.timing.centrality_seconds
                  << "s train=" << cell.timing.train_seconds << "s\n";
      }
      report.cells[idx] = std::move(cell);
    }
  };

  int jobs = std::max(1, opts.jobs);
  if (jobs == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) {
      pool.emplace_back(worker, static_cast<std::size_t>(t),
                        static_cast<std::size_t>(jobs));
    }
    for (auto& th : pool) th.join();
  }

  report.aggregates = compute_aggregates(report.cells);
  return report;
}

std::vector<CellAggregate> compute_aggregates(
    const std::vector<CellResult>& cells) {
  std::vector<CellAggregate> out;
  for (const CellResult& cell : cells) {
    auto it = std::find_if(out.begin(), out.end(), [&](const CellAggregate& a) {
      return a.method == cell.method && a.p == cell.p && a.tau == cell.tau;
    });
    if (it == out.end()) {
      out.push_back({cell.method, cell.p, cell.tau, 0, 0.0, 0.0, 0, 0});
      it = out.end() - 1;
    }
    if (cell.failed) continue;
    if (it->num_seeds == 0) {
      it->params_before = cell.params_before;
      it->params_after = cell.params_after;
    }
    ++it->num_seeds;
    it->mean_accuracy += cell.accuracy;
  }

  for (CellAggregate& agg : out) {
    if (agg.num_seeds == 0) continue;
    agg.mean_accuracy /= static_cast<double>(agg.num_seeds);
    double var = 0.0;
    std::size_t count = 0;
    for (const CellResult& cell : cells) {
      if (cell.failed || cell.method != agg.method || cell.p != agg.p ||
          cell.tau != agg.tau) {
        continue;
      }
      double dev = cell.accuracy - agg.mean_accuracy;
      var += dev * dev;
      ++count;
    }
    agg.std_accuracy = std::sqrt(var / static_cast<double>(count));
  }
  return out;
}

std::string render_report(const ExperimentReport& report, ReportFormat fmt) {
  if (report.cells.empty()) {
    throw Error(ErrorCode::kEmptyReport, "report has no cells");
  }

  if (fmt == ReportFormat::kJson) {
    ordered_json j;
    j["spec"] = ordered_json::parse(sweep_spec_to_json(report.spec));
    j["cells"] = ordered_json::array();
    for (const CellResult& cell : report.cells) {
      ordered_json c;
      c["method"] = cell.method;
      c["p"] = cell.p;
      c["tau"] = cell.tau;
      c["seed"] = cell.seed;
      c["failed"] = cell.failed;
      if (cell.failed) {
        c["error"] = cell.error;
      } else {
        c["accuracy"] = cell.accuracy;
        c["params_before"] = cell.params_before;
        c["params_after"] = cell.params_after;
      }
      j["cells"].push_back(std::move(c));
    }
    j["aggregates"] = ordered_json::array();
    for (const CellAggregate& agg : report.aggregates) {
      ordered_json a;
      a["method"] = agg.method;
      a["p"] = agg.p;
      a["tau"] = agg.tau;
      a["num_seeds"] = agg.num_seeds;
      if (agg.num_seeds > 0) {
        a["mean_accuracy"] = agg.mean_accuracy;
        a["std_accuracy"] = agg.std_accuracy;
        a["params_before"] = agg.params_before;
        a["params_after"] = agg.params_after;
      }
      j["aggregates"].push_back(std::move(a));
    }
    return j.dump(2) + "\n";
  }

  if (fmt == ReportFormat::kCsv) {
    std::string out =
        "method,p,tau,seed,failed,error,accuracy,params_before,params_after\n";
    for (const CellResult& cell : report.cells) {
      out += cell.method + ',' + format_double(cell.p) + ',' +
             format_double(cell.tau) + ',' + std::to_string(cell.seed) + ',' +
             (cell.failed ? "true" : "false") + ',' + cell.error + ',';
      if (!cell.failed) {
        out += format_double(cell.accuracy) + ',' +
               std::to_string(cell.params_before) + ',' +
               std::to_string(cell.params_after);
      } else {
        out += ",,";
      }
      out += '\n';
    }
    return out;
  }

  // Markdown: accuracy table with one row per (ratio, threshold) and one
  // column per method, echoing the paper-style mean +/- std layout.
  const SweepSpec& spec = report.spec;
  std::ostringstream md;
  md << "# Sweep report\n\n";
  md << "Task: " << spec.task.kind << " (features=" << spec.task.features
     << ", classes=" << spec.task.classes
     << ", train=" << spec.task.train_examples
     << ", test=" << spec.task.test_examples << ", seeds=" << spec.seeds.size()
     << ")\n\n";

  auto find_agg = [&](const std::string& method, double p,
                      double tau) -> const CellAggregate* {
    for (const CellAggregate& agg : report.aggregates) {
      if (agg.method == method && agg.p == p && agg.tau == tau) return &agg;
    }
    return nullptr;
  };

  char buf[64];
  auto pct = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
    return std::string(buf);
  };
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };

  md << "## Top-1 accuracy (%)\n\n";
  md << "| Ratio | Tau |";
  for (const std::string& m : spec.methods) md << ' ' << m << " |";
  md << "\n|---|---|";
  for (std::size_t i = 0; i < spec.methods.size(); ++i) md << "---|";
  md << '\n';
  for (double p : spec.ratios) {
    for (double tau : spec.thresholds) {
      md << "| " << num(p) << " | " << num(tau) << " |";
      for (const std::string& m : spec.methods) {
        const CellAggregate* agg = find_agg(m, p, tau);
        if (agg == nullptr || agg->num_seeds == 0) {
          md << " n/a |";
        } else {
          md << ' ' << pct(agg->mean_accuracy) << " +/- "
             << pct(agg->std_accuracy);
          if (agg->num_seeds < spec.seeds.size()) {
            md << " (" << agg->num_seeds << '/' << spec.seeds.size()
               << " seeds)";
          }
          md << " |";
        }
      }
      md << '\n';
    }
  }

  md << "\n## Parameters (before -> after)\n\n";
  md << "| Ratio | Tau |";
  for (const std::string& m : spec.methods) md << ' ' << m << " |";
  md << "\n|---|---|";
  for (std::size_t i = 0; i < spec.methods.size(); ++i) md << "---|";
  md << '\n';
  for (double p : spec.ratios) {
    for (double tau : spec.thresholds) {
      md << "| " << num(p) << " | " << num(tau) << " |";
      for (const std::string& m : spec.methods) {
        const CellAggregate* agg = find_agg(m, p, tau);
        if (agg == nullptr || agg->num_seeds == 0) {
          md << " n/a |";
        } else {
          md << ' ' << agg->params_before << " -> " << agg->params_after
             << " |";
        }
      }
      md << '\n';
    }
  }
  return md.str();
}

ExperimentReport parse_report(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader,
                "report is not valid JSON: " + std::string(e.what()));
  }

  ExperimentReport report;
  try {
    report.spec = parse_sweep_spec(j.at("spec").dump());
    for (const auto& c : j.at("cells")) {
      CellResult cell;
      cell.method = c.at("method").get<std::string>();
      cell.p = c.at("p").get<double>();
      cell.tau = c.at("tau").get<double>();
      cell.seed = c.at("seed").get<std::uint64_t>();
      cell.failed = c.at("failed").get<bool>();
      if (cell.failed) {
        cell.error = c.at("error").get<std::string>();
      } else {
        cell.accuracy = c.at("accuracy").get<double>();
        cell.params_before = c.at("params_before").get<std::size_t>();
        cell.params_after = c.at("params_after").get<std::size_t>();
      }
      report.cells.push_back(std::move(cell));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedHeader,
                "report is missing fields: " + std::string(e.what()));
  }
  report.aggregates = compute_aggregates(report.cells);
  return report;
}

std::vector<CellResult> parse_cells_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kMalformedHeader, "csv is empty");
  }

  std::vector<CellResult> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 9) {
      throw Error(ErrorCode::kMalformedHeader,
                  "csv row has " + std::to_string(fields.size()) +
                      " fields, expected 9");
    }
    auto to_double = [](const std::string& s) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::kMalformedHeader, "bad number '" + s + "'");
      }
      return v;
    };

    CellResult cell;
    cell.method = fields[0];
    cell.p = to_double(fields[1]);
    cell.tau = to_double(fields[2]);
    cell.seed = std::stoull(fields[3]);
    cell.failed = fields[4] == "true";
    cell.error = fields[5];
    if (!cell.failed) {
      cell.accuracy = to_double(fields[6]);
      cell.params_before = std::stoull(fields[7]);
      cell.params_after = std::stoull(fields[8]);
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace centraprune
