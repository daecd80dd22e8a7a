#include "centraprune/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>

#include "centraprune/centrality.hpp"
#include "centraprune/dataset.hpp"
#include "centraprune/experiment.hpp"
#include "centraprune/graph.hpp"
#include "centraprune/net.hpp"
#include "centraprune/prune.hpp"
#include "centraprune/tensor_io.hpp"

namespace centraprune::cli {

namespace {

using nlohmann::ordered_json;

void check_tau(double tau) {
  if (tau < 0.0 || tau >= 1.0) {
    throw Error(ErrorCode::kInvalidThreshold,
                "--tau must lie in [0, 1), got " + std::to_string(tau));
  }
}

void check_ratio(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw Error(ErrorCode::kInvalidRatio,
                "--ratio must lie in (0, 1), got " + std::to_string(p));
  }
}

void check_positive(double v, const char* flag) {
  if (!(v > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(flag) + " must be > 0");
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  }
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void emit(const std::string& text, const std::string& out_path,
          std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
  } else {
    atomic_write_text(out_path, text);
  }
}

ordered_json analysis_json(const SimilarityGraph& graph,
                           const CentralityScores& scores) {
  ordered_json j;
  j["n"] = graph.node_count();
  j["tau"] = graph.tau();
  j["edges"] = ordered_json::array();
  for (const Edge& e : graph.edges()) {
    j["edges"].push_back(ordered_json::array({e.i, e.j, e.weight}));
  }
  j["centrality"] = scores.scores;
  j["lambda"] = scores.lambda;
  j["iterations"] = scores.iterations;
  j["converged"] = scores.converged;
  return j;
}

ordered_json plan_json(const PrunePlan& plan) {
  ordered_json j;
  j["n"] = plan.n;
  j["k"] = plan.k;
  j["p"] = plan.p;
  j["tau"] = plan.params.tau;
  j["method"] = plan.method;
  j["pruned"] = plan.pruned;
  j["kept"] = plan.kept;
  j["scores"] = plan.scores.scores;
  return j;
}

struct AnalyzeArgs {
  std::string weights_dir;
  double tau = 0.0;
  double epsilon = kDefaultEpsilon;
  double tol = kDefaultTolerance;
  int max_iter = kDefaultMaxIterations;
  std::string out_path;
};

int run_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  check_tau(a.tau);
  check_positive(a.epsilon, "--epsilon");
  check_positive(a.tol, "--tol");
  if (a.max_iter < 1) {
    throw Error(ErrorCode::kInvalidArgument, "--max-iter must be >= 1");
  }

  LayerBundle layer = read_layer(a.weights_dir);
  SimilarityGraph graph = build_layer_graph(layer.weights, a.tau, a.epsilon);
  CentralityScores scores = eigenvector_centrality(graph, a.tol, a.max_iter);

  emit(analysis_json(graph, scores).dump(2) + "\n", a.out_path, out);
  if (!scores.converged) {
    // The analysis is still emitted (converged=false marks it); the exit
    // code tells scripts not to trust it.
    ordered_json e;
    e["error"] = to_string(ErrorCode::kNotConverged);
    e["detail"] = "power iteration did not converge in " +
                  std::to_string(a.max_iter) + " iterations";
    err << e.dump() << '\n';
    return 2;
  }
  return 0;
}

struct PruneArgs {
  std::string weights_dir;
  double ratio = 0.0;
  double tau = 0.0;
  double epsilon = kDefaultEpsilon;
  double tol = kDefaultTolerance;
  int max_iter = kDefaultMaxIterations;
  std::string baseline;
  bool head_only = false;
  std::string out_dir;
};

int run_prune(const PruneArgs& a, std::ostream& out, std::ostream&) {
  check_ratio(a.ratio);
  check_tau(a.tau);
  check_positive(a.epsilon, "--epsilon");
  check_positive(a.tol, "--tol");
  if (!a.baseline.empty() && a.baseline != "magnitude") {
    throw Error(ErrorCode::kInvalidArgument,
                "--baseline only supports 'magnitude'");
  }

  LayerBundle layer = read_layer(a.weights_dir);
  auto next_path = std::filesystem::path(a.weights_dir) / "next_weights";
  bool have_consumer = std::filesystem::exists(next_path);
  if (!have_consumer && !a.head_only) {
    throw Error(ErrorCode::kMissingFile,
                "no next_weights in " + a.weights_dir +
                    "; pass --head-only to prune without consumer slicing");
  }

  PrunePlan plan;
  if (a.baseline == "magnitude") {
    plan = magnitude_plan(layer, a.ratio);
    plan.params.tau = a.tau;
  } else {
    SimilarityGraph graph = build_layer_graph(layer.weights, a.tau, a.epsilon);
    CentralityScores scores = eigenvector_centrality(graph, a.tol, a.max_iter);
    if (!scores.converged) {
      throw Error(ErrorCode::kNotConverged,
                  "power iteration did not converge in " +
                      std::to_string(a.max_iter) + " iterations");
    }
    plan = make_plan(scores, a.ratio, {a.tau, a.epsilon, a.tol});
  }

  PrunedLayer sliced = apply_plan(layer, plan);
  LayerBundle pruned_layer;
  pruned_layer.name = layer.name;
  pruned_layer.activation = layer.activation;
  pruned_layer.weights = std::move(sliced.weights);
  pruned_layer.bias = std::move(sliced.bias);
  write_layer(a.out_dir, pruned_layer);

  if (have_consumer) {
    Matrix next = tensor_to_matrix(read_tensor(next_path));
    write_tensor(std::filesystem::path(a.out_dir) / "next_weights",
                 matrix_to_tensor(slice_downstream(next, plan)));
  }
  atomic_write_text(std::filesystem::path(a.out_dir) / "plan.json",
                    plan_json(plan).dump(2) + "\n");

  ordered_json summary;
  summary["n"] = plan.n;
  summary["k"] = plan.k;
  summary["method"] = plan.method;
  summary["no_op"] = plan.no_op;
  summary["out"] = a.out_dir;
  out << summary.dump() << '\n';
  return 0;
}

struct PruneModelArgs {
  std::string model_dir;
  std::string layer;
  double ratio = 0.0;
  double tau = 0.0;
  double epsilon = kDefaultEpsilon;
  double tol = kDefaultTolerance;
  int max_iter = kDefaultMaxIterations;
  std::string baseline;
  std::string out_dir;
};

// Whole-model variant of prune: reads a model directory, prunes one named
// hidden layer, slices its consumer and writes the rebuilt model.
int run_prune_model(const PruneModelArgs& a, std::ostream& out,
                    std::ostream&) {
  check_ratio(a.ratio);
  check_tau(a.tau);
  check_positive(a.epsilon, "--epsilon");
  check_positive(a.tol, "--tol");
  if (!a.baseline.empty() && a.baseline != "magnitude") {
    throw Error(ErrorCode::kInvalidArgument,
                "--baseline only supports 'magnitude'");
  }

  MlpModel model = read_model(a.model_dir);
  auto it = std::find_if(
      model.layers.begin(), model.layers.end(),
      [&](const LayerBundle& l) { return l.name == a.layer; });
  if (it == model.layers.end()) {
    throw Error(ErrorCode::kUnknownLayer,
                "no hidden layer named '" + a.layer + "'");
  }

  PrunePlan plan;
  if (a.baseline == "magnitude") {
    plan = magnitude_plan(*it, a.ratio);
    plan.params.tau = a.tau;
  } else {
    SimilarityGraph graph = build_layer_graph(it->weights, a.tau, a.epsilon);
    CentralityScores scores = eigenvector_centrality(graph, a.tol, a.max_iter);
    if (!scores.converged) {
      throw Error(ErrorCode::kNotConverged,
                  "power iteration did not converge in " +
                      std::to_string(a.max_iter) + " iterations");
    }
    plan = make_plan(scores, a.ratio, {a.tau, a.epsilon, a.tol});
  }

  MlpModel rebuilt = rebuild_with_plan(model, a.layer, plan);
  write_model(a.out_dir, rebuilt);
  atomic_write_text(std::filesystem::path(a.out_dir) / "plan.json",
                    plan_json(plan).dump(2) + "\n");

  ordered_json summary;
  summary["layer"] = a.layer;
  summary["n"] = plan.n;
  summary["k"] = plan.k;
  summary["method"] = plan.method;
  summary["params_before"] = parameter_count(model);
  summary["params_after"] = parameter_count(rebuilt);
  summary["out"] = a.out_dir;
  out << summary.dump() << '\n';
  return 0;
}

struct TrainArgs {
  std::string model_dir;
  std::string data_dir;
  int epochs = 0;
  double lr = 0.0;
  int batch = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int run_train(const TrainArgs& a, std::ostream& out, std::ostream&) {
  if (a.epochs < 0) {
    throw Error(ErrorCode::kInvalidArgument, "--epochs must be >= 0");
  }
  if (a.batch < 1) {
    throw Error(ErrorCode::kInvalidArgument, "--batch must be >= 1");
  }
  if (a.lr < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "--lr must be >= 0");
  }

  MlpModel model = read_model(a.model_dir);
  Dataset data = read_dataset(a.data_dir);
  TrainConfig cfg{a.epochs, a.batch, a.lr, a.seed};
  TrainResult result = train(model, data, cfg);
  write_model(a.out_dir, model);

  ordered_json summary;
  summary["epochs"] = a.epochs;
  summary["loss_history"] = result.loss_history;
  summary["final_loss"] =
      result.loss_history.empty() ? 0.0 : result.loss_history.back();
  summary["train_accuracy"] = evaluate(model, data);
  summary["model"] = a.out_dir;
  out << summary.dump() << '\n';
  return 0;
}

struct EvalArgs {
  std::string model_dir;
  std::string data_dir;
};

int run_eval(const EvalArgs& a, std::ostream& out, std::ostream&) {
  MlpModel model = read_model(a.model_dir);
  Dataset data = read_dataset(a.data_dir);
  ordered_json summary;
  summary["accuracy"] = evaluate(model, data);
  summary["examples"] = data.size();
  summary["parameters"] = parameter_count(model);
  out << summary.dump() << '\n';
  return 0;
}

struct SweepArgs {
  std::string spec_path;
  std::string out_path;
  std::string timings_path;
  int jobs = 1;
};

int run_sweep_cmd(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  if (a.jobs < 1) {
    throw Error(ErrorCode::kInvalidArgument, "--jobs must be >= 1");
  }
  SweepSpec spec = parse_sweep_spec(read_text_file(a.spec_path));
  RunOptions opts;
  opts.jobs = a.jobs;
  opts.log = &err;
  ExperimentReport report = run_sweep(spec, opts);
  emit(render_report(report, ReportFormat::kJson), a.out_path, out);

  if (!a.timings_path.empty()) {
    // wall-clock numbers live in a sidecar: the report itself must stay
    // byte-identical across reruns
    ordered_json t;
    t["cells"] = ordered_json::array();
    for (const CellResult& cell : report.cells) {
      t["cells"].push_back(
          ordered_json{{"method", cell.method},
                       {"p", cell.p},
                       {"tau", cell.tau},
                       {"seed", cell.seed},
                       {"graph_seconds", cell.timing.graph_seconds},
                       {"centrality_seconds", cell.timing.centrality_seconds},
                       {"train_seconds", cell.timing.train_seconds}});
    }
    atomic_write_text(a.timings_path, t.dump(2) + "\n");
  }

  std::size_t failed = 0;
  for (const CellResult& cell : report.cells) failed += cell.failed ? 1 : 0;
  ordered_json summary;
  summary["cells"] = report.cells.size();
  summary["failed"] = failed;
  summary["report"] = a.out_path;
  out << summary.dump() << '\n';
  return 0;
}

struct ReportArgs {
  std::string in_path;
  std::string fmt = "md";
  std::string out_path;
};

int run_report(const ReportArgs& a, std::ostream& out, std::ostream&) {
  ReportFormat fmt;
  if (a.fmt == "json") {
    fmt = ReportFormat::kJson;
  } else if (a.fmt == "csv") {
    fmt = ReportFormat::kCsv;
  } else if (a.fmt == "md") {
    fmt = ReportFormat::kMarkdown;
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "--fmt must be one of json, csv, md");
  }
  ExperimentReport report = parse_report(read_text_file(a.in_path));
  emit(render_report(report, fmt), a.out_path, out);
  return 0;
}

struct GenDataArgs {
  std::string kind = "blobs";
  std::size_t features = 0;
  int classes = 0;
  std::size_t examples = 0;
  std::size_t test_examples = 0;
  double noise = 1.0;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string test_out_dir;
};

int run_gen_data(const GenDataArgs& a, std::ostream& out, std::ostream&) {
  if (a.test_out_dir.empty() != (a.test_examples == 0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "--test-out and --test-examples go together");
  }

  std::size_t total = a.examples + a.test_examples;
  Dataset data;
  if (a.kind == "blobs") {
    data = make_blobs(total, a.features, a.classes, a.noise, a.seed);
  } else if (a.kind == "rings") {
    data = make_rings(total, a.features, a.classes, a.noise, a.seed);
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "--kind must be 'blobs' or 'rings'");
  }

  if (a.test_out_dir.empty()) {
    write_dataset(a.out_dir, data);
  } else {
    // one draw, split in two, so both sides describe the same task
    auto [train, test] = split_dataset(data, a.examples);
    write_dataset(a.out_dir, train);
    write_dataset(a.test_out_dir, test);
  }

  ordered_json summary;
  summary["examples"] = a.examples;
  summary["test_examples"] = a.test_examples;
  summary["features"] = data.features();
  summary["num_classes"] = data.num_classes;
  summary["out"] = a.out_dir;
  out << summary.dump() << '\n';
  return 0;
}

struct GenModelArgs {
  std::size_t features = 0;
  std::vector<std::size_t> hidden;
  int classes = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int run_gen_model(const GenModelArgs& a, std::ostream& out, std::ostream&) {
  if (a.classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "--classes must be >= 2");
  }
  MlpModel model = make_mlp(a.features, a.hidden,
                            static_cast<std::size_t>(a.classes), a.seed);
  write_model(a.out_dir, model);

  ordered_json summary;
  summary["input_dim"] = model.input_dim();
  summary["num_classes"] = model.num_classes();
  summary["parameters"] = parameter_count(model);
  summary["out"] = a.out_dir;
  out << summary.dump() << '\n';
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Similarity-graph neuron pruning for dense layers"};
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand(
      "analyze", "Build the neuron similarity graph and centrality scores");
  analyze->add_option("--weights", analyze_args.weights_dir, "Layer directory")
      ->required();
  analyze->add_option("--tau", analyze_args.tau, "Similarity threshold")
      ->required();
  analyze->add_option("--epsilon", analyze_args.epsilon,
                      "Normalization constant");
  analyze->add_option("--tol", analyze_args.tol, "Convergence tolerance");
  analyze->add_option("--max-iter", analyze_args.max_iter,
                      "Power iteration cap");
  analyze->add_option("--out", analyze_args.out_path,
                      "Output path (stdout when omitted)");

  PruneArgs prune_args;
  auto* prune = app.add_subcommand(
      "prune", "Write a pruned copy of a layer plus its plan");
  prune->add_option("--weights", prune_args.weights_dir, "Layer directory")
      ->required();
  prune->add_option("--ratio", prune_args.ratio, "Fraction of neurons to drop")
      ->required();
  prune->add_option("--tau", prune_args.tau, "Similarity threshold")
      ->required();
  prune->add_option("--epsilon", prune_args.epsilon, "Normalization constant");
  prune->add_option("--tol", prune_args.tol, "Convergence tolerance");
  prune->add_option("--max-iter", prune_args.max_iter, "Power iteration cap");
  prune->add_option("--baseline", prune_args.baseline,
                    "Rank by 'magnitude' instead of centrality");
  prune->add_flag("--head-only", prune_args.head_only,
                  "Allow pruning without a consumer to slice");
  prune->add_option("--out", prune_args.out_dir, "Output directory")
      ->required();

  PruneModelArgs prune_model_args;
  auto* prune_model = app.add_subcommand(
      "prune-model", "Prune one hidden layer of a model and rebuild it");
  prune_model->add_option("--model", prune_model_args.model_dir,
                          "Model directory")
      ->required();
  prune_model->add_option("--layer", prune_model_args.layer,
                          "Hidden layer name")
      ->required();
  prune_model
      ->add_option("--ratio", prune_model_args.ratio,
                   "Fraction of neurons to drop")
      ->required();
  prune_model->add_option("--tau", prune_model_args.tau, "Similarity threshold")
      ->required();
  prune_model->add_option("--epsilon", prune_model_args.epsilon,
                          "Normalization constant");
  prune_model->add_option("--tol", prune_model_args.tol,
                          "Convergence tolerance");
  prune_model->add_option("--max-iter", prune_model_args.max_iter,
                          "Power iteration cap");
  prune_model->add_option("--baseline", prune_model_args.baseline,
                          "Rank by 'magnitude' instead of centrality");
  prune_model->add_option("--out", prune_model_args.out_dir,
                          "Output model directory")
      ->required();

  TrainArgs train_args;
  auto* train_cmd =
      app.add_subcommand("train", "Train or fine-tune a model on a dataset");
  train_cmd->add_option("--model", train_args.model_dir, "Model directory")
      ->required();
  train_cmd->add_option("--data", train_args.data_dir, "Dataset directory")
      ->required();
  train_cmd->add_option("--epochs", train_args.epochs, "Epochs")->required();
  train_cmd->add_option("--lr", train_args.lr, "Learning rate")->required();
  train_cmd->add_option("--batch", train_args.batch, "Batch size")->required();
  train_cmd->add_option("--seed", train_args.seed, "Shuffle seed")->required();
  train_cmd->add_option("--out", train_args.out_dir, "Output model directory")
      ->required();

  EvalArgs eval_args;
  auto* eval_cmd =
      app.add_subcommand("eval", "Top-1 accuracy of a model on a dataset");
  eval_cmd->add_option("--model", eval_args.model_dir, "Model directory")
      ->required();
  eval_cmd->add_option("--data", eval_args.data_dir, "Dataset directory")
      ->required();

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand(
      "sweep", "Run a (method x ratio x threshold x seed) grid");
  sweep->add_option("--spec", sweep_args.spec_path, "Sweep spec JSON")
      ->required();
  sweep->add_option("--out", sweep_args.out_path, "Report JSON path")
      ->required();
  sweep->add_option("--jobs", sweep_args.jobs, "Worker threads");
  sweep->add_option("--timings", sweep_args.timings_path,
                    "Per-phase wall-time sidecar JSON");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Re-render a sweep report");
  report->add_option("--in", report_args.in_path, "Report JSON path")
      ->required();
  report->add_option("--fmt", report_args.fmt, "json, csv or md");
  report->add_option("--out", report_args.out_path,
                     "Output path (stdout when omitted)");

  GenDataArgs gen_data_args;
  auto* gen_data =
      app.add_subcommand("gen-data", "Write a synthetic dataset directory");
  gen_data->add_option("--kind", gen_data_args.kind, "blobs or rings");
  gen_data->add_option("--features", gen_data_args.features, "Feature count")
      ->required();
  gen_data->add_option("--classes", gen_data_args.classes, "Class count")
      ->required();
  gen_data->add_option("--examples", gen_data_args.examples, "Example count")
      ->required();
  gen_data->add_option("--test-examples", gen_data_args.test_examples,
                       "Held-out example count");
  gen_data->add_option("--noise", gen_data_args.noise, "Noise scale");
  gen_data->add_option("--seed", gen_data_args.seed, "Generator seed")
      ->required();
  gen_data->add_option("--out", gen_data_args.out_dir, "Output directory")
      ->required();
  gen_data->add_option("--test-out", gen_data_args.test_out_dir,
                       "Held-out output directory");

  GenModelArgs gen_model_args;
  auto* gen_model =
      app.add_subcommand("gen-model", "Write a freshly initialized model");
  gen_model->add_option("--features", gen_model_args.features, "Input dim")
      ->required();
  gen_model
      ->add_option("--hidden", gen_model_args.hidden,
                   "Hidden layer widths, comma separated")
      ->required()
      ->delimiter(',');
  gen_model->add_option("--classes", gen_model_args.classes, "Class count")
      ->required();
  gen_model->add_option("--seed", gen_model_args.seed, "Init seed")
      ->required();
  gen_model->add_option("--out", gen_model_args.out_dir, "Output directory")
      ->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    ordered_json j;
    j["error"] = to_string(ErrorCode::kInvalidFlags);
    j["detail"] = e.what();
    err << j.dump() << '\n';
    return 1;
  }

  try {
    if (analyze->parsed()) return run_analyze(analyze_args, out, err);
    if (prune->parsed()) return run_prune(prune_args, out, err);
    if (prune_model->parsed()) {
      return run_prune_model(prune_model_args, out, err);
    }
    if (train_cmd->parsed()) return run_train(train_args, out, err);
    if (eval_cmd->parsed()) return run_eval(eval_args, out, err);
    if (sweep->parsed()) return run_sweep_cmd(sweep_args, out, err);
    if (report->parsed()) return run_report(report_args, out, err);
    if (gen_data->parsed()) return run_gen_data(gen_data_args, out, err);
    if (gen_model->parsed()) return run_gen_model(gen_model_args, out, err);
  } catch (const Error& e) {
    ordered_json j;
    j["error"] = to_string(e.code());
    j["detail"] = e.detail();
    err << j.dump() << '\n';
    return is_runtime_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    ordered_json j;
    j["error"] = "Internal";
    j["detail"] = e.what();
    err << j.dump() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace centraprune::cli
