#include "groundcheck/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "json_detail.hpp"

#include "groundcheck/config.hpp"
#include "groundcheck/intervene.hpp"
#include "groundcheck/pipeline.hpp"
#include "groundcheck/train.hpp"

namespace groundcheck {

namespace fs = std::filesystem;

namespace {

using detail::json;

struct CommonOptions {
  std::string config_path;
  std::string dataset_path;
  std::string out_dir = "runs";
  std::string seeds_text;
  std::string fractions_text;
  std::string kinds_text;
  std::string orientation;
  std::string edge_weighting;
  bool skip_bad = false;
  int threads = -1;  // -1 = leave config value
};

void add_config_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--out-dir", opts.out_dir, "artifact root directory");
  cmd->add_option("--orientation", opts.orientation,
                  "flow orientation override (resp_to_ref | ref_to_resp)");
  cmd->add_option("--edge-weighting", opts.edge_weighting,
                  "adjacency edge weighting override (unit | capacity | flow)");
  cmd->add_option("--threads", opts.threads, "worker threads (0 = auto)");
}

Config effective_config(const CommonOptions& opts) {
  Config config;
  if (!opts.config_path.empty()) config = Config::from_json_file(opts.config_path);
  if (!opts.orientation.empty()) {
    config.flow.orientation = flow_orientation_from_string(opts.orientation);
  }
  if (!opts.edge_weighting.empty()) {
    config.gnn.edge_weighting = edge_weighting_from_string(opts.edge_weighting);
  }
  if (opts.threads >= 0) config.runtime.threads = opts.threads;
  config.validate();
  return config;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  if (text.empty()) return {0};
  std::vector<std::uint64_t> seeds;
  const std::size_t range = text.find("..");
  if (range != std::string::npos) {
    const std::uint64_t lo = std::stoull(text.substr(0, range));
    const std::uint64_t hi = std::stoull(text.substr(range + 2));
    if (hi < lo) throw std::invalid_argument("seed range is reversed");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  return seeds;
}

std::vector<double> parse_fractions(const std::string& text,
                                    const std::vector<double>& fallback) {
  if (text.empty()) return fallback;
  std::vector<double> fractions;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) fractions.push_back(std::stod(item));
  }
  if (fractions.empty()) throw std::invalid_argument("no fractions given");
  return fractions;
}

std::vector<InterventionKind> parse_kinds(const std::string& text,
                                          const std::vector<std::string>& fallback) {
  std::vector<std::string> names = fallback;
  if (!text.empty()) {
    names.clear();
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) names.push_back(item);
    }
  }
  std::vector<InterventionKind> kinds;
  for (const auto& name : names) kinds.push_back(intervention_kind_from_string(name));
  if (kinds.empty()) throw std::invalid_argument("no intervention kinds given");
  return kinds;
}

fs::path run_root(const CommonOptions& opts, const Config& config) {
  return fs::path(opts.out_dir) / config.hash();
}

fs::path pipeline_dir(const CommonOptions& opts, const Config& config) {
  return run_root(opts, config) / "pipeline";
}

fs::path seed_dir(const CommonOptions& opts, const Config& config, std::uint64_t seed) {
  return run_root(opts, config) / ("seed" + std::to_string(seed));
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError("cannot write '" + path.string() + "'");
  out << text;
}

void echo_config(const fs::path& dir, const Config& config) {
  fs::create_directories(dir);
  write_file(dir / "config.json", config.to_json(2) + "\n");
}

Dataset load_dataset(const CommonOptions& opts) {
  if (opts.dataset_path.empty()) {
    throw CLI::ValidationError("--dataset", "a dataset path is required");
  }
  IngestResult result = ingest_jsonl(opts.dataset_path, IngestOptions{opts.skip_bad});
  for (const auto& issue : result.skipped) {
    std::cerr << "skipped line " << issue.line << ": " << issue.message << "\n";
  }
  if (result.dataset.examples.empty()) throw DataError("dataset is empty");
  return result.dataset;
}

struct SplitInstances {
  std::vector<GraphInstance> train, validation, test;
};

SplitInstances split_instances(const std::vector<GraphInstance>& instances,
                               const Config& config, std::uint64_t seed) {
  SplitSpec spec = config.split;
  spec.seed = seed;
  const SplitIndices indices = split(instances.size(), spec);
  SplitInstances out;
  for (const std::size_t i : indices.train) out.train.push_back(instances[i]);
  for (const std::size_t i : indices.validation) out.validation.push_back(instances[i]);
  for (const std::size_t i : indices.test) out.test.push_back(instances[i]);
  return out;
}

json report_to_json(const EvalReport& r) {
  json j;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["tn"] = r.tn;
  j["fn"] = r.fn;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["macro_f1"] = r.macro_f1;
  j["accuracy"] = r.accuracy;
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.tp = j.at("tp").get<long>();
  r.fp = j.at("fp").get<long>();
  r.tn = j.at("tn").get<long>();
  r.fn = j.at("fn").get<long>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  return r;
}

std::string report_csv_row(const std::string& seed, const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << seed << ',' << r.tp << ',' << r.fp << ',' << r.tn << ',' << r.fn << ','
      << r.precision << ',' << r.recall << ',' << r.f1 << ',' << r.macro_f1 << ','
      << r.accuracy << '\n';
  return out.str();
}

SweepOptions sweep_options(const Config& config) {
  SweepOptions options;
  options.orientation = config.flow.orientation;
  options.intra_capacity = config.flow.intra_capacity;
  options.edge_weighting = config.gnn.edge_weighting;
  options.flow_refresh = config.intervene.flow_refresh;
  options.threshold = config.train.threshold;
  return options;
}

/// Test instances with their graphs re-attached from the flowed artifact,
/// required by interventions and the cosine analysis.
std::vector<GraphInstance> instances_with_graphs(const CommonOptions& opts,
                                                 const Config& config) {
  const fs::path dir = pipeline_dir(opts, config);
  std::vector<GraphInstance> instances =
      read_features_artifact((dir / "features.bin").string(), config);
  std::vector<ProcessedExample> flowed =
      read_aligned_artifact((dir / "flowed.json").string(), config, true);
  if (flowed.size() != instances.size()) {
    throw PipelineError("features and flowed artifacts disagree; re-run `groundcheck featurize`");
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].id != flowed[i].id) {
      throw PipelineError("features and flowed artifacts disagree on example order");
    }
    instances[i].graph = std::move(flowed[i].graph);
  }
  return instances;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_synth(std::size_t n, double rate, std::uint64_t seed, const std::string& out_path) {
  const Dataset dataset = synth_corpus({n, rate, seed});
  write_jsonl(dataset, out_path);
  std::cerr << "wrote " << dataset.examples.size() << " examples to " << out_path << "\n";
  return 0;
}

int cmd_parse(const CommonOptions& opts) {
  const Config config = effective_config(opts);
  const Dataset dataset = load_dataset(opts);
  Pipeline pipeline(config);
  const std::vector<ParsedExample> parsed = pipeline.parse_dataset(dataset);
  const fs::path dir = pipeline_dir(opts, config);
  fs::create_directories(dir);
  echo_config(run_root(opts, config), config);
  write_graphs_artifact((dir / "graphs.json").string(), config, parsed);
  std::cerr << "parsed " << parsed.size() << " examples -> " << (dir / "graphs.json") << "\n";
  return 0;
}

int cmd_align(const CommonOptions& opts) {
  const Config config = effective_config(opts);
  const fs::path dir = pipeline_dir(opts, config);
  Pipeline pipeline(config);
  const auto parsed = read_graphs_artifact((dir / "graphs.json").string(), config);
  const auto aligned = pipeline.align_parsed(parsed);
  write_aligned_artifact((dir / "aligned.json").string(), config, aligned, false);
  std::size_t edges = 0;
  for (const auto& example : aligned) edges += example.graph.alignment_edges.size();
  std::cerr << "aligned " << aligned.size() << " examples (" << edges
            << " alignment edges) -> " << (dir / "aligned.json") << "\n";
  return 0;
}

int cmd_flow(const CommonOptions& opts) {
  const Config config = effective_config(opts);
  const fs::path dir = pipeline_dir(opts, config);
  Pipeline pipeline(config);
  auto aligned = read_aligned_artifact((dir / "aligned.json").string(), config, false);
  const auto flowed = pipeline.solve_aligned(std::move(aligned));
  write_aligned_artifact((dir / "flowed.json").string(), config, flowed, true);
  std::cerr << "solved flows for " << flowed.size() << " examples -> "
            << (dir / "flowed.json") << "\n";
  return 0;
}

int cmd_featurize(const CommonOptions& opts) {
  const Config config = effective_config(opts);
  const fs::path dir = pipeline_dir(opts, config);
  Pipeline pipeline(config);
  const auto flowed = read_aligned_artifact((dir / "flowed.json").string(), config, true);
  const auto instances = pipeline.featurize_processed(flowed);
  write_features_artifact((dir / "features.bin").string(), config, instances);
  std::cerr << "featurized " << instances.size() << " examples -> "
            << (dir / "features.bin") << "\n";
  return 0;
}

int cmd_train(const CommonOptions& opts) {
  const Config base = effective_config(opts);
  const auto seeds = parse_seeds(opts.seeds_text);
  const fs::path dir = pipeline_dir(opts, base);
  const auto instances = read_features_artifact((dir / "features.bin").string(), base);

  for (const std::uint64_t seed : seeds) {
    Config config = base;
    config.set_seed(seed);
    const SplitInstances splits = split_instances(instances, config, seed);
    const fs::path sdir = seed_dir(opts, base, seed);
    echo_config(sdir, config);

    TrainOptions options;
    options.progress = [&](int epoch, const EpochStats& stats) {
      std::cerr << "seed " << seed << " epoch " << epoch << " train_loss "
                << stats.train_loss << " val_loss " << stats.val_loss << " val_f1 "
                << stats.val_f1 << " lr " << stats.learning_rate << "\n";
    };
    Checkpoint checkpoint;
    checkpoint.config_hash = base.hash();
    const TrainResult result = train_resumable(splits.train, splits.validation,
                                               config.train, nullptr, &checkpoint, options);
    save_checkpoint(checkpoint, (sdir / "checkpoint.json").string());

    json history;
    history["format_version"] = kArtifactFormatVersion;
    history["config_hash"] = base.hash();
    history["seed"] = seed;
    history["stopped_epoch"] = result.history.stopped_epoch;
    history["best_epoch"] = result.history.best_epoch;
    history["epochs"] = json::array();
    for (const auto& e : result.history.epochs) {
      history["epochs"].push_back({{"train_loss", e.train_loss},
                                   {"val_loss", e.val_loss},
                                   {"val_f1", e.val_f1},
                                   {"learning_rate", e.learning_rate}});
    }
    write_file(sdir / "history.json", history.dump(2) + "\n");
    std::cerr << "seed " << seed << " stopped at epoch " << result.history.stopped_epoch
              << " (best " << result.history.best_epoch << ") -> "
              << (sdir / "checkpoint.json") << "\n";
  }
  return 0;
}

int cmd_eval(const CommonOptions& opts, bool cosine_distances) {
  const Config base = effective_config(opts);
  const auto seeds = parse_seeds(opts.seeds_text);
  const auto instances = cosine_distances
                             ? instances_with_graphs(opts, base)
                             : read_features_artifact(
                                   (pipeline_dir(opts, base) / "features.bin").string(), base);

  for (const std::uint64_t seed : seeds) {
    Config config = base;
    config.set_seed(seed);
    const SplitInstances splits = split_instances(instances, config, seed);
    const fs::path sdir = seed_dir(opts, base, seed);
    const fs::path checkpoint_path = sdir / "checkpoint.json";
    if (!fs::exists(checkpoint_path)) {
      throw PipelineError("missing checkpoint '" + checkpoint_path.string() +
                          "'; run `groundcheck train` first");
    }
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path.string());

    std::vector<double> probabilities;
    std::vector<int> labels;
    for (const auto& instance : splits.test) {
      probabilities.push_back(
          predict(checkpoint.best_params, instance.features, instance.adjacency));
      labels.push_back(instance.label);
    }
    const EvalReport report = evaluate(probabilities, labels, config.train.threshold);

    json eval_json;
    eval_json["format_version"] = kArtifactFormatVersion;
    eval_json["config_hash"] = base.hash();
    eval_json["seed"] = seed;
    eval_json["report"] = report_to_json(report);
    write_file(sdir / "eval.json", eval_json.dump(2) + "\n");
    write_file(sdir / "eval.csv",
               "seed,tp,fp,tn,fn,precision,recall,f1,macro_f1,accuracy\n" +
                   report_csv_row(std::to_string(seed), report));

    if (cosine_distances) {
      const CosineDistanceStats stats =
          cosine_distance_by_layer(checkpoint.best_params, splits.test);
      json cj;
      cj["format_version"] = kArtifactFormatVersion;
      cj["config_hash"] = base.hash();
      cj["seed"] = seed;
      cj["graphs_without_alignment"] = stats.graphs_without_alignment;
      cj["zero_vector_pairs"] = stats.zero_vector_pairs;
      cj["layers"] = json::array();
      for (std::size_t layer = 0; layer < stats.layers.size(); ++layer) {
        json lj;
        lj["layer"] = layer;
        for (int label = 0; label < 2; ++label) {
          const auto& bucket = stats.layers[layer][static_cast<std::size_t>(label)];
          json bj;
          bj["count"] = bucket.values.size();
          bj["mean"] = bucket.mean;
          bj["stdev"] = bucket.stdev;
          bj["values"] = bucket.values;
          lj[label == 1 ? "hallucinated" : "supported"] = std::move(bj);
        }
        cj["layers"].push_back(std::move(lj));
      }
      write_file(sdir / "cosine_layers.json", cj.dump(2) + "\n");
    }
    std::cerr << "seed " << seed << " test f1 " << report.f1 << " accuracy "
              << report.accuracy << " -> " << (sdir / "eval.json") << "\n";
  }
  return 0;
}

int cmd_perturb(const CommonOptions& opts) {
  const Config config = effective_config(opts);
  const auto seeds = parse_seeds(opts.seeds_text);
  const auto fractions = parse_fractions(opts.fractions_text, config.intervene.fractions);
  const auto kinds = parse_kinds(opts.kinds_text, config.intervene.kinds);
  const auto instances = instances_with_graphs(opts, config);
  const SweepOptions options = sweep_options(config);

  SweepTable table;
  for (const std::uint64_t seed : seeds) {
    Config seeded = config;
    seeded.set_seed(seed);
    const SplitInstances splits = split_instances(instances, seeded, seed);
    const fs::path checkpoint_path = seed_dir(opts, config, seed) / "checkpoint.json";
    if (!fs::exists(checkpoint_path)) {
      throw PipelineError("missing checkpoint '" + checkpoint_path.string() +
                          "'; run `groundcheck train` first");
    }
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path.string());
    const SweepTable partial = perturbation_sweep(checkpoint.best_params, splits.test,
                                                  fractions, kinds, {seed}, options);
    table.cells.insert(table.cells.end(), partial.cells.begin(), partial.cells.end());
  }
  const fs::path out_path = run_root(opts, config) / "perturb_sweep.csv";
  write_file(out_path, sweep_to_csv(table));
  std::cerr << "wrote " << table.cells.size() << " sweep cells -> " << out_path << "\n";
  return 0;
}

int cmd_ablate(const CommonOptions& opts) {
  const Config config = effective_config(opts);
  const auto seeds = parse_seeds(opts.seeds_text);
  const auto fractions = parse_fractions(opts.fractions_text, config.intervene.fractions);
  const auto kinds = parse_kinds(opts.kinds_text, config.intervene.kinds);
  const auto instances = instances_with_graphs(opts, config);
  const SweepOptions options = sweep_options(config);

  SweepTable table;
  json histories = json::array();
  for (const std::uint64_t seed : seeds) {
    Config seeded = config;
    seeded.set_seed(seed);
    const SplitInstances splits = split_instances(instances, seeded, seed);
    const AblationTable partial =
        ablation_sweep(splits.train, splits.validation, splits.test, seeded.train,
                       fractions, kinds, {seed}, options);
    for (const auto& cell : partial.cells) {
      table.cells.push_back(cell.cell);
      json h;
      h["kind"] = std::string(to_string(cell.cell.kind));
      h["fraction"] = cell.cell.fraction;
      h["seed"] = cell.cell.seed;
      h["stopped_epoch"] = cell.history.stopped_epoch;
      h["best_epoch"] = cell.history.best_epoch;
      histories.push_back(std::move(h));
    }
  }
  const fs::path root = run_root(opts, config);
  fs::create_directories(root);
  write_file(root / "ablate_sweep.csv", sweep_to_csv(table));
  json hj;
  hj["format_version"] = kArtifactFormatVersion;
  hj["config_hash"] = config.hash();
  hj["cells"] = std::move(histories);
  write_file(root / "ablate_histories.json", hj.dump(2) + "\n");
  std::cerr << "wrote " << table.cells.size() << " ablation cells -> "
            << (root / "ablate_sweep.csv") << "\n";
  return 0;
}

int cmd_report(const CommonOptions& opts) {
  const Config config = effective_config(opts);
  const auto seeds = parse_seeds(opts.seeds_text);
  std::vector<EvalReport> reports;
  std::string csv = "seed,tp,fp,tn,fn,precision,recall,f1,macro_f1,accuracy\n";
  json per_seed = json::array();
  for (const std::uint64_t seed : seeds) {
    const fs::path eval_path = seed_dir(opts, config, seed) / "eval.json";
    std::ifstream in(eval_path);
    if (!in) {
      throw PipelineError("missing '" + eval_path.string() + "'; run `groundcheck eval` first");
    }
    const json j = json::parse(in);
    const EvalReport report = report_from_json(j.at("report"));
    reports.push_back(report);
    csv += report_csv_row(std::to_string(seed), report);
    json entry;
    entry["seed"] = seed;
    entry["report"] = report_to_json(report);
    per_seed.push_back(std::move(entry));
  }
  const AggregateReport agg = seed_aggregate(reports);
  {
    std::ostringstream mean_row, stdev_row;
    mean_row.precision(17);
    stdev_row.precision(17);
    mean_row << "mean,,,,," << agg.precision.mean << ',' << agg.recall.mean << ','
             << agg.f1.mean << ',' << agg.macro_f1.mean << ',' << agg.accuracy.mean << '\n';
    stdev_row << "stdev,,,,," << agg.precision.stdev << ',' << agg.recall.stdev << ','
              << agg.f1.stdev << ',' << agg.macro_f1.stdev << ',' << agg.accuracy.stdev
              << '\n';
    csv += mean_row.str();
    csv += stdev_row.str();
  }
  const fs::path root = run_root(opts, config);
  fs::create_directories(root);
  write_file(root / "report.csv", csv);

  json rj;
  rj["format_version"] = kArtifactFormatVersion;
  rj["config_hash"] = config.hash();
  rj["seeds"] = std::move(per_seed);
  rj["aggregate"] = {{"count", agg.count},
                     {"precision", {{"mean", agg.precision.mean}, {"stdev", agg.precision.stdev}}},
                     {"recall", {{"mean", agg.recall.mean}, {"stdev", agg.recall.stdev}}},
                     {"f1", {{"mean", agg.f1.mean}, {"stdev", agg.f1.stdev}}},
                     {"macro_f1", {{"mean", agg.macro_f1.mean}, {"stdev", agg.macro_f1.stdev}}},
                     {"accuracy", {{"mean", agg.accuracy.mean}, {"stdev", agg.accuracy.stdev}}}};
  write_file(root / "report.json", rj.dump(2) + "\n");
  std::cerr << "aggregated " << reports.size() << " seeds -> " << (root / "report.csv")
            << "\n";
  return 0;
}

int cmd_export_embeddings(const CommonOptions& opts) {
  const Config config = effective_config(opts);
  const Dataset dataset = load_dataset(opts);
  Pipeline pipeline(config);
  const auto parsed = pipeline.parse_dataset(dataset);

  json out;
  out["format_version"] = kArtifactFormatVersion;
  out["config_hash"] = config.hash();
  out["examples"] = json::array();
  for (const auto& example : parsed) {
    json e;
    e["id"] = example.id;
    e["label"] = example.label;
    auto side_json = [&](const DocumentGraph& side) {
      const NodeEmbeddings embeddings = compute_all_embeddings(
          side, pipeline.provider(), config.embedding.hyper, pipeline.frames());
      json nodes = json::array();
      for (const auto& node : side.nodes) {
        json nj;
        nj["id"] = node.id;
        nj["kind"] = std::string(to_string(node.kind));
        nj["label"] = node.label;
        nj["base"] = embeddings.base[static_cast<std::size_t>(node.id)];
        nj["neighborhood"] = embeddings.neighborhood[static_cast<std::size_t>(node.id)];
        nodes.push_back(std::move(nj));
      }
      return nodes;
    };
    e["reference"] = side_json(example.reference);
    e["response"] = side_json(example.response);
    out["examples"].push_back(std::move(e));
  }
  const fs::path root = run_root(opts, config);
  fs::create_directories(root);
  const fs::path out_path = root / "embeddings.json";
  write_file(out_path, out.dump() + "\n");
  std::cerr << "exported embeddings for " << parsed.size() << " examples -> " << out_path
            << "\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"grounding detector over aligned semantic graphs"};
  app.require_subcommand(1);

  CommonOptions opts;

  // synth
  std::size_t synth_n = 100;
  double synth_rate = 0.5;
  std::uint64_t synth_seed = 0;
  std::string synth_out = "synth.jsonl";
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  synth->add_option("--n", synth_n, "number of examples (>= 10)");
  synth->add_option("--rate", synth_rate, "hallucination rate in [0,1]");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output JSONL path");

  CLI::App* parse = app.add_subcommand("parse", "ingest a dataset and build document graphs");
  add_config_options(parse, opts);
  parse->add_option("--dataset", opts.dataset_path, "JSONL dataset path");
  parse->add_flag("--skip-bad", opts.skip_bad, "skip malformed lines instead of aborting");

  CLI::App* align_cmd = app.add_subcommand("align", "induce alignment edges with capacities");
  add_config_options(align_cmd, opts);

  CLI::App* flow_cmd = app.add_subcommand("flow", "solve max-flow and annotate edge flows");
  add_config_options(flow_cmd, opts);

  CLI::App* featurize = app.add_subcommand("featurize", "assemble GNN features and adjacency");
  add_config_options(featurize, opts);

  CLI::App* train_cmd = app.add_subcommand("train", "train one model per seed");
  add_config_options(train_cmd, opts);
  train_cmd->add_option("--seed,--seeds", opts.seeds_text, "seed, list (1,2,3), or range (1..5)");

  bool cosine_distances = false;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate trained models on the test split");
  add_config_options(eval_cmd, opts);
  eval_cmd->add_option("--seed,--seeds", opts.seeds_text, "seed, list, or range");
  eval_cmd->add_flag("--cosine-distances", cosine_distances,
                     "also export per-layer alignment cosine distances");

  CLI::App* perturb = app.add_subcommand("perturb", "test-time intervention sweep");
  add_config_options(perturb, opts);
  perturb->add_option("--seed,--seeds", opts.seeds_text, "seed, list, or range");
  perturb->add_option("--fractions", opts.fractions_text, "comma-separated fractions");
  perturb->add_option("--kinds", opts.kinds_text, "comma-separated kinds (remove,rewire)");

  CLI::App* ablate = app.add_subcommand("ablate", "retraining intervention sweep");
  add_config_options(ablate, opts);
  ablate->add_option("--seed,--seeds", opts.seeds_text, "seed, list, or range");
  ablate->add_option("--fractions", opts.fractions_text, "comma-separated fractions");
  ablate->add_option("--kinds", opts.kinds_text, "comma-separated kinds (remove,rewire)");

  CLI::App* report = app.add_subcommand("report", "aggregate per-seed evaluations");
  add_config_options(report, opts);
  report->add_option("--seed,--seeds", opts.seeds_text, "seed, list, or range");

  CLI::App* export_emb =
      app.add_subcommand("export-embeddings", "dump raw node embeddings for a dataset");
  add_config_options(export_emb, opts);
  export_emb->add_option("--dataset", opts.dataset_path, "JSONL dataset path");
  export_emb->add_flag("--skip-bad", opts.skip_bad, "skip malformed lines instead of aborting");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_n, synth_rate, synth_seed, synth_out);
    if (parse->parsed()) return cmd_parse(opts);
    if (align_cmd->parsed()) return cmd_align(opts);
    if (flow_cmd->parsed()) return cmd_flow(opts);
    if (featurize->parsed()) return cmd_featurize(opts);
    if (train_cmd->parsed()) return cmd_train(opts);
    if (eval_cmd->parsed()) return cmd_eval(opts, cosine_distances);
    if (perturb->parsed()) return cmd_perturb(opts);
    if (ablate->parsed()) return cmd_ablate(opts);
    if (report->parsed()) return cmd_report(opts);
    if (export_emb->parsed()) return cmd_export_embeddings(opts);
    std::cerr << "no command given\n";
    return 1;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace groundcheck
