#include "groundcheck/pipeline.hpp"

#include <atomic>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "json_detail.hpp"

#include "groundcheck/align.hpp"
#include "groundcheck/flow.hpp"
#include "groundcheck/penman.hpp"

namespace groundcheck {

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingConfig& config) {
  if (config.provider == "test") {
    return std::make_unique<TestEmbeddingProvider>(config.dimension, config.test_seed);
  }
  const std::string prefix = "subprocess:";
  if (config.provider.rfind(prefix, 0) == 0) {
    return std::make_unique<SubprocessEmbeddingProvider>(
        config.provider.substr(prefix.size()), config.dimension,
        config.subprocess_timeout_ms, config.subprocess_retries);
  }
  throw PipelineError("unknown embedding provider '" + config.provider +
                      "' (expected \"test\" or \"subprocess:<command>\")");
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw == 0 ? 1 : static_cast<int>(hw);
  }
  threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads),
                                                   count == 0 ? 1 : count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (first_error) std::rethrow_exception(first_error);
}

Pipeline::Pipeline(Config config) : config_(std::move(config)) {
  config_.validate();
  if (!config_.embedding.frames_path.empty()) {
    frames_ = FrameDb::load_json_file(config_.embedding.frames_path);
  }
}

EmbeddingProvider& Pipeline::provider() {
  if (!provider_) provider_ = make_provider(config_.embedding);
  return *provider_;
}

int Pipeline::worker_threads() const {
  if (provider_ && !provider_->thread_safe()) return 1;
  return config_.runtime.threads;
}

ParsedExample Pipeline::parse_example(const ExampleRecord& record) const {
  auto parse_side = [&](const std::vector<SentenceInput>& sentences, ComponentId component) {
    std::vector<penman::AmrSentenceGraph> graphs;
    graphs.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      try {
        graphs.push_back(penman::parse(sentences[i].penman, sentences[i].text,
                                       sentences[i].alignments.empty()
                                           ? nullptr
                                           : &sentences[i].alignments));
      } catch (const std::exception& e) {
        throw DataError("example '" + record.id + "' " +
                        std::string(to_string(component)) + " sentence " +
                        std::to_string(i) + ": " + e.what());
      }
    }
    return build_document_graph(graphs, component);
  };
  ParsedExample parsed;
  parsed.id = record.id;
  parsed.label = record.label;
  parsed.reference = parse_side(record.reference_sentences, ComponentId::Reference);
  parsed.response = parse_side(record.response_sentences, ComponentId::Response);
  return parsed;
}

ProcessedExample Pipeline::align_example(const ParsedExample& parsed) {
  EmbeddingProvider& embedder = provider();
  const NodeEmbeddings ref_embeddings =
      compute_all_embeddings(parsed.reference, embedder, config_.embedding.hyper, frames());
  const NodeEmbeddings resp_embeddings =
      compute_all_embeddings(parsed.response, embedder, config_.embedding.hyper, frames());
  const CapacityTable table =
      induce_alignment_edges(parsed.reference, parsed.response, ref_embeddings,
                             resp_embeddings, config_.embedding.hyper, config_.align);
  ProcessedExample processed;
  processed.id = parsed.id;
  processed.label = parsed.label;
  processed.graph = merge_aligned_graph(parsed.reference, parsed.response,
                                        table.to_alignment_edges());
  return processed;
}

ProcessedExample Pipeline::solve_example(ProcessedExample processed) const {
  const FlowNetwork net = build_flow_network(processed.graph, config_.flow.orientation,
                                             config_.flow.intra_capacity);
  const FlowAssignment assignment = max_flow(net);
  processed.graph = annotate_flows(std::move(processed.graph), net, assignment);
  return processed;
}

GraphInstance Pipeline::featurize_example(const ProcessedExample& processed) {
  EmbeddingProvider& embedder = provider();
  const NodeEmbeddings ref_embeddings = compute_all_embeddings(
      processed.graph.reference, embedder, config_.embedding.hyper, frames());
  const NodeEmbeddings resp_embeddings = compute_all_embeddings(
      processed.graph.response, embedder, config_.embedding.hyper, frames());
  GraphInstance instance;
  instance.id = processed.id;
  instance.label = processed.label;
  instance.features = assemble_features(processed.graph, ref_embeddings, resp_embeddings);
  instance.adjacency = normalize_adjacency(processed.graph, config_.gnn.edge_weighting);
  instance.graph = processed.graph;
  return instance;
}

std::vector<ParsedExample> Pipeline::parse_dataset(const Dataset& dataset) {
  std::vector<ParsedExample> parsed(dataset.examples.size());
  parallel_for(dataset.examples.size(), config_.runtime.threads,
               [&](std::size_t i) { parsed[i] = parse_example(dataset.examples[i]); });
  return parsed;
}

std::vector<ProcessedExample> Pipeline::align_parsed(const std::vector<ParsedExample>& parsed) {
  provider();  // materialize before querying thread safety
  std::vector<ProcessedExample> aligned(parsed.size());
  parallel_for(parsed.size(), worker_threads(),
               [&](std::size_t i) { aligned[i] = align_example(parsed[i]); });
  return aligned;
}

std::vector<ProcessedExample> Pipeline::solve_aligned(std::vector<ProcessedExample> aligned) const {
  parallel_for(aligned.size(), config_.runtime.threads,
               [&](std::size_t i) { aligned[i] = solve_example(std::move(aligned[i])); });
  return aligned;
}

std::vector<GraphInstance> Pipeline::featurize_processed(
    const std::vector<ProcessedExample>& processed) {
  provider();
  std::vector<GraphInstance> instances(processed.size());
  parallel_for(processed.size(), worker_threads(),
               [&](std::size_t i) { instances[i] = featurize_example(processed[i]); });
  return instances;
}

GraphInstance Pipeline::process_record(const ExampleRecord& record) {
  return featurize_example(solve_example(align_example(parse_example(record))));
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

using detail::json;

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError("cannot write '" + path + "'");
  out << text;
}

json artifact_header(const Config& config) {
  json j;
  j["format_version"] = kArtifactFormatVersion;
  j["config_hash"] = config.hash();
  j["config"] = json::parse(config.to_json(-1));
  return j;
}

json read_artifact(const std::string& path, const Config& config, const char* prior_command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PipelineError("missing pipeline artifact '" + path + "'; run `groundcheck " +
                        prior_command + "` first");
  }
  json j = json::parse(in);
  if (j.at("format_version").get<int>() != kArtifactFormatVersion) {
    throw PipelineError("artifact '" + path + "' has unsupported format_version");
  }
  const std::string expected = config.hash();
  const std::string actual = j.at("config_hash").get<std::string>();
  if (actual != expected) {
    throw PipelineError("artifact '" + path + "' was produced under config hash " + actual +
                        " but the effective config hashes to " + expected +
                        "; re-run the upstream stages");
  }
  return j;
}

}  // namespace

void write_graphs_artifact(const std::string& path, const Config& config,
                           const std::vector<ParsedExample>& examples) {
  json j = artifact_header(config);
  j["examples"] = json::array();
  for (const auto& example : examples) {
    json e;
    e["id"] = example.id;
    e["label"] = example.label;
    e["reference"] = detail::document_graph_to_json(example.reference);
    e["response"] = detail::document_graph_to_json(example.response);
    j["examples"].push_back(std::move(e));
  }
  write_text_file(path, j.dump() + "\n");
}

std::vector<ParsedExample> read_graphs_artifact(const std::string& path, const Config& config) {
  const json j = read_artifact(path, config, "parse");
  std::vector<ParsedExample> examples;
  for (const auto& e : j.at("examples")) {
    ParsedExample example;
    example.id = e.at("id").get<std::string>();
    example.label = e.at("label").get<int>();
    example.reference = detail::document_graph_from_json(e.at("reference"));
    example.response = detail::document_graph_from_json(e.at("response"));
    examples.push_back(std::move(example));
  }
  return examples;
}

void write_aligned_artifact(const std::string& path, const Config& config,
                            const std::vector<ProcessedExample>& examples, bool flows_solved) {
  json j = artifact_header(config);
  j["flows_solved"] = flows_solved;
  j["examples"] = json::array();
  for (const auto& example : examples) {
    json e;
    e["id"] = example.id;
    e["label"] = example.label;
    e["graph"] = detail::aligned_graph_to_json_obj(example.graph);
    j["examples"].push_back(std::move(e));
  }
  write_text_file(path, j.dump() + "\n");
}

std::vector<ProcessedExample> read_aligned_artifact(const std::string& path,
                                                    const Config& config, bool require_flows) {
  const json j = read_artifact(path, config, require_flows ? "flow" : "align");
  if (require_flows && !j.at("flows_solved").get<bool>()) {
    throw PipelineError("artifact '" + path + "' has unsolved flows; run `groundcheck flow` first");
  }
  std::vector<ProcessedExample> examples;
  for (const auto& e : j.at("examples")) {
    ProcessedExample example;
    example.id = e.at("id").get<std::string>();
    example.label = e.at("label").get<int>();
    example.graph = detail::aligned_graph_from_json_obj(e.at("graph"));
    examples.push_back(std::move(example));
  }
  return examples;
}

namespace {

constexpr char kFeaturesMagic[4] = {'G', 'C', 'F', 'B'};

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw PipelineError("truncated features artifact");
  return value;
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod<double>(out, m(r, c));
  }
}

Eigen::MatrixXd read_matrix(std::ifstream& in) {
  const std::uint32_t rows = read_pod<std::uint32_t>(in);
  const std::uint32_t cols = read_pod<std::uint32_t>(in);
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = read_pod<double>(in);
  }
  return m;
}

}  // namespace

void write_features_artifact(const std::string& path, const Config& config,
                             const std::vector<GraphInstance>& instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError("cannot write '" + path + "'");
  out.write(kFeaturesMagic, sizeof(kFeaturesMagic));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(kArtifactFormatVersion));
  const std::string hash = config.hash();
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(hash.size()));
  out.write(hash.data(), static_cast<std::streamsize>(hash.size()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(instances.size()));
  for (const auto& instance : instances) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(instance.id.size()));
    out.write(instance.id.data(), static_cast<std::streamsize>(instance.id.size()));
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(instance.label));
    write_matrix(out, instance.features);
    write_matrix(out, instance.adjacency);
  }
}

std::vector<GraphInstance> read_features_artifact(const std::string& path,
                                                  const Config& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PipelineError("missing pipeline artifact '" + path +
                        "'; run `groundcheck featurize` first");
  }
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kFeaturesMagic, sizeof(magic)) != 0) {
    throw PipelineError("'" + path + "' is not a features artifact");
  }
  const std::uint32_t version = read_pod<std::uint32_t>(in);
  if (version != static_cast<std::uint32_t>(kArtifactFormatVersion)) {
    throw PipelineError("features artifact has unsupported version");
  }
  const std::uint32_t hash_size = read_pod<std::uint32_t>(in);
  std::string hash(hash_size, '\0');
  in.read(hash.data(), hash_size);
  if (!in || hash != config.hash()) {
    throw PipelineError("features artifact '" + path +
                        "' does not match the effective config; re-run `groundcheck featurize`");
  }
  const std::uint64_t count = read_pod<std::uint64_t>(in);
  std::vector<GraphInstance> instances;
  instances.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    GraphInstance instance;
    const std::uint32_t id_size = read_pod<std::uint32_t>(in);
    instance.id.resize(id_size);
    in.read(instance.id.data(), id_size);
    instance.label = static_cast<int>(read_pod<std::uint8_t>(in));
    instance.features = read_matrix(in);
    instance.adjacency = read_matrix(in);
    instances.push_back(std::move(instance));
  }
  return instances;
}

}  // namespace groundcheck
