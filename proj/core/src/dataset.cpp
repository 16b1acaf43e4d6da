#include "groundcheck/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "groundcheck/penman.hpp"
#include "groundcheck/rng.hpp"

namespace groundcheck {

namespace {

using json = nlohmann::ordered_json;

json sentence_to_json(const SentenceInput& s) {
  json j;
  j["text"] = s.text;
  j["penman"] = s.penman;
  if (!s.alignments.empty()) {
    json a = json::object();
    for (const auto& [var, indices] : s.alignments) a[var] = indices;
    j["alignments"] = std::move(a);
  }
  return j;
}

SentenceInput sentence_from_json(const json& j) {
  SentenceInput s;
  s.text = j.at("text").get<std::string>();
  s.penman = j.at("penman").get<std::string>();
  if (j.contains("alignments")) {
    for (const auto& [var, indices] : j["alignments"].items()) {
      s.alignments[var] = indices.get<std::vector<int>>();
    }
  }
  return s;
}

json example_to_json(const ExampleRecord& r) {
  json j;
  j["id"] = r.id;
  j["label"] = r.label;
  j["reference_sentences"] = json::array();
  for (const auto& s : r.reference_sentences) j["reference_sentences"].push_back(sentence_to_json(s));
  j["response_sentences"] = json::array();
  for (const auto& s : r.response_sentences) j["response_sentences"].push_back(sentence_to_json(s));
  return j;
}

ExampleRecord example_from_json(const json& j) {
  ExampleRecord r;
  if (!j.contains("id")) throw DataError("missing field 'id'");
  r.id = j["id"].get<std::string>();
  if (r.id.empty()) throw DataError("empty id");
  if (!j.contains("label")) throw DataError("missing field 'label'");
  r.label = j["label"].get<int>();
  if (r.label != 0 && r.label != 1) throw DataError("label must be 0 or 1");
  if (!j.contains("reference_sentences")) throw DataError("missing field 'reference_sentences'");
  if (!j.contains("response_sentences")) throw DataError("missing field 'response_sentences'");
  for (const auto& s : j["reference_sentences"]) r.reference_sentences.push_back(sentence_from_json(s));
  for (const auto& s : j["response_sentences"]) r.response_sentences.push_back(sentence_from_json(s));
  if (r.reference_sentences.empty() || r.response_sentences.empty()) {
    throw DataError("sentence lists must be non-empty");
  }
  return r;
}

}  // namespace

std::string example_to_json_line(const ExampleRecord& record) {
  return example_to_json(record).dump();
}

ExampleRecord example_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const std::exception& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  try {
    return example_from_json(j);
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(std::string("invalid record: ") + e.what());
  }
}

IngestResult ingest_jsonl(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  IngestResult result;
  std::set<std::string> ids;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    ExampleRecord record;
    try {
      record = example_from_json_line(line);
    } catch (const DataError& e) {
      if (options.skip_bad) {
        result.skipped.push_back({line_number, e.what()});
        continue;
      }
      throw DataError("line " + std::to_string(line_number) + ": " + e.what());
    }
    if (!ids.insert(record.id).second) {
      throw DataError("line " + std::to_string(line_number) + ": duplicate id '" +
                      record.id + "'");
    }
    result.dataset.examples.push_back(std::move(record));
  }
  return result;
}

void write_jsonl(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset '" + path + "'");
  for (const auto& record : dataset.examples) {
    out << example_to_json_line(record) << "\n";
  }
}

void SplitSpec::validate() const {
  if (std::abs(train + validation + test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  if (!(train > 0.0 && validation > 0.0 && test > 0.0)) {
    throw std::invalid_argument("split fractions must be positive");
  }
}

SplitIndices split(std::size_t dataset_size, const SplitSpec& spec) {
  spec.validate();
  if (dataset_size < 3) throw std::invalid_argument("dataset too small to split");
  std::vector<std::size_t> order(dataset_size);
  for (std::size_t i = 0; i < dataset_size; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(order);

  const double n = static_cast<double>(dataset_size);
  const std::size_t cut1 = static_cast<std::size_t>(std::llround(n * spec.train));
  const std::size_t cut2 =
      static_cast<std::size_t>(std::llround(n * (spec.train + spec.validation)));
  if (cut1 == 0 || cut2 <= cut1 || cut2 >= dataset_size) {
    throw std::invalid_argument("split leaves an empty partition");
  }
  SplitIndices indices;
  indices.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut1));
  indices.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(cut1),
                            order.begin() + static_cast<std::ptrdiff_t>(cut2));
  indices.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut2), order.end());
  return indices;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

const std::vector<std::string> kActors = {"boy",   "girl", "doctor", "teacher",
                                          "nurse", "chef", "student", "lawyer"};
const std::vector<std::string> kVerbs = {"want", "see", "help",  "read",
                                         "find", "buy", "teach", "carry"};
const std::vector<std::string> kObjects = {"book",   "apple",  "house",   "car",
                                           "letter", "garden", "picture", "machine"};
const std::vector<std::string> kMods = {"red", "small", "old", "new"};
const std::vector<std::string> kNames = {"Rome", "Paris", "Tokyo", "Berlin"};

struct SentencePlan {
  std::string actor, verb, object;
  std::string mod;       // empty when absent
  std::string name;      // empty when absent
  bool negated = false;
};

// Builds the sentence graph and its surface text with concept alignments.
SentenceInput realize(const SentencePlan& plan) {
  penman::AmrSentenceGraph g;
  std::vector<std::string> tokens = {"the", plan.actor, plan.verb + "s", "the"};
  const int actor_token = 1;
  const int verb_token = 2;
  if (!plan.mod.empty()) tokens.push_back(plan.mod);
  const int mod_token = plan.mod.empty() ? -1 : static_cast<int>(tokens.size()) - 1;
  tokens.push_back(plan.object);
  const int object_token = static_cast<int>(tokens.size()) - 1;
  if (!plan.name.empty()) {
    tokens.push_back("named");
    tokens.push_back(plan.name);
  }

  g.root = "v0";
  g.variables = {{"v0", plan.verb + "-01"}, {"v1", plan.actor}, {"v2", plan.object}};
  g.edges.push_back({"v0", ":ARG0", penman::VarRef{"v1"}});
  g.edges.push_back({"v0", ":ARG1", penman::VarRef{"v2"}});
  if (!plan.mod.empty()) {
    g.variables.emplace_back("v3", plan.mod);
    g.edges.push_back({"v2", ":mod", penman::VarRef{"v3"}});
  }
  if (!plan.name.empty()) {
    g.variables.emplace_back("v4", "name");
    g.edges.push_back({"v2", ":name", penman::VarRef{"v4"}});
    g.edges.push_back({"v4", ":op1", penman::AttributeLiteral{plan.name, true, {}}});
  }
  if (plan.negated) {
    g.edges.push_back({"v0", ":polarity", penman::AttributeLiteral{"-", false, {}}});
  }

  SentenceInput input;
  std::ostringstream text;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) text << ' ';
    text << tokens[i];
  }
  input.text = text.str();
  g.sentence_text = input.text;
  input.penman = penman::serialize(g);
  input.alignments["v0"] = {verb_token};
  input.alignments["v1"] = {actor_token};
  input.alignments["v2"] = {object_token};
  if (mod_token >= 0) input.alignments["v3"] = {mod_token};
  return input;
}

std::string pick(const std::vector<std::string>& pool, Rng& rng) {
  return pool[static_cast<std::size_t>(rng.bounded(pool.size()))];
}

// Picks an item the reference never used, so swapped concepts are genuinely
// unsupported.
std::string pick_unused(const std::vector<std::string>& pool, const std::set<std::string>& used,
                        Rng& rng) {
  std::vector<std::string> candidates;
  for (const auto& item : pool) {
    if (!used.count(item)) candidates.push_back(item);
  }
  if (candidates.empty()) return pool.front();
  return candidates[static_cast<std::size_t>(rng.bounded(candidates.size()))];
}

}  // namespace

Dataset synth_corpus(const SynthOptions& options) {
  if (options.n < 10) throw std::invalid_argument("synthetic corpus needs n >= 10");
  if (options.hallucination_rate < 0.0 || options.hallucination_rate > 1.0) {
    throw std::invalid_argument("hallucination_rate must lie in [0,1]");
  }
  Rng rng(options.seed);

  // Exact positive quota, shuffled.
  const std::size_t positives = static_cast<std::size_t>(
      std::llround(static_cast<double>(options.n) * options.hallucination_rate));
  std::vector<int> labels(options.n, 0);
  for (std::size_t i = 0; i < positives; ++i) labels[i] = 1;
  rng.shuffle(labels);

  Dataset dataset;
  dataset.examples.reserve(options.n);
  for (std::size_t index = 0; index < options.n; ++index) {
    ExampleRecord record;
    {
      std::ostringstream id;
      id << "ex-";
      id.width(6);
      id.fill('0');
      id << index;
      record.id = id.str();
    }
    record.label = labels[index];

    const std::size_t n_ref = 2 + rng.bounded(2);  // 2 or 3 sentences
    std::vector<SentencePlan> reference_plans;
    std::set<std::string> used;
    for (std::size_t s = 0; s < n_ref; ++s) {
      SentencePlan plan;
      plan.actor = pick(kActors, rng);
      plan.verb = pick(kVerbs, rng);
      plan.object = pick(kObjects, rng);
      if (rng.uniform() < 0.4) plan.mod = pick(kMods, rng);
      if (rng.uniform() < 0.25) plan.name = pick(kNames, rng);
      if (rng.uniform() < 0.2) plan.negated = true;
      used.insert(plan.actor);
      used.insert(plan.verb);
      used.insert(plan.object);
      if (!plan.mod.empty()) used.insert(plan.mod);
      reference_plans.push_back(plan);
      record.reference_sentences.push_back(realize(plan));
    }

    // Supported scaffold: reuse 1-2 reference sentences, sometimes dropping
    // a modifier or name (a paraphrase rather than a verbatim copy).
    const std::size_t n_resp = 1 + rng.bounded(std::min<std::size_t>(2, n_ref));
    std::vector<std::size_t> chosen(reference_plans.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
    rng.shuffle(chosen);
    chosen.resize(n_resp);
    std::sort(chosen.begin(), chosen.end());

    std::vector<SentencePlan> response_plans;
    for (const std::size_t s : chosen) {
      response_plans.push_back(reference_plans[s]);
    }

    if (record.label == 1) {
      // Corrupt every response sentence: swap concepts for ones absent from
      // the reference, and occasionally append a fully unsupported sentence.
      for (SentencePlan& plan : response_plans) {
        plan.object = pick_unused(kObjects, used, rng);
        if (rng.uniform() < 0.4) plan.actor = pick_unused(kActors, used, rng);
        if (!plan.mod.empty() && rng.uniform() < 0.5) {
          plan.mod = pick_unused(kMods, used, rng);
        }
      }
      if (rng.uniform() < 0.3) {
        SentencePlan extra;
        extra.actor = pick_unused(kActors, used, rng);
        extra.verb = pick_unused(kVerbs, used, rng);
        extra.object = pick_unused(kObjects, used, rng);
        response_plans.push_back(extra);
      }
    }

    for (const auto& plan : response_plans) {
      record.response_sentences.push_back(realize(plan));
    }
    dataset.examples.push_back(std::move(record));
  }
  return dataset;
}

}  // namespace groundcheck
