#include "groundcheck/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "groundcheck/rng.hpp"

namespace groundcheck {

namespace {

using json = nlohmann::ordered_json;

json hyper_to_json(const EmbedHyperParams& h) {
  json j;
  j["role_child_weight"] = h.role_child_weight;
  j["role_name_weight"] = h.role_name_weight;
  j["concept_token_weight"] = h.concept_token_weight;
  j["concept_roleset_weight"] = h.concept_roleset_weight;
  j["concept_role_weight"] = h.concept_role_weight;
  j["neighborhood_weights"] = h.neighborhood_weights;
  j["dampening"] = {{"document", h.dampening_by_kind[0]},
                    {"sentence", h.dampening_by_kind[1]},
                    {"concept", h.dampening_by_kind[2]},
                    {"attribute", h.dampening_by_kind[3]}};
  j["sentence_damp"] = h.sentence_damp;
  j["sigmoid_shift"] = h.sigmoid_shift;
  j["include_self"] = h.include_self;
  return j;
}

void hyper_from_json(const json& j, EmbedHyperParams& h) {
  if (j.contains("role_child_weight")) h.role_child_weight = j["role_child_weight"].get<double>();
  if (j.contains("role_name_weight")) h.role_name_weight = j["role_name_weight"].get<double>();
  if (j.contains("concept_token_weight")) h.concept_token_weight = j["concept_token_weight"].get<double>();
  if (j.contains("concept_roleset_weight")) h.concept_roleset_weight = j["concept_roleset_weight"].get<double>();
  if (j.contains("concept_role_weight")) h.concept_role_weight = j["concept_role_weight"].get<double>();
  if (j.contains("neighborhood_weights")) {
    h.neighborhood_weights = j["neighborhood_weights"].get<std::vector<double>>();
  }
  if (j.contains("dampening")) {
    const auto& d = j["dampening"];
    if (d.contains("document")) h.dampening_by_kind[0] = d["document"].get<double>();
    if (d.contains("sentence")) h.dampening_by_kind[1] = d["sentence"].get<double>();
    if (d.contains("concept")) h.dampening_by_kind[2] = d["concept"].get<double>();
    if (d.contains("attribute")) h.dampening_by_kind[3] = d["attribute"].get<double>();
  }
  if (j.contains("sentence_damp")) h.sentence_damp = j["sentence_damp"].get<double>();
  if (j.contains("sigmoid_shift")) h.sigmoid_shift = j["sigmoid_shift"].get<double>();
  if (j.contains("include_self")) h.include_self = j["include_self"].get<bool>();
}

json config_to_json_obj(const Config& c) {
  json j;
  json embedding;
  embedding["dimension"] = c.embedding.dimension;
  embedding["provider"] = c.embedding.provider;
  embedding["test_seed"] = c.embedding.test_seed;
  embedding["frames_path"] = c.embedding.frames_path;
  embedding["subprocess_timeout_ms"] = c.embedding.subprocess_timeout_ms;
  embedding["subprocess_retries"] = c.embedding.subprocess_retries;
  embedding["hyper"] = hyper_to_json(c.embedding.hyper);
  j["embedding"] = std::move(embedding);

  j["align"] = {{"shared_variable_namespace", c.align.shared_variable_namespace}};

  json flow;
  flow["orientation"] = std::string(to_string(c.flow.orientation));
  flow["intra_capacity"] = c.flow.intra_capacity.mode == IntraCapacityOptions::Mode::LeafCount
                               ? "leaf_count"
                               : "constant";
  flow["intra_capacity_constant"] = c.flow.intra_capacity.constant;
  j["flow"] = std::move(flow);

  j["gnn"] = {{"edge_weighting", std::string(to_string(c.gnn.edge_weighting))}};

  json train;
  train["learning_rate"] = c.train.learning_rate;
  train["weight_decay"] = c.train.weight_decay;
  train["batch_size"] = c.train.batch_size;
  train["max_epochs"] = c.train.max_epochs;
  train["dropout"] = c.train.dropout;
  train["lr_factor"] = c.train.lr_factor;
  train["lr_patience"] = c.train.lr_patience;
  train["early_stop_patience"] = c.train.early_stop_patience;
  train["early_stop_min_delta"] = c.train.early_stop_min_delta;
  train["grad_clip_norm"] = c.train.grad_clip_norm;
  train["seed"] = c.train.seed;
  train["adam_beta1"] = c.train.adam_beta1;
  train["adam_beta2"] = c.train.adam_beta2;
  train["adam_epsilon"] = c.train.adam_epsilon;
  train["threshold"] = c.train.threshold;
  j["train"] = std::move(train);

  j["split"] = {{"train", c.split.train},
                {"validation", c.split.validation},
                {"test", c.split.test},
                {"seed", c.split.seed}};

  json intervene;
  intervene["fractions"] = c.intervene.fractions;
  intervene["kinds"] = c.intervene.kinds;
  intervene["flow_refresh"] = c.intervene.flow_refresh == FlowRefresh::Resolve ? "resolve" : "keep";
  j["intervene"] = std::move(intervene);

  j["runtime"] = {{"threads", c.runtime.threads}};
  return j;
}

Config config_from_json_obj(const json& j) {
  Config c;
  if (j.contains("embedding")) {
    const auto& e = j["embedding"];
    if (e.contains("dimension")) c.embedding.dimension = e["dimension"].get<int>();
    if (e.contains("provider")) c.embedding.provider = e["provider"].get<std::string>();
    if (e.contains("test_seed")) c.embedding.test_seed = e["test_seed"].get<std::uint64_t>();
    if (e.contains("frames_path")) c.embedding.frames_path = e["frames_path"].get<std::string>();
    if (e.contains("subprocess_timeout_ms")) {
      c.embedding.subprocess_timeout_ms = e["subprocess_timeout_ms"].get<int>();
    }
    if (e.contains("subprocess_retries")) {
      c.embedding.subprocess_retries = e["subprocess_retries"].get<int>();
    }
    if (e.contains("hyper")) hyper_from_json(e["hyper"], c.embedding.hyper);
  }
  if (j.contains("align") && j["align"].contains("shared_variable_namespace")) {
    c.align.shared_variable_namespace = j["align"]["shared_variable_namespace"].get<bool>();
  }
  if (j.contains("flow")) {
    const auto& f = j["flow"];
    if (f.contains("orientation")) {
      c.flow.orientation = flow_orientation_from_string(f["orientation"].get<std::string>());
    }
    if (f.contains("intra_capacity")) {
      const std::string mode = f["intra_capacity"].get<std::string>();
      if (mode == "leaf_count") {
        c.flow.intra_capacity.mode = IntraCapacityOptions::Mode::LeafCount;
      } else if (mode == "constant") {
        c.flow.intra_capacity.mode = IntraCapacityOptions::Mode::Constant;
      } else {
        throw std::invalid_argument("unknown intra_capacity mode '" + mode + "'");
      }
    }
    if (f.contains("intra_capacity_constant")) {
      c.flow.intra_capacity.constant = f["intra_capacity_constant"].get<double>();
    }
  }
  if (j.contains("gnn") && j["gnn"].contains("edge_weighting")) {
    c.gnn.edge_weighting =
        edge_weighting_from_string(j["gnn"]["edge_weighting"].get<std::string>());
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    if (t.contains("learning_rate")) c.train.learning_rate = t["learning_rate"].get<double>();
    if (t.contains("weight_decay")) c.train.weight_decay = t["weight_decay"].get<double>();
    if (t.contains("batch_size")) c.train.batch_size = t["batch_size"].get<int>();
    if (t.contains("max_epochs")) c.train.max_epochs = t["max_epochs"].get<int>();
    if (t.contains("dropout")) c.train.dropout = t["dropout"].get<double>();
    if (t.contains("lr_factor")) c.train.lr_factor = t["lr_factor"].get<double>();
    if (t.contains("lr_patience")) c.train.lr_patience = t["lr_patience"].get<int>();
    if (t.contains("early_stop_patience")) c.train.early_stop_patience = t["early_stop_patience"].get<int>();
    if (t.contains("early_stop_min_delta")) c.train.early_stop_min_delta = t["early_stop_min_delta"].get<double>();
    if (t.contains("grad_clip_norm")) c.train.grad_clip_norm = t["grad_clip_norm"].get<double>();
    if (t.contains("seed")) c.train.seed = t["seed"].get<std::uint64_t>();
    if (t.contains("adam_beta1")) c.train.adam_beta1 = t["adam_beta1"].get<double>();
    if (t.contains("adam_beta2")) c.train.adam_beta2 = t["adam_beta2"].get<double>();
    if (t.contains("adam_epsilon")) c.train.adam_epsilon = t["adam_epsilon"].get<double>();
    if (t.contains("threshold")) c.train.threshold = t["threshold"].get<double>();
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    if (s.contains("train")) c.split.train = s["train"].get<double>();
    if (s.contains("validation")) c.split.validation = s["validation"].get<double>();
    if (s.contains("test")) c.split.test = s["test"].get<double>();
    if (s.contains("seed")) c.split.seed = s["seed"].get<std::uint64_t>();
  }
  if (j.contains("intervene")) {
    const auto& i = j["intervene"];
    if (i.contains("fractions")) c.intervene.fractions = i["fractions"].get<std::vector<double>>();
    if (i.contains("kinds")) c.intervene.kinds = i["kinds"].get<std::vector<std::string>>();
    if (i.contains("flow_refresh")) {
      const std::string refresh = i["flow_refresh"].get<std::string>();
      if (refresh == "resolve") c.intervene.flow_refresh = FlowRefresh::Resolve;
      else if (refresh == "keep") c.intervene.flow_refresh = FlowRefresh::Keep;
      else throw std::invalid_argument("unknown flow_refresh '" + refresh + "'");
    }
  }
  if (j.contains("runtime") && j["runtime"].contains("threads")) {
    c.runtime.threads = j["runtime"]["threads"].get<int>();
  }
  return c;
}

}  // namespace

void Config::validate() const {
  if (embedding.dimension <= 0) throw std::invalid_argument("embedding dimension must be > 0");
  embedding.hyper.validate();
  train.validate();
  split.validate();
  for (const double f : intervene.fractions) {
    if (f < 0.0 || f > 1.0) throw std::invalid_argument("intervention fractions must lie in [0,1]");
  }
  for (const auto& kind : intervene.kinds) {
    intervention_kind_from_string(kind);  // throws on unknown kinds
  }
  if (runtime.threads < 0) throw std::invalid_argument("threads must be >= 0");
}

void Config::set_seed(std::uint64_t seed) {
  train.seed = seed;
  split.seed = seed;
}

std::string Config::to_json(int indent) const {
  return config_to_json_obj(*this).dump(indent);
}

Config Config::from_json(const std::string& text) {
  return config_from_json_obj(json::parse(text));
}

Config Config::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string Config::hash() const {
  Config canonical = *this;
  canonical.set_seed(0);
  const std::uint64_t h = Rng::hash64(canonical.to_json(-1));
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

}  // namespace groundcheck
