#pragma once

// ExperimentConfig: a declarative benchmark run, loaded from YAML or JSON.
// Relative paths resolve against the config file's directory.
//
//   dataset:
//     interactions: data/interactions.tsv
//     metadata: data/metadata.jsonl          # optional; enables prefilter
//     kcore: {min_user: 0, min_item: 0}      # optional, off by default
//   split: {test_ratio: 0.2, val_ratio_of_train: 0.1, min_train_per_user: 1}
//   extractors:
//     - tag: resnet50+sbert
//       features: {visual: v.mmfe, textual: t.mmfe}
//       preprocess: none                      # none|zscore|minmax|l2row
//   representation:
//     mode: joint                             # joint|coordinate_early|coordinate_late
//     fusion: concat                          # concat|sum|mul|avg
//     projections: {visual: p.mmfe}           # optional, identity otherwise
//   models:
//     - {name: BPRMF}
//     - {name: LightGCN, layers: 3}
//   grid: {learning_rates: [...], regs: [...]}
//   training: {epochs: 200, batch_size: 1024, latent_dim: 64, init_std: 0.01}
//   K: 20
//   seeds: [42]
//   workers: 1
//   output_dir: out
//   timings: timings.csv                      # optional extraction timings

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "mmrec/error.hpp"
#include "mmrec/feature_store.hpp"
#include "mmrec/fusion.hpp"
#include "mmrec/splitter.hpp"

namespace mmrec {

inline const std::vector<double> kDefaultLearningRates{0.0001, 0.0005, 0.001, 0.005, 0.01};
inline const std::vector<double> kDefaultRegs{1e-5, 1e-2};
inline constexpr std::size_t kPaperBatchSize = 1024;
inline constexpr std::size_t kPaperEpochs = 200;
inline constexpr std::size_t kPaperK = 20;

struct ExtractorConfig {
  std::string tag;
  std::map<Modality, std::filesystem::path> features;
  Preprocess preprocess = Preprocess::None;
};

struct ModelConfig {
  std::string name;
  nlohmann::json params = nlohmann::json::object();

  template <typename T>
  T get(const std::string& key, T fallback) const {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    try {
      return it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::Config, "model " + name + ": bad value for '" + key + "'");
    }
  }
};

struct ExperimentConfig {
  std::filesystem::path interactions;
  std::optional<std::filesystem::path> metadata;
  std::size_t kcore_min_user = 0;
  std::size_t kcore_min_item = 0;
  SplitConfig split;
  std::vector<ExtractorConfig> extractors;
  RepresentationKind representation = RepresentationKind::Joint;
  FusionMethod fusion = FusionMethod::Concat;
  std::map<Modality, std::filesystem::path> projections;
  std::vector<ModelConfig> models;
  std::vector<double> learning_rates = kDefaultLearningRates;
  std::vector<double> regs = kDefaultRegs;
  std::size_t epochs = kPaperEpochs;
  std::size_t batch_size = kPaperBatchSize;
  std::size_t latent_dim = 64;
  double init_std = 0.01;
  std::size_t k = kPaperK;
  std::vector<std::uint64_t> seeds{42};
  std::size_t workers = 1;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> timings;

  bool paper_protocol() const {
    return batch_size == kPaperBatchSize && epochs == kPaperEpochs &&
           learning_rates == kDefaultLearningRates && regs == kDefaultRegs && k == kPaperK;
  }
};

namespace detail {

inline nlohmann::json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      auto arr = nlohmann::json::array();
      for (const auto& child : node) arr.push_back(yaml_to_json(child));
      return arr;
    }
    case YAML::NodeType::Map: {
      auto obj = nlohmann::json::object();
      for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
    case YAML::NodeType::Scalar: {
      const std::string& s = node.Scalar();
      if (node.Tag() == "!") return s;  // quoted
      if (s == "~" || s == "null") return nullptr;
      if (s == "true") return true;
      if (s == "false") return false;
      long long i;
      if (YAML::convert<long long>::decode(node, i)) return i;
      double d;
      if (YAML::convert<double>::decode(node, d)) return d;
      return s;
    }
  }
  return nullptr;
}

template <typename T>
T json_get(const nlohmann::json& obj, const char* key, T fallback) {
  if (!obj.is_object()) return fallback;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::Config, std::string("bad value for '") + key + "'");
  }
}

}  // namespace detail

inline nlohmann::json load_config_tree(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto ext = path.extension().string();
  if (ext == ".json") {
    auto tree = nlohmann::json::parse(text, nullptr, false);
    if (tree.is_discarded()) throw Error(ErrorCode::Config, "invalid JSON in " + path.string());
    return tree;
  }
  try {
    return detail::yaml_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::Config, "invalid YAML in " + path.string() + ": " + e.what());
  }
}

inline ExperimentConfig parse_config(const nlohmann::json& tree,
                                     const std::filesystem::path& base_dir = ".") {
  using detail::json_get;
  if (!tree.is_object()) throw Error(ErrorCode::Config, "config root must be a mapping");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  auto modality_paths = [&](const nlohmann::json& obj) {
    std::map<Modality, std::filesystem::path> out;
    if (obj.is_null()) return out;
    if (!obj.is_object()) throw Error(ErrorCode::Config, "expected modality -> path mapping");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      Modality m;
      try {
        m = parse_modality(it.key());
      } catch (const Error&) {
        throw Error(ErrorCode::Config, "unknown modality '" + it.key() + "'");
      }
      out[m] = resolve(it->get<std::string>());
    }
    return out;
  };

  ExperimentConfig cfg;
  const auto dataset = tree.value("dataset", nlohmann::json::object());
  const auto interactions = json_get<std::string>(dataset, "interactions", "");
  if (interactions.empty()) throw Error(ErrorCode::Config, "dataset.interactions is required");
  cfg.interactions = resolve(interactions);
  if (auto md = json_get<std::string>(dataset, "metadata", ""); !md.empty())
    cfg.metadata = resolve(md);
  const auto kcore = dataset.value("kcore", nlohmann::json::object());
  cfg.kcore_min_user = json_get<std::size_t>(kcore, "min_user", 0);
  cfg.kcore_min_item = json_get<std::size_t>(kcore, "min_item", 0);

  const auto split = tree.value("split", nlohmann::json::object());
  cfg.split.test_ratio = json_get<double>(split, "test_ratio", 0.2);
  cfg.split.val_ratio_of_train = json_get<double>(split, "val_ratio_of_train", 0.1);
  cfg.split.min_train_per_user = json_get<std::size_t>(split, "min_train_per_user", 1);
  if (json_get<std::string>(split, "strategy", "random_per_user") != "random_per_user")
    throw Error(ErrorCode::Config, "only split.strategy random_per_user is implemented");
  cfg.split.validate();

  auto extractor_from = [&](const nlohmann::json& e) {
    ExtractorConfig ex;
    ex.tag = json_get<std::string>(e, "tag", json_get<std::string>(e, "extractor_tag", ""));
    if (ex.tag.empty()) throw Error(ErrorCode::Config, "extractor tag is required");
    ex.features = modality_paths(e.value("features", nlohmann::json()));
    if (ex.features.empty()) throw Error(ErrorCode::Config, "extractor '" + ex.tag + "' has no features");
    ex.preprocess = parse_preprocess(json_get<std::string>(e, "preprocess", "none"));
    return ex;
  };
  if (auto ex = tree.find("extractors"); ex != tree.end() && ex->is_array()) {
    for (const auto& e : *ex) cfg.extractors.push_back(extractor_from(e));
  } else if (tree.contains("features")) {
    cfg.extractors.push_back(extractor_from(tree));
  }

  const auto rep = tree.value("representation", nlohmann::json::object());
  cfg.representation = parse_representation(json_get<std::string>(rep, "mode", "joint"));
  cfg.fusion = parse_fusion_method(json_get<std::string>(rep, "fusion", "concat"));
  cfg.projections = modality_paths(rep.value("projections", nlohmann::json()));
  if (cfg.representation == RepresentationKind::Joint && !cfg.projections.empty())
    throw Error(ErrorCode::Config, "projections require a coordinate representation");

  const auto models = tree.value("models", nlohmann::json::array());
  if (!models.is_array() || models.empty()) throw Error(ErrorCode::Config, "models list is required");
  for (const auto& m : models) {
    ModelConfig mc;
    if (m.is_string()) {
      mc.name = m.get<std::string>();
    } else {
      mc.name = json_get<std::string>(m, "name", "");
      mc.params = m;
      mc.params.erase("name");
    }
    static const char* kKnown[] = {"ItemKNN", "BPRMF", "VBPR", "LightGCN", "FrozenGraphRec"};
    if (std::find(std::begin(kKnown), std::end(kKnown), mc.name) == std::end(kKnown))
      throw Error(ErrorCode::Config, "unknown model '" + mc.name + "'");
    cfg.models.push_back(std::move(mc));
  }

  const auto grid = tree.value("grid", nlohmann::json::object());
  cfg.learning_rates = json_get<std::vector<double>>(grid, "learning_rates", kDefaultLearningRates);
  cfg.regs = json_get<std::vector<double>>(grid, "regs", kDefaultRegs);

  const auto training = tree.value("training", nlohmann::json::object());
  cfg.epochs = json_get<std::size_t>(training, "epochs", kPaperEpochs);
  cfg.batch_size = json_get<std::size_t>(training, "batch_size", kPaperBatchSize);
  cfg.latent_dim = json_get<std::size_t>(training, "latent_dim", 64);
  cfg.init_std = json_get<double>(training, "init_std", 0.01);
  if (cfg.epochs == 0 || cfg.batch_size == 0 || cfg.latent_dim == 0)
    throw Error(ErrorCode::Config, "epochs, batch_size and latent_dim must be positive");

  cfg.k = json_get<std::size_t>(tree, "K", kPaperK);
  if (cfg.k == 0) throw Error(ErrorCode::Config, "K must be >= 1");
  if (tree.contains("seeds"))
    cfg.seeds = json_get<std::vector<std::uint64_t>>(tree, "seeds", {});
  else if (tree.contains("seed"))
    cfg.seeds = {json_get<std::uint64_t>(tree, "seed", 42)};
  if (cfg.seeds.empty()) throw Error(ErrorCode::Config, "seeds must not be empty");
  cfg.workers = json_get<std::size_t>(tree, "workers", 1);
  cfg.output_dir = resolve(json_get<std::string>(tree, "output_dir", "out"));
  if (auto t = json_get<std::string>(tree, "timings", ""); !t.empty()) cfg.timings = resolve(t);

  const bool needs_features = std::any_of(cfg.models.begin(), cfg.models.end(), [](auto& m) {
    return m.name == "VBPR" || m.name == "FrozenGraphRec";
  });
  if (needs_features && cfg.extractors.empty())
    throw Error(ErrorCode::Config, "multimodal models need at least one extractor");
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(load_config_tree(path), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace mmrec
