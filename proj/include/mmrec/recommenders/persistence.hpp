#pragma once

// Trained models on disk: one MMFE file per block plus manifest.txt.
//
//   model <name>
//   param <key> <value>          (hyper-parameters, seeds, ...)
//   block <name> <file> <rows> <cols>
//
// Block rows are ids "0".."rows-1". Projection blocks carry their modality
// code; every other block is written with code 0.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mmrec/feature_store.hpp"
#include "mmrec/recommenders/itemknn.hpp"
#include "mmrec/recommenders/model.hpp"

namespace mmrec {

struct ModelManifest {
  std::string model;
  std::vector<std::pair<std::string, std::string>> params;
  struct Block {
    std::string name, file;
    std::size_t rows = 0, cols = 0;
  };
  std::vector<Block> blocks;

  std::string param(const std::string& key, const std::string& fallback = "") const {
    for (const auto& [k, v] : params)
      if (k == key) return v;
    return fallback;
  }
};

inline FeatureMatrix block_to_features(const NamedBlock& b) {
  FeatureMatrix f;
  f.modality = b.modality;
  f.dim = std::max<std::size_t>(b.value.cols(), 1);
  f.row_ids.reserve(b.value.rows());
  for (std::size_t r = 0; r < b.value.rows(); ++r) f.row_ids.push_back(std::to_string(r));
  f.values.resize(b.value.rows() * f.dim, 0.0f);
  for (std::size_t k = 0; k < b.value.size(); ++k) f.values[k] = static_cast<float>(b.value.flat()[k]);
  return f;
}

inline Matrix features_to_block(const FeatureMatrix& f) { return f.to_f64(); }

inline void save_model(const Recommender& model, const std::filesystem::path& dir,
                       const std::vector<std::pair<std::string, std::string>>& params) {
  std::filesystem::create_directories(dir);
  std::ostringstream manifest;
  manifest << "model " << model.name() << '\n';
  for (const auto& [k, v] : params) manifest << "param " << k << ' ' << v << '\n';
  for (const auto& b : model.export_blocks()) {
    const std::string file = b.name + ".mmfe";
    write_features(block_to_features(b), dir / file);
    manifest << "block " << b.name << ' ' << file << ' ' << b.value.rows() << ' ' << b.value.cols()
             << '\n';
  }
  detail::write_file_atomically(dir / "manifest.txt", manifest.str());
}

inline ModelManifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw Error(ErrorCode::Io, "cannot open " + (dir / "manifest.txt").string());
  ModelManifest m;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind == "model") {
      fields >> m.model;
    } else if (kind == "param") {
      std::string key, value;
      fields >> key;
      std::getline(fields >> std::ws, value);
      m.params.emplace_back(key, value);
    } else if (kind == "block") {
      ModelManifest::Block b;
      if (!(fields >> b.name >> b.file >> b.rows >> b.cols))
        throw Error(ErrorCode::Malformed, "manifest block line: " + line);
      m.blocks.push_back(b);
    } else if (!kind.empty()) {
      throw Error(ErrorCode::Malformed, "manifest line: " + line);
    }
  }
  return m;
}

inline Matrix load_block(const std::filesystem::path& dir, const ModelManifest& m,
                         const std::string& name) {
  for (const auto& b : m.blocks) {
    if (b.name != name) continue;
    FeatureMatrix f = read_features(dir / b.file);
    if (f.rows() != b.rows || (b.cols > 0 && f.dim != b.cols))
      throw Error(ErrorCode::DimMismatch, "block '" + name + "' shape differs from manifest");
    Matrix out(b.rows, b.cols);
    for (std::size_t k = 0; k < out.size(); ++k) out.flat()[k] = f.values[k];
    return out;
  }
  throw Error(ErrorCode::Malformed, "manifest has no block '" + name + "'");
}

/// Rebuilds a scorer from a saved model. ItemKNN needs the training matrix.
inline std::unique_ptr<Recommender> load_scorer(const std::filesystem::path& dir,
                                                const InteractionMatrix* train = nullptr) {
  const ModelManifest m = read_manifest(dir);
  auto has = [&](const std::string& name) {
    return std::any_of(m.blocks.begin(), m.blocks.end(), [&](auto& b) { return b.name == name; });
  };
  if (has("item_sim")) {
    if (!train) throw Error(ErrorCode::Config, "ItemKNN scorer needs the training split");
    return std::make_unique<SimilarityScorer>(*train, load_block(dir, m, "item_sim"));
  }
  Matrix users = load_block(dir, m, "score_user");
  Matrix items = load_block(dir, m, "score_item");
  Matrix bias = load_block(dir, m, "score_bias");
  std::vector<double> b(bias.flat().begin(), bias.flat().end());
  return std::make_unique<FactorScorer>(m.model, std::move(users), std::move(items), std::move(b));
}

}  // namespace mmrec
