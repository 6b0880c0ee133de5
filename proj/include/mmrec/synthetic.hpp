#pragma once

// Block-structured synthetic catalog. Items and users belong to one of C
// latent classes; users mostly interact with items of their own class, and
// item features are a one-hot class indicator plus Gaussian noise. A few
// extra "junk" items carry invalid metadata so the pre-filter has work.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmrec/core.hpp"
#include "mmrec/feature_store.hpp"
#include "mmrec/rng.hpp"

namespace mmrec {

struct SyntheticConfig {
  std::size_t users = 300;
  std::size_t items = 120;
  std::size_t classes = 4;
  std::size_t min_per_user = 6;
  std::size_t max_per_user = 10;
  double off_class_prob = 0.05;
  double feature_noise = 0.1;
  double pure_noise_std = 1.0;
  std::size_t textual_dim = 8;
  std::size_t junk_items = 6;
  std::uint64_t seed = 7;
};

struct SyntheticDataset {
  InteractionSet interactions;
  std::vector<ItemMetadata> metadata;
  FeatureMatrix visual;   // class indicator + N(0, feature_noise^2), dim = classes
  FeatureMatrix textual;  // indicator in dims [classes, 2*classes) + noise
  FeatureMatrix noise;    // N(0, pure_noise_std^2), dim = classes, no class signal
};

inline std::string synthetic_item(std::size_t i) { return "i" + std::to_string(i); }
inline std::string synthetic_user(std::size_t u) { return "u" + std::to_string(u); }

inline SyntheticDataset make_synthetic(const SyntheticConfig& cfg) {
  SyntheticDataset ds;
  const std::size_t c = cfg.classes;
  const std::size_t per_class = cfg.items / c;

  SplitMix64 rng(derive_seed(cfg.seed, "interactions"));
  for (std::size_t u = 0; u < cfg.users; ++u) {
    const std::size_t cls = u % c;
    const std::size_t n =
        cfg.min_per_user + rng.uniform_index(cfg.max_per_user - cfg.min_per_user + 1);
    std::unordered_set<std::size_t> picked;
    while (picked.size() < n) {
      std::size_t item;
      if (rng.uniform01() < cfg.off_class_prob)
        item = rng.uniform_index(cfg.items);
      else
        item = cls + c * rng.uniform_index(per_class);
      if (picked.insert(item).second)
        ds.interactions.add({synthetic_user(u), synthetic_item(item)});
    }
  }
  SplitMix64 junk_rng(derive_seed(cfg.seed, "junk"));
  for (std::size_t j = 0; j < cfg.junk_items; ++j)
    for (int k = 0; k < 5; ++k)
      ds.interactions.add({synthetic_user(junk_rng.uniform_index(cfg.users)),
                           synthetic_item(cfg.items + j)});

  for (std::size_t i = 0; i < cfg.items + cfg.junk_items; ++i) {
    ItemMetadata md;
    md.item_token = synthetic_item(i);
    if (i < cfg.items) {
      md.image_url = "http://img.example.org/" + md.item_token + ".jpg";
      md.description = "synthetic item of class " + std::to_string(i % c);
    } else {
      // Alternate failure modes: missing URL, NaN text, blank text.
      switch ((i - cfg.items) % 3) {
        case 0: md.description = "orphan"; break;
        case 1:
          md.image_url = "http://img.example.org/" + md.item_token + ".jpg";
          md.description = "NaN";
          break;
        default:
          md.image_url = "not a url";
          md.description = "   ";
      }
    }
    ds.metadata.push_back(std::move(md));
  }

  auto block = [&](Modality m, std::size_t dim, std::string_view stream, auto&& value) {
    FeatureMatrix f;
    f.modality = m;
    f.dim = dim;
    SplitMix64 r(derive_seed(cfg.seed, stream));
    for (std::size_t i = 0; i < cfg.items; ++i) {
      f.row_ids.push_back(synthetic_item(i));
      for (std::size_t d = 0; d < dim; ++d) f.values.push_back(static_cast<float>(value(i, d, r)));
    }
    return f;
  };
  ds.visual = block(Modality::Visual, c, "visual", [&](std::size_t i, std::size_t d, SplitMix64& r) {
    return (d == i % c ? 1.0 : 0.0) + cfg.feature_noise * r.normal();
  });
  ds.textual = block(Modality::Textual, cfg.textual_dim, "textual",
                     [&](std::size_t i, std::size_t d, SplitMix64& r) {
                       return (d == c + i % c ? 1.0 : 0.0) + cfg.feature_noise * r.normal();
                     });
  ds.noise = block(Modality::Visual, c, "noise", [&](std::size_t, std::size_t, SplitMix64& r) {
    return cfg.pure_noise_std * r.normal();
  });
  return ds;
}

inline void write_synthetic(const SyntheticDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "interactions.tsv", std::ios::binary);
    for (const auto& [u, i] : ds.interactions.entries()) out << u << '\t' << i << "\t1\n";
  }
  {
    std::ofstream out(dir / "metadata.jsonl", std::ios::binary);
    for (const auto& md : ds.metadata) {
      nlohmann::ordered_json j;
      j["item"] = md.item_token;
      if (md.image_url) j["imUrl"] = *md.image_url;
      if (md.description) j["description"] = *md.description;
      out << j.dump() << '\n';
    }
  }
  write_features(ds.visual, dir / "visual.mmfe");
  write_features(ds.textual, dir / "textual.mmfe");
  write_features(ds.noise, dir / "noise.mmfe");
}

}  // namespace mmrec
