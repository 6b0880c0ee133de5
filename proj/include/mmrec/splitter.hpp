#pragma once

// Per-user random holdout into train / validation / test, followed by
// train-anchored dense indexing and feature re-indexing.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmrec/core.hpp"
#include "mmrec/rng.hpp"

namespace mmrec {

struct SplitConfig {
  double test_ratio = 0.2;
  double val_ratio_of_train = 0.1;
  std::uint64_t seed = 42;
  std::size_t min_train_per_user = 1;

  void validate() const {
    if (!(test_ratio > 0.0 && test_ratio < 1.0))
      throw Error(ErrorCode::Config, "test_ratio must be in (0, 1)");
    if (!(val_ratio_of_train >= 0.0 && val_ratio_of_train < 1.0))
      throw Error(ErrorCode::Config, "val_ratio_of_train must be in [0, 1)");
  }
};

/// Round half up. The epsilon absorbs representation error so that e.g.
/// 35 * 0.1 rounds to 4.
inline std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

struct UserSplitSizes {
  std::size_t test = 0;
  std::size_t validation = 0;
  std::size_t train = 0;
};

inline UserSplitSizes user_split_sizes(std::size_t n, const SplitConfig& cfg) {
  UserSplitSizes s;
  const std::size_t keep = std::min(cfg.min_train_per_user, n);
  s.test = std::min(round_half_up(static_cast<double>(n) * cfg.test_ratio), n - keep);
  const std::size_t rest = n - s.test;
  s.validation = std::min(
      round_half_up(static_cast<double>(rest) * cfg.val_ratio_of_train),
      rest - std::min(keep, rest));
  s.train = rest - s.validation;
  return s;
}

/// Shuffle stream for one user depends only on (seed, user token).
inline SplitMix64 user_split_rng(std::uint64_t seed, const std::string& user) {
  return SplitMix64(derive_seed(derive_seed(seed, "split"), user));
}

inline SplitBundle split(const InteractionSet& interactions,
                         const SplitConfig& cfg) {
  cfg.validate();
  if (interactions.empty())
    throw Error(ErrorCode::Degenerate, "no interactions to split");

  InteractionSet train, validation, test;
  for (const auto& user : interactions.users()) {
    auto items_span = interactions.items_of(user);
    std::vector<std::string> items(items_span.begin(), items_span.end());
    SplitMix64 rng = user_split_rng(cfg.seed, user);
    for (std::size_t k = items.size(); k > 1; --k)
      std::swap(items[k - 1], items[rng.uniform_index(k)]);
    const UserSplitSizes sizes = user_split_sizes(items.size(), cfg);
    std::size_t k = 0;
    for (; k < sizes.test; ++k) test.add({user, items[k]});
    for (; k < sizes.test + sizes.validation; ++k) validation.add({user, items[k]});
    for (; k < items.size(); ++k) train.add({user, items[k]});
  }
  if (train.empty())
    throw Error(ErrorCode::Degenerate, "training set is empty after split");

  SplitBundle bundle;
  bundle.index = IndexMap::from_training(train);
  auto known = [&](const InteractionSet::Entry& e) {
    return bundle.index.user_index(e.first) && bundle.index.item_index(e.second);
  };
  bundle.validation = validation.filtered(known);
  bundle.test = test.filtered(known);
  bundle.train = std::move(train);
  bundle.seed = cfg.seed;
  return bundle;
}

/// Row k of the result holds the features of index.item_token(k).
inline FeatureMatrix remap_features(const FeatureMatrix& features,
                                    const IndexMap& index) {
  std::unordered_map<std::string_view, std::size_t> row_of;
  row_of.reserve(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r)
    row_of.emplace(features.row_ids[r], r);

  FeatureMatrix out;
  out.modality = features.modality;
  out.dim = features.dim;
  out.row_ids = index.item_tokens();
  out.values.resize(index.num_items() * features.dim);
  for (std::size_t k = 0; k < index.num_items(); ++k) {
    auto it = row_of.find(index.item_token(k));
    if (it == row_of.end())
      throw Error(ErrorCode::MissingFeatureRow, index.item_token(k));
    auto src = features.row(it->second);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence: train.tsv / validation.tsv / test.tsv hold dense "u<TAB>i"
// pairs; users.tsv / items.tsv hold "token<TAB>index"; seed.txt the seed.

namespace detail {

inline void write_dense_set(const InteractionSet& set, const IndexMap& index,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (auto [u, i] : to_dense_pairs(set, index)) out << u << '\t' << i << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

inline void write_token_map(const std::vector<std::string>& tokens,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (std::size_t k = 0; k < tokens.size(); ++k) out << tokens[k] << '\t' << k << '\n';
}

inline std::vector<std::string> read_token_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::pair<std::size_t, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0)
      throw Error(ErrorCode::Malformed, path.string() + " line " + std::to_string(line_no));
    rows.emplace_back(std::stoull(line.substr(tab + 1)), line.substr(0, tab));
  }
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> tokens;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].first != k)
      throw Error(ErrorCode::Malformed, path.string() + ": indices not contiguous");
    tokens.push_back(std::move(rows[k].second));
  }
  return tokens;
}

inline InteractionSet read_dense_set(const std::filesystem::path& path,
                                     const IndexMap& index) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  InteractionSet set;
  std::size_t u = 0, i = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (!(fields >> u >> i) || u >= index.num_users() || i >= index.num_items())
      throw Error(ErrorCode::Malformed, path.string() + " line " + std::to_string(line_no));
    set.add({index.user_token(u), index.item_token(i)});
  }
  return set;
}

}  // namespace detail

inline void write_split_bundle(const SplitBundle& bundle,
                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  detail::write_dense_set(bundle.train, bundle.index, dir / "train.tsv");
  detail::write_dense_set(bundle.validation, bundle.index, dir / "validation.tsv");
  detail::write_dense_set(bundle.test, bundle.index, dir / "test.tsv");
  detail::write_token_map(bundle.index.user_tokens(), dir / "users.tsv");
  detail::write_token_map(bundle.index.item_tokens(), dir / "items.tsv");
  std::ofstream(dir / "seed.txt") << bundle.seed << '\n';
}

inline SplitBundle read_split_bundle(const std::filesystem::path& dir) {
  SplitBundle bundle;
  bundle.index = IndexMap(detail::read_token_map(dir / "users.tsv"),
                          detail::read_token_map(dir / "items.tsv"));
  bundle.train = detail::read_dense_set(dir / "train.tsv", bundle.index);
  bundle.validation = detail::read_dense_set(dir / "validation.tsv", bundle.index);
  bundle.test = detail::read_dense_set(dir / "test.tsv", bundle.index);
  std::ifstream seed_in(dir / "seed.txt");
  if (seed_in) seed_in >> bundle.seed;
  return bundle;
}

}  // namespace mmrec
