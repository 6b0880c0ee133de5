#pragma once

// Shared data model: modalities, interactions, item metadata, feature blocks,
// train-anchored indexing and the split bundle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mmrec/error.hpp"
#include "mmrec/matrix.hpp"

namespace mmrec {

// Codes are part of the MMFE on-disk format.
enum class Modality : std::uint8_t {
  Visual = 0,
  Textual = 1,
  Audio = 2,
  VisualTextual = 3,
};

inline constexpr Modality kAllModalities[] = {
    Modality::Visual, Modality::Textual, Modality::Audio,
    Modality::VisualTextual};

inline std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Visual: return "visual";
    case Modality::Textual: return "textual";
    case Modality::Audio: return "audio";
    case Modality::VisualTextual: return "visual_textual";
  }
  return "?";
}

inline std::optional<Modality> modality_from_code(std::uint8_t code) {
  if (code > static_cast<std::uint8_t>(Modality::VisualTextual)) return {};
  return static_cast<Modality>(code);
}

inline Modality parse_modality(std::string_view name) {
  for (Modality m : kAllModalities)
    if (to_string(m) == name) return m;
  throw Error(ErrorCode::UnknownModality, std::string(name));
}

struct PairHash {
  std::size_t operator()(const std::pair<std::string, std::string>& p) const {
    const std::size_t a = std::hash<std::string>{}(p.first);
    const std::size_t b = std::hash<std::string>{}(p.second);
    return a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  }
};

/// Implicit feedback as (user, item) token pairs. Construction drops
/// duplicate pairs and keeps first-appearance order.
class InteractionSet {
 public:
  using Entry = std::pair<std::string, std::string>;

  InteractionSet() = default;

  explicit InteractionSet(std::vector<Entry> entries) {
    entries_.reserve(entries.size());
    for (auto& e : entries) add(std::move(e));
  }

  /// Returns false if the pair was already present.
  bool add(Entry e) {
    if (e.first.empty() || e.second.empty())
      throw Error(ErrorCode::InvalidValue, "empty user or item token");
    if (!seen_.insert(e).second) return false;
    auto [uit, new_user] = adjacency_.try_emplace(e.first);
    if (new_user) users_.push_back(e.first);
    uit->second.push_back(e.second);
    if (item_degree_[e.second]++ == 0) items_.push_back(e.second);
    entries_.push_back(std::move(e));
    return true;
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t num_interactions() const noexcept { return entries_.size(); }
  std::size_t num_users() const noexcept { return users_.size(); }
  std::size_t num_items() const noexcept { return items_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Users / items in first-appearance order.
  const std::vector<std::string>& users() const noexcept { return users_; }
  const std::vector<std::string>& items() const noexcept { return items_; }

  /// Items of one user in first-appearance order; empty for unknown users.
  std::span<const std::string> items_of(const std::string& user) const {
    auto it = adjacency_.find(user);
    if (it == adjacency_.end()) return {};
    return it->second;
  }

  std::size_t item_degree(const std::string& item) const {
    auto it = item_degree_.find(item);
    return it == item_degree_.end() ? 0 : it->second;
  }

  bool contains(const std::string& user, const std::string& item) const {
    return seen_.count(Entry{user, item}) != 0;
  }

  template <typename Pred>
  InteractionSet filtered(Pred keep) const {
    InteractionSet out;
    for (const auto& e : entries_)
      if (keep(e)) out.add(e);
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_set<Entry, PairHash> seen_;
  std::unordered_map<std::string, std::vector<std::string>> adjacency_;
  std::unordered_map<std::string, std::size_t> item_degree_;
  std::vector<std::string> users_;
  std::vector<std::string> items_;
};

struct ItemMetadata {
  std::string item_token;
  std::optional<std::string> image_url;
  std::optional<std::string> description;
  std::map<std::string, std::string> extra;
};

/// One modality's dense item features, f32 row-major.
struct FeatureMatrix {
  Modality modality = Modality::Visual;
  std::size_t dim = 1;
  std::vector<std::string> row_ids;
  std::vector<float> values;

  std::size_t rows() const noexcept { return row_ids.size(); }

  std::span<const float> row(std::size_t r) const {
    return {values.data() + r * dim, dim};
  }
  std::span<float> row(std::size_t r) { return {values.data() + r * dim, dim}; }

  /// Throws InvalidValue on a shape mismatch, duplicate id or non-finite value.
  void validate() const {
    if (dim == 0) throw Error(ErrorCode::InvalidValue, "feature dim must be >= 1");
    if (values.size() != row_ids.size() * dim)
      throw Error(ErrorCode::InvalidValue, "values size != rows * dim");
    std::unordered_set<std::string_view> ids;
    for (const auto& id : row_ids)
      if (!ids.insert(id).second)
        throw Error(ErrorCode::InvalidValue, "duplicate row id '" + id + "'");
    for (std::size_t k = 0; k < values.size(); ++k)
      if (!std::isfinite(values[k]))
        throw Error(ErrorCode::InvalidValue,
                    "non-finite value in row '" + row_ids[k / dim] + "'");
  }

  /// Promotes to f64 for training.
  Matrix to_f64() const {
    Matrix m(rows(), dim);
    for (std::size_t k = 0; k < values.size(); ++k)
      m.flat()[k] = static_cast<double>(values[k]);
    return m;
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

/// Bijection between raw tokens and contiguous dense indices, one per entity.
class IndexMap {
 public:
  IndexMap() = default;

  IndexMap(std::vector<std::string> users, std::vector<std::string> items)
      : user_rev_(std::move(users)), item_rev_(std::move(items)) {
    fill_forward(user_rev_, user_fwd_, "user");
    fill_forward(item_rev_, item_fwd_, "item");
  }

  /// Users and items are numbered by first appearance in the
  /// lexicographically sorted training pairs.
  static IndexMap from_training(const InteractionSet& train) {
    std::vector<const InteractionSet::Entry*> sorted;
    sorted.reserve(train.num_interactions());
    for (const auto& e : train.entries()) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return *a < *b; });
    std::vector<std::string> users, items;
    std::unordered_set<std::string_view> seen_u, seen_i;
    for (const auto* e : sorted) {
      if (seen_u.insert(e->first).second) users.push_back(e->first);
      if (seen_i.insert(e->second).second) items.push_back(e->second);
    }
    return IndexMap(std::move(users), std::move(items));
  }

  std::size_t num_users() const noexcept { return user_rev_.size(); }
  std::size_t num_items() const noexcept { return item_rev_.size(); }

  std::optional<std::size_t> user_index(const std::string& token) const {
    return lookup(user_fwd_, token);
  }
  std::optional<std::size_t> item_index(const std::string& token) const {
    return lookup(item_fwd_, token);
  }

  const std::string& user_token(std::size_t k) const { return user_rev_.at(k); }
  const std::string& item_token(std::size_t k) const { return item_rev_.at(k); }

  const std::vector<std::string>& user_tokens() const noexcept { return user_rev_; }
  const std::vector<std::string>& item_tokens() const noexcept { return item_rev_; }

  friend bool operator==(const IndexMap& a, const IndexMap& b) {
    return a.user_rev_ == b.user_rev_ && a.item_rev_ == b.item_rev_;
  }

 private:
  using Forward = std::unordered_map<std::string, std::size_t>;

  static void fill_forward(const std::vector<std::string>& rev, Forward& fwd,
                           const char* what) {
    fwd.reserve(rev.size());
    for (std::size_t k = 0; k < rev.size(); ++k)
      if (!fwd.emplace(rev[k], k).second)
        throw Error(ErrorCode::InvalidValue,
                    std::string("duplicate ") + what + " token '" + rev[k] + "'");
  }

  static std::optional<std::size_t> lookup(const Forward& fwd,
                                           const std::string& token) {
    auto it = fwd.find(token);
    if (it == fwd.end()) return {};
    return it->second;
  }

  Forward user_fwd_, item_fwd_;
  std::vector<std::string> user_rev_, item_rev_;
};

struct SplitBundle {
  InteractionSet train;
  InteractionSet validation;
  InteractionSet test;
  IndexMap index;
  std::uint64_t seed = 0;
};

/// Binary user x item matrix with sorted per-row and per-column index lists.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;

  InteractionMatrix(std::size_t num_users, std::size_t num_items,
                    std::vector<std::pair<std::size_t, std::size_t>> pairs)
      : num_users_(num_users), num_items_(num_items) {
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    row_ptr_.assign(num_users + 1, 0);
    col_ptr_.assign(num_items + 1, 0);
    for (auto [u, i] : pairs) {
      ++row_ptr_[u + 1];
      ++col_ptr_[i + 1];
    }
    for (std::size_t u = 0; u < num_users; ++u) row_ptr_[u + 1] += row_ptr_[u];
    for (std::size_t i = 0; i < num_items; ++i) col_ptr_[i + 1] += col_ptr_[i];
    row_idx_.resize(pairs.size());
    col_idx_.resize(pairs.size());
    std::vector<std::size_t> col_fill(col_ptr_.begin(), col_ptr_.end() - 1);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      col_idx_[k] = pairs[k].second;  // pairs are row-major sorted
      row_idx_[col_fill[pairs[k].second]++] = pairs[k].first;
    }
  }

  std::size_t num_users() const noexcept { return num_users_; }
  std::size_t num_items() const noexcept { return num_items_; }
  std::size_t nnz() const noexcept { return col_idx_.size(); }

  /// Items of user u, ascending.
  std::span<const std::size_t> row(std::size_t u) const {
    return {col_idx_.data() + row_ptr_[u], row_ptr_[u + 1] - row_ptr_[u]};
  }
  /// Users of item i, ascending.
  std::span<const std::size_t> col(std::size_t i) const {
    return {row_idx_.data() + col_ptr_[i], col_ptr_[i + 1] - col_ptr_[i]};
  }

  bool contains(std::size_t u, std::size_t i) const {
    auto r = row(u);
    return std::binary_search(r.begin(), r.end(), i);
  }

 private:
  std::size_t num_users_ = 0;
  std::size_t num_items_ = 0;
  std::vector<std::size_t> row_ptr_, col_idx_;
  std::vector<std::size_t> col_ptr_, row_idx_;
};

inline std::vector<std::pair<std::size_t, std::size_t>> to_dense_pairs(
    const InteractionSet& set, const IndexMap& index) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(set.num_interactions());
  for (const auto& [user, item] : set.entries()) {
    auto u = index.user_index(user);
    if (!u) throw Error(ErrorCode::UnknownToken, "user '" + user + "'");
    auto i = index.item_index(item);
    if (!i) throw Error(ErrorCode::UnknownToken, "item '" + item + "'");
    pairs.emplace_back(*u, *i);
  }
  return pairs;
}

inline InteractionMatrix build_interaction_matrix(const InteractionSet& train,
                                                  const IndexMap& index) {
  return InteractionMatrix(index.num_users(), index.num_items(),
                           to_dense_pairs(train, index));
}

struct ValidationReport {
  struct Disjointness {
    InteractionSet::Entry pair;
    std::string sets;  // e.g. "train/test"
  };

  std::vector<std::pair<Modality, std::string>> missing_feature_rows;
  std::vector<std::pair<Modality, std::string>> orphan_feature_rows;
  std::vector<Disjointness> disjointness_violations;

  bool valid() const noexcept {
    return missing_feature_rows.empty() && orphan_feature_rows.empty() &&
           disjointness_violations.empty();
  }
};

inline ValidationReport validate_bundle(const SplitBundle& bundle,
                                        std::span<const FeatureMatrix> features) {
  ValidationReport report;
  for (const auto& fm : features) {
    std::unordered_set<std::string_view> rows(fm.row_ids.begin(),
                                              fm.row_ids.end());
    for (const auto& item : bundle.index.item_tokens())
      if (!rows.count(item)) report.missing_feature_rows.emplace_back(fm.modality, item);
    for (const auto& id : fm.row_ids)
      if (!bundle.index.item_index(id)) report.orphan_feature_rows.emplace_back(fm.modality, id);
  }
  auto check = [&](const InteractionSet& a, const InteractionSet& b,
                   const char* label) {
    for (const auto& e : a.entries())
      if (b.contains(e.first, e.second))
        report.disjointness_violations.push_back({e, label});
  };
  check(bundle.train, bundle.validation, "train/validation");
  check(bundle.train, bundle.test, "train/test");
  check(bundle.validation, bundle.test, "validation/test");
  return report;
}

}  // namespace mmrec
