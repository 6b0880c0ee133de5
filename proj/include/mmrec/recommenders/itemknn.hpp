#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mmrec/recommenders/model.hpp"

namespace mmrec {

/// Cosine similarity between binary item columns:
///   sim(i, j) = |users(i) & users(j)| / sqrt(|users(i)| |users(j)|)
/// An all-zero column has similarity 0 with everything.
inline double item_cosine(const InteractionMatrix& train, std::size_t i, std::size_t j) {
  auto a = train.col(i), b = train.col(j);
  if (a.empty() || b.empty()) return 0.0;
  std::size_t common = 0;
  for (auto x = a.begin(), y = b.begin(); x != a.end() && y != b.end();) {
    if (*x < *y) ++x;
    else if (*y < *x) ++y;
    else { ++common; ++x; ++y; }
  }
  return static_cast<double>(common) /
         std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

/// Item-based neighbourhood model. Each item keeps its k most similar items
/// (positive similarity, ties by ascending index, no self). A user's score
/// for i sums sim(i, j) over train items j that list i as a neighbour.
class ItemKnn final : public Recommender {
 public:
  ItemKnn(const InteractionMatrix& train, std::size_t k_neighbors = 50)
      : train_(train), k_(k_neighbors), neighbors_(train.num_items()) {
    if (train.nnz() == 0) throw Error(ErrorCode::Degenerate, "ItemKNN: empty training matrix");
    const std::size_t n = train.num_items();
    std::vector<std::size_t> common(n, 0);
    std::vector<std::size_t> touched;
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < n; ++i) {
      touched.clear();
      for (std::size_t u : train.col(i))
        for (std::size_t j : train.row(u))
          if (j != i && common[j]++ == 0) touched.push_back(j);
      cand.clear();
      const double di = static_cast<double>(train.col(i).size());
      for (std::size_t j : touched) {
        cand.emplace_back(static_cast<double>(common[j]) /
                              std::sqrt(di * static_cast<double>(train.col(j).size())),
                          j);
        common[j] = 0;
      }
      const std::size_t keep = std::min(k_, cand.size());
      std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(), [](auto& a, auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      for (std::size_t r = 0; r < keep; ++r) neighbors_[i].emplace_back(cand[r].second, cand[r].first);
    }
  }

  std::string name() const override { return "ItemKNN"; }
  std::size_t num_users() const override { return train_.num_users(); }
  std::size_t num_items() const override { return train_.num_items(); }
  std::size_t k() const noexcept { return k_; }

  const std::vector<std::pair<std::size_t, double>>& neighbors(std::size_t item) const {
    return neighbors_.at(item);
  }

  /// Dense (items x items) matrix S with S(j, i) = kept sim of neighbour i of j.
  std::vector<NamedBlock> export_blocks() const override {
    Matrix s(num_items(), num_items());
    for (std::size_t j = 0; j < neighbors_.size(); ++j)
      for (auto [i, w] : neighbors_[j]) s(j, i) = w;
    return {{"item_sim", std::move(s)}};
  }

 protected:
  void fill_scores(std::size_t user, std::span<double> out) const override {
    for (std::size_t j : train_.row(user))
      for (auto [i, w] : neighbors_[j]) out[i] += w;
  }

 private:
  InteractionMatrix train_;
  std::size_t k_;
  std::vector<std::vector<std::pair<std::size_t, double>>> neighbors_;
};

/// Reloaded ItemKNN: scores are train-row sums of a saved similarity matrix.
class SimilarityScorer final : public Recommender {
 public:
  SimilarityScorer(InteractionMatrix train, Matrix sim) : train_(std::move(train)), sim_(std::move(sim)) {
    if (sim_.rows() != train_.num_items() || sim_.cols() != train_.num_items())
      throw Error(ErrorCode::DimMismatch, "similarity matrix must be items x items");
  }
  std::string name() const override { return "ItemKNN"; }
  std::size_t num_users() const override { return train_.num_users(); }
  std::size_t num_items() const override { return train_.num_items(); }
  std::vector<NamedBlock> export_blocks() const override { return {{"item_sim", sim_}}; }

 protected:
  void fill_scores(std::size_t user, std::span<double> out) const override {
    for (std::size_t j : train_.row(user)) axpy<double>(1.0, sim_.row(j), out);
  }

 private:
  InteractionMatrix train_;
  Matrix sim_;
};

}  // namespace mmrec
