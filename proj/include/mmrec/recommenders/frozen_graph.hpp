#pragma once

// FrozenGraphRec: a simplified stand-in for frozen item-item multimodal
// graph models. It is not a replication of LATTICE or FREEDOM; the item
// graph is built once from fused content features and never updated.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mmrec/recommenders/bprmf.hpp"

namespace mmrec {

/// Row-normalized top-k cosine neighbour lists. Rows hold only neighbours
/// with similarity > 0 and never the item itself.
struct ItemGraph {
  std::size_t k = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> neighbors;

  std::size_t num_items() const noexcept { return neighbors.size(); }

  /// out = G * in
  void multiply(const Matrix& in, Matrix& out) const {
    out.fill(0.0);
    for (std::size_t i = 0; i < neighbors.size(); ++i)
      for (auto [j, w] : neighbors[i]) axpy<double>(w, in.row(j), out.row(i));
  }

  /// out = G^T * in
  void multiply_transposed(const Matrix& in, Matrix& out) const {
    out.fill(0.0);
    for (std::size_t i = 0; i < neighbors.size(); ++i)
      for (auto [j, w] : neighbors[i]) axpy<double>(w, in.row(i), out.row(j));
  }
};

/// Ties on similarity are broken by ascending item index.
inline ItemGraph build_item_graph(const FeatureMatrix& features, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::Config, "item graph k must be >= 1");
  const std::size_t n = features.rows();
  const Matrix x = features.to_f64();
  std::vector<double> norm(n);
  for (std::size_t i = 0; i < n; ++i) norm[i] = std::sqrt(dot<double>(x.row(i), x.row(i)));

  ItemGraph g;
  g.k = k;
  g.neighbors.resize(n);
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    if (norm[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || norm[j] == 0.0) continue;
      const double sim = dot<double>(x.row(i), x.row(j)) / (norm[i] * norm[j]);
      if (sim > 0.0) cand.emplace_back(sim, j);
    }
    const std::size_t keep = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(), [](auto& a, auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    double total = 0.0;
    for (std::size_t r = 0; r < keep; ++r) total += cand[r].first;
    for (std::size_t r = 0; r < keep; ++r)
      g.neighbors[i].emplace_back(cand[r].second, cand[r].first / total);
  }
  return g;
}

/// h_i = q_i + sum_{g=1..G} (Ghat^g q)_i,  x_ui = b_i + p_u . h_i
class FrozenGraphRec : public BprMf {
 public:
  FrozenGraphRec(std::size_t num_users, std::size_t num_items, ItemGraph graph,
                 const BprHyperParams& hp, std::size_t graph_layers = 1)
      : BprMf(num_users, num_items, hp, true), graph_(std::move(graph)),
        graph_layers_(graph_layers) {
    if (graph_.num_items() != num_items)
      throw Error(ErrorCode::DimMismatch, "item graph covers " + std::to_string(graph_.num_items()) +
                                              " items, model has " + std::to_string(num_items));
    staged_ = Matrix(num_items, hp.latent_dim);
    refresh();
  }

  std::string name() const override { return "FrozenGraphRec"; }
  const ItemGraph& graph() const noexcept { return graph_; }

  /// q + sum_{g=1..G} Ghat^g q
  Matrix smooth(const Matrix& q) const {
    Matrix acc = q, cur = q, next(q.rows(), q.cols());
    for (std::size_t l = 0; l < graph_layers_; ++l) {
      graph_.multiply(cur, next);
      std::swap(cur, next);
      axpy<double>(1.0, cur.flat(), acc.flat());
    }
    return acc;
  }

  void refresh() override {
    item_rep_ = smooth(blocks_[1].value);
    staged_.fill(0.0);
  }

  const Matrix& item_representations() const noexcept { return item_rep_; }

  double score(std::size_t u, std::size_t i) const override {
    return blocks_[2].value(i, 0) + dot<double>(blocks_[0].value.row(u), item_rep_.row(i));
  }

  void accumulate_score_grad(std::size_t u, std::size_t i, double coef, Gradients& g) override {
    axpy<double>(coef, item_rep_.row(i), g[0].row(u));
    axpy<double>(coef, blocks_[0].value.row(u), staged_.row(i));
    g[2](i, 0) += coef;
  }

  /// dq = dh + sum_g (Ghat^T)^g dh
  void finish_backward(Gradients& g) override {
    Matrix acc = staged_, cur = staged_, next(staged_.rows(), staged_.cols());
    for (std::size_t l = 0; l < graph_layers_; ++l) {
      graph_.multiply_transposed(cur, next);
      std::swap(cur, next);
      axpy<double>(1.0, cur.flat(), acc.flat());
    }
    axpy<double>(1.0, acc.flat(), g[1].flat());
    staged_.fill(0.0);
  }

  FactorScorer to_scorer() const override {
    std::vector<double> bias(blocks_[2].value.flat().begin(), blocks_[2].value.flat().end());
    return FactorScorer(name(), blocks_[0].value, item_rep_, std::move(bias));
  }

 private:
  ItemGraph graph_;
  std::size_t graph_layers_;
  Matrix item_rep_;
  Matrix staged_;
};

}  // namespace mmrec
