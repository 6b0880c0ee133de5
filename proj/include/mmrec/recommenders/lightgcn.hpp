#pragma once

#include <cmath>
#include <vector>

#include "mmrec/recommenders/bpr.hpp"

namespace mmrec {

/// Symmetric-normalized user-item bipartite adjacency
///   A_hat = D^-1/2 A D^-1/2
/// over num_users + num_items nodes (items offset by num_users).
/// Degree-0 nodes have empty rows.
class BipartiteGraph {
 public:
  explicit BipartiteGraph(const InteractionMatrix& train)
      : num_users_(train.num_users()), num_items_(train.num_items()) {
    const std::size_t n = num_users_ + num_items_;
    ptr_.assign(n + 1, 0);
    auto degree = [&](std::size_t node) {
      return node < num_users_ ? train.row(node).size() : train.col(node - num_users_).size();
    };
    for (std::size_t node = 0; node < n; ++node) ptr_[node + 1] = ptr_[node] + degree(node);
    nbr_.resize(ptr_[n]);
    weight_.resize(ptr_[n]);
    for (std::size_t node = 0; node < n; ++node) {
      std::size_t k = ptr_[node];
      const double du = static_cast<double>(degree(node));
      auto emit = [&](std::size_t other) {
        nbr_[k] = other;
        weight_[k] = 1.0 / std::sqrt(du * static_cast<double>(degree(other)));
        ++k;
      };
      if (node < num_users_)
        for (std::size_t i : train.row(node)) emit(num_users_ + i);
      else
        for (std::size_t u : train.col(node - num_users_)) emit(u);
    }
  }

  std::size_t num_nodes() const noexcept { return num_users_ + num_items_; }
  std::size_t num_users() const noexcept { return num_users_; }

  /// out = A_hat * in (A_hat is symmetric, so this is also the transpose).
  void multiply(const Matrix& in, Matrix& out) const {
    out.fill(0.0);
    for (std::size_t node = 0; node < num_nodes(); ++node)
      for (std::size_t k = ptr_[node]; k < ptr_[node + 1]; ++k)
        axpy<double>(weight_[k], in.row(nbr_[k]), out.row(node));
  }

 private:
  std::size_t num_users_, num_items_;
  std::vector<std::size_t> ptr_, nbr_;
  std::vector<double> weight_;
};

/// Layer-0 embeddings E0 propagated L times through A_hat; the final
/// representation is the mean of layers 0..L and x_ui = <e_u, e_i>.
class LightGcn : public BprModel {
 public:
  LightGcn(const InteractionMatrix& train, const BprHyperParams& hp, std::size_t layers = 3)
      : BprModel(train.num_users(), train.num_items()), graph_(train), layers_(layers) {
    Matrix e0(num_users_ + num_items_, hp.latent_dim);
    init_normal_rows(e0, 0, num_users_, hp.seed, "user_emb", hp.init_std);
    init_normal_rows(e0, num_users_, num_items_, hp.seed, "item_emb", hp.init_std);
    blocks_.push_back({"embedding", std::move(e0)});
    final_ = Matrix(graph_.num_nodes(), hp.latent_dim);
    staged_ = Matrix(graph_.num_nodes(), hp.latent_dim);
    refresh();
  }

  std::string name() const override { return "LightGCN"; }
  std::size_t layers() const noexcept { return layers_; }
  const BipartiteGraph& graph() const noexcept { return graph_; }

  /// Layers 0..L of the propagation starting from e0.
  std::vector<Matrix> propagate(const Matrix& e0) const {
    std::vector<Matrix> out{e0};
    for (std::size_t l = 0; l < layers_; ++l) {
      Matrix next(e0.rows(), e0.cols());
      graph_.multiply(out.back(), next);
      out.push_back(std::move(next));
    }
    return out;
  }

  void refresh() override {
    final_ = mean_of_layers(blocks_[0].value);
    staged_.fill(0.0);
  }

  const Matrix& final_embeddings() const noexcept { return final_; }

  double score(std::size_t u, std::size_t i) const override {
    return dot<double>(final_.row(u), final_.row(num_users_ + i));
  }

  void accumulate_score_grad(std::size_t u, std::size_t i, double coef, Gradients&) override {
    axpy<double>(coef, final_.row(num_users_ + i), staged_.row(u));
    axpy<double>(coef, final_.row(u), staged_.row(num_users_ + i));
  }

  /// d/dE0 = sum_l (A_hat^T)^l G / (L + 1) with G the staged final-layer grads.
  void finish_backward(Gradients& g) override {
    Matrix acc = mean_of_layers(staged_);
    axpy<double>(1.0, acc.flat(), g[0].flat());
    staged_.fill(0.0);
  }

  double regularize(std::span<const Triple> batch, double reg, Gradients* g) const override {
    const Matrix& e = blocks_[0].value;
    double acc = 0.0;
    for (const Triple& t : batch) {
      for (std::size_t node : {t.user, num_users_ + t.pos, num_users_ + t.neg}) {
        acc += dot<double>(e.row(node), e.row(node));
        if (g) axpy<double>(2.0 * reg, e.row(node), (*g)[0].row(node));
      }
    }
    return reg * acc;
  }

  FactorScorer to_scorer() const override {
    Matrix users(num_users_, final_.cols()), items(num_items_, final_.cols());
    std::copy_n(final_.flat().begin(), users.size(), users.flat().begin());
    std::copy_n(final_.flat().begin() + users.size(), items.size(), items.flat().begin());
    return FactorScorer(name(), std::move(users), std::move(items), {});
  }

 private:
  Matrix mean_of_layers(const Matrix& x) const {
    Matrix acc = x, cur = x, next(x.rows(), x.cols());
    for (std::size_t l = 0; l < layers_; ++l) {
      graph_.multiply(cur, next);
      std::swap(cur, next);
      axpy<double>(1.0, cur.flat(), acc.flat());
    }
    const double scale = 1.0 / static_cast<double>(layers_ + 1);
    for (auto& v : acc.flat()) v *= scale;
    return acc;
  }

  BipartiteGraph graph_;
  std::size_t layers_;
  Matrix final_;
  Matrix staged_;
};

}  // namespace mmrec
