#pragma once

#include "mmrec/recommenders/bpr.hpp"

namespace mmrec {

/// x_ui = b_i + p_u . q_i
class BprMf : public BprModel {
 public:
  BprMf(std::size_t num_users, std::size_t num_items, const BprHyperParams& hp,
        bool item_bias = true)
      : BprModel(num_users, num_items), has_bias_(item_bias) {
    blocks_.push_back({"user_emb", Matrix(num_users, hp.latent_dim)});
    blocks_.push_back({"item_emb", Matrix(num_items, hp.latent_dim)});
    if (has_bias_) blocks_.push_back({"item_bias", Matrix(num_items, 1)});
    init_normal(blocks_[0].value, hp.seed, "user_emb", hp.init_std);
    init_normal(blocks_[1].value, hp.seed, "item_emb", hp.init_std);
  }

  std::string name() const override { return "BPRMF"; }

  double score(std::size_t u, std::size_t i) const override {
    const double b = has_bias_ ? blocks_[2].value(i, 0) : 0.0;
    return b + dot<double>(blocks_[0].value.row(u), blocks_[1].value.row(i));
  }

  void accumulate_score_grad(std::size_t u, std::size_t i, double coef, Gradients& g) override {
    axpy<double>(coef, blocks_[1].value.row(i), g[0].row(u));
    axpy<double>(coef, blocks_[0].value.row(u), g[1].row(i));
    if (has_bias_) g[2](i, 0) += coef;
  }

  double regularize(std::span<const Triple> batch, double reg, Gradients* g) const override {
    return regularize_factors(batch, reg, g, 0, 1, has_bias_ ? 2 : npos);
  }

  FactorScorer to_scorer() const override {
    std::vector<double> bias;
    if (has_bias_) bias.assign(blocks_[2].value.flat().begin(), blocks_[2].value.flat().end());
    return FactorScorer(name(), blocks_[0].value, blocks_[1].value, std::move(bias));
  }

 protected:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// reg * (|p_u|^2 + |q_i|^2 + |q_j|^2 + b_i^2 + b_j^2) per triple.
  double regularize_factors(std::span<const Triple> batch, double reg, Gradients* g,
                            std::size_t user_blk, std::size_t item_blk,
                            std::size_t bias_blk) const {
    const Matrix& p = blocks_[user_blk].value;
    const Matrix& q = blocks_[item_blk].value;
    double acc = 0.0;
    for (const Triple& t : batch) {
      acc += dot<double>(p.row(t.user), p.row(t.user)) +
             dot<double>(q.row(t.pos), q.row(t.pos)) + dot<double>(q.row(t.neg), q.row(t.neg));
      if (g) {
        axpy<double>(2.0 * reg, p.row(t.user), (*g)[user_blk].row(t.user));
        axpy<double>(2.0 * reg, q.row(t.pos), (*g)[item_blk].row(t.pos));
        axpy<double>(2.0 * reg, q.row(t.neg), (*g)[item_blk].row(t.neg));
      }
      if (bias_blk != npos) {
        const Matrix& b = blocks_[bias_blk].value;
        acc += b(t.pos, 0) * b(t.pos, 0) + b(t.neg, 0) * b(t.neg, 0);
        if (g) {
          (*g)[bias_blk](t.pos, 0) += 2.0 * reg * b(t.pos, 0);
          (*g)[bias_blk](t.neg, 0) += 2.0 * reg * b(t.neg, 0);
        }
      }
    }
    return reg * acc;
  }

  bool has_bias_;
};

}  // namespace mmrec
