#pragma once

#include <vector>

#include "mmrec/recommenders/bprmf.hpp"

namespace mmrec {

/// Multimodal VBPR:
///   x_ui = b_i + p_u . q_i + sum_m p_u^(m) . (E_m f_i^(m))
/// Item features f^(m) are frozen; E_m (d x d_m) and p^(m) are trained.
/// Each modality contributes its own term, so several feature blocks give
/// late fusion of modality-aware predictions and a single pre-fused block
/// gives the early/joint variant.
class Vbpr : public BprMf {
 public:
  Vbpr(std::size_t num_users, std::span<const FeatureMatrix> features, const BprHyperParams& hp)
      : BprMf(num_users, features.empty() ? 0 : features.front().rows(), hp, true) {
    if (features.empty()) throw Error(ErrorCode::EmptyModalities, "VBPR needs feature blocks");
    for (const auto& f : features) {
      if (f.rows() != num_items_)
        throw Error(ErrorCode::DimMismatch, "feature block '" + std::string(to_string(f.modality)) +
                                                "' has " + std::to_string(f.rows()) + " rows, expected " +
                                                std::to_string(num_items_));
      const std::string tag(to_string(f.modality));
      const std::string suffix = tag + "_" + std::to_string(modalities_.size());
      Matrix proj(hp.latent_dim, f.dim);
      Matrix user_mm(num_users, hp.latent_dim);
      init_normal(proj, hp.seed, "proj_" + suffix, hp.init_std);
      init_normal(user_mm, hp.seed, "user_mm_" + suffix, hp.init_std);
      blocks_.push_back({"proj_" + suffix, std::move(proj), f.modality});
      blocks_.push_back({"user_mm_" + suffix, std::move(user_mm), f.modality});
      features_.push_back(f.to_f64());
      modalities_.push_back(f.modality);
    }
    cache_.assign(features_.size(), Matrix(num_items_, hp.latent_dim));
    cache_valid_.assign(features_.size() * num_items_, 0);
  }

  std::string name() const override { return "VBPR"; }

  std::size_t num_modalities() const noexcept { return features_.size(); }
  Matrix& projection(std::size_t m) { return blocks_[first_mm() + 2 * m].value; }
  Matrix& user_mm(std::size_t m) { return blocks_[first_mm() + 2 * m + 1].value; }
  const Matrix& projection(std::size_t m) const { return blocks_[first_mm() + 2 * m].value; }
  const Matrix& user_mm(std::size_t m) const { return blocks_[first_mm() + 2 * m + 1].value; }

  void set_projection(std::size_t m, Matrix p) {
    if (p.rows() != projection(m).rows() || p.cols() != features_.at(m).cols())
      throw Error(ErrorCode::DimMismatch, "projection shape must be d x d_m");
    projection(m) = std::move(p);
    refresh();
  }

  void refresh() override { std::fill(cache_valid_.begin(), cache_valid_.end(), 0); }

  double mf_part(std::size_t u, std::size_t i) const { return BprMf::score(u, i); }

  double multimodal_part(std::size_t u, std::size_t i) const {
    double acc = 0.0;
    for (std::size_t m = 0; m < features_.size(); ++m)
      acc += dot<double>(user_mm(m).row(u), projected(m, i));
    return acc;
  }

  double score(std::size_t u, std::size_t i) const override {
    return mf_part(u, i) + multimodal_part(u, i);
  }

  void accumulate_score_grad(std::size_t u, std::size_t i, double coef, Gradients& g) override {
    BprMf::accumulate_score_grad(u, i, coef, g);
    for (std::size_t m = 0; m < features_.size(); ++m) {
      const std::size_t pb = first_mm() + 2 * m;
      axpy<double>(coef, projected(m, i), g[pb + 1].row(u));
      auto pu = user_mm(m).row(u);
      auto f = features_[m].row(i);
      for (std::size_t r = 0; r < pu.size(); ++r) axpy<double>(coef * pu[r], f, g[pb].row(r));
    }
  }

  /// Factor terms per triple, reg * |p_u^(m)|^2 per triple, and
  /// reg * |E_m|_F^2 once per batch.
  double regularize(std::span<const Triple> batch, double reg, Gradients* g) const override {
    double acc = BprMf::regularize(batch, reg, g);
    for (std::size_t m = 0; m < features_.size(); ++m) {
      const std::size_t pb = first_mm() + 2 * m;
      const Matrix& pm = user_mm(m);
      for (const Triple& t : batch) {
        acc += reg * dot<double>(pm.row(t.user), pm.row(t.user));
        if (g) axpy<double>(2.0 * reg, pm.row(t.user), (*g)[pb + 1].row(t.user));
      }
      acc += reg * projection(m).squared_norm();
      if (g) axpy<double>(2.0 * reg, projection(m).flat(), (*g)[pb].flat());
    }
    return acc;
  }

  /// Concatenates [p_u | p_u^(m)...] against [q_i | E_m f_i ...].
  FactorScorer to_scorer() const override {
    const std::size_t d = blocks_[0].value.cols();
    const std::size_t width = d * (1 + features_.size());
    Matrix users(num_users_, width), items(num_items_, width);
    std::vector<double> proj(d);
    for (std::size_t u = 0; u < num_users_; ++u) {
      auto dst = users.row(u);
      std::copy_n(blocks_[0].value.row(u).begin(), d, dst.begin());
      for (std::size_t m = 0; m < features_.size(); ++m)
        std::copy_n(user_mm(m).row(u).begin(), d, dst.begin() + d * (m + 1));
    }
    for (std::size_t i = 0; i < num_items_; ++i) {
      auto dst = items.row(i);
      std::copy_n(blocks_[1].value.row(i).begin(), d, dst.begin());
      for (std::size_t m = 0; m < features_.size(); ++m) {
        matvec<double>(projection(m), features_[m].row(i), proj);
        std::copy_n(proj.begin(), d, dst.begin() + d * (m + 1));
      }
    }
    std::vector<double> bias(blocks_[2].value.flat().begin(), blocks_[2].value.flat().end());
    return FactorScorer(name(), std::move(users), std::move(items), std::move(bias));
  }

 protected:
  void fill_scores(std::size_t user, std::span<double> out) const override {
    std::vector<double> proj(blocks_[0].value.cols());
    for (std::size_t i = 0; i < num_items_; ++i) {
      double mm = 0.0;
      for (std::size_t m = 0; m < features_.size(); ++m) {
        matvec<double>(projection(m), features_[m].row(i), proj);
        mm += dot<double>(user_mm(m).row(user), std::span<const double>(proj));
      }
      out[i] = mf_part(user, i) + mm;
    }
  }

 private:
  static constexpr std::size_t first_mm() { return 3; }

  std::span<const double> projected(std::size_t m, std::size_t i) const {
    char& valid = cache_valid_[m * num_items_ + i];
    if (!valid) {
      matvec<double>(projection(m), features_[m].row(i), cache_[m].row(i));
      valid = 1;
    }
    return cache_[m].row(i);
  }

  std::vector<Matrix> features_;
  std::vector<Modality> modalities_;
  mutable std::vector<Matrix> cache_;
  mutable std::vector<char> cache_valid_;
};

}  // namespace mmrec
