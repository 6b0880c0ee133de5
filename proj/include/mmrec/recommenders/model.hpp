#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mmrec/core.hpp"
#include "mmrec/matrix.hpp"

namespace mmrec {

struct NamedBlock {
  std::string name;
  Matrix value;
  Modality modality = Modality::Visual;  // only meaningful for projections
};

/// Anything that can score the full catalog for a user.
class Recommender {
 public:
  virtual ~Recommender() = default;

  virtual std::string name() const = 0;
  virtual std::size_t num_users() const = 0;
  virtual std::size_t num_items() const = 0;

  std::vector<double> score_all(std::size_t user) const {
    if (user >= num_users())
      throw Error(ErrorCode::UnknownUser, std::to_string(user));
    std::vector<double> scores(num_items(), 0.0);
    fill_scores(user, scores);
    for (double s : scores)
      if (std::isnan(s)) throw Error(ErrorCode::InvalidValue, name() + " produced NaN score");
    return scores;
  }

  /// Blocks written by save_model: trainable parameters followed by the
  /// blocks a standalone scorer needs.
  virtual std::vector<NamedBlock> export_blocks() const = 0;

 protected:
  virtual void fill_scores(std::size_t user, std::span<double> out) const = 0;
};

/// score(u, i) = bias_i + <user_rep_u, item_rep_i>; the common scoring form
/// of every latent-factor model here, also what saved models are reloaded as.
class FactorScorer final : public Recommender {
 public:
  FactorScorer(std::string name, Matrix users, Matrix items, std::vector<double> bias)
      : name_(std::move(name)), users_(std::move(users)), items_(std::move(items)),
        bias_(std::move(bias)) {
    if (users_.cols() != items_.cols())
      throw Error(ErrorCode::DimMismatch, "user/item representation widths differ");
    if (!bias_.empty() && bias_.size() != items_.rows())
      throw Error(ErrorCode::DimMismatch, "bias length != item count");
  }

  std::string name() const override { return name_; }
  std::size_t num_users() const override { return users_.rows(); }
  std::size_t num_items() const override { return items_.rows(); }

  std::vector<NamedBlock> export_blocks() const override {
    std::vector<NamedBlock> out{{"score_user", users_}, {"score_item", items_}};
    Matrix b(bias_.size(), 1);
    for (std::size_t i = 0; i < bias_.size(); ++i) b(i, 0) = bias_[i];
    out.push_back({"score_bias", std::move(b)});
    return out;
  }

 protected:
  void fill_scores(std::size_t user, std::span<double> out) const override {
    auto u = users_.row(user);
    for (std::size_t i = 0; i < items_.rows(); ++i)
      out[i] = (bias_.empty() ? 0.0 : bias_[i]) + dot<double>(u, items_.row(i));
  }

 private:
  std::string name_;
  Matrix users_, items_;
  std::vector<double> bias_;
};

}  // namespace mmrec
