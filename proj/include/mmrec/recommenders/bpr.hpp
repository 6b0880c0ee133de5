#pragma once

// Shared Bayesian personalized ranking harness: triple sampling, the batch
// objective, its gradient and the SGD loop. Models plug in through BprModel.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmrec/core.hpp"
#include "mmrec/matrix.hpp"
#include "mmrec/recommenders/model.hpp"
#include "mmrec/rng.hpp"

namespace mmrec {

struct BprHyperParams {
  std::size_t latent_dim = 64;
  double learning_rate = 0.001;
  double reg = 1e-5;
  std::size_t epochs = 200;
  std::size_t batch_size = 1024;
  std::uint64_t seed = 42;
  double init_std = 0.01;

  void validate() const {
    if (latent_dim == 0 || epochs == 0 || batch_size == 0)
      throw Error(ErrorCode::Config, "latent_dim, epochs and batch_size must be positive");
    if (!(learning_rate >= 0.0) || !(reg >= 0.0) || !(init_std >= 0.0))
      throw Error(ErrorCode::Config, "learning_rate, reg and init_std must be non-negative");
  }
};

struct Triple {
  std::size_t user;
  std::size_t pos;
  std::size_t neg;
};

/// Uniform (u, i in train(u), j not in train(u)) triples. Each step has its
/// own stream derived from (seed, epoch, step), so an epoch's triples do not
/// depend on the model being trained.
class TripletSampler {
 public:
  TripletSampler(const InteractionMatrix& train, std::uint64_t seed)
      : train_(&train), seed_(derive_seed(seed, "bpr-sampler")) {
    for (std::size_t u = 0; u < train.num_users(); ++u) {
      const std::size_t deg = train.row(u).size();
      if (deg == 0) continue;
      if (deg >= train.num_items())
        throw Error(ErrorCode::Degenerate,
                    "user " + std::to_string(u) + " has every item in train; no negative to sample");
      users_.push_back(u);
    }
    if (users_.empty()) throw Error(ErrorCode::Degenerate, "empty training matrix");
  }

  std::size_t triples_per_epoch() const { return train_->nnz(); }

  Triple draw(std::uint64_t epoch, std::uint64_t step) const {
    SplitMix64 rng(derive_seed(derive_seed(seed_, epoch), step));
    const std::size_t u = users_[rng.uniform_index(users_.size())];
    auto items = train_->row(u);
    const std::size_t i = items[rng.uniform_index(items.size())];
    std::size_t j = rng.uniform_index(train_->num_items());
    while (train_->contains(u, j)) j = rng.uniform_index(train_->num_items());
    return {u, i, j};
  }

  std::vector<Triple> epoch(std::uint64_t epoch) const {
    std::vector<Triple> out(triples_per_epoch());
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = draw(epoch, s);
    return out;
  }

 private:
  const InteractionMatrix* train_;
  std::uint64_t seed_;
  std::vector<std::size_t> users_;
};

using Gradients = std::vector<Matrix>;

/// A latent-factor model trained with the BPR objective
///   sum_batch -ln sigmoid(x_ui - x_uj) + reg * R(batch).
/// refresh() recomputes any representation derived from the parameters and
/// must be called after the parameters change.
class BprModel : public Recommender {
 public:
  std::vector<NamedBlock>& blocks() noexcept { return blocks_; }
  const std::vector<NamedBlock>& blocks() const noexcept { return blocks_; }

  Matrix& block(std::string_view name) {
    for (auto& b : blocks_)
      if (b.name == name) return b.value;
    throw Error(ErrorCode::InvalidValue, "no parameter block '" + std::string(name) + "'");
  }
  const Matrix& block(std::string_view name) const {
    return const_cast<BprModel*>(this)->block(name);
  }

  Gradients zero_gradients() const {
    Gradients g;
    g.reserve(blocks_.size());
    for (const auto& b : blocks_) g.emplace_back(b.value.rows(), b.value.cols());
    return g;
  }

  virtual void refresh() {}

  /// Prediction x_ui under the current (refreshed) parameters.
  virtual double score(std::size_t u, std::size_t i) const = 0;

  /// g += coef * d score(u, i) / d params. May stage into internal buffers
  /// that finish_backward() flushes.
  virtual void accumulate_score_grad(std::size_t u, std::size_t i, double coef,
                                     Gradients& g) = 0;
  virtual void finish_backward(Gradients&) {}

  /// Returns reg * R(batch); adds its gradient when g is non-null.
  virtual double regularize(std::span<const Triple> batch, double reg, Gradients* g) const = 0;

  std::size_t num_users() const override { return num_users_; }
  std::size_t num_items() const override { return num_items_; }

  std::vector<NamedBlock> export_blocks() const override {
    std::vector<NamedBlock> out = blocks_;
    auto scorer = to_scorer().export_blocks();
    out.insert(out.end(), scorer.begin(), scorer.end());
    return out;
  }

  /// Standalone scorer with the same predictions.
  virtual FactorScorer to_scorer() const = 0;

 protected:
  BprModel(std::size_t num_users, std::size_t num_items)
      : num_users_(num_users), num_items_(num_items) {}

  /// N(0, std^2) entries from a stream named after the block.
  static void init_normal(Matrix& m, std::uint64_t seed, std::string_view stream, double std) {
    SplitMix64 rng(derive_seed(derive_seed(seed, "init"), stream));
    for (auto& v : m.flat()) v = std * rng.normal();
  }

  /// Same draws as init_normal(rows-only matrix) written into a row range.
  static void init_normal_rows(Matrix& m, std::size_t first_row, std::size_t rows,
                               std::uint64_t seed, std::string_view stream, double std) {
    SplitMix64 rng(derive_seed(derive_seed(seed, "init"), stream));
    for (std::size_t r = first_row; r < first_row + rows; ++r)
      for (auto& v : m.row(r)) v = std * rng.normal();
  }

  void fill_scores(std::size_t user, std::span<double> out) const override {
    for (std::size_t i = 0; i < num_items_; ++i) out[i] = score(user, i);
  }

  std::vector<NamedBlock> blocks_;
  std::size_t num_users_;
  std::size_t num_items_;
};

/// -ln sigmoid(x), overflow-safe.
inline double neg_log_sigmoid(double x) {
  return x >= 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Batch objective at the current parameters; accumulates the gradient when
/// g is non-null (g must be zeroed and shaped like the blocks).
inline double bpr_batch_loss(BprModel& model, std::span<const Triple> batch, double reg,
                             Gradients* g) {
  double loss = 0.0;
  for (const Triple& t : batch) {
    const double x = model.score(t.user, t.pos) - model.score(t.user, t.neg);
    loss += neg_log_sigmoid(x);
    if (g) {
      const double coef = -sigmoid(-x);  // d(-ln sigmoid(x)) / dx
      model.accumulate_score_grad(t.user, t.pos, coef, *g);
      model.accumulate_score_grad(t.user, t.neg, -coef, *g);
    }
  }
  if (g) model.finish_backward(*g);
  loss += model.regularize(batch, reg, g);
  return loss;
}

struct TrainingLog {
  std::vector<double> epoch_loss;  // mean per-triple objective over the epoch
};

/// Mini-batch SGD: each batch's summed gradient is applied once.
inline TrainingLog train_bpr(BprModel& model, const InteractionMatrix& train,
                             const BprHyperParams& hp) {
  hp.validate();
  TripletSampler sampler(train, hp.seed);
  TrainingLog log;
  Gradients grads = model.zero_gradients();
  model.refresh();
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    const auto triples = sampler.epoch(epoch);
    double total = 0.0;
    for (std::size_t start = 0; start < triples.size(); start += hp.batch_size) {
      const std::size_t end = std::min(start + hp.batch_size, triples.size());
      for (auto& gm : grads) gm.fill(0.0);
      total += bpr_batch_loss(model, std::span(triples).subspan(start, end - start), hp.reg,
                              &grads);
      for (std::size_t b = 0; b < grads.size(); ++b)
        axpy<double>(-hp.learning_rate, grads[b].flat(), model.blocks()[b].value.flat());
      model.refresh();
    }
    for (const auto& b : model.blocks())
      if (!b.value.all_finite())
        throw Error(ErrorCode::Degenerate, model.name() + ": non-finite parameters in block '" +
                                               b.name + "' after epoch " + std::to_string(epoch));
    log.epoch_loss.push_back(triples.empty() ? 0.0 : total / static_cast<double>(triples.size()));
  }
  return log;
}

}  // namespace mmrec
