#pragma once

// Top-K evaluation with train-item masking.
//
//   recall = hits / |relevant|
//   hr     = 1 if hits >= 1
//   ndcg   = DCG / IDCG, binary gains, DCG = sum over hit ranks r (1-based)
//            of 1 / log2(r + 1), IDCG over min(K, |relevant|) ideal ranks.
//
// Users without target interactions are left out of the average.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmrec/core.hpp"
#include "mmrec/parallel.hpp"
#include "mmrec/recommenders/model.hpp"

namespace mmrec {

struct UserMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
  double hr = 0.0;
};

struct MetricReport {
  std::string model_name;
  std::string extractor_tag;
  std::size_t k = 20;
  double recall = 0.0;
  double ndcg = 0.0;
  double hr = 0.0;
  std::size_t num_evaluated_users = 0;
  std::size_t num_skipped_users = 0;
  std::uint64_t seed = 0;
};

enum class Target { Validation, Test };

/// Descending score, ties by ascending item index.
inline std::vector<std::size_t> rank_topk(std::span<const double> scores,
                                          std::span<const std::size_t> exclude, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidValue, "K must be >= 1");
  std::vector<char> masked(scores.size(), 0);
  for (std::size_t i : exclude)
    if (i < masked.size()) masked[i] = 1;
  std::vector<std::size_t> cand;
  cand.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (!masked[i]) cand.push_back(i);
  if (cand.size() < k)
    throw Error(ErrorCode::InsufficientItems,
                std::to_string(cand.size()) + " candidates for K=" + std::to_string(k));
  std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  });
  cand.resize(k);
  return cand;
}

inline UserMetrics metrics_at_k(std::span<const std::size_t> topk,
                                std::span<const std::size_t> relevant, std::size_t k) {
  UserMetrics m;
  if (relevant.empty()) return m;
  std::vector<std::size_t> rel(relevant.begin(), relevant.end());
  std::sort(rel.begin(), rel.end());
  std::size_t hits = 0;
  double dcg = 0.0;
  const std::size_t depth = std::min(k, topk.size());
  for (std::size_t r = 0; r < depth; ++r) {
    if (std::binary_search(rel.begin(), rel.end(), topk[r])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, rel.size()); ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  m.recall = static_cast<double>(hits) / static_cast<double>(rel.size());
  m.hr = hits > 0 ? 1.0 : 0.0;
  m.ndcg = dcg / idcg;
  return m;
}

/// Dense view of a split: train matrix plus per-user target item lists.
struct IndexedSplit {
  InteractionMatrix train;
  std::vector<std::vector<std::size_t>> validation;
  std::vector<std::vector<std::size_t>> test;

  const std::vector<std::vector<std::size_t>>& target(Target t) const {
    return t == Target::Validation ? validation : test;
  }
};

inline IndexedSplit index_split(const SplitBundle& bundle) {
  IndexedSplit out;
  out.train = build_interaction_matrix(bundle.train, bundle.index);
  auto lists = [&](const InteractionSet& set) {
    std::vector<std::vector<std::size_t>> per_user(bundle.index.num_users());
    for (auto [u, i] : to_dense_pairs(set, bundle.index)) per_user[u].push_back(i);
    for (auto& l : per_user) std::sort(l.begin(), l.end());
    return per_user;
  };
  out.validation = lists(bundle.validation);
  out.test = lists(bundle.test);
  return out;
}

/// Per-user work may run on `workers` threads; the average is reduced in
/// user order so the result does not depend on the worker count.
inline MetricReport evaluate(const Recommender& model, const IndexedSplit& split, Target target,
                             std::size_t k = 20, std::size_t workers = 1) {
  const auto& lists = split.target(target);
  const std::size_t n = std::min(lists.size(), model.num_users());
  std::vector<UserMetrics> per_user(n);
  std::vector<char> status(n, 0);  // 0 = no target, 1 = evaluated, 2 = skipped

  parallel_for(n, workers, [&](std::size_t u) {
    if (lists[u].empty()) return;
    const auto scores = model.score_all(u);
    try {
      const auto top = rank_topk(scores, split.train.row(u), k);
      per_user[u] = metrics_at_k(top, lists[u], k);
      status[u] = 1;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientItems) throw;
      status[u] = 2;
    }
  });

  MetricReport rep;
  rep.model_name = model.name();
  rep.k = k;
  for (std::size_t u = 0; u < n; ++u) {
    if (status[u] == 2) ++rep.num_skipped_users;
    if (status[u] != 1) continue;
    rep.recall += per_user[u].recall;
    rep.ndcg += per_user[u].ndcg;
    rep.hr += per_user[u].hr;
    ++rep.num_evaluated_users;
  }
  if (rep.num_evaluated_users > 0) {
    const double denom = static_cast<double>(rep.num_evaluated_users);
    rep.recall /= denom;
    rep.ndcg /= denom;
    rep.hr /= denom;
  }
  return rep;
}

inline MetricReport evaluate(const Recommender& model, const SplitBundle& bundle, Target target,
                             std::size_t k = 20) {
  return evaluate(model, index_split(bundle), target, k);
}

}  // namespace mmrec
