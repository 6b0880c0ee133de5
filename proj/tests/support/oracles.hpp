#pragma once

// Independent reference implementations used by the unit and acceptance
// suites. They are deliberately naive (dense matrices, exhaustive loops) and
// share no code paths with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "mmrec/core.hpp"
#include "mmrec/recommenders/bpr.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense zeros(std::size_t r, std::size_t c) { return Dense(r, std::vector<double>(c, 0.0)); }

inline Dense matmul(const Dense& a, const Dense& b) {
  Dense out = zeros(a.size(), b.empty() ? 0 : b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < out[i].size(); ++j) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Dense from_matrix(const mmrec::Matrix& m) {
  Dense out = zeros(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

// ---------------------------------------------------------------------------
// Metrics straight from the definitions. The rank of item i is one plus the
// number of unmasked items that beat it (higher score, or equal score and a
// smaller index); items with rank <= K are in the list.

struct Metrics {
  double recall, ndcg, hr;
};

inline Metrics brute_force_metrics(const std::vector<double>& scores,
                                   const std::vector<bool>& masked,
                                   const std::vector<std::size_t>& relevant, std::size_t k) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> hit_ranks;
  for (std::size_t i : relevant) {
    if (masked[i]) continue;
    std::size_t rank = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || masked[j]) continue;
      if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++rank;
    }
    if (rank <= k) hit_ranks.push_back(rank);
  }
  // Gains are summed best rank first so the result is reproducible bit for bit.
  std::sort(hit_ranks.begin(), hit_ranks.end());
  double dcg = 0.0;
  for (std::size_t r : hit_ranks) dcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  double idcg = 0.0;
  for (std::size_t r = 1; r <= std::min(k, relevant.size()); ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  const double hits = static_cast<double>(hit_ranks.size());
  return {hits / static_cast<double>(relevant.size()), dcg / idcg, hits > 0 ? 1.0 : 0.0};
}

// ---------------------------------------------------------------------------
// Central finite differences of the batch objective, one parameter at a time.

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst_block;
};

/// |a - n| / max(|a|, |n|, floor); the floor keeps entries whose true
/// gradient is ~0 from dividing round-off by round-off.
inline double rel_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline GradCheck check_gradients(mmrec::BprModel& model, const std::vector<mmrec::Triple>& batch,
                                 double reg, double h = 1e-6) {
  model.refresh();
  mmrec::Gradients g = model.zero_gradients();
  mmrec::bpr_batch_loss(model, batch, reg, &g);

  GradCheck out;
  for (std::size_t b = 0; b < model.blocks().size(); ++b) {
    auto values = model.blocks()[b].value.flat();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double orig = values[k];
      values[k] = orig + h;
      model.refresh();
      const double up = mmrec::bpr_batch_loss(model, batch, reg, nullptr);
      values[k] = orig - h;
      model.refresh();
      const double down = mmrec::bpr_batch_loss(model, batch, reg, nullptr);
      values[k] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double err = rel_error(g[b].flat()[k], numeric);
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst_block = model.blocks()[b].name;
      }
      ++out.checked;
    }
  }
  model.refresh();
  return out;
}

inline void randomize_parameters(mmrec::BprModel& model, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& b : model.blocks())
    for (auto& v : b.value.flat()) v = dist(gen);
  model.refresh();
}

// ---------------------------------------------------------------------------
// Graph propagation

/// Dense D^-1/2 A D^-1/2 over users then items.
inline Dense normalized_adjacency(std::size_t users, std::size_t items,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  const std::size_t n = users + items;
  Dense a = zeros(n, n);
  for (auto [u, i] : pairs) a[u][users + i] = a[users + i][u] = 1.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (double v : a[r]) deg[r] += v;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      if (a[r][c] != 0.0) a[r][c] /= std::sqrt(deg[r]) * std::sqrt(deg[c]);
  return a;
}

/// Mean of A^0 E .. A^L E.
inline Dense lightgcn_final(const Dense& a_hat, const Dense& e0, std::size_t layers) {
  Dense acc = e0, cur = e0;
  for (std::size_t l = 0; l < layers; ++l) {
    cur = matmul(a_hat, cur);
    for (std::size_t r = 0; r < acc.size(); ++r)
      for (std::size_t c = 0; c < acc[r].size(); ++c) acc[r][c] += cur[r][c];
  }
  for (auto& row : acc)
    for (auto& v : row) v /= static_cast<double>(layers + 1);
  return acc;
}

/// Dense cosine matrix of the rows of x (0 where either norm is 0).
inline Dense cosine_matrix(const Dense& x) {
  const std::size_t n = x.size();
  Dense s = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double d = 0.0, ni = 0.0, nj = 0.0;
      for (std::size_t c = 0; c < x[i].size(); ++c) {
        d += x[i][c] * x[j][c];
        ni += x[i][c] * x[i][c];
        nj += x[j][c] * x[j][c];
      }
      s[i][j] = (ni == 0.0 || nj == 0.0) ? 0.0 : d / std::sqrt(ni * nj);
    }
  return s;
}

// ---------------------------------------------------------------------------
// MMFE byte layout, counted field by field.

inline std::size_t mmfe_file_length(const std::vector<std::string>& ids, std::size_t dim) {
  const std::size_t header = 4 /*magic*/ + 2 /*version*/ + 1 /*modality*/ + 1 /*dtype*/ +
                             8 /*row_count*/ + 4 /*dim*/ + 8 /*id_table_bytes*/;
  std::size_t id_table = 0;
  for (const auto& id : ids) id_table += 2 + id.size();
  return header + id_table + 4 * ids.size() * dim;
}

// ---------------------------------------------------------------------------

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mmrec-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
