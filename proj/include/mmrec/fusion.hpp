#pragma once

// Multimodal representation and fusion.
//
// joint:             one shared vector, mu = concatenation of all modalities
// coordinate_early:  per-modality projection P_m, then element-wise fusion
// coordinate_late:   per-modality projection P_m, fusion of the scores
//
// The constraint set between coordinated spaces is empty.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmrec/core.hpp"
#include "mmrec/matrix.hpp"

namespace mmrec {

enum class FusionMethod { Concat, Sum, Mul, Avg };
enum class LateFusion { Sum, Avg };
enum class RepresentationKind { Joint, CoordinateEarly, CoordinateLate };

inline FusionMethod parse_fusion_method(std::string_view s) {
  if (s == "concat") return FusionMethod::Concat;
  if (s == "sum") return FusionMethod::Sum;
  if (s == "mul") return FusionMethod::Mul;
  if (s == "avg") return FusionMethod::Avg;
  throw Error(ErrorCode::Config, "unknown fusion method '" + std::string(s) + "'");
}

inline std::string_view to_string(FusionMethod m) {
  switch (m) {
    case FusionMethod::Concat: return "concat";
    case FusionMethod::Sum: return "sum";
    case FusionMethod::Mul: return "mul";
    case FusionMethod::Avg: return "avg";
  }
  return "?";
}

inline RepresentationKind parse_representation(std::string_view s) {
  if (s == "joint") return RepresentationKind::Joint;
  if (s == "coordinate_early") return RepresentationKind::CoordinateEarly;
  if (s == "coordinate_late") return RepresentationKind::CoordinateLate;
  throw Error(ErrorCode::Config, "unknown representation '" + std::string(s) + "'");
}

inline LateFusion parse_late_fusion(std::string_view s) {
  if (s == "sum") return LateFusion::Sum;
  if (s == "avg") return LateFusion::Avg;
  throw Error(ErrorCode::Config, "late fusion supports sum|avg, got '" + std::string(s) + "'");
}

template <typename T>
struct RepresentationMode {
  RepresentationKind kind = RepresentationKind::Joint;
  /// P_m with shape (d_out x d_m). An absent optional means identity.
  std::map<Modality, std::optional<DenseMatrix<T>>> projections;

  void register_identity(Modality m) { projections[m] = std::nullopt; }
  void register_projection(Modality m, DenseMatrix<T> p) { projections[m] = std::move(p); }
};

namespace detail {

/// Sum or product of the operands taken in ascending order, so the result
/// does not depend on the order the modalities were supplied in.
template <typename T>
T reduce_sorted(std::vector<T>& values, bool product) {
  std::sort(values.begin(), values.end());
  T acc = values.front();
  for (std::size_t m = 1; m < values.size(); ++m) {
    if (product)
      acc *= values[m];
    else
      acc += values[m];
  }
  return acc;
}

/// Arithmetic mean; equal operands return that operand exactly.
template <typename T>
T mean_sorted(std::vector<T>& values) {
  const T sum = reduce_sorted<T>(values, false);
  if (values.front() == values.back()) return values.front();
  return sum / static_cast<T>(values.size());
}

}  // namespace detail

template <typename T>
std::vector<T> early_fuse(std::span<const std::vector<T>> features,
                          FusionMethod method) {
  if (features.empty()) throw Error(ErrorCode::EmptyModalities, "early_fuse");
  if (method == FusionMethod::Concat) {
    std::vector<T> out;
    for (const auto& f : features) out.insert(out.end(), f.begin(), f.end());
    return out;
  }
  const std::size_t d = features.front().size();
  for (const auto& f : features)
    if (f.size() != d)
      throw Error(ErrorCode::DimMismatch, std::to_string(f.size()) + " vs " + std::to_string(d));
  std::vector<T> out(d);
  std::vector<T> column(features.size());
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t m = 0; m < features.size(); ++m) column[m] = features[m][k];
    out[k] = method == FusionMethod::Avg
                 ? detail::mean_sorted<T>(column)
                 : detail::reduce_sorted<T>(column, method == FusionMethod::Mul);
  }
  return out;
}

template <typename T>
std::vector<T> early_fuse(std::initializer_list<std::vector<T>> features,
                          FusionMethod method) {
  return early_fuse<T>(std::span<const std::vector<T>>(features.begin(), features.size()),
                       method);
}

template <typename T>
std::vector<T> joint_represent(std::span<const std::vector<T>> features) {
  if (features.empty()) throw Error(ErrorCode::EmptyModalities, "joint_represent");
  return early_fuse<T>(features, FusionMethod::Concat);
}

template <typename T>
std::vector<T> coordinate_project(std::span<const T> feature, Modality modality,
                                  const RepresentationMode<T>& mode) {
  auto it = mode.projections.find(modality);
  if (it == mode.projections.end())
    throw Error(ErrorCode::UnknownModality, std::string(to_string(modality)));
  if (!it->second) return {feature.begin(), feature.end()};
  const DenseMatrix<T>& p = *it->second;
  if (p.cols() != feature.size())
    throw Error(ErrorCode::DimMismatch, "projection expects " + std::to_string(p.cols()) +
                                            ", got " + std::to_string(feature.size()));
  std::vector<T> out(p.rows());
  matvec<T>(p, feature, out);
  return out;
}

template <typename T>
T late_fuse(std::span<const T> scores, LateFusion method) {
  if (scores.empty()) throw Error(ErrorCode::EmptyModalities, "late_fuse");
  std::vector<T> values(scores.begin(), scores.end());
  if (method == LateFusion::Avg) return detail::mean_sorted<T>(values);
  return detail::reduce_sorted<T>(values, false);
}

/// Element-wise late fusion of per-modality score vectors.
template <typename T>
std::vector<T> late_fuse_scores(std::span<const std::vector<T>> per_modality,
                                LateFusion method) {
  if (per_modality.empty()) throw Error(ErrorCode::EmptyModalities, "late_fuse_scores");
  const std::size_t n = per_modality.front().size();
  std::vector<T> out(n);
  std::vector<T> column(per_modality.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < per_modality.size(); ++m) {
      if (per_modality[m].size() != n) throw Error(ErrorCode::DimMismatch, "score vectors");
      column[m] = per_modality[m][i];
    }
    out[i] = late_fuse<T>(column, method);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Whole-catalog helpers over aligned FeatureMatrix blocks (same row_ids).

inline void check_aligned(std::span<const FeatureMatrix> blocks) {
  if (blocks.empty()) throw Error(ErrorCode::EmptyModalities, "no feature blocks");
  for (const auto& b : blocks)
    if (b.row_ids != blocks.front().row_ids)
      throw Error(ErrorCode::KeyMismatch, "feature blocks are not row-aligned");
}

/// Projects every row of a block through the registered P_m (f64 math,
/// result stored as f32 like every other feature block).
inline FeatureMatrix project_block(const FeatureMatrix& block,
                                   const RepresentationMode<double>& mode) {
  FeatureMatrix out;
  out.modality = block.modality;
  out.row_ids = block.row_ids;
  std::vector<double> row(block.dim);
  for (std::size_t r = 0; r < block.rows(); ++r) {
    for (std::size_t c = 0; c < block.dim; ++c) row[c] = block.row(r)[c];
    auto projected = coordinate_project<double>(row, block.modality, mode);
    if (r == 0) out.dim = projected.size();
    for (double v : projected) out.values.push_back(static_cast<float>(v));
  }
  if (block.rows() == 0) {
    auto it = mode.projections.find(block.modality);
    if (it == mode.projections.end())
      throw Error(ErrorCode::UnknownModality, std::string(to_string(block.modality)));
    out.dim = it->second ? it->second->rows() : block.dim;
  }
  return out;
}

/// Fuses aligned blocks row by row into a single VisualTextual block.
inline FeatureMatrix fuse_blocks(std::span<const FeatureMatrix> blocks,
                                 FusionMethod method) {
  check_aligned(blocks);
  FeatureMatrix out;
  out.modality = blocks.size() == 1 ? blocks.front().modality : Modality::VisualTextual;
  out.row_ids = blocks.front().row_ids;
  std::vector<std::vector<double>> rows(blocks.size());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t m = 0; m < blocks.size(); ++m) {
      auto src = blocks[m].row(r);
      rows[m].assign(src.begin(), src.end());
    }
    auto fused = early_fuse<double>(rows, method);
    out.dim = fused.size();
    for (double v : fused) out.values.push_back(static_cast<float>(v));
  }
  if (out.rows() == 0) {
    out.dim = 0;
    for (const auto& b : blocks)
      out.dim = method == FusionMethod::Concat ? out.dim + b.dim : b.dim;
  }
  return out;
}

}  // namespace mmrec
