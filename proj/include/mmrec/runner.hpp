#pragma once

// Benchmark orchestration: prefilter -> split -> features -> fusion ->
// grid-searched training -> validation selection -> test evaluation.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mmrec/config.hpp"
#include "mmrec/evaluator.hpp"
#include "mmrec/feature_store.hpp"
#include "mmrec/fusion.hpp"
#include "mmrec/ingestion.hpp"
#include "mmrec/parallel.hpp"
#include "mmrec/recommenders/bprmf.hpp"
#include "mmrec/recommenders/frozen_graph.hpp"
#include "mmrec/recommenders/itemknn.hpp"
#include "mmrec/recommenders/lightgcn.hpp"
#include "mmrec/recommenders/vbpr.hpp"
#include "mmrec/report.hpp"
#include "mmrec/splitter.hpp"

namespace mmrec {

/// Runs f(), attaching `stage` to any mmrec::Error that has none yet.
template <typename F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

struct GridPoint {
  double learning_rate = 0.0;
  double reg = 0.0;
  std::size_t batch_size = kPaperBatchSize;
  std::size_t epochs = kPaperEpochs;
};

/// lr-major Cartesian product of the configured lists.
inline std::vector<GridPoint> enumerate_grid(const ExperimentConfig& cfg) {
  if (cfg.learning_rates.empty() || cfg.regs.empty())
    throw Error(ErrorCode::EmptyGrid, "learning_rates and regs must both be non-empty");
  std::vector<GridPoint> grid;
  for (double lr : cfg.learning_rates)
    for (double reg : cfg.regs) grid.push_back({lr, reg, cfg.batch_size, cfg.epochs});
  return grid;
}

inline bool uses_features(const std::string& model) {
  return model == "VBPR" || model == "FrozenGraphRec";
}
inline bool uses_grid(const std::string& model) { return model != "ItemKNN"; }

struct RunRecord {
  std::string model;
  std::string extractor_tag;
  std::optional<GridPoint> point;  // empty for models without a grid
  std::uint64_t seed = 0;
  MetricReport validation;
  std::optional<MetricReport> test;
  double wall_seconds = 0.0;
};

/// Highest validation recall; ties go to lower reg, then lower lr, then
/// earlier record.
inline std::size_t select_best_index(const std::vector<RunRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::EmptyRecords, "select_best");
  std::size_t best = 0;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& a = records[r];
    const auto& b = records[best];
    if (a.validation.recall != b.validation.recall) {
      if (a.validation.recall > b.validation.recall) best = r;
      continue;
    }
    if (a.point && b.point) {
      if (a.point->reg != b.point->reg) {
        if (a.point->reg < b.point->reg) best = r;
        continue;
      }
      if (a.point->learning_rate < b.point->learning_rate) best = r;
    }
  }
  return best;
}

inline const RunRecord& select_best(const std::vector<RunRecord>& records) {
  return records[select_best_index(records)];
}

// ---------------------------------------------------------------------------
// Data preparation

struct PreparedData {
  SplitBundle bundle;
  IndexedSplit split;
};

/// Feature blocks for one extractor, aligned to the split's item index.
struct PreparedFeatures {
  std::string tag;
  std::vector<FeatureMatrix> model_blocks;  // one per VBPR term
  FeatureMatrix graph_block;                // input of the frozen item graph
};

inline InteractionSet load_interactions(const ExperimentConfig& cfg, FilterReport* report) {
  return in_stage("ingestion", [&] {
    InteractionSet set = parse_interactions(cfg.interactions);
    if (cfg.metadata) {
      auto res = prefilter(set, parse_item_metadata(*cfg.metadata));
      if (report) *report = res.report;
      set = std::move(res.interactions);
    }
    if (cfg.kcore_min_user > 0 || cfg.kcore_min_item > 0)
      set = kcore_filter(std::move(set), cfg.kcore_min_user, cfg.kcore_min_item);
    return set;
  });
}

inline PreparedData prepare_split(const InteractionSet& interactions, const ExperimentConfig& cfg,
                                  std::uint64_t seed) {
  return in_stage("splitter", [&] {
    SplitConfig sc = cfg.split;
    sc.seed = seed;
    PreparedData d;
    d.bundle = split(interactions, sc);
    d.split = index_split(d.bundle);
    return d;
  });
}

inline RepresentationMode<double> load_representation(const ExperimentConfig& cfg,
                                                      const std::vector<Modality>& modalities) {
  RepresentationMode<double> mode;
  mode.kind = cfg.representation;
  for (Modality m : modalities) {
    auto it = cfg.projections.find(m);
    if (it == cfg.projections.end())
      mode.register_identity(m);
    else
      mode.register_projection(m, read_features(it->second).to_f64());
  }
  return mode;
}

inline PreparedFeatures prepare_features(const ExtractorConfig& ex, const ExperimentConfig& cfg,
                                         const IndexMap& index) {
  std::vector<FeatureMatrix> blocks = in_stage("feature-store", [&] {
    std::vector<FeatureMatrix> out;
    for (const auto& [modality, path] : ex.features) {
      FeatureMatrix f = read_features(path);
      if (f.modality != modality)
        throw Error(ErrorCode::UnknownModality,
                    path.string() + " holds " + std::string(to_string(f.modality)) + " features");
      out.push_back(preprocess(remap_features(f, index), ex.preprocess));
    }
    return out;
  });
  return in_stage("fusion", [&] {
    PreparedFeatures pf;
    pf.tag = ex.tag;
    if (cfg.representation == RepresentationKind::Joint) {
      pf.model_blocks.push_back(fuse_blocks(blocks, FusionMethod::Concat));
      pf.graph_block = pf.model_blocks.front();
      return pf;
    }
    std::vector<Modality> modalities;
    for (const auto& b : blocks) modalities.push_back(b.modality);
    const auto mode = load_representation(cfg, modalities);
    std::vector<FeatureMatrix> projected;
    for (const auto& b : blocks) projected.push_back(project_block(b, mode));
    if (cfg.representation == RepresentationKind::CoordinateEarly) {
      pf.model_blocks.push_back(fuse_blocks(projected, cfg.fusion));
      pf.graph_block = pf.model_blocks.front();
    } else {
      pf.graph_block = fuse_blocks(projected, FusionMethod::Concat);
      pf.model_blocks = std::move(projected);
    }
    return pf;
  });
}

// ---------------------------------------------------------------------------
// Training

inline BprHyperParams hyper_params(const ExperimentConfig& cfg, const ModelConfig& m,
                                   const GridPoint& p, std::uint64_t seed) {
  BprHyperParams hp;
  hp.latent_dim = m.get<std::size_t>("latent_dim", cfg.latent_dim);
  hp.learning_rate = p.learning_rate;
  hp.reg = p.reg;
  hp.epochs = p.epochs;
  hp.batch_size = p.batch_size;
  hp.seed = seed;
  hp.init_std = cfg.init_std;
  hp.validate();
  return hp;
}

/// Trains one model. Latent-factor models come back as their trained
/// parameterisation; ItemKNN ignores the grid point.
inline std::unique_ptr<Recommender> train_model(const ModelConfig& m, const ExperimentConfig& cfg,
                                                const IndexedSplit& split,
                                                const PreparedFeatures* features,
                                                const GridPoint& point, std::uint64_t seed) {
  const InteractionMatrix& train = split.train;
  if (m.name == "ItemKNN") return std::make_unique<ItemKnn>(train, m.get<std::size_t>("k_neighbors", 50));

  const BprHyperParams hp = hyper_params(cfg, m, point, seed);
  std::unique_ptr<BprModel> model;
  if (m.name == "BPRMF") {
    model = std::make_unique<BprMf>(train.num_users(), train.num_items(), hp);
  } else if (m.name == "LightGCN") {
    model = std::make_unique<LightGcn>(train, hp, m.get<std::size_t>("layers", 3));
  } else if (m.name == "VBPR") {
    if (!features) throw Error(ErrorCode::Config, "VBPR needs features");
    model = std::make_unique<Vbpr>(train.num_users(), features->model_blocks, hp);
  } else if (m.name == "FrozenGraphRec") {
    if (!features) throw Error(ErrorCode::Config, "FrozenGraphRec needs features");
    model = std::make_unique<FrozenGraphRec>(
        train.num_users(), train.num_items(),
        build_item_graph(features->graph_block, m.get<std::size_t>("graph_k", 10)), hp,
        m.get<std::size_t>("graph_layers", 1));
  } else {
    throw Error(ErrorCode::Config, "unknown model '" + m.name + "'");
  }
  train_bpr(*model, train, hp);
  return model;
}

/// Fast scoring form of a trained model.
inline std::unique_ptr<Recommender> scoring_form(std::unique_ptr<Recommender> model) {
  if (auto* bpr = dynamic_cast<BprModel*>(model.get()))
    return std::make_unique<FactorScorer>(bpr->to_scorer());
  return model;
}

// ---------------------------------------------------------------------------
// Benchmark

struct ResultRow {
  MetricReport mean;  // seed field holds the first seed
  double recall_std = 0.0, ndcg_std = 0.0, hr_std = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::optional<GridPoint>> selected;  // per seed
  double wall_seconds = 0.0;
};

struct BenchmarkReport {
  std::vector<ResultRow> rows;
  std::vector<RunRecord> runs;
  std::optional<FilterReport> filter;
  bool paper_protocol = false;
  std::size_t grid_size = 0;
  std::size_t batch_size = 0;
  std::size_t epochs = 0;
};

inline std::string protocol_label(bool paper) { return paper ? "paper" : "override"; }

namespace detail {

inline double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline std::string joined_points(const std::vector<std::optional<GridPoint>>& pts, bool lr) {
  std::string out;
  for (std::size_t s = 0; s < pts.size(); ++s) {
    if (s) out += ';';
    out += pts[s] ? format_double(lr ? pts[s]->learning_rate : pts[s]->reg) : "NA";
  }
  return out;
}

}  // namespace detail

inline const char* kResultsCsvHeader =
    "model,extractor_tag,K,recall,ndcg,hr,num_evaluated_users,num_skipped_users,seeds,"
    "recall_std,ndcg_std,hr_std,best_lr,best_reg,batch_size,epochs,grid_size,protocol,"
    "wall_seconds";

inline std::string results_csv(const BenchmarkReport& rep) {
  std::ostringstream out;
  out << kResultsCsvHeader << '\n';
  for (const auto& r : rep.rows) {
    std::string seeds;
    for (std::size_t s = 0; s < r.seeds.size(); ++s)
      seeds += (s ? ";" : "") + std::to_string(r.seeds[s]);
    out << r.mean.model_name << ',' << r.mean.extractor_tag << ',' << r.mean.k << ','
        << format_double(r.mean.recall) << ',' << format_double(r.mean.ndcg) << ','
        << format_double(r.mean.hr) << ',' << r.mean.num_evaluated_users << ','
        << r.mean.num_skipped_users << ',' << seeds << ',' << format_double(r.recall_std) << ','
        << format_double(r.ndcg_std) << ',' << format_double(r.hr_std) << ','
        << detail::joined_points(r.selected, true) << ','
        << detail::joined_points(r.selected, false) << ',' << rep.batch_size << ','
        << rep.epochs << ',' << rep.grid_size << ',' << protocol_label(rep.paper_protocol) << ','
        << format_double(r.wall_seconds) << '\n';
  }
  return out.str();
}

inline std::string runs_csv(const BenchmarkReport& rep) {
  std::ostringstream out;
  out << "model,extractor_tag,seed,lr,reg,val_recall,val_ndcg,val_hr,selected,test_recall,"
         "test_ndcg,test_hr,wall_seconds\n";
  for (const auto& r : rep.runs) {
    out << r.model << ',' << r.extractor_tag << ',' << r.seed << ','
        << (r.point ? format_double(r.point->learning_rate) : "NA") << ','
        << (r.point ? format_double(r.point->reg) : "NA") << ','
        << format_double(r.validation.recall) << ',' << format_double(r.validation.ndcg) << ','
        << format_double(r.validation.hr) << ',' << (r.test ? 1 : 0) << ',';
    if (r.test)
      out << format_double(r.test->recall) << ',' << format_double(r.test->ndcg) << ','
          << format_double(r.test->hr);
    else
      out << ",,";
    out << ',' << format_double(r.wall_seconds) << '\n';
  }
  return out.str();
}

inline std::string markdown_report(const BenchmarkReport& rep,
                                   const std::vector<TimingRow>& timings = {}) {
  std::ostringstream out;
  out << "# Benchmark results\n\n";
  out << "- protocol: " << protocol_label(rep.paper_protocol)
      << (rep.paper_protocol ? " (batch_size 1024, epochs 200, 10-point grid)" : "") << '\n';
  out << "- batch_size: " << rep.batch_size << '\n';
  out << "- epochs: " << rep.epochs << '\n';
  out << "- grid points per model: " << rep.grid_size << '\n';
  if (!rep.rows.empty())
    out << "- selection: argmax validation Recall@" << rep.rows.front().mean.k << '\n';
  out << "- seeds: " << (rep.rows.empty() ? 0 : rep.rows.front().seeds.size())
      << " (mean reported; std in results.csv)\n\n";
  if (!rep.rows.empty()) {
    std::vector<MetricReport> means;
    for (const auto& r : rep.rows) means.push_back(r.mean);
    out << emit_report(means, ReportFormat::Markdown);
  }
  if (rep.filter) {
    const auto& f = *rep.filter;
    out << "\n## Pre-filter\n\n"
        << "- items: " << f.items_before << " -> " << f.items_after << '\n'
        << "- users: " << f.users_before << " -> " << f.users_after << '\n'
        << "- interactions dropped: " << f.interactions_dropped << '\n';
  }
  if (!timings.empty()) out << "\n## Extraction timings\n" << emit_timing_table(timings);
  return out.str();
}

inline BenchmarkReport run_benchmark(const ExperimentConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  BenchmarkReport rep;
  rep.paper_protocol = cfg.paper_protocol();
  rep.batch_size = cfg.batch_size;
  rep.epochs = cfg.epochs;
  const auto grid = enumerate_grid(cfg);
  rep.grid_size = grid.size();

  FilterReport filter;
  const InteractionSet interactions = load_interactions(cfg, &filter);
  if (cfg.metadata) rep.filter = filter;

  struct Job {
    std::size_t model, extractor, seed, point;  // extractor == npos for classical
    bool tuned;
  };
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<PreparedData> data;
  std::vector<std::vector<PreparedFeatures>> features;  // [seed][extractor]
  for (std::uint64_t seed : cfg.seeds) {
    data.push_back(prepare_split(interactions, cfg, seed));
    std::vector<PreparedFeatures> per_ex;
    for (const auto& ex : cfg.extractors)
      per_ex.push_back(prepare_features(ex, cfg, data.back().bundle.index));
    features.push_back(std::move(per_ex));
  }

  // Row order: model order, then extractor order; each row spans seeds x grid.
  std::vector<std::vector<Job>> row_jobs;
  for (std::size_t m = 0; m < cfg.models.size(); ++m) {
    const auto& name = cfg.models[m].name;
    const std::vector<std::size_t> extractors = [&] {
      std::vector<std::size_t> out;
      if (!uses_features(name)) return std::vector<std::size_t>{kNone};
      for (std::size_t e = 0; e < cfg.extractors.size(); ++e) out.push_back(e);
      return out;
    }();
    for (std::size_t e : extractors) {
      std::vector<Job> jobs;
      for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        if (!uses_grid(name)) {
          jobs.push_back({m, e, s, 0, false});
          continue;
        }
        for (std::size_t p = 0; p < grid.size(); ++p) jobs.push_back({m, e, s, p, true});
      }
      row_jobs.push_back(std::move(jobs));
    }
  }

  std::vector<Job> all;
  for (const auto& jobs : row_jobs) all.insert(all.end(), jobs.begin(), jobs.end());
  std::vector<RunRecord> records(all.size());
  std::vector<std::unique_ptr<Recommender>> scorers(all.size());

  parallel_for(all.size(), cfg.workers, [&](std::size_t j) {
    const Job& job = all[j];
    const ModelConfig& mc = cfg.models[job.model];
    const PreparedFeatures* pf = job.extractor == kNone ? nullptr : &features[job.seed][job.extractor];
    const std::uint64_t seed = cfg.seeds[job.seed];
    const auto t0 = Clock::now();
    auto model = in_stage("training:" + mc.name, [&] {
      return scoring_form(train_model(mc, cfg, data[job.seed].split, pf, grid[job.point], seed));
    });
    RunRecord& rec = records[j];
    rec.model = mc.name;
    rec.extractor_tag = pf ? pf->tag : "none";
    if (job.tuned) rec.point = grid[job.point];
    rec.seed = seed;
    rec.validation = in_stage("evaluation", [&] {
      return evaluate(*model, data[job.seed].split, Target::Validation, cfg.k);
    });
    rec.validation.extractor_tag = rec.extractor_tag;
    rec.validation.seed = seed;
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    scorers[j] = std::move(model);
  });

  // Deterministic reduction: per row, per seed select on validation, then test.
  std::size_t offset = 0;
  for (const auto& jobs : row_jobs) {
    ResultRow row;
    std::vector<double> recalls, ndcgs, hrs;
    std::size_t evaluated = 0, skipped = 0;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      std::vector<std::size_t> ids;
      for (std::size_t j = 0; j < jobs.size(); ++j)
        if (jobs[j].seed == s) ids.push_back(offset + j);
      std::vector<RunRecord> candidates;
      for (std::size_t id : ids) candidates.push_back(records[id]);
      const std::size_t chosen = ids[select_best_index(candidates)];
      RunRecord& best = records[chosen];
      const auto t0 = Clock::now();
      MetricReport test = in_stage("evaluation", [&] {
        return evaluate(*scorers[chosen], data[s].split, Target::Test, cfg.k, cfg.workers);
      });
      best.wall_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
      test.extractor_tag = best.extractor_tag;
      test.seed = best.seed;
      best.test = test;
      recalls.push_back(test.recall);
      ndcgs.push_back(test.ndcg);
      hrs.push_back(test.hr);
      evaluated += test.num_evaluated_users;
      skipped += test.num_skipped_users;
      row.seeds.push_back(best.seed);
      row.selected.push_back(best.point);
      if (s == 0) row.mean = test;
      for (std::size_t id : ids) row.wall_seconds += records[id].wall_seconds;
    }
    const double n = static_cast<double>(cfg.seeds.size());
    row.mean.recall = row.mean.ndcg = row.mean.hr = 0.0;
    for (std::size_t s = 0; s < recalls.size(); ++s) {
      row.mean.recall += recalls[s] / n;
      row.mean.ndcg += ndcgs[s] / n;
      row.mean.hr += hrs[s] / n;
    }
    row.mean.num_evaluated_users = evaluated / cfg.seeds.size();
    row.mean.num_skipped_users = skipped / cfg.seeds.size();
    row.recall_std = detail::sample_std(recalls);
    row.ndcg_std = detail::sample_std(ndcgs);
    row.hr_std = detail::sample_std(hrs);
    rep.rows.push_back(std::move(row));
    offset += jobs.size();
  }
  rep.runs = std::move(records);
  return rep;
}

/// Writes results.csv, runs.csv, report.md and (with metadata) filter_report.json.
inline void write_benchmark(const BenchmarkReport& rep, const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  std::vector<TimingRow> timings;
  if (cfg.timings) timings = in_stage("report", [&] { return read_timings(*cfg.timings); });
  detail::write_file_atomically(cfg.output_dir / "results.csv", results_csv(rep));
  detail::write_file_atomically(cfg.output_dir / "runs.csv", runs_csv(rep));
  detail::write_file_atomically(cfg.output_dir / "report.md", markdown_report(rep, timings));
  if (rep.filter)
    detail::write_file_atomically(cfg.output_dir / "filter_report.json",
                                  to_json(*rep.filter).dump(2) + "\n");
}

}  // namespace mmrec
