// mmrec: command-line front end for the benchmark pipeline.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 data error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmrec/mmrec.hpp"

namespace fs = std::filesystem;
using namespace mmrec;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
};

ExperimentConfig require_config(const Globals& g) {
  if (g.config.empty()) throw Error(ErrorCode::Config, "--config is required");
  ExperimentConfig cfg = load_config(g.config);
  if (g.seed) cfg.seeds = {*g.seed};
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (g.workers)
    cfg.workers = *g.workers;
  else
    cfg.workers = workers_from_env(cfg.workers);
  return cfg;
}

fs::path require_out(const Globals& g) {
  if (g.out.empty()) throw Error(ErrorCode::Config, "--out is required");
  return g.out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  detail::write_file_atomically(path, text);
}

int cmd_prefilter(const Globals& g, const std::string& interactions, const std::string& metadata) {
  const fs::path out = require_out(g);
  InteractionSet set = in_stage("ingestion", [&] { return parse_interactions(interactions); });
  auto res = in_stage("ingestion", [&] { return prefilter(set, parse_item_metadata(metadata)); });
  fs::create_directories(out);
  write_interactions(res.interactions, out / "interactions.tsv");
  write_text(out / "filter_report.json", to_json(res.report).dump(2) + "\n");
  std::printf("items %zu -> %zu, users %zu -> %zu, interactions dropped %zu\n",
              res.report.items_before, res.report.items_after, res.report.users_before,
              res.report.users_after, res.report.interactions_dropped);
  return 0;
}

int cmd_split(const Globals& g, const std::string& interactions, SplitConfig sc) {
  const fs::path out = require_out(g);
  if (g.seed) sc.seed = *g.seed;
  sc.validate();
  InteractionSet set = in_stage("ingestion", [&] { return parse_interactions(interactions); });
  SplitBundle bundle = in_stage("splitter", [&] { return split(set, sc); });
  write_split_bundle(bundle, out);
  std::printf("users %zu, items %zu, train %zu, validation %zu, test %zu\n",
              bundle.index.num_users(), bundle.index.num_items(),
              bundle.train.num_interactions(), bundle.validation.num_interactions(),
              bundle.test.num_interactions());
  return 0;
}

int cmd_features_check(const std::vector<std::string>& files) {
  int status = 0;
  for (const auto& f : files) {
    try {
      FeatureMatrix m = read_features(f);
      std::printf("%s: ok modality=%s rows=%zu dim=%zu\n", f.c_str(),
                  std::string(to_string(m.modality)).c_str(), m.rows(), m.dim);
    } catch (const Error& e) {
      std::printf("%s: %s\n", f.c_str(), e.what());
      status = 3;
    }
  }
  return status;
}

int cmd_features_preprocess(const Globals& g, const std::string& in, const std::string& method) {
  const Preprocess p = parse_preprocess(method);
  FeatureMatrix m = in_stage("feature-store", [&] { return read_features(in); });
  write_features(preprocess(m, p), require_out(g));
  return 0;
}

int cmd_fuse(const Globals& g, const std::vector<std::string>& inputs, const std::string& method) {
  const FusionMethod fm = parse_fusion_method(method);
  std::vector<FeatureMatrix> blocks;
  for (const auto& f : inputs)
    blocks.push_back(in_stage("feature-store", [&] { return read_features(f); }));
  FeatureMatrix fused = in_stage("fusion", [&] { return fuse_blocks(blocks, fm); });
  write_features(fused, require_out(g));
  std::printf("fused %zu blocks -> %zu x %zu\n", blocks.size(), fused.rows(), fused.dim);
  return 0;
}

const ModelConfig& find_model(const ExperimentConfig& cfg, const std::string& name) {
  for (const auto& m : cfg.models)
    if (m.name == name) return m;
  throw Error(ErrorCode::Config, "model '" + name + "' is not listed in the config");
}

int cmd_train(const Globals& g, const std::string& model_name, const std::string& extractor,
              const std::string& split_dir, double lr, double reg) {
  ExperimentConfig cfg = require_config(g);
  const fs::path out = require_out(g);
  const ModelConfig& mc = find_model(cfg, model_name);
  const std::uint64_t seed = cfg.seeds.front();

  PreparedData data;
  if (!split_dir.empty()) {
    data.bundle = in_stage("splitter", [&] { return read_split_bundle(split_dir); });
    data.split = index_split(data.bundle);
  } else {
    data = prepare_split(load_interactions(cfg, nullptr), cfg, seed);
  }
  std::optional<PreparedFeatures> pf;
  if (uses_features(mc.name)) {
    const ExtractorConfig* ex = &cfg.extractors.front();
    if (!extractor.empty()) {
      ex = nullptr;
      for (const auto& e : cfg.extractors)
        if (e.tag == extractor) ex = &e;
      if (!ex) throw Error(ErrorCode::Config, "unknown extractor tag '" + extractor + "'");
    }
    pf = prepare_features(*ex, cfg, data.bundle.index);
  }
  GridPoint point{lr, reg, cfg.batch_size, cfg.epochs};
  auto model = in_stage("training:" + mc.name, [&] {
    return train_model(mc, cfg, data.split, pf ? &*pf : nullptr, point, seed);
  });
  save_model(*model, out,
             {{"learning_rate", format_double(lr)},
              {"reg", format_double(reg)},
              {"seed", std::to_string(seed)},
              {"extractor_tag", pf ? pf->tag : "none"}});
  if (split_dir.empty()) write_split_bundle(data.bundle, out / "split");
  std::printf("saved %s to %s\n", mc.name.c_str(), out.string().c_str());
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& model_dir, std::string split_dir,
                 const std::string& target, std::size_t k) {
  if (target != "test" && target != "validation")
    throw Error(ErrorCode::Config, "--target must be test|validation");
  if (split_dir.empty()) split_dir = (fs::path(model_dir) / "split").string();
  const SplitBundle bundle = in_stage("splitter", [&] { return read_split_bundle(split_dir); });
  const IndexedSplit split = index_split(bundle);
  auto scorer = in_stage("evaluation", [&] { return load_scorer(model_dir, &split.train); });
  const std::size_t workers = g.workers ? *g.workers : workers_from_env(1);
  MetricReport rep = in_stage("evaluation", [&] {
    return evaluate(*scorer, split, target == "test" ? Target::Test : Target::Validation, k,
                    workers);
  });
  const ModelManifest manifest = read_manifest(model_dir);
  rep.extractor_tag = manifest.param("extractor_tag", "none");
  rep.seed = bundle.seed;
  const std::string csv = emit_report({rep}, ReportFormat::Csv);
  if (!g.out.empty()) write_text(g.out, csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_benchmark(const Globals& g) {
  ExperimentConfig cfg = require_config(g);
  BenchmarkReport rep = run_benchmark(cfg);
  write_benchmark(rep, cfg);
  std::vector<MetricReport> means;
  for (const auto& r : rep.rows) means.push_back(r.mean);
  std::fputs(emit_report(means, ReportFormat::Markdown).c_str(), stdout);
  std::printf("\nprotocol: %s; results in %s\n", protocol_label(rep.paper_protocol).c_str(),
              cfg.output_dir.string().c_str());
  return 0;
}

int cmd_report(const Globals& g, const std::vector<std::string>& inputs, const std::string& format,
               const std::string& baseline, const std::vector<std::string>& variants,
               const std::string& timings) {
  std::string text;
  if (!timings.empty()) {
    text = emit_timing_table(read_timings(timings));
  } else if (!baseline.empty()) {
    std::vector<TaggedReports> tagged;
    for (const auto& v : variants) {
      const auto eq = v.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::Config, "--variant expects tag=path");
      tagged.push_back({v.substr(0, eq), read_metric_csv(v.substr(eq + 1))});
    }
    text = emit_variation_data(read_metric_csv(baseline), tagged);
  } else {
    if (inputs.empty()) throw Error(ErrorCode::Config, "report needs --in, --baseline or --timings");
    std::vector<MetricReport> all;
    for (const auto& f : inputs) {
      auto rows = read_metric_csv(f);
      all.insert(all.end(), rows.begin(), rows.end());
    }
    text = emit_report(all, parse_report_format(format));
  }
  if (!g.out.empty()) write_text(g.out, text);
  std::fputs(text.c_str(), stdout);
  return 0;
}

int cmd_synth(const Globals& g, SyntheticConfig sc) {
  if (g.seed) sc.seed = *g.seed;
  write_synthetic(make_synthetic(sc), require_out(g));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal recommendation benchmark"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config (YAML or JSON)");
  app.add_option("--seed", g.seed, "Override the seed list with one seed");
  app.add_option("--workers", g.workers, "Worker threads (default: MMREC_WORKERS or config)");
  app.add_option("--out", g.out, "Output file or directory");

  std::string interactions, metadata;
  auto* pre = app.add_subcommand("prefilter", "Drop items with missing or invalid metadata");
  pre->add_option("--interactions", interactions)->required();
  pre->add_option("--metadata", metadata)->required();

  SplitConfig sc;
  auto* sp = app.add_subcommand("split", "Per-user random train/validation/test split");
  sp->add_option("--interactions", interactions)->required();
  sp->add_option("--test-ratio", sc.test_ratio);
  sp->add_option("--val-ratio", sc.val_ratio_of_train);
  sp->add_option("--min-train", sc.min_train_per_user);

  auto* feat = app.add_subcommand("features", "Inspect or preprocess MMFE files");
  feat->require_subcommand(1);
  std::vector<std::string> files;
  auto* check = feat->add_subcommand("check", "Validate feature files");
  check->add_option("files", files)->required();
  std::string in, method = "none";
  auto* prep = feat->add_subcommand("preprocess", "Normalise a feature file");
  prep->add_option("--in", in)->required();
  prep->add_option("--method", method, "none|zscore|minmax|l2row");

  std::vector<std::string> inputs;
  std::string fusion = "concat";
  auto* fuse = app.add_subcommand("fuse", "Early-fuse aligned feature files");
  fuse->add_option("--in", inputs)->required();
  fuse->add_option("--method", fusion, "concat|sum|mul|avg");

  std::string model_name, extractor, split_dir;
  double lr = 0.001, reg = 1e-5;
  auto* tr = app.add_subcommand("train", "Train one model at one grid point");
  tr->add_option("--model", model_name)->required();
  tr->add_option("--extractor", extractor);
  tr->add_option("--split", split_dir, "Split directory (default: split from config)");
  tr->add_option("--lr", lr);
  tr->add_option("--reg", reg);

  std::string model_dir, target = "test";
  std::size_t k = kPaperK;
  auto* ev = app.add_subcommand("evaluate", "Evaluate a saved model");
  ev->add_option("--model-dir", model_dir)->required();
  ev->add_option("--split", split_dir);
  ev->add_option("--target", target, "test|validation");
  ev->add_option("-K,--k", k);

  auto* bench = app.add_subcommand("benchmark", "Run the full grid-searched benchmark");

  std::string format = "markdown", baseline, timings;
  std::vector<std::string> variants;
  auto* rp = app.add_subcommand("report", "Render metric CSVs or variant deltas");
  rp->add_option("--in", inputs);
  rp->add_option("--format", format, "csv|markdown");
  rp->add_option("--baseline", baseline);
  rp->add_option("--variant", variants, "tag=metrics.csv");
  rp->add_option("--timings", timings, "Extraction timing CSV to tabulate");

  SyntheticConfig syn;
  auto* sy = app.add_subcommand("synth", "Write the synthetic fixture dataset");
  sy->add_option("--users", syn.users);
  sy->add_option("--items", syn.items);
  sy->add_option("--noise", syn.feature_noise);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*pre) return cmd_prefilter(g, interactions, metadata);
    if (*sp) return cmd_split(g, interactions, sc);
    if (*check) return cmd_features_check(files);
    if (*prep) return cmd_features_preprocess(g, in, method);
    if (*fuse) return cmd_fuse(g, inputs, fusion);
    if (*tr) return cmd_train(g, model_name, extractor, split_dir, lr, reg);
    if (*ev) return cmd_evaluate(g, model_dir, split_dir, target, k);
    if (*bench) return cmd_benchmark(g);
    if (*rp) return cmd_report(g, inputs, format, baseline, variants, timings);
    if (*sy) return cmd_synth(g, syn);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ErrorCode::Config ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
