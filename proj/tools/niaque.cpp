// Copyright 2026 The niaque Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line entry point. Exit codes: 0 success, 1 runtime failure,
// 2 usage error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "niaque/data.hpp"
#include "niaque/errors.hpp"
#include "niaque/gradcheck.hpp"
#include "niaque/interpret.hpp"
#include "niaque/run_config.hpp"
#include "niaque/runtime.hpp"
#include "niaque/synthetic.hpp"
#include "niaque/trainer.hpp"

namespace fs = std::filesystem;
using namespace niaque;

namespace {

/// Bad flag values detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("short write to '" + path.string() + "'");
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text << std::flush;
  } else {
    write_text(out_path, text);
  }
}

/// Training events go to stderr as they happen and are kept for train.log.
struct TrainLog {
  struct Tee : std::streambuf {
    std::streambuf* a = nullptr;
    std::streambuf* b = nullptr;
    int overflow(int c) override {
      if (c == EOF) return 0;
      a->sputc(char(c));
      b->sputc(char(c));
      return c;
    }
  };
  std::ostringstream text;
  Tee tee;
  std::ostream stream{&tee};

  TrainLog() {
    tee.a = text.rdbuf();
    tee.b = std::cerr.rdbuf();
  }
};

struct ConfigFlags {
  std::string file;
  std::vector<std::string> overrides;
  long long seed = -1;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.file, "key = value configuration file");
  cmd->add_option("--set", f.overrides, "Override, e.g. train.lr=1e-3 (repeatable)");
  cmd->add_option("--seed", f.seed, "Run seed (overrides train.seed)");
}

RunConfig build_config(const ConfigFlags& f) {
  RunConfig rc;
  try {
    if (!f.file.empty()) {
      if (!fs::exists(f.file)) throw DataError("config file '" + f.file + "' does not exist");
      rc.load_file(f.file);
    }
    for (const auto& o : f.overrides) rc.set_assignment(o);
    if (f.seed >= 0) rc.set("train.seed", std::to_string(f.seed));
    rc.model();
    rc.training();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::cerr << rc.provenance();
  return rc;
}

/// Re-ingests manifest datasets the checkpoint was trained or fine-tuned on,
/// reproducing their splits and global IDs.
std::vector<SplitDataset> known_datasets(const fs::path& manifest, Checkpoint& ckpt) {
  std::vector<SplitDataset> out;
  for (const auto& entry : read_manifest(manifest)) {
    if (!ckpt.registry.has_dataset(entry.name)) {
      throw DataError("dataset '" + entry.name +
                      "' is not known to the checkpoint; fine-tune on it first");
    }
    const DatasetMeta& meta = ckpt.dataset(entry.name);
    SplitDataset d = ingest(entry, IngestOptions{meta.row_cap, meta.split_seed});
    if (d.meta.y_min != meta.y_min || d.meta.y_max != meta.y_max ||
        d.meta.n_rows != meta.n_rows) {
      throw DataError("dataset '" + entry.name + "' at '" + entry.csv_path.string() +
                      "' differs from the one the checkpoint was trained on");
    }
    bind_features(d, ckpt.registry);
    out.push_back(std::move(d));
  }
  if (out.empty()) throw DataError("manifest '" + manifest.string() + "' lists no datasets");
  return out;
}

std::vector<double> parse_levels(const std::string& list) {
  std::vector<double> levels;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      const double q = std::stod(item, &used);
      if (used != item.size() || !(q > 0 && q < 1)) throw std::invalid_argument(item);
      levels.push_back(q);
    } catch (const std::logic_error&) {
      throw UsageError("--quantiles: '" + item + "' is not a level in (0, 1)");
    }
  }
  if (levels.empty()) throw UsageError("--quantiles: empty list");
  return levels;
}

int run_synth(const std::string& task_name, long long n, long long seed, const std::string& out) {
  if (n < 10) throw UsageError("--n must be at least 10");
  if (seed < 0) throw UsageError("--seed must be non-negative");
  const SyntheticTask task = SyntheticTask::named(task_name, std::uint64_t(seed));
  Rng rng = make_stream(std::uint64_t(seed), "synthetic/" + task.name);
  const Table table = synthesize(task, Index(n), rng);
  std::string csv;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    csv += (c ? "," : "") + table.columns[c];
  }
  csv += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) csv += (c ? "," : "") + row[c];
    csv += '\n';
  }
  write_text(out, csv);
  nlohmann::json sidecar = {{"task", task.to_json()},
                            {"n", n},
                            {"seed", seed},
                            {"target_column", "y"},
                            {"features", "x_j ~ U(-1, 1)"},
                            {"quantile", "mean(x) + scale(x) * Phi^-1(q)"}};
  write_text(out + ".task.json", sidecar.dump(2) + "\n");
  std::cerr << "wrote " << n << " rows to " << out << '\n';
  return 0;
}

int run_ingest(const std::string& manifest, const std::string& out, const ConfigFlags& flags) {
  const RunConfig rc = build_config(flags);
  std::vector<SplitDataset> datasets;
  for (const auto& e : read_manifest(manifest)) datasets.push_back(ingest(e, rc.ingest()));
  if (datasets.empty()) throw DataError("manifest '" + manifest + "' lists no datasets");
  const FeatureRegistry registry = register_features(datasets);
  fs::create_directories(out);
  for (const auto& d : datasets) {
    save_dataset(fs::path(out) / (d.meta.name + ".niaq"), d);
    std::cerr << d.meta.name << ": " << d.train.size() << "/" << d.val.size() << "/"
              << d.test.size() << " rows, " << d.meta.n_features << " features\n";
  }
  write_text(fs::path(out) / "registry.json", registry.to_json().dump(2) + "\n");
  return 0;
}

int run_train(const std::string& manifest, const std::string& out, const ConfigFlags& flags) {
  const RunConfig rc = build_config(flags);
  std::vector<SplitDataset> datasets;
  for (const auto& e : read_manifest(manifest)) datasets.push_back(ingest(e, rc.ingest()));
  if (datasets.empty()) throw DataError("manifest '" + manifest + "' lists no datasets");
  const FeatureRegistry registry = register_features(datasets);
  fs::create_directories(out);
  TrainLog log;
  const TrainResult result = pretrain(datasets, registry, rc.model(), rc.training(), &log.stream);
  result.final.save(fs::path(out) / "final.ckpt");
  result.best.save(fs::path(out) / "best.ckpt");
  write_text(fs::path(out) / "train.log", log.text.str());
  return 0;
}

int run_finetune(const std::string& ckpt_path, const std::string& manifest, double fraction,
                 const std::string& out, ConfigFlags flags) {
  if (fraction >= 0) {
    if (fraction == 0) throw UsageError("--fraction must be positive");
    char buf[64];
    std::snprintf(buf, sizeof buf, "train.data_fraction=%.17g", fraction);
    flags.overrides.push_back(buf);
  }
  const RunConfig rc = build_config(flags);
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  std::vector<SplitDataset> datasets;
  for (const auto& e : read_manifest(manifest)) {
    IngestOptions options = rc.ingest();
    for (const auto& m : ckpt.datasets) {
      if (m.name == e.name) options = IngestOptions{m.row_cap, m.split_seed};
    }
    datasets.push_back(ingest(e, options));
  }
  if (datasets.empty()) throw DataError("manifest '" + manifest + "' lists no datasets");
  fs::create_directories(out);
  TrainLog log;
  const TrainResult result = finetune(ckpt, datasets, rc.training(), &log.stream);
  result.final.save(fs::path(out) / "final.ckpt");
  result.best.save(fs::path(out) / "best.ckpt");
  write_text(fs::path(out) / "train.log", log.text.str());
  return 0;
}

int run_evaluate(const std::string& ckpt_path, const std::string& manifest,
                 const std::string& split, int quantiles, const std::string& out) {
  if (quantiles < 1) throw UsageError("--quantiles must be positive");
  Split s;
  try {
    s = parse_split(split);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  Checkpoint ckpt = Checkpoint::load(ckpt_path);
  const auto datasets = known_datasets(manifest, ckpt);
  EvaluationOptions options;
  options.split = s;
  options.quantile_count = quantiles;
  emit(out, evaluate(ckpt.model, datasets, options).to_text());
  return 0;
}

int run_predict(const std::string& ckpt_path, const std::string& input,
                const std::string& levels_text, std::string dataset, bool header,
                const std::string& out) {
  const auto levels = parse_levels(levels_text);
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  if (dataset.empty()) {
    if (ckpt.datasets.size() != 1) {
      throw UsageError("the checkpoint knows several datasets; choose one with --dataset");
    }
    dataset = ckpt.datasets.front().name;
  }
  const DatasetMeta& meta = ckpt.dataset(dataset);
  const Table table = read_csv(input);
  std::vector<FeatureRow> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    FeatureRow row;
    for (std::size_t c = 0; c < meta.columns.size(); ++c) {
      const auto it = std::find(table.columns.begin(), table.columns.end(), meta.columns[c].name);
      if (it == table.columns.end()) continue;
      const std::string& cell = table.rows[r][std::size_t(it - table.columns.begin())];
      if (cell.find_first_not_of(" \t") == std::string::npos) continue;
      row.feature_ids.push_back(meta.feature_ids[c]);
      row.values.push_back(meta.columns[c].encode(cell));
    }
    if (row.size() == 0) {
      throw DataError(input + ": data line " + std::to_string(r + 1) +
                      " has no feature known to dataset '" + dataset + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(input + ": no rows");
  const auto pred = forward(ckpt.model, rows, levels);
  std::string text = header ? "row_index,q,yhat\n" : "";
  char buf[96];
  for (Index r = 0; r < Index(rows.size()); ++r) {
    for (std::size_t j = 0; j < levels.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%lld,%.6g,%.9g\n", static_cast<long long>(r), levels[j],
                    meta.denormalize(pred.values(r, Index(j))));
      text += buf;
    }
  }
  emit(out, text);
  return 0;
}

int run_importance(const std::string& ckpt_path, const std::string& manifest, double alpha,
                   const std::string& out) {
  if (!(alpha > 0 && alpha < 1)) throw UsageError("--alpha must lie in (0, 1)");
  Checkpoint ckpt = Checkpoint::load(ckpt_path);
  if (ckpt.model.config().single_feature_ratio == 0) {
    std::cerr << "warning: model trained without single-feature rows; "
                 "importance weights may not discriminate\n";
  }
  const auto datasets = known_datasets(manifest, ckpt);
  std::string text;
  for (const auto& d : datasets) {
    const std::string csv = importance_weights(ckpt.model, d, alpha).to_csv();
    text += text.empty() ? csv : csv.substr(csv.find('\n') + 1);
  }
  emit(out, text);
  return 0;
}

int run_gradcheck(const ConfigFlags& flags, int trials, double tolerance, bool explicit_config) {
  if (trials < 1) throw UsageError("--trials must be positive");
  const RunConfig rc = build_config(flags);
  const std::uint64_t seed = rc.training().seed;
  Rng rng = make_stream(seed, "gradcheck");
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    const NiaqueConfig config = explicit_config ? rc.model() : random_tiny_config(rng);
    const auto report = check_model_gradients(config, seed + std::uint64_t(t));
    worst = std::max(worst, report.max_relative_error);
    std::printf(
        "config=%d R=%d L=%d E=%d E_in=%d W=%d checked=%lld max_relative_error=%.3e "
        "worst=%s[%lld]\n",
        t, config.blocks, config.layers_per_block, config.latent_dim, config.input_embed_dim,
        config.width(), static_cast<long long>(report.checked), report.max_relative_error,
        report.worst_parameter.c_str(), static_cast<long long>(report.worst_index));
  }
  std::printf("max_relative_error=%.3e tolerance=%.1e %s\n", worst, tolerance,
              worst <= tolerance ? "PASS" : "FAIL");
  return worst <= tolerance ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"niaque: any-quantile probabilistic regression over tabular data"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker cap (computation is single-threaded)")
      ->check(CLI::PositiveNumber);

  std::string task = "hetero-gaussian", out, manifest, ckpt, split = "test", input, levels,
              dataset;
  long long n = 1000, synth_seed = 0;
  double fraction = -1, alpha = 0.05, tolerance = 1e-4;
  int quantiles = 200, trials = 20;
  bool header = false;
  ConfigFlags ingest_flags, train_flags, finetune_flags, grad_flags;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset as CSV");
  synth->add_option("--task", task, "hetero-gaussian, homoscedastic, sine or related-<k>");
  synth->add_option("--n", n, "Row count");
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--out", out, "Output CSV path")->required();

  auto* ingest_cmd = app.add_subcommand("ingest", "Ingest a manifest into dataset stores");
  ingest_cmd->add_option("--manifest", manifest, "Manifest file")->required();
  ingest_cmd->add_option("--out", out, "Output directory")->required();
  add_config_flags(ingest_cmd, ingest_flags);

  auto* train_cmd = app.add_subcommand("train", "Pretrain on every dataset of a manifest");
  train_cmd->add_option("--manifest", manifest, "Manifest file")->required();
  train_cmd->add_option("--out", out, "Output directory")->required();
  add_config_flags(train_cmd, train_flags);

  auto* finetune_cmd = app.add_subcommand("finetune", "Fine-tune a checkpoint on new datasets");
  finetune_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  finetune_cmd->add_option("--manifest", manifest, "Manifest of new datasets")->required();
  finetune_cmd->add_option("--fraction", fraction, "Fraction of the train split to use")
      ->check(CLI::Range(0.0, 1.0));
  finetune_cmd->add_option("--out", out, "Output directory")->required();
  add_config_flags(finetune_cmd, finetune_flags);

  auto* eval_cmd = app.add_subcommand("evaluate", "Write a metric report");
  eval_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--manifest", manifest, "Manifest")->required();
  eval_cmd->add_option("--split", split, "train, val or test");
  eval_cmd->add_option("--quantiles", quantiles, "Number of random evaluation levels");
  eval_cmd->add_option("--out", out, "Report path (default stdout)");

  auto* predict_cmd = app.add_subcommand("predict", "Predict quantiles for CSV rows");
  predict_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  predict_cmd->add_option("--input", input, "CSV with feature columns")->required();
  predict_cmd->add_option("--quantiles", levels, "Comma separated levels")->required();
  predict_cmd->add_option("--dataset", dataset, "Dataset whose columns the CSV carries");
  predict_cmd->add_flag("--header", header, "Write a header line");
  predict_cmd->add_option("--out", out, "Output path (default stdout)");

  auto* importance_cmd = app.add_subcommand("importance", "Feature importance weights as CSV");
  importance_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required();
  importance_cmd->add_option("--manifest", manifest, "Manifest")->required();
  importance_cmd->add_option("--alpha", alpha, "Interval level is 1 - alpha");
  importance_cmd->add_option("--out", out, "Output path (default stdout)");

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  add_config_flags(grad_cmd, grad_flags);
  grad_cmd->add_option("--trials", trials, "Random tiny configurations to check");
  grad_cmd->add_option("--tolerance", tolerance, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return run_synth(task, n, synth_seed, out);
    if (ingest_cmd->parsed()) return run_ingest(manifest, out, ingest_flags);
    if (train_cmd->parsed()) return run_train(manifest, out, train_flags);
    if (finetune_cmd->parsed()) return run_finetune(ckpt, manifest, fraction, out, finetune_flags);
    if (eval_cmd->parsed()) return run_evaluate(ckpt, manifest, split, quantiles, out);
    if (predict_cmd->parsed()) return run_predict(ckpt, input, levels, dataset, header, out);
    if (importance_cmd->parsed()) return run_importance(ckpt, manifest, alpha, out);
    if (grad_cmd->parsed()) {
      // A config file or overrides pin the model; otherwise random tiny ones.
      bool pinned = !grad_flags.file.empty();
      for (const auto& o : grad_flags.overrides) pinned = pinned || o.rfind("model.", 0) == 0;
      return run_gradcheck(grad_flags, trials, tolerance, pinned);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
