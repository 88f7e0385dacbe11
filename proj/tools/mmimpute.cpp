// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Precedence: built-in defaults < --config file <
// command-line flags.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "mmimpute/error.hpp"
#include "mmimpute/harness.hpp"
#include "mmimpute/payload.hpp"
#include "mmimpute/plot.hpp"

namespace fs = std::filesystem;
using namespace mmimpute;

namespace {

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("not a number: '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string> parse_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Each flag writes into the config only when given on the command line, so
// a --config file can supply everything else.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App* app) : app_(app) {}

  template <typename T, typename Apply>
  void add(const std::string& name, T default_value, const std::string& help, Apply apply) {
    auto value = std::make_shared<T>(default_value);
    auto* opt = app_->add_option(name, *value, help)->capture_default_str();
    setters_.push_back([opt, value, apply](ExperimentConfig& c) {
      if (opt->count() > 0) apply(c, *value);
    });
  }

  void flag(const std::string& name, const std::string& help, std::function<void(ExperimentConfig&, bool)> apply) {
    auto value = std::make_shared<bool>(false);
    auto* opt = app_->add_flag(name, *value, help);
    setters_.push_back([opt, value, apply](ExperimentConfig& c) {
      if (opt->count() > 0) apply(c, *value);
    });
  }

  void apply(ExperimentConfig& c) const {
    for (const auto& s : setters_) s(c);
  }

 private:
  CLI::App* app_;
  std::vector<std::function<void(ExperimentConfig&)>> setters_;
};

struct Common {
  std::string out = "runs";
  std::string config;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

void add_common(CLI::App* app, Common& common) {
  app->add_option("--out", common.out, "Output root directory")->capture_default_str();
  app->add_option("--config", common.config, "JSON experiment config; command-line flags take precedence");
  app->add_option("--seed", common.seed,
                  "Base seed. make-toy: dataset seed (default 1); build-pool: pool seed (default 0); "
                  "experiments: seeds S,S+1,S+2 unless --seeds is given");
  app->add_flag("-v,--verbose", common.verbose, "Progress messages on stderr");
}

void add_dataset_flags(ConfigFlags& f) {
  const ExperimentConfig d;
  f.add<std::string>("--dataset", d.dataset, "Built-in toy-gauss or a manifest.jsonl path",
                     [](ExperimentConfig& c, const std::string& v) { c.dataset = v; });
  f.add<std::string>("--features", d.features, "Class feature table (JSON) for the stub backend on external data",
                     [](ExperimentConfig& c, const std::string& v) { c.features = v; });
  f.add<std::string>("--target", std::string(to_string(d.target)), "Missing modality: visual, audio or text",
                     [](ExperimentConfig& c, const std::string& v) { c.target = parse_modality(v); });
  f.add<int>("--toy-classes", d.toy.num_classes, "toy-gauss: number of classes",
             [](ExperimentConfig& c, int v) { c.toy.num_classes = v; });
  f.add<int>("--toy-per-class", d.toy.per_class, "toy-gauss: samples per class",
             [](ExperimentConfig& c, int v) { c.toy.per_class = v; });
  f.add<int>("--toy-dim", d.toy.dim, "toy-gauss: payload dimension", [](ExperimentConfig& c, int v) { c.toy.dim = v; });
  f.add<double>("--toy-noise", d.toy.noise, "toy-gauss: per-sample noise std",
                [](ExperimentConfig& c, double v) { c.toy.noise = v; });
}

void add_pool_flags(ConfigFlags& f) {
  const ExperimentConfig d;
  f.add<int>("--per-class", d.pool.per_class, "Synthetic assets generated per class",
             [](ExperimentConfig& c, int v) { c.pool.per_class = v; });
  f.flag("--ugc", "Randomize the guidance scale uniformly in [1, 5] (default: fixed 5)",
         [](ExperimentConfig& c, bool v) { c.pool.ugc = v; });
  f.flag("--multidomain", "Use the multi-domain prompt list", [](ExperimentConfig& c, bool v) { c.pool.multidomain = v; });
  f.flag("--llm", "LLM-assisted prompts (5 definitions per class)", [](ExperimentConfig& c, bool v) { c.pool.llm = v; });
  f.add<std::string>("--performers", d.pool.performer_set, "Performer set: default (5 performers) or restricted",
                     [](ExperimentConfig& c, const std::string& v) { c.pool.performer_set = v; });
  f.add<std::string>("--assignment", d.pool.assignment, "Performer/domain assignment: balanced or uniform",
                     [](ExperimentConfig& c, const std::string& v) { c.pool.assignment = v; });
  f.add<double>("--stub-noise", d.pool.stub_noise, "Stub backend sample noise at guidance 5",
                [](ExperimentConfig& c, double v) { c.pool.stub_noise = v; });
  f.add<std::string>("--backend-url", d.pool.backend_url, "Live generation endpoint (empty: stub backend)",
                     [](ExperimentConfig& c, const std::string& v) { c.pool.backend_url = v; });
  f.add<std::string>("--llm-url", d.pool.llm_url, "Live LLM endpoint (empty: offline canned answers)",
                     [](ExperimentConfig& c, const std::string& v) { c.pool.llm_url = v; });
  f.add<std::string>("--pool-dir", d.pool.dir, "Pool directory (empty: derived under --out)",
                     [](ExperimentConfig& c, const std::string& v) { c.pool.dir = v; });
}

void add_experiment_flags(ConfigFlags& f, bool with_preset) {
  const ExperimentConfig d;
  f.add<double>("--p", d.p, "Training missing ratio", [](ExperimentConfig& c, double v) { c.p = v; });
  f.add<std::string>("--q", "0", "Comma-separated test missing ratios",
                     [](ExperimentConfig& c, const std::string& v) { c.q = parse_doubles(v); });
  if (with_preset) {
    f.add<std::string>("--preset", std::string(to_string(d.preset)), "Baseline preset",
                       [](ExperimentConfig& c, const std::string& v) { c.preset = parse_preset(v); });
  }
  f.add<std::string>("--seeds", "1,2,3", "Comma-separated training seeds",
                     [](ExperimentConfig& c, const std::string& v) {
                       c.seeds.clear();
                       for (double s : parse_doubles(v)) c.seeds.push_back(static_cast<std::uint64_t>(s));
                     });
  f.add<double>("--lr", d.optimizer.lr, "AdamW learning rate", [](ExperimentConfig& c, double v) { c.optimizer.lr = v; });
  f.add<double>("--weight-decay", d.optimizer.weight_decay, "AdamW weight decay",
                [](ExperimentConfig& c, double v) { c.optimizer.weight_decay = v; });
  f.add<int>("--batch-size", d.optimizer.batch_size, "Batch size",
             [](ExperimentConfig& c, int v) { c.optimizer.batch_size = v; });
  f.add<int>("--epochs", d.optimizer.epochs, "Training epochs (30 for text-visual tasks)",
             [](ExperimentConfig& c, int v) { c.optimizer.epochs = v; });
  f.add<double>("--dropout-rate", d.dropout_rate, "Target-modality dropout rate; negative: equal to each q",
                [](ExperimentConfig& c, double v) { c.dropout_rate = v; });
  f.flag("--prompting", "Missing-aware prompt tokens in the encoders' last layer",
         [](ExperimentConfig& c, bool v) { c.prompting = v; });
  f.add<int>("--prompt-len", d.prompt_len, "Prompt tokens per pattern", [](ExperimentConfig& c, int v) { c.prompt_len = v; });
  f.add<std::string>("--prompt-mode", "patterned", "Prompt table: patterned (per missingness pattern) or single",
                     [](ExperimentConfig& c, const std::string& v) {
                       if (v != "patterned" && v != "single") throw ValidationError("--prompt-mode: " + v);
                       c.prompt_mode = v == "patterned" ? PromptTableMode::patterned : PromptTableMode::single;
                     });
  f.add<std::string>("--encoder", d.encoder, "Encoder: toy (fixed random projection) or adapter (payloads are embeddings)",
                     [](ExperimentConfig& c, const std::string& v) { c.encoder = v; });
  f.add<int>("--token-count", d.token_count, "Encoder tokens when prompting",
             [](ExperimentConfig& c, int v) { c.token_count = v; });
  f.add<std::string>("--missing-treatment", "zero_fill", "Test-time missing payload: zero_fill or skip",
                     [](ExperimentConfig& c, const std::string& v) {
                       if (v != "zero_fill" && v != "skip") throw ValidationError("--missing-treatment: " + v);
                       c.missing_treatment = v == "skip" ? MissingTreatment::skip : MissingTreatment::zero_fill;
                     });
  f.add<std::string>("--schedule", "per_epoch", "Imputation draws: per_epoch or frozen",
                     [](ExperimentConfig& c, const std::string& v) {
                       if (v != "per_epoch" && v != "frozen") throw ValidationError("--schedule: " + v);
                       c.schedule = v == "frozen" ? ImputationSchedule::frozen : ImputationSchedule::per_epoch;
                     });
  f.flag("--mask-reuse", "Reuse one training mask across seeds", [](ExperimentConfig& c, bool v) { c.mask_reuse = v; });
  f.flag("--no-val-selection", "Evaluate the last epoch instead of the best validation epoch",
         [](ExperimentConfig& c, bool v) { c.select_best_val = !v; });
  f.add<int>("--threads", d.threads, "Parallel seeds (0: one per seed)", [](ExperimentConfig& c, int v) { c.threads = v; });
}

ExperimentConfig resolve(const Common& common, const ConfigFlags& flags, bool seed_is_pool_seed) {
  ExperimentConfig c;
  if (!common.config.empty()) c = load_config(common.config, c);
  if (common.seed) {
    if (seed_is_pool_seed) {
      c.pool.seed = *common.seed;
    } else {
      c.seeds = {*common.seed, *common.seed + 1, *common.seed + 2};
    }
  }
  flags.apply(c);
  return c;
}

HarnessOptions harness_options(const Common& common) {
  HarnessOptions o;
  o.out = common.out;
  o.quiet = !common.verbose;
  return o;
}

void print_rows(const std::vector<SuiteRow>& rows) {
  std::printf("%-26s %6s %6s %8s %8s\n", "preset", "p", "q", "mean", "std");
  for (const auto& r : rows) {
    std::printf("%-26s %6.3g %6.3g %8.4f %8.4f\n", std::string(to_string(r.preset)).c_str(), r.p, r.q, r.score.mean,
                r.score.std);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"mmimpute: missing-modality imputation experiments"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  Common common;

  // make-toy
  auto* make_toy = app.add_subcommand("make-toy", "Write the toy-gauss dataset to a directory");
  add_common(make_toy, common);
  ToyOptions toy;
  make_toy->add_option("--classes", toy.num_classes, "Number of classes")->capture_default_str();
  make_toy->add_option("--samples-per-class", toy.per_class, "Samples per class")->capture_default_str();
  make_toy->add_option("--dim", toy.dim, "Payload dimension")->capture_default_str();
  make_toy->add_option("--noise", toy.noise, "Per-sample noise std")->capture_default_str();

  // build-pool
  auto* build = app.add_subcommand("build-pool", "Generate (or resume) a synthetic pool");
  add_common(build, common);
  ConfigFlags build_flags(build);
  add_dataset_flags(build_flags);
  add_pool_flags(build_flags);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train and evaluate one preset over all seeds");
  add_common(train_cmd, common);
  ConfigFlags train_flags(train_cmd);
  add_dataset_flags(train_flags);
  add_pool_flags(train_flags);
  add_experiment_flags(train_flags, true);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Re-evaluate the checkpoints of a trained config");
  add_common(eval_cmd, common);
  ConfigFlags eval_flags(eval_cmd);
  add_dataset_flags(eval_flags);
  add_pool_flags(eval_flags);
  add_experiment_flags(eval_flags, true);
  std::string eval_q = "0";
  eval_cmd->add_option("--eval-q", eval_q, "Comma-separated test ratios to evaluate")->capture_default_str();

  // suite
  auto* suite_cmd = app.add_subcommand("suite", "Run the baseline comparison table");
  add_common(suite_cmd, common);
  ConfigFlags suite_flags(suite_cmd);
  add_dataset_flags(suite_flags);
  add_pool_flags(suite_flags);
  add_experiment_flags(suite_flags, false);
  std::string suite_presets_csv;
  suite_cmd->add_option("--presets", suite_presets_csv,
                        "Comma-separated presets (default: the five comparison presets plus zs_visual, zs_multimodal)");
  std::string suite_results;
  suite_cmd->add_option("--results", suite_results, "Directory for the table and plots (default: <out>/suite)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one axis and merge the results");
  add_common(sweep_cmd, common);
  ConfigFlags sweep_flags(sweep_cmd);
  add_dataset_flags(sweep_flags);
  add_pool_flags(sweep_flags);
  add_experiment_flags(sweep_flags, false);
  std::string axis;
  std::string values;
  std::string sweep_presets_csv = "gti_mm";
  std::string sweep_results;
  sweep_cmd->add_option("--axis", axis, "p, q, per_class, diversity, performer_set or prompt_strategy")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values, e.g. 1,5,20,100 for per_class")->required();
  sweep_cmd->add_option("--presets", sweep_presets_csv, "Comma-separated presets")->capture_default_str();
  sweep_cmd->add_option("--results", sweep_results, "Directory for the table and plots (default: <out>/sweep-<axis>)");

  // report
  auto* report_cmd = app.add_subcommand("report", "Print a results table and redraw its plots");
  add_common(report_cmd, common);
  std::string report_path;
  report_cmd->add_option("--results", report_path, "results.csv from suite or sweep")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto options = harness_options(common);

  if (*make_toy) {
    if (common.seed) toy.seed = *common.seed;
    if (!common.config.empty()) throw ValidationError("make-toy takes no --config");
    if (toy.per_class < 5) throw ValidationError("--samples-per-class must be >= 5");
    auto ds = make_toy_dataset(toy, common.out);
    std::printf("%s\n%s\n", ds.manifest_path.string().c_str(), ds.features_path.string().c_str());
    return 0;
  }
  if (*build) {
    auto c = resolve(common, build_flags, true);
    validate_config(c);
    const auto data = prepare_dataset(c, options);
    const auto pool = prepare_pool(c, data, options);
    std::printf("%s (%zu assets)\n", pool.manifest_path.string().c_str(), pool.total());
    return 0;
  }
  if (*train_cmd) {
    auto c = resolve(common, train_flags, false);
    const auto result = run_experiment(c, options);
    emit_results(result, result.run_dir);
    std::printf("run %s\n", result.run_dir.string().c_str());
    for (double q : c.q) {
      const auto a = aggregate(result, q);
      std::printf("q=%-6g top1 %.4f +- %.4f\n", q, a.mean, a.std);
    }
    return 0;
  }
  if (*eval_cmd) {
    auto c = resolve(common, eval_flags, false);
    const auto result = evaluate_run(c, parse_doubles(eval_q), options);
    for (double q : result.config.q) {
      const auto top1 = aggregate(result, q, "top1");
      const auto f1 = aggregate(result, q, "macro_f1");
      std::printf("q=%-6g top1 %.4f +- %.4f  macro_f1 %.4f +- %.4f\n", q, top1.mean, top1.std, f1.mean, f1.std);
    }
    return 0;
  }
  if (*suite_cmd) {
    auto c = resolve(common, suite_flags, false);
    std::vector<BaselinePreset> presets = suite_presets();
    if (!suite_presets_csv.empty()) {
      presets.clear();
      for (const auto& name : parse_list(suite_presets_csv)) presets.push_back(parse_preset(name));
    }
    // Validate every preset before running any.
    for (auto preset : presets) validate_config(with_preset(c, preset));
    const auto suite = run_baseline_suite(c, options, presets);
    const fs::path dir = suite_results.empty() ? fs::path(common.out) / "suite" : fs::path(suite_results);
    const auto files = emit_results(suite, dir);
    print_rows(suite.rows);
    std::printf("wrote %s\n", files.front().string().c_str());
    return 0;
  }
  if (*sweep_cmd) {
    auto c = resolve(common, sweep_flags, false);
    std::vector<BaselinePreset> presets;
    for (const auto& name : parse_list(sweep_presets_csv)) presets.push_back(parse_preset(name));
    const auto ax = parse_axis(axis);
    const auto result = sweep(c, ax, parse_list(values), options, presets);
    const fs::path dir =
        sweep_results.empty() ? fs::path(common.out) / ("sweep-" + axis) : fs::path(sweep_results);
    const auto files = emit_results(result, dir);
    std::printf("%zu runs\n", result.experiments.size());
    for (const auto& f : files) std::printf("wrote %s\n", f.string().c_str());
    return 0;
  }
  if (*report_cmd) {
    const auto text = read_file(report_path);
    const auto dir = fs::path(report_path).parent_path();
    if (text.rfind("preset,p,q,mean,std,seeds", 0) == 0) {
      SuiteResult suite;
      suite.rows = parse_suite_table(text);
      print_rows(suite.rows);
      emit_results(suite, dir);
    } else {
      SweepResult sw;
      sw.records = parse_sweep_table(text);
      if (sw.records.empty()) throw ValidationError(report_path + " has no rows");
      sw.axis = parse_axis(sw.records.front().axis);
      for (const auto& r : sw.records) {
        if (std::find(sw.values.begin(), sw.values.end(), r.value) == sw.values.end()) sw.values.push_back(r.value);
      }
      std::printf("%-12s %-26s %6s %-9s %8s\n", "value", "preset", "q", "metric", "score");
      for (const auto& r : sw.records) {
        std::printf("%-12s %-26s %6.3g %-9s %8.4f  seed %llu\n", r.value.c_str(), r.preset.c_str(), r.q,
                    r.metric.c_str(), r.score, static_cast<unsigned long long>(r.seed));
      }
      emit_results(sw, dir);
    }
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failed: %s\n", e.what());
    return 2;
  }
}
