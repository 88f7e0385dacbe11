// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Usage: acceptance [work_dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mmimpute/data.hpp"
#include "mmimpute/harness.hpp"
#include "mmimpute/model.hpp"
#include "mmimpute/promptgen.hpp"
#include "mmimpute/rng.hpp"

namespace fs = std::filesystem;
using namespace mmimpute;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates sub-checks; the first failures are kept for the report.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    ++failed_;
    if (failed_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  void note(const std::string& s) { info_ += (info_.empty() ? "" : "; ") + s; }
  Outcome outcome() const {
    std::ostringstream os;
    os << (total_ - failed_) << "/" << total_ << " checks";
    if (!info_.empty()) os << "; " << info_;
    if (failed_ > 0) os << "; failed: " << notes_;
    return {failed_ == 0, os.str()};
  }

 private:
  int total_ = 0;
  int failed_ = 0;
  std::string notes_;
  std::string info_;
};

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

fs::path g_work;

HarnessOptions options_for(const std::string& name) {
  HarnessOptions o;
  o.out = g_work / name;
  o.write_assignments = false;
  return o;
}

// Toy setting of the directional criteria: 4 classes, 200 per class, dim 16,
// noise 0.6, stub pool of 100 per class, 3 seeds, default optimizer.
ExperimentConfig toy_config(ModalityKind target) {
  ExperimentConfig c;
  c.toy.num_classes = 4;
  c.toy.per_class = 200;
  c.toy.dim = 16;
  c.toy.noise = 0.6;
  c.pool.per_class = 100;
  c.seeds = {1, 2, 3};
  c.target = target;
  c.p = 0.95;
  c.q = {0.0};
  return c;
}

double mean_top1(const ExperimentConfig& c, const std::string& out, double q = 0.0) {
  return aggregate(run_experiment(c, options_for(out)), q).mean;
}

// ---------------------------------------------------------------- 1

Outcome prompt_templates() {
  Checks ck;
  ck.expect(build_label_prompt("drinking coffee", "a person") == "A photo of a person drinking coffee", "label prompt");
  ck.expect(build_llm_request("drinking coffee") == "Provide 5 definitions of action class drinking coffee",
            "LLM request");
  ck.expect(build_llm_request("archery") == "Provide 5 definitions of action class archery", "LLM request 2");
  return ck.outcome();
}

// ---------------------------------------------------------------- 2

Outcome prompt_shape_law() {
  Checks ck;
  Rng rng(2026);
  int cases = 0;
  for (int t = 0; t < 1000; ++t) {
    const int tokens = static_cast<int>(rng.below(33));
    const int len = static_cast<int>(rng.below(17));
    const int dim = 1 + static_cast<int>(rng.below(24));
    MatrixXd x(tokens, dim);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    PromptBlock block;
    block.length = len;
    block.dim = dim;
    MatrixXd rows(len, dim);
    for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = rng.normal();
    block.table[complete_pattern()] = rows;
    const auto out = insert_prompt_tokens(x, block, complete_pattern());
    ck.expect(out.rows() == tokens + len && out.cols() == dim, "shape");
    ck.expect(out.topRows(len) == rows, "prompt rows on top");
    ck.expect(out.bottomRows(tokens) == x, "tokens below");
    ++cases;
  }
  ck.note(std::to_string(cases) + " random (L^v, L, d)");
  return ck.outcome();
}

// ---------------------------------------------------------------- 3

DatasetManifest synthetic_manifest(std::size_t n) {
  DatasetManifest m;
  m.name = "synthetic";
  m.num_classes = 1;
  m.class_names = {"c"};
  m.modalities = {ModalityKind::audio, ModalityKind::visual};
  for (std::size_t i = 0; i < n; ++i) {
    MultimodalSample s;
    s.id = "r" + std::to_string(i);
    s.payloads[ModalityKind::audio].path = "a";
    s.payloads[ModalityKind::visual].path = "v";
    m.records.push_back(s);
  }
  return m;
}

Outcome masking_properties(ModalityKind target) {
  Checks ck;
  Rng rng(target == ModalityKind::visual ? 31 : 32);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(1000);
    const std::uint64_t k = rng.below(1001);
    const double p = static_cast<double>(k) / 1000.0;
    const std::uint64_t seed = rng.next();
    const auto m = synthetic_manifest(n);
    const auto a = apply_missingness(m, Split::train, target, p, seed);
    const auto b = apply_missingness(m, Split::train, target, p, seed);
    // round-half-up(k/1000 * n) in integers
    const std::size_t expected = (2 * k * n + 1000) / 2000;
    ck.expect(a.masked_ids.size() == expected,
              "|mask| at p=" + std::to_string(p) + " N=" + std::to_string(n) + " is " +
                  std::to_string(a.masked_ids.size()) + ", want " + std::to_string(expected));
    ck.expect(a.masked_ids == b.masked_ids, "same seed, same mask");
    ck.expect(a.target_modality == target, "target modality recorded");
  }
  ck.note("1000 random (p, N, seed)");
  return ck.outcome();
}

// ---------------------------------------------------------------- 4

VectorXd random_vector(Rng& rng, int n) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

Outcome fusion_and_gradients(ModalityKind target) {
  Checks ck;
  Rng rng(target == ModalityKind::visual ? 41 : 42);
  double worst_fusion = 0;
  for (int t = 0; t < 100; ++t) {
    const int classes = 2 + static_cast<int>(rng.below(6));
    const int dim = 1 + static_cast<int>(rng.below(12));
    std::map<ModalityKind, LinearHead> heads;
    std::map<ModalityKind, VectorXd> emb;
    for (auto m : {ModalityKind::audio, ModalityKind::visual}) {
      LinearHead h{MatrixXd(classes, dim), random_vector(rng, classes)};
      for (Eigen::Index i = 0; i < h.weight.size(); ++i) h.weight.data()[i] = rng.normal();
      heads[m] = h;
      emb[m] = random_vector(rng, dim);
    }
    // independent oracle: explicit loops
    VectorXd oracle = VectorXd::Zero(classes);
    for (auto m : {ModalityKind::audio, ModalityKind::visual}) {
      for (int c = 0; c < classes; ++c) {
        double s = heads[m].bias[c];
        for (int k = 0; k < dim; ++k) s += heads[m].weight(c, k) * emb[m][k];
        oracle[c] += s / 2.0;
      }
    }
    worst_fusion = std::max(worst_fusion, (fuse_logits(heads, emb) - oracle).cwiseAbs().maxCoeff());
  }
  ck.expect(worst_fusion < 1e-6, "fusion error " + std::to_string(worst_fusion));

  double worst_rel = 0;
  const int dim = 8;
  for (int inst = 0; inst < 20; ++inst) {
    const bool prompting = inst % 2 == 0;
    const int tokens = prompting ? 2 : 0;
    ModelConfig cfg;
    cfg.modalities = {ModalityKind::audio, ModalityKind::visual};
    cfg.num_classes = 3;
    cfg.target = target;
    cfg.prompting = prompting;
    cfg.prompt_len = 2;
    FusionModel model(cfg, {{ModalityKind::audio, make_toy_encoder(ModalityKind::audio, dim, inst, tokens)},
                            {ModalityKind::visual, make_toy_encoder(ModalityKind::visual, dim, inst + 100, tokens)}});
    std::vector<MultimodalSample> batch;
    for (int i = 0; i < 6; ++i) {
      MultimodalSample s;
      s.id = std::to_string(i);
      s.label = i % 3;
      for (auto m : {ModalityKind::audio, ModalityKind::visual}) {
        Vector v(dim);
        for (auto& x : v) x = static_cast<float>(rng.normal());
        auto& slot = s.payloads[m];
        slot.inline_data = std::make_shared<const Vector>(v);
      }
      if (i == 2) {
        s.payloads[target].provenance = Provenance::zero;
        s.payloads[target].inline_data = std::make_shared<const Vector>(dim, 0.0f);
      }
      batch.push_back(s);
    }
    std::vector<const MultimodalSample*> ptrs;
    for (const auto& s : batch) ptrs.push_back(&s);
    auto params = model.init_params(static_cast<std::uint64_t>(inst));
    auto flat = params.flatten();
    for (auto& x : flat) x = 0.5 * rng.normal();
    params.assign(flat);
    auto grad = params.zeros_like();
    model.loss(params, ptrs, &grad);
    const auto g = grad.flatten();
    std::vector<double> fd(flat.size());
    const double h = 1e-5;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      auto plus = flat, minus = flat;
      plus[i] += h;
      minus[i] -= h;
      auto pp = params, pm = params;
      pp.assign(plus);
      pm.assign(minus);
      fd[i] = (model.loss(pp, ptrs) - model.loss(pm, ptrs)) / (2 * h);
    }
    double diff = 0, na = 0, nf = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      diff += (g[i] - fd[i]) * (g[i] - fd[i]);
      na += g[i] * g[i];
      nf += fd[i] * fd[i];
    }
    const double rel = std::sqrt(diff) / std::max(std::sqrt(std::max(na, nf)), 1e-12);
    worst_rel = std::max(worst_rel, rel);
  }
  ck.expect(worst_rel < 1e-4, "gradient relative error " + std::to_string(worst_rel));
  char buf[96];
  std::snprintf(buf, sizeof buf, "max fusion err %.1e, max grad rel err %.1e", worst_fusion, worst_rel);
  ck.note(buf);
  return ck.outcome();
}

// ---------------------------------------------------------------- 5

Outcome baseline_ordering(ModalityKind target, const std::string& tag) {
  Checks ck;
  const auto base = toy_config(target);
  const auto out = "c5-" + tag;
  auto run = [&](BaselinePreset p) { return mean_top1(with_preset(base, p), out); };
  const double gti = run(BaselinePreset::gti_mm);
  const double zf = run(BaselinePreset::zero_filling);
  const double lr = run(BaselinePreset::low_resource_multimodal);
  const double surv = run(BaselinePreset::audio_training);
  ck.note("gti_mm " + pct(gti) + ", zero_filling " + pct(zf) + ", low_resource_multimodal " + pct(lr) +
          ", surviving-only " + pct(surv));
  ck.expect(gti >= zf + 0.05, "gti_mm >= zero_filling + 5");
  ck.expect(gti >= lr + 0.05, "gti_mm >= low_resource_multimodal + 5");
  ck.expect(surv < gti, "surviving-only < gti_mm");
  return ck.outcome();
}

// ---------------------------------------------------------------- 6

Outcome zero_missing_equivalence(ModalityKind target, const std::string& tag) {
  Checks ck;
  auto base = toy_config(target);
  base.p = 0.0;
  const auto options = options_for("c6-" + tag);
  const auto data = prepare_dataset(base, options);
  const auto pool = prepare_pool(base, data, options);
  const int target_dim = data.manifest.dims.at(target);

  const std::vector<BaselinePreset> presets{BaselinePreset::gti_mm, BaselinePreset::zero_filling,
                                            BaselinePreset::low_resource_multimodal};
  for (auto seed : base.seeds) {
    std::vector<std::vector<MultimodalSample>> views;
    for (auto p : presets) {
      const auto c = with_preset(base, p);
      const auto view = make_training_view(c, data, &pool, Split::train, 0.0, 0.0, seed);
      std::vector<MultimodalSample> all;
      for (int epoch = 0; epoch < c.optimizer.epochs; ++epoch) {
        auto e = view_epoch(view, epoch, seed, target_dim);
        all.insert(all.end(), e.begin(), e.end());
      }
      views.push_back(std::move(all));
    }
    ck.expect(views[0] == views[1], "gti_mm and zero_filling training sets");
    ck.expect(views[0] == views[2], "gti_mm and low_resource_multimodal training sets");
  }
  std::vector<std::vector<double>> scores;
  for (auto p : presets) {
    const auto r = run_experiment(with_preset(base, p), options);
    std::vector<double> s;
    for (const auto& run : r.runs) {
      const auto& rep = run.by_q.at(0.0);
      s.push_back(rep.top1);
      s.push_back(rep.macro_f1);
      for (const auto& [k, v] : rep.topk) s.push_back(v);
    }
    scores.push_back(s);
  }
  ck.expect(scores[0] == scores[1], "gti_mm and zero_filling metrics");
  ck.expect(scores[0] == scores[2], "gti_mm and low_resource_multimodal metrics");
  ck.note("top1 seed1 " + pct(scores[0][0]));
  return ck.outcome();
}

// ---------------------------------------------------------------- 7

Outcome quantity_sweep() {
  Checks ck;
  const auto base = toy_config(ModalityKind::visual);
  const auto sw = sweep(base, SweepAxis::per_class, {"100", "20", "1"}, options_for("c7"));
  std::map<std::string, double> mean;
  std::map<std::string, int> n;
  for (const auto& r : sw.records) {
    if (r.metric != "top1") continue;
    mean[r.value] += r.score;
    ++n[r.value];
  }
  for (auto& [v, m] : mean) m /= n[v];
  ck.note("per_class 100: " + pct(mean["100"]) + ", 20: " + pct(mean["20"]) + ", 1: " + pct(mean["1"]));
  ck.expect(n["100"] == 3 && n["20"] == 3 && n["1"] == 3, "three seeds per value");
  ck.expect(std::abs(mean["20"] - mean["100"]) <= 0.03, "per_class 20 within 3 points of 100");
  ck.expect(mean["1"] <= mean["100"], "per_class 1 <= per_class 100");
  return ck.outcome();
}

// ---------------------------------------------------------------- 8

Outcome dropout_direction() {
  Checks ck;
  auto base = toy_config(ModalityKind::visual);
  base.q = {0.9};
  auto gd = with_preset(base, BaselinePreset::gti_mm_dropout);
  gd.p = 0.9;
  const auto zi = with_preset(base, BaselinePreset::mm_zero_imputation);
  const double a = mean_top1(gd, "c8", 0.9);
  const double b = mean_top1(zi, "c8", 0.9);
  ck.note("gti_mm_dropout " + pct(a) + ", mm_zero_imputation " + pct(b));
  ck.expect(a >= b, "gti_mm_dropout >= mm_zero_imputation at q=0.9");
  return ck.outcome();
}

// ---------------------------------------------------------------- 9

Outcome zero_shot_audit() {
  Checks ck;
  auto base = toy_config(ModalityKind::visual);
  base.optimizer.epochs = 3;
  const auto options = options_for("c9");
  const auto data = prepare_dataset(base, options);
  const auto pool = prepare_pool(base, data, options);
  std::map<std::string, int> asset_class;
  for (const auto& [c, assets] : pool.per_class) {
    for (const auto& a : assets) asset_class[a.asset_id] = a.class_index;
  }
  const int dim = data.manifest.dims.at(ModalityKind::visual);
  long checked = 0;
  for (auto preset : {BaselinePreset::zs_visual, BaselinePreset::zs_multimodal}) {
    const auto c = with_preset(base, preset);
    const bool multimodal = preset == BaselinePreset::zs_multimodal;
    const auto r = run_experiment(c, options);
    for (const auto& run : r.runs) {
      ck.expect(run.audit.target_real == 0, "no real visual payloads");
      ck.expect(run.audit.label_mismatches == 0, "labels match");
      const auto view = make_training_view(c, data, &pool, Split::train, 1.0, 0.0, run.seed);
      for (int epoch = 0; epoch < c.optimizer.epochs; ++epoch) {
        for (const auto& s : view_epoch(view, epoch, run.seed, dim)) {
          ++checked;
          const auto v = s.payloads.find(ModalityKind::visual);
          const bool synthetic = v != s.payloads.end() && v->second.provenance == Provenance::synthetic;
          ck.expect(synthetic, "every visual payload is synthetic");
          if (synthetic) {
            auto it = asset_class.find(v->second.asset_id);
            ck.expect(it != asset_class.end() && it->second == s.label, "asset class == sample label");
          }
          if (multimodal) {
            const auto a = s.payloads.find(ModalityKind::audio);
            ck.expect(a != s.payloads.end() && a->second.provenance == Provenance::real,
                      "zs_multimodal keeps the real audio");
          } else {
            ck.expect(!s.has(ModalityKind::audio), "zs_visual has no audio");
          }
        }
      }
    }
  }
  ck.note(std::to_string(checked) + " training samples audited");
  return ck.outcome();
}

// ---------------------------------------------------------------- 10

Outcome audio_target_suite() {
  Checks ck;
  auto base = toy_config(ModalityKind::audio);
  const auto options = options_for("c10-backend");
  const auto data = prepare_dataset(base, options);
  const auto pool = prepare_pool(base, data, options);
  bool audio_backend = pool.modality == ModalityKind::audio && pool.total() == 400;
  for (const auto& [c, assets] : pool.per_class) {
    for (const auto& a : assets) audio_backend = audio_backend && a.backend.find("text_to_audio") != std::string::npos;
  }
  ck.expect(audio_backend, "pool built by the text-to-audio stub");

  const std::pair<const char*, std::function<Outcome()>> parts[] = {
      {"masking", [] { return masking_properties(ModalityKind::audio); }},
      {"fusion/gradients", [] { return fusion_and_gradients(ModalityKind::audio); }},
      {"ordering", [] { return baseline_ordering(ModalityKind::audio, "audio"); }},
      {"p=0 equivalence", [] { return zero_missing_equivalence(ModalityKind::audio, "audio"); }},
  };
  for (const auto& [name, fn] : parts) {
    const auto o = fn();
    ck.expect(o.pass, std::string(name));
    ck.note(std::string(name) + " [" + (o.pass ? "pass" : "fail") + ": " + o.detail + "]");
  }
  return ck.outcome();
}

}  // namespace

int main(int argc, char** argv) {
  g_work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "mmimpute-acceptance";
  fs::create_directories(g_work);

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "prompt templates are exact", 1, prompt_templates},
      {2, "prompt insertion shape law", 5, prompt_shape_law},
      {3, "mask size and determinism", 10, [] { return masking_properties(ModalityKind::visual); }},
      {4, "fusion oracle and gradient check", 30, [] { return fusion_and_gradients(ModalityKind::visual); }},
      {5, "baseline ordering at p=0.95", 300, [] { return baseline_ordering(ModalityKind::visual, "visual"); }},
      {6, "p=0 equivalence of multimodal presets", 120,
       [] { return zero_missing_equivalence(ModalityKind::visual, "visual"); }},
      {7, "pool quantity sweep", 600, quantity_sweep},
      {8, "dropout robustness at q=0.9", 300, dropout_direction},
      {9, "zero-shot training views", 60, zero_shot_audit},
      {10, "criteria 3-6 with audio as the missing modality", 600, audio_target_suite},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + std::to_string(static_cast<int>(c.budget_s)) + " s budget";
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
