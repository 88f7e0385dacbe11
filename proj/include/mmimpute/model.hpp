// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmimpute/data.hpp"

namespace mmimpute {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Frozen feature extractor for one modality. Token-mode encoders also expose
// the input sequence of their last layer and that layer itself, which is
// where prompt rows are inserted.
class BackboneEncoder {
 public:
  virtual ~BackboneEncoder() = default;

  virtual ModalityKind modality() const = 0;
  virtual std::string name() const = 0;  // unique per weights; used as cache key
  virtual int input_dim() const = 0;     // 0 = any
  virtual int embed_dim() const = 0;  // length of encode()
  virtual VectorXd encode(std::span<const float> payload) const = 0;

  virtual bool token_mode() const { return false; }
  virtual int token_count() const { return 0; }
  virtual int token_dim() const { return 0; }
  // Last-layer input, token_count() x token_dim().
  virtual MatrixXd tokens(std::span<const float> payload) const;
  // Maps a (rows x token_dim) sequence to a token_dim embedding.
  virtual VectorXd last_layer(const MatrixXd& sequence) const;
  // d(loss)/d(sequence) given d(loss)/d(output).
  virtual MatrixXd last_layer_backward(const MatrixXd& sequence, const VectorXd& grad_output) const;

  virtual std::uint64_t parameter_checksum() const = 0;
};

// Fixed orthonormal projection Q (QR of a seeded Gaussian); encode(x) = Q x.
// With token_count > 0, Q x is reshaped row-major into token_count tokens and
// the last layer is frozen single-query attention pooling followed by a fixed
// orthonormal value map.
class ToyEncoder : public BackboneEncoder {
 public:
  ToyEncoder(ModalityKind modality, int input_dim, std::uint64_t seed, int token_count = 0);

  ModalityKind modality() const override { return modality_; }
  std::string name() const override;
  int input_dim() const override { return dim_; }
  int embed_dim() const override { return dim_; }
  VectorXd encode(std::span<const float> payload) const override;

  bool token_mode() const override { return token_count_ > 0; }
  int token_count() const override { return token_count_; }
  int token_dim() const override { return token_count_ > 0 ? dim_ / token_count_ : 0; }
  MatrixXd tokens(std::span<const float> payload) const override;
  VectorXd last_layer(const MatrixXd& sequence) const override;
  MatrixXd last_layer_backward(const MatrixXd& sequence, const VectorXd& grad_output) const override;

  std::uint64_t parameter_checksum() const override;
  const MatrixXd& projection() const { return projection_; }

 private:
  void check_input(std::span<const float> payload) const;

  ModalityKind modality_;
  int dim_;
  std::uint64_t seed_;
  int token_count_;
  MatrixXd projection_;
  VectorXd query_;
  MatrixXd value_;
};

// Pass-through for precomputed embeddings: the payload already is the embedding.
class AdapterEncoder : public BackboneEncoder {
 public:
  AdapterEncoder(ModalityKind modality, int dim, std::string tag = "adapter");
  ModalityKind modality() const override { return modality_; }
  std::string name() const override;
  int input_dim() const override { return dim_; }
  int embed_dim() const override { return dim_; }
  VectorXd encode(std::span<const float> payload) const override;
  std::uint64_t parameter_checksum() const override { return 0; }

 private:
  ModalityKind modality_;
  int dim_;
  std::string tag_;
};

std::shared_ptr<BackboneEncoder> make_toy_encoder(ModalityKind modality, int dim, std::uint64_t seed,
                                                  int token_count = 0);

// Memoizes encoder outputs by (encoder name, payload hash). Concurrent reads,
// serialized writes.
class EmbeddingCache {
 public:
  VectorXd embed(const BackboneEncoder& encoder, std::span<const float> payload);
  MatrixXd tokens(const BackboneEncoder& encoder, std::span<const float> payload);
  long hits() const { return hits_.load(); }
  long misses() const { return misses_.load(); }

 private:
  struct Key {
    std::string encoder;
    std::uint64_t hash;
    bool tokens;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  mutable std::shared_mutex mutex_;
  std::unordered_map<Key, MatrixXd, KeyHash> entries_;
  std::atomic<long> hits_{0};
  std::atomic<long> misses_{0};
};

// Learnable prompt rows per missingness pattern, prepended to the last-layer
// input of a token-mode encoder.
struct PromptBlock {
  int length = 0;
  int dim = 0;
  std::map<std::string, MatrixXd> table;  // pattern -> length x dim

  const MatrixXd& rows(const std::string& pattern) const;
};

std::string complete_pattern();
std::string missing_pattern(ModalityKind target);  // e.g. "visual_missing"

// (L + L^m) x d: the pattern's prompt rows followed by `tokens`.
MatrixXd insert_prompt_tokens(const MatrixXd& tokens, const PromptBlock& prompt, const std::string& pattern);

struct LinearHead {
  MatrixXd weight;  // C x d
  VectorXd bias;    // C
};

// Mean over the given modalities of W_m e_m + b_m.
VectorXd fuse_logits(const std::map<ModalityKind, LinearHead>& heads,
                     const std::map<ModalityKind, VectorXd>& embeddings);

struct ModelParams {
  std::map<ModalityKind, LinearHead> heads;
  std::map<ModalityKind, PromptBlock> prompts;

  std::size_t size() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  // "head.audio.weight[4x16]" style descriptors, in flatten() order.
  std::vector<std::string> layout() const;
  ModelParams zeros_like() const;
};

enum class PromptTableMode { patterned, single };
enum class MissingTreatment { zero_fill, skip };  // test-time handling of a masked payload
enum class ZeroSpace { payload, embedding };

struct ModelConfig {
  std::vector<ModalityKind> modalities;  // 1 (uni-modal) or 2 (late fusion)
  int num_classes = 0;
  ModalityKind target = ModalityKind::visual;
  bool prompting = false;
  int prompt_len = 5;
  PromptTableMode prompt_mode = PromptTableMode::patterned;
  MissingTreatment missing_treatment = MissingTreatment::zero_fill;
  ZeroSpace zero_space = ZeroSpace::payload;
  double head_init_std = 0.02;
  double prompt_init_std = 0.02;
};

struct Prediction {
  int label = 0;
  VectorXd logits;
};

class FusionModel {
 public:
  FusionModel(ModelConfig config, std::map<ModalityKind, std::shared_ptr<const BackboneEncoder>> encoders,
              std::shared_ptr<EmbeddingCache> cache = nullptr, std::shared_ptr<PayloadStore> store = nullptr);

  const ModelConfig& config() const { return config_; }
  const BackboneEncoder& encoder(ModalityKind m) const;
  bool uses_prompts(ModalityKind m) const;
  int head_dim(ModalityKind m) const;
  std::uint64_t backbone_checksum() const;

  ModelParams init_params(std::uint64_t seed) const;

  VectorXd logits(const ModelParams& params, const MultimodalSample& sample) const;

  // Mean cross-entropy over `batch`; accumulates d(loss)/d(params) into `grad`
  // (shaped like params) when non-null.
  double loss(const ModelParams& params, std::span<const MultimodalSample* const> batch,
              ModelParams* grad = nullptr) const;

  std::string pattern_of(const MultimodalSample& sample) const;

 private:
  struct ModalityPass {
    ModalityKind modality;
    VectorXd embedding;
    MatrixXd sequence;  // prompt path only
    std::string pattern;
  };
  std::vector<ModalityPass> run_encoders(const ModelParams& params, const MultimodalSample& sample) const;

  ModelConfig config_;
  std::map<ModalityKind, std::shared_ptr<const BackboneEncoder>> encoders_;
  std::shared_ptr<EmbeddingCache> cache_;
  std::shared_ptr<PayloadStore> store_;
};

// Replaces the `modality` payload of each sample with zeros with probability
// `rate` (independent Bernoulli draws, seeded).
std::vector<MultimodalSample> modality_dropout(std::vector<MultimodalSample> batch, ModalityKind modality,
                                               double rate, std::uint64_t seed, int dim);

struct OptimizerConfig {
  double lr = 5e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 128;
  int epochs = 15;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = -1.0;
};

struct TrainState {
  ModelParams params;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  long step = 0;
  int epoch = 0;  // completed epochs
  std::uint64_t seed = 0;
  ModelParams best_params;
  double best_val = -1.0;
  int best_epoch = -1;
  std::vector<EpochLog> history;

  // best-val snapshot when one was taken, else the latest parameters
  const ModelParams& eval_params() const { return best_epoch >= 0 ? best_params : params; }
};

using EpochSource = std::function<std::vector<MultimodalSample>(int epoch)>;

struct TrainOptions {
  std::uint64_t seed = 0;
  std::vector<MultimodalSample> val;  // empty: no best-val selection
  int stop_after_epoch = -1;          // stop once this many epochs are complete
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// AdamW (decoupled weight decay) on the cross-entropy of fused logits. Only
// head and prompt parameters are updated. Every random choice is derived from
// (seed, epoch), so a restored state continues bit-identically.
TrainState train(const FusionModel& model, const EpochSource& source, const OptimizerConfig& optimizer,
                 const TrainOptions& options, std::optional<TrainState> resume = std::nullopt);

double accuracy(const FusionModel& model, const ModelParams& params, const std::vector<MultimodalSample>& samples);

// Masked samples get their target payload zero-filled (or dropped from fusion
// under MissingTreatment::skip) before encoding.
Prediction predict(const FusionModel& model, const ModelParams& params, const MultimodalSample& sample,
                   const MaskPlan* test_plan = nullptr, int target_dim = 0);

// Header line (JSON) followed by f64 payload-format arrays:
// params, adam_m, adam_v, best_params.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const std::string& config_hash,
                     const std::string& metrics_json = "{}");
TrainState load_checkpoint(const std::filesystem::path& path, const FusionModel& model,
                           std::string* config_hash = nullptr);

}  // namespace mmimpute
