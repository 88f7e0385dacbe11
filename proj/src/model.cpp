// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include "mmimpute/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mmimpute/error.hpp"
#include "mmimpute/hash.hpp"
#include "mmimpute/rng.hpp"

namespace mmimpute {

using nlohmann::json;

MatrixXd BackboneEncoder::tokens(std::span<const float>) const {
  throw ValidationError("encoder " + name() + " does not expose last-layer tokens");
}

VectorXd BackboneEncoder::last_layer(const MatrixXd&) const {
  throw ValidationError("encoder " + name() + " does not expose a last layer");
}

MatrixXd BackboneEncoder::last_layer_backward(const MatrixXd&, const VectorXd&) const {
  throw ValidationError("encoder " + name() + " does not expose a last layer");
}

namespace {

MatrixXd seeded_orthonormal(int n, Rng& rng) {
  MatrixXd g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, n);
  // Fix column signs so Q does not depend on the QR implementation's convention.
  const MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

std::uint64_t checksum_matrix(const MatrixXd& m, std::uint64_t h) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    h ^= std::bit_cast<std::uint64_t>(m.data()[i]);
    h = mix64(h);
  }
  return h;
}

VectorXd to_eigen(std::span<const float> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

VectorXd softmax(const VectorXd& z) {
  const double mx = z.maxCoeff();
  VectorXd e = (z.array() - mx).exp();
  return e / e.sum();
}

int argmax_lowest(const VectorXd& z) {
  int best = 0;
  for (int i = 1; i < z.size(); ++i) {
    if (z(i) > z(best)) best = i;
  }
  return best;
}

}  // namespace

ToyEncoder::ToyEncoder(ModalityKind modality, int input_dim, std::uint64_t seed, int token_count)
    : modality_(modality), dim_(input_dim), seed_(seed), token_count_(token_count) {
  if (input_dim <= 0) throw ValidationError("toy encoder: input_dim must be positive");
  if (token_count < 0 || (token_count > 0 && input_dim % token_count != 0)) {
    throw ValidationError("toy encoder: token_count " + std::to_string(token_count) + " must divide input_dim " +
                          std::to_string(input_dim));
  }
  Rng rng(derive_seed(seed, 0x656e636f646572 /* encoder */, static_cast<std::uint64_t>(modality),
                      static_cast<std::uint64_t>(input_dim)));
  projection_ = seeded_orthonormal(dim_, rng);
  if (token_count_ > 0) {
    const int d = token_dim();
    query_.resize(d);
    for (int i = 0; i < d; ++i) query_(i) = rng.normal();
    value_ = seeded_orthonormal(d, rng);
  }
}

std::string ToyEncoder::name() const {
  std::ostringstream os;
  os << "toy-" << to_string(modality_) << "-d" << dim_ << "-t" << token_count_ << "-s" << seed_;
  return os.str();
}

void ToyEncoder::check_input(std::span<const float> payload) const {
  if (static_cast<int>(payload.size()) != dim_) {
    throw ValidationError("encoder " + name() + ": payload dim " + std::to_string(payload.size()) + ", expected " +
                          std::to_string(dim_));
  }
}

VectorXd ToyEncoder::encode(std::span<const float> payload) const {
  check_input(payload);
  return projection_ * to_eigen(payload);
}

MatrixXd ToyEncoder::tokens(std::span<const float> payload) const {
  if (token_count_ == 0) return BackboneEncoder::tokens(payload);
  const VectorXd z = encode(payload);
  const int d = token_dim();
  MatrixXd seq(token_count_, d);
  for (int j = 0; j < token_count_; ++j) seq.row(j) = z.segment(j * d, d).transpose();
  return seq;
}

VectorXd ToyEncoder::last_layer(const MatrixXd& sequence) const {
  if (token_count_ == 0) return BackboneEncoder::last_layer(sequence);
  if (sequence.cols() != token_dim() || sequence.rows() == 0) {
    throw ValidationError("encoder " + name() + ": last layer expects rows x " + std::to_string(token_dim()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(token_dim()));
  const VectorXd alpha = softmax(sequence * query_ * scale);
  return value_ * (sequence.transpose() * alpha);
}

MatrixXd ToyEncoder::last_layer_backward(const MatrixXd& sequence, const VectorXd& grad_output) const {
  if (token_count_ == 0) return BackboneEncoder::last_layer_backward(sequence, grad_output);
  const double scale = 1.0 / std::sqrt(static_cast<double>(token_dim()));
  const VectorXd alpha = softmax(sequence * query_ * scale);
  const VectorXd grad_pooled = value_.transpose() * grad_output;
  const VectorXd grad_alpha = sequence * grad_pooled;
  const double mean_grad = alpha.dot(grad_alpha);
  const VectorXd grad_scores = alpha.array() * (grad_alpha.array() - mean_grad);
  MatrixXd grad = alpha * grad_pooled.transpose();
  grad += grad_scores * (query_.transpose() * scale);
  return grad;
}

std::uint64_t ToyEncoder::parameter_checksum() const {
  std::uint64_t h = checksum_matrix(projection_, 0x70726f6a);
  h = checksum_matrix(query_, h);
  return checksum_matrix(value_, h);
}

AdapterEncoder::AdapterEncoder(ModalityKind modality, int dim, std::string tag)
    : modality_(modality), dim_(dim), tag_(std::move(tag)) {
  if (dim <= 0) throw ValidationError("adapter encoder: dim must be positive");
}

std::string AdapterEncoder::name() const {
  return tag_ + "-" + std::string(to_string(modality_)) + "-d" + std::to_string(dim_);
}

VectorXd AdapterEncoder::encode(std::span<const float> payload) const {
  if (static_cast<int>(payload.size()) != dim_) {
    throw ValidationError("adapter " + name() + ": embedding dim " + std::to_string(payload.size()) +
                          ", expected " + std::to_string(dim_));
  }
  return to_eigen(payload);
}

std::shared_ptr<BackboneEncoder> make_toy_encoder(ModalityKind modality, int dim, std::uint64_t seed,
                                                  int token_count) {
  return std::make_shared<ToyEncoder>(modality, dim, seed, token_count);
}

std::size_t EmbeddingCache::KeyHash::operator()(const Key& k) const {
  return static_cast<std::size_t>(mix64(fnv1a(k.encoder) ^ k.hash ^ (k.tokens ? 0x746f6bULL : 0ULL)));
}

VectorXd EmbeddingCache::embed(const BackboneEncoder& encoder, std::span<const float> payload) {
  Key key{encoder.name(), hash_floats(payload), false};
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      hits_.fetch_add(1);
      return it->second.col(0);
    }
  }
  misses_.fetch_add(1);
  MatrixXd value = encoder.encode(payload);
  std::unique_lock lock(mutex_);
  return entries_.try_emplace(std::move(key), std::move(value)).first->second.col(0);
}

MatrixXd EmbeddingCache::tokens(const BackboneEncoder& encoder, std::span<const float> payload) {
  Key key{encoder.name(), hash_floats(payload), true};
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      hits_.fetch_add(1);
      return it->second;
    }
  }
  misses_.fetch_add(1);
  MatrixXd value = encoder.tokens(payload);
  std::unique_lock lock(mutex_);
  return entries_.try_emplace(std::move(key), std::move(value)).first->second;
}

std::string complete_pattern() { return "complete"; }

std::string missing_pattern(ModalityKind target) { return std::string(to_string(target)) + "_missing"; }

const MatrixXd& PromptBlock::rows(const std::string& pattern) const {
  auto it = table.find(pattern);
  if (it == table.end()) throw ValidationError("prompt block has no entry for pattern '" + pattern + "'");
  return it->second;
}

MatrixXd insert_prompt_tokens(const MatrixXd& tokens, const PromptBlock& prompt, const std::string& pattern) {
  if (prompt.length == 0) return tokens;
  const auto& rows = prompt.rows(pattern);
  if (rows.cols() != tokens.cols() || rows.rows() != prompt.length) {
    throw ValidationError("prompt rows are " + std::to_string(rows.rows()) + "x" + std::to_string(rows.cols()) +
                          ", token dim is " + std::to_string(tokens.cols()));
  }
  MatrixXd out(rows.rows() + tokens.rows(), tokens.cols());
  out.topRows(rows.rows()) = rows;
  out.bottomRows(tokens.rows()) = tokens;
  return out;
}

VectorXd fuse_logits(const std::map<ModalityKind, LinearHead>& heads,
                     const std::map<ModalityKind, VectorXd>& embeddings) {
  if (embeddings.empty()) throw ValidationError("fuse_logits: at least one modality embedding is required");
  VectorXd sum;
  for (const auto& [m, e] : embeddings) {
    auto it = heads.find(m);
    if (it == heads.end()) throw ValidationError("fuse_logits: no head for " + std::string(to_string(m)));
    if (it->second.weight.cols() != e.size()) {
      throw ValidationError("fuse_logits: " + std::string(to_string(m)) + " embedding has dim " +
                            std::to_string(e.size()) + ", head expects " + std::to_string(it->second.weight.cols()));
    }
    VectorXd z = it->second.weight * e + it->second.bias;
    if (sum.size() == 0) {
      sum = std::move(z);
    } else {
      sum += z;
    }
  }
  return sum / static_cast<double>(embeddings.size());
}

namespace {

template <typename Fn>
void visit_tensors(const ModelParams& p, Fn&& fn) {
  for (const auto& [m, h] : p.heads) {
    fn("head." + std::string(to_string(m)) + ".weight", h.weight.data(), h.weight.rows(), h.weight.cols());
    fn("head." + std::string(to_string(m)) + ".bias", h.bias.data(), h.bias.rows(), Eigen::Index{1});
  }
  for (const auto& [m, block] : p.prompts) {
    for (const auto& [pattern, rows] : block.table) {
      fn("prompt." + std::string(to_string(m)) + "." + pattern, rows.data(), rows.rows(), rows.cols());
    }
  }
}

}  // namespace

std::size_t ModelParams::size() const {
  std::size_t n = 0;
  visit_tensors(*this, [&](const std::string&, const double*, Eigen::Index r, Eigen::Index c) {
    n += static_cast<std::size_t>(r * c);
  });
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  visit_tensors(*this, [&](const std::string&, const double* d, Eigen::Index r, Eigen::Index c) {
    out.insert(out.end(), d, d + r * c);
  });
  return out;
}

void ModelParams::assign(std::span<const double> flat) {
  if (flat.size() != size()) {
    throw ValidationError("parameter vector has " + std::to_string(flat.size()) + " values, model needs " +
                          std::to_string(size()));
  }
  std::size_t offset = 0;
  visit_tensors(*this, [&](const std::string&, const double* d, Eigen::Index r, Eigen::Index c) {
    // visit_tensors hands out const pointers; the storage itself is ours.
    std::copy_n(flat.data() + offset, r * c, const_cast<double*>(d));
    offset += static_cast<std::size_t>(r * c);
  });
}

std::vector<std::string> ModelParams::layout() const {
  std::vector<std::string> out;
  visit_tensors(*this, [&](const std::string& name, const double*, Eigen::Index r, Eigen::Index c) {
    out.push_back(name + "[" + std::to_string(r) + "x" + std::to_string(c) + "]");
  });
  return out;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (auto& [m, h] : z.heads) {
    h.weight.setZero();
    h.bias.setZero();
  }
  for (auto& [m, block] : z.prompts) {
    for (auto& [pattern, rows] : block.table) rows.setZero();
  }
  return z;
}

FusionModel::FusionModel(ModelConfig config, std::map<ModalityKind, std::shared_ptr<const BackboneEncoder>> encoders,
                         std::shared_ptr<EmbeddingCache> cache, std::shared_ptr<PayloadStore> store)
    : config_(std::move(config)),
      encoders_(std::move(encoders)),
      cache_(cache ? std::move(cache) : std::make_shared<EmbeddingCache>()),
      store_(store ? std::move(store) : std::make_shared<PayloadStore>()) {
  if (config_.modalities.empty() || config_.modalities.size() > 2) {
    throw ValidationError("model needs one or two modalities");
  }
  if (config_.num_classes <= 0) throw ValidationError("model needs num_classes > 0");
  if (config_.prompt_len < 0) throw ValidationError("prompt length must be >= 0");
  for (auto m : config_.modalities) {
    auto it = encoders_.find(m);
    if (it == encoders_.end() || !it->second) {
      throw ValidationError("no encoder for modality " + std::string(to_string(m)));
    }
    if (it->second->modality() != m) throw ValidationError("encoder " + it->second->name() + " has wrong modality");
    if (config_.prompting && !it->second->token_mode()) {
      throw ValidationError("prompting requires a token-mode encoder; " + it->second->name() + " is not");
    }
  }
}

const BackboneEncoder& FusionModel::encoder(ModalityKind m) const {
  auto it = encoders_.find(m);
  if (it == encoders_.end()) throw ValidationError("no encoder for modality " + std::string(to_string(m)));
  return *it->second;
}

bool FusionModel::uses_prompts(ModalityKind m) const { return config_.prompting && encoder(m).token_mode(); }

int FusionModel::head_dim(ModalityKind m) const {
  return uses_prompts(m) ? encoder(m).token_dim() : encoder(m).embed_dim();
}

std::uint64_t FusionModel::backbone_checksum() const {
  std::uint64_t h = 0;
  for (auto m : config_.modalities) h = mix64(h ^ encoder(m).parameter_checksum());
  return h;
}

ModelParams FusionModel::init_params(std::uint64_t seed) const {
  Rng rng(derive_seed(seed, 0x696e6974 /* init */));
  ModelParams p;
  for (auto m : config_.modalities) {
    const int d = head_dim(m);
    LinearHead h{MatrixXd(config_.num_classes, d), VectorXd::Zero(config_.num_classes)};
    for (Eigen::Index i = 0; i < h.weight.size(); ++i) h.weight.data()[i] = config_.head_init_std * rng.normal();
    p.heads.emplace(m, std::move(h));
  }
  for (auto m : config_.modalities) {
    if (!uses_prompts(m)) continue;
    PromptBlock block;
    block.length = config_.prompt_len;
    block.dim = encoder(m).token_dim();
    std::vector<std::string> patterns{complete_pattern()};
    if (config_.prompt_mode == PromptTableMode::patterned) patterns.push_back(missing_pattern(config_.target));
    for (const auto& pattern : patterns) {
      MatrixXd rows(block.length, block.dim);
      for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = config_.prompt_init_std * rng.normal();
      block.table.emplace(pattern, std::move(rows));
    }
    p.prompts.emplace(m, std::move(block));
  }
  return p;
}

std::string FusionModel::pattern_of(const MultimodalSample& sample) const {
  if (config_.prompt_mode == PromptTableMode::single) return complete_pattern();
  auto it = sample.payloads.find(config_.target);
  const bool present = it != sample.payloads.end() && it->second.provenance != Provenance::zero;
  return present ? complete_pattern() : missing_pattern(config_.target);
}

std::vector<FusionModel::ModalityPass> FusionModel::run_encoders(const ModelParams& params,
                                                                 const MultimodalSample& sample) const {
  std::vector<ModalityPass> passes;
  const auto pattern = pattern_of(sample);
  for (auto m : config_.modalities) {
    auto it = sample.payloads.find(m);
    if (it == sample.payloads.end()) continue;
    ModalityPass pass{m, {}, {}, pattern};
    const auto& enc = encoder(m);
    if (it->second.provenance == Provenance::zero && config_.zero_space == ZeroSpace::embedding) {
      pass.embedding = VectorXd::Zero(head_dim(m));
    } else {
      const auto payload = store_->get(it->second);
      if (uses_prompts(m)) {
        pass.sequence = insert_prompt_tokens(cache_->tokens(enc, *payload), params.prompts.at(m), pattern);
        pass.embedding = enc.last_layer(pass.sequence);
      } else {
        pass.embedding = cache_->embed(enc, *payload);
      }
    }
    passes.push_back(std::move(pass));
  }
  if (passes.empty()) {
    throw ValidationError("sample '" + sample.id + "' has no payload for any modality of the model");
  }
  return passes;
}

VectorXd FusionModel::logits(const ModelParams& params, const MultimodalSample& sample) const {
  std::map<ModalityKind, VectorXd> embeddings;
  for (auto& pass : run_encoders(params, sample)) embeddings.emplace(pass.modality, std::move(pass.embedding));
  return fuse_logits(params.heads, embeddings);
}

double FusionModel::loss(const ModelParams& params, std::span<const MultimodalSample* const> batch,
                         ModelParams* grad) const {
  if (batch.empty()) return 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto* sample : batch) {
    const auto passes = run_encoders(params, *sample);
    const double inv_k = 1.0 / static_cast<double>(passes.size());
    VectorXd fused = VectorXd::Zero(config_.num_classes);
    for (const auto& pass : passes) {
      const auto& h = params.heads.at(pass.modality);
      fused += h.weight * pass.embedding + h.bias;
    }
    fused *= inv_k;
    const double mx = fused.maxCoeff();
    const double lse = mx + std::log((fused.array() - mx).exp().sum());
    total += lse - fused(sample->label);
    if (grad == nullptr) continue;

    VectorXd g = (fused.array() - lse).exp();
    g(sample->label) -= 1.0;
    g *= inv_batch * inv_k;
    for (const auto& pass : passes) {
      const auto& h = params.heads.at(pass.modality);
      auto& gh = grad->heads.at(pass.modality);
      gh.weight.noalias() += g * pass.embedding.transpose();
      gh.bias += g;
      if (pass.sequence.size() == 0) continue;
      auto& block = grad->prompts.at(pass.modality);
      if (block.length == 0) continue;
      const VectorXd grad_embedding = h.weight.transpose() * g;
      const MatrixXd grad_seq = encoder(pass.modality).last_layer_backward(pass.sequence, grad_embedding);
      // Rows past the prompt belong to the frozen encoder; their gradient is dropped.
      block.table.at(pass.pattern) += grad_seq.topRows(block.length);
    }
  }
  return total * inv_batch;
}

std::vector<MultimodalSample> modality_dropout(std::vector<MultimodalSample> batch, ModalityKind modality,
                                               double rate, std::uint64_t seed, int dim) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("dropout rate must be in [0, 1]");
  if (rate == 0.0) return batch;
  auto zeros = std::make_shared<const Vector>(static_cast<std::size_t>(std::max(dim, 1)), 0.0f);
  Rng rng(derive_seed(seed, 0x64726f70 /* drop */));
  for (auto& s : batch) {
    const bool drop = rng.bernoulli(rate);
    if (!drop || !s.has(modality)) continue;
    if (dim <= 0) throw ValidationError("modality_dropout needs the payload dim");
    auto& slot = s.payloads[modality];
    slot = PayloadSlot{};
    slot.provenance = Provenance::zero;
    slot.inline_data = zeros;
  }
  return batch;
}

double accuracy(const FusionModel& model, const ModelParams& params, const std::vector<MultimodalSample>& samples) {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : samples) hits += argmax_lowest(model.logits(params, s)) == s.label;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

TrainState train(const FusionModel& model, const EpochSource& source, const OptimizerConfig& optimizer,
                 const TrainOptions& options, std::optional<TrainState> resume) {
  if (optimizer.batch_size <= 0) throw ValidationError("batch_size must be positive");
  if (optimizer.epochs < 0) throw ValidationError("epochs must be >= 0");
  if (optimizer.lr < 0.0) throw ValidationError("learning rate must be >= 0");

  TrainState state;
  if (resume) {
    state = std::move(*resume);
  } else {
    state.seed = options.seed;
    state.params = model.init_params(options.seed);
    state.adam_m.assign(state.params.size(), 0.0);
    state.adam_v.assign(state.params.size(), 0.0);
  }
  const int last_epoch = options.stop_after_epoch >= 0 ? std::min(options.stop_after_epoch, optimizer.epochs)
                                                       : optimizer.epochs;
  auto grad = state.params.zeros_like();
  std::vector<double> flat = state.params.flatten();

  for (int epoch = state.epoch; epoch < last_epoch; ++epoch) {
    const auto samples = source(epoch);
    if (samples.empty()) throw ValidationError("epoch " + std::to_string(epoch) + " has no training samples");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(state.seed, 0x73687566 /* shuf */, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order.begin(), order.end());

    double epoch_loss = 0.0;
    std::vector<const MultimodalSample*> batch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(optimizer.batch_size)) {
      batch.clear();
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(optimizer.batch_size));
      for (auto i = start; i < end; ++i) batch.push_back(&samples[order[i]]);

      grad = state.params.zeros_like();
      const double loss = model.loss(state.params, batch, &grad);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("training diverged: loss is " + std::to_string(loss) + " at epoch " +
                               std::to_string(epoch) + ", step " + std::to_string(state.step) + " (lr " +
                               std::to_string(optimizer.lr) + ")");
      }
      epoch_loss += loss * static_cast<double>(batch.size());

      const auto g = grad.flatten();
      ++state.step;
      const double bc1 = 1.0 - std::pow(optimizer.beta1, static_cast<double>(state.step));
      const double bc2 = 1.0 - std::pow(optimizer.beta2, static_cast<double>(state.step));
      for (std::size_t i = 0; i < flat.size(); ++i) {
        flat[i] *= 1.0 - optimizer.lr * optimizer.weight_decay;
        state.adam_m[i] = optimizer.beta1 * state.adam_m[i] + (1.0 - optimizer.beta1) * g[i];
        state.adam_v[i] = optimizer.beta2 * state.adam_v[i] + (1.0 - optimizer.beta2) * g[i] * g[i];
        const double m_hat = state.adam_m[i] / bc1;
        const double v_hat = state.adam_v[i] / bc2;
        flat[i] -= optimizer.lr * m_hat / (std::sqrt(v_hat) + optimizer.eps);
      }
      state.params.assign(flat);
    }

    EpochLog log{epoch, epoch_loss / static_cast<double>(samples.size()), -1.0};
    if (!options.val.empty()) {
      log.val_accuracy = accuracy(model, state.params, options.val);
      if (log.val_accuracy > state.best_val) {
        state.best_val = log.val_accuracy;
        state.best_epoch = epoch;
        state.best_params = state.params;
      }
    }
    state.history.push_back(log);
    state.epoch = epoch + 1;
  }
  return state;
}

Prediction predict(const FusionModel& model, const ModelParams& params, const MultimodalSample& sample,
                   const MaskPlan* test_plan, int target_dim) {
  const auto target = model.config().target;
  const MultimodalSample* input = &sample;
  MultimodalSample masked;
  if (test_plan != nullptr && test_plan->masks(sample.id) && sample.has(target)) {
    masked = sample;
    const bool unimodal_target = model.config().modalities.size() == 1;
    if (model.config().missing_treatment == MissingTreatment::skip && !unimodal_target) {
      masked.payloads.erase(target);
    } else {
      const int dim = target_dim > 0 ? target_dim : model.encoder(target).input_dim();
      auto& slot = masked.payloads[target];
      slot = PayloadSlot{};
      slot.provenance = Provenance::zero;
      slot.inline_data = std::make_shared<const Vector>(static_cast<std::size_t>(dim), 0.0f);
    }
    input = &masked;
  }
  Prediction p;
  p.logits = model.logits(params, *input);
  p.label = argmax_lowest(p.logits);
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const std::string& config_hash,
                     const std::string& metrics_json) {
  json header;
  header["format"] = "mmimpute-checkpoint-1";
  header["config_hash"] = config_hash;
  header["epoch"] = state.epoch;
  header["step"] = state.step;
  header["seed"] = state.seed;
  header["best_val"] = state.best_val;
  header["best_epoch"] = state.best_epoch;
  header["metrics"] = json::parse(metrics_json);
  header["layout"] = state.params.layout();
  json history = json::array();
  for (const auto& h : state.history) {
    history.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_accuracy", h.val_accuracy}});
  }
  header["history"] = history;
  header["arrays"] = {"params", "adam_m", "adam_v", "best_params"};

  std::string bytes = header.dump() + "\n";
  const auto params = state.params.flatten();
  const auto best = state.best_epoch >= 0 ? state.best_params.flatten() : std::vector<double>{};
  bytes += encode_payload_f64(params);
  bytes += encode_payload_f64(state.adam_m);
  bytes += encode_payload_f64(state.adam_v);
  bytes += encode_payload_f64(best);
  write_file_atomic(path, bytes);
}

TrainState load_checkpoint(const std::filesystem::path& path, const FusionModel& model, std::string* config_hash) {
  const auto bytes = read_file(path);
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw ParseError(path.string() + ": missing checkpoint header");
  json header;
  try {
    header = json::parse(bytes.substr(0, nl));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": bad checkpoint header: " + e.what());
  }
  if (header.value("format", "") != "mmimpute-checkpoint-1") {
    throw ParseError(path.string() + ": not a checkpoint file");
  }
  TrainState state;
  state.params = model.init_params(0);
  if (header.at("layout").get<std::vector<std::string>>() != state.params.layout()) {
    throw ValidationError(path.string() + ": checkpoint layout does not match the model");
  }
  std::string_view rest(bytes);
  rest.remove_prefix(nl + 1);
  try {
    state.params.assign(consume_payload_f64(rest));
    state.adam_m = consume_payload_f64(rest);
    state.adam_v = consume_payload_f64(rest);
    const auto best = consume_payload_f64(rest);
    state.epoch = header.at("epoch").get<int>();
    state.step = header.at("step").get<long>();
    state.seed = header.at("seed").get<std::uint64_t>();
    state.best_val = header.at("best_val").get<double>();
    state.best_epoch = header.at("best_epoch").get<int>();
    if (state.best_epoch >= 0) {
      state.best_params = state.params.zeros_like();
      state.best_params.assign(best);
    }
    for (const auto& h : header.at("history")) {
      state.history.push_back({h.at("epoch").get<int>(), h.at("train_loss").get<double>(),
                               h.at("val_accuracy").get<double>()});
    }
    if (config_hash) *config_hash = header.at("config_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return state;
}

}  // namespace mmimpute
