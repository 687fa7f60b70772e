#include "warp/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "warp/data.hpp"
#include "warp/dtw.hpp"
#include "warp/parallel.hpp"
#include "warp/warpnet.hpp"

namespace warp {

PairSampler::PairSampler(std::vector<std::string> labels, std::size_t batch_size, std::size_t match_parts,
                         std::size_t nonmatch_parts, std::uint64_t seed)
    : labels_(std::move(labels)), batch_size_(batch_size), uniform_(match_parts == 0 && nonmatch_parts == 0),
      rng_(seed) {
  if (batch_size_ == 0) throw Error(ErrorCode::kInvalidConfig, "batch_size must be positive");
  if (!uniform_ && nonmatch_parts == 0 && match_parts > 0) {
    throw Error(ErrorCode::kInvalidConfig, "match ratio denominator must be > 0");
  }
  if (labels_.size() < 2) throw Error(ErrorCode::kInsufficientData, "need at least 2 samples");

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels_.size(); ++i) groups[labels_[i]].push_back(i);
  if (groups.size() < 2) throw Error(ErrorCode::kInsufficientData, "need at least 2 classes");
  members_of_.resize(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    members_of_[i] = groups[labels_[i]];
    if (members_of_[i].size() >= 2 && !is_forgery_label(labels_[i])) match_anchors_.push_back(i);
  }
  if (!uniform_) {
    matching_ = batch_size_ * match_parts / (match_parts + nonmatch_parts);
    if (matching_ > 0 && match_anchors_.empty()) {
      throw Error(ErrorCode::kInsufficientData, "no class has two samples for a matching pair");
    }
  }
}

PairIndex PairSampler::draw_matching() {
  std::uniform_int_distribution<std::size_t> pick(0, match_anchors_.size() - 1);
  const std::size_t a = match_anchors_[pick(rng_)];
  const auto& mates = members_of_[a];
  std::uniform_int_distribution<std::size_t> other(0, mates.size() - 2);
  std::size_t j = other(rng_);
  if (mates[j] == a) j = mates.size() - 1;
  return {a, mates[j], 1};
}

PairIndex PairSampler::draw_nonmatching() {
  std::uniform_int_distribution<std::size_t> pick(0, labels_.size() - 1);
  const std::size_t a = pick(rng_);
  std::size_t b = pick(rng_);
  while (labels_[b] == labels_[a]) b = pick(rng_);
  return {a, b, 0};
}

PairIndex PairSampler::draw_uniform() {
  std::uniform_int_distribution<std::size_t> pick(0, labels_.size() - 1);
  const std::size_t a = pick(rng_);
  std::size_t b = pick(rng_);
  while (b == a) b = pick(rng_);
  return {a, b, labels_[a] == labels_[b] ? 1 : 0};
}

PairBatch PairSampler::next() {
  PairBatch batch;
  batch.reserve(batch_size_);
  if (uniform_) {
    for (std::size_t i = 0; i < batch_size_; ++i) batch.push_back(draw_uniform());
    return batch;
  }
  for (std::size_t i = 0; i < matching_; ++i) batch.push_back(draw_matching());
  for (std::size_t i = matching_; i < batch_size_; ++i) batch.push_back(draw_nonmatching());
  return batch;
}

TrainState TrainState::from_params(UNetParams params, std::uint64_t seed) {
  TrainState s;
  s.m.assign(params.size(), 0.0);
  s.v.assign(params.size(), 0.0);
  s.params = std::move(params);
  s.seed = seed;
  return s;
}

void adam_step(TrainState& state, std::span<const double> grad, double lr, const AdamConfig& adam) {
  const std::size_t n = state.params.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "gradient has " + std::to_string(grad.size()) + " entries, params " +
                                               std::to_string(n));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  auto p = state.params.values();
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = adam.beta1 * state.m[i] + (1.0 - adam.beta1) * grad[i];
    state.v[i] = adam.beta2 * state.v[i] + (1.0 - adam.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + adam.epsilon);
  }
}

namespace {

// Per-pair loss and gradient, reduced in index order in fixed-size chunks so
// the sum does not depend on the thread count.
template <typename PairFn>
BatchResult reduce_batch(const UNetParams& params, std::size_t count, PairFn&& per_pair) {
  constexpr std::size_t kChunk = 16;
  BatchResult out;
  out.grad.assign(params.size(), 0.0);
  std::vector<double> losses(kChunk);
  std::vector<std::vector<double>> grads(kChunk);
  for (std::size_t base = 0; base < count; base += kChunk) {
    const std::size_t n = std::min(kChunk, count - base);
    parallel_for(n, [&](std::size_t i) { losses[i] = per_pair(base + i, grads[i]); });
    for (std::size_t i = 0; i < n; ++i) {
      out.loss += losses[i];
      if (grads[i].empty()) continue;
      for (std::size_t j = 0; j < out.grad.size(); ++j) out.grad[j] += grads[i][j];
    }
  }
  const double scale = count > 0 ? 1.0 / static_cast<double>(count) : 0.0;
  out.loss *= scale;
  for (double& g : out.grad) g *= scale;
  return out;
}

bool all_zero(const Matrix& m) {
  return std::all_of(m.data().begin(), m.data().end(), [](double v) { return v == 0.0; });
}

}  // namespace

BatchResult contrastive_batch(const UNetParams& params, const std::vector<LabeledSeries>& items,
                              const PairBatch& batch, double margin) {
  return reduce_batch(params, batch.size(), [&](std::size_t i, std::vector<double>& grad) {
    const auto& a = items.at(batch[i].a).series;
    const auto& b = items.at(batch[i].b).series;
    ForwardTape tape;
    const Matrix p = unet_forward(params, a, b, &tape);
    LossGrad lg = training_loss_grad(a, b, p, batch[i].z, margin);
    // A saturated hinge contributes nothing.
    if (all_zero(lg.grad_p_raw)) {
      grad.clear();
    } else {
      grad = unet_backward(params, tape, lg.grad_p_raw);
    }
    return lg.loss;
  });
}

BatchResult pretrain_batch(const UNetParams& params, const std::vector<LabeledSeries>& items, const PairBatch& batch,
                           const std::vector<const WarpingMatrix*>& targets) {
  if (targets.size() != batch.size()) throw Error(ErrorCode::kShapeMismatch, "one target per pair required");
  return reduce_batch(params, batch.size(), [&](std::size_t i, std::vector<double>& grad) {
    ForwardTape tape;
    const Matrix p = unet_forward(params, items.at(batch[i].a).series, items.at(batch[i].b).series, &tape);
    LossGrad lg = pretrain_loss_grad(p, *targets[i]);
    grad = unet_backward(params, tape, lg.grad_p_raw);
    return lg.loss;
  });
}

std::string format_log_record(const LogRecord& r) {
  nlohmann::ordered_json j;
  j["stage"] = r.stage;
  j["epoch"] = r.epoch;
  j["step"] = r.step;
  j["loss"] = r.loss;
  j["val_metric"] = r.val_metric ? nlohmann::ordered_json(*r.val_metric) : nlohmann::ordered_json(nullptr);
  if (!r.message.empty()) j["message"] = r.message;
  return j.dump();
}

void PretrainConfig::validate() const {
  if (batch_size == 0) throw Error(ErrorCode::kInvalidConfig, "pretrain batch_size must be positive");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidConfig, "pretrain learning_rate must be > 0");
  if (match_parts > 0 && nonmatch_parts == 0) {
    throw Error(ErrorCode::kInvalidConfig, "match ratio denominator must be > 0");
  }
}

DtwTargetCache::DtwTargetCache(const std::vector<LabeledSeries>& items, std::size_t limit_bytes)
    : items_(items), limit_bytes_(limit_bytes) {}

std::vector<const WarpingMatrix*> DtwTargetCache::targets(const PairBatch& batch) {
  overflow_.clear();
  std::vector<const WarpingMatrix*> out(batch.size(), nullptr);
  std::vector<std::size_t> missing;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> first_missing;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto key = std::make_pair(batch[i].a, batch[i].b);
    if (auto it = cache_.find(key); it != cache_.end()) {
      out[i] = &it->second;
    } else if (first_missing.emplace(key, i).second) {
      missing.push_back(i);
    }
  }
  std::vector<WarpingMatrix> fresh(missing.size());
  parallel_for(missing.size(), [&](std::size_t m) {
    const auto& pr = batch[missing[m]];
    fresh[m] = dtw::dtw_target(items_.at(pr.a).series, items_.at(pr.b).series);
  });
  for (std::size_t m = 0; m < missing.size(); ++m) {
    const auto key = std::make_pair(batch[missing[m]].a, batch[missing[m]].b);
    const std::size_t bytes = fresh[m].size() * fresh[m].size() * sizeof(double);
    if (bytes_ + bytes <= limit_bytes_) {
      bytes_ += bytes;
      out[missing[m]] = &cache_.emplace(key, std::move(fresh[m])).first->second;
    } else {
      overflow_.push_back(std::make_unique<WarpingMatrix>(std::move(fresh[m])));
      out[missing[m]] = overflow_.back().get();
    }
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!out[i]) out[i] = out[first_missing.at({batch[i].a, batch[i].b})];
  }
  return out;
}

TrainState pretrain(TrainState state, const std::vector<LabeledSeries>& items, const PretrainConfig& cfg,
                    const LogFn& log) {
  cfg.validate();
  if (cfg.max_steps == 0) return state;
  std::vector<std::string> labels;
  for (const auto& it : items) labels.push_back(it.label);
  PairSampler sampler(std::move(labels), cfg.batch_size, cfg.match_parts, cfg.nonmatch_parts, cfg.seed);
  DtwTargetCache cache(items, cfg.cache_limit_bytes);

  std::vector<double> history;
  for (std::size_t s = 0; s < cfg.max_steps; ++s) {
    const PairBatch batch = sampler.next();
    const auto targets = cache.targets(batch);
    BatchResult r = pretrain_batch(state.params, items, batch, targets);
    if (!std::isfinite(r.loss)) {
      throw Error(ErrorCode::kDivergedLoss, "pre-training loss is not finite at step " + std::to_string(s));
    }
    adam_step(state, r.grad, cfg.learning_rate, cfg.adam);
    history.push_back(r.loss);
    if (log && (s % std::max<std::size_t>(cfg.log_every, 1) == 0 || s + 1 == cfg.max_steps)) {
      log({"pretrain", 0, state.step, r.loss, std::nullopt, {}});
    }
    const std::size_t w = cfg.plateau_window;
    if (w > 0 && history.size() >= 2 * w && history.size() % w == 0) {
      const auto end = history.end();
      const double recent = std::accumulate(end - w, end, 0.0) / w;
      const double before = std::accumulate(end - 2 * w, end - w, 0.0) / w;
      if (before - recent < cfg.plateau_tolerance * before) {
        if (log) log({"pretrain", 0, state.step, recent, std::nullopt, "plateau reached"});
        break;
      }
    }
  }
  return state;
}

double validation_score(const UNetParams& params, const std::vector<LabeledSeries>& train,
                        const std::vector<LabeledSeries>& val, const ContrastiveConfig& cfg) {
  const DistanceFn fn = model_metric(params);
  if (cfg.task == TaskKind::kClassify) {
    return classification_report(val, train, fn, std::min(cfg.k, train.size())).accuracy;
  }
  return 1.0 - verification_report(val, fn, cfg.refs).eer;
}

TrainState train_contrastive(TrainState state, const std::vector<LabeledSeries>& train,
                             const std::vector<LabeledSeries>& val, const ContrastiveConfig& cfg,
                             const LogFn& log) {
  const TrainingConfig& tc = cfg.training;
  tc.validate();
  if (tc.max_epochs == 0) return state;
  if (train.empty()) throw Error(ErrorCode::kEmptyTrainingSet, "no training items");
  std::vector<std::string> labels;
  for (const auto& it : train) labels.push_back(it.label);
  PairSampler sampler(std::move(labels), tc.batch_size, tc.match_parts, tc.nonmatch_parts, tc.seed);
  const std::size_t steps = cfg.steps_per_epoch > 0
                                ? cfg.steps_per_epoch
                                : std::max<std::size_t>(1, (train.size() + tc.batch_size - 1) / tc.batch_size);

  std::optional<TrainState> best;
  std::vector<double> epoch_loss;
  for (std::size_t e = 1; e <= tc.max_epochs; ++e) {
    double total = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const PairBatch batch = sampler.next();
      BatchResult r = contrastive_batch(state.params, train, batch, tc.margin);
      if (!std::isfinite(r.loss)) {
        throw Error(ErrorCode::kDivergedLoss, "training loss is not finite at step " + std::to_string(state.step));
      }
      adam_step(state, r.grad, tc.learning_rate, tc.adam);
      total += r.loss;
      if (log && (s % std::max<std::size_t>(cfg.log_every, 1) == 0)) {
        log({"train", e, state.step, r.loss, std::nullopt, {}});
      }
    }
    state.epoch = e;
    epoch_loss.push_back(total / static_cast<double>(steps));
    const double score = val.empty() ? -epoch_loss.back() : validation_score(state.params, train, val, cfg);
    if (log) log({"val", e, state.step, epoch_loss.back(), score, {}});
    if (!best || score > *best->best_metric) {
      state.best_metric = score;
      best = state;
    }
  }
  if (epoch_loss.size() >= 2 && epoch_loss.back() >= epoch_loss.front() && log) {
    log({"warning", state.epoch, state.step, epoch_loss.back(), std::nullopt,
         "training loss did not decrease; the initialization may be unsuitable"});
  }
  return std::move(*best);
}

}  // namespace warp
