#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "warp/core.hpp"
#include "warp/eval.hpp"
#include "warp/unet.hpp"

namespace warp {

struct PairIndex {
  std::size_t a = 0;
  std::size_t b = 0;
  int z = 0;

  friend bool operator==(const PairIndex&, const PairIndex&) = default;
};
using PairBatch = std::vector<PairIndex>;

// Draws pairs of item indices. With match_parts:nonmatch_parts > 0 each
// batch has floor(batch * m / (m + n)) matching pairs and the rest
// non-matching; 0:0 draws uniformly over all ordered pairs of distinct items.
// Forgery items never anchor a matching pair.
class PairSampler {
 public:
  PairSampler(std::vector<std::string> labels, std::size_t batch_size, std::size_t match_parts,
              std::size_t nonmatch_parts, std::uint64_t seed);

  PairBatch next();
  std::size_t matching_per_batch() const noexcept { return matching_; }

 private:
  PairIndex draw_matching();
  PairIndex draw_nonmatching();
  PairIndex draw_uniform();

  std::vector<std::string> labels_;
  std::size_t batch_size_;
  bool uniform_;
  std::size_t matching_ = 0;
  std::vector<std::size_t> match_anchors_;            // items with a same-label partner
  std::vector<std::vector<std::size_t>> members_of_;  // per item, indices sharing its label
  std::mt19937_64 rng_;
};

struct TrainState {
  UNetParams params;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  std::optional<double> best_metric;
  std::uint64_t seed = 0;

  static TrainState from_params(UNetParams params, std::uint64_t seed = 0);
};

// Adam with bias correction. Throws kShapeMismatch when sizes differ.
void adam_step(TrainState& state, std::span<const double> grad, double lr, const AdamConfig& adam);

struct BatchResult {
  double loss = 0.0;          // mean over the batch
  std::vector<double> grad;   // mean over the batch
};

BatchResult contrastive_batch(const UNetParams& params, const std::vector<LabeledSeries>& items,
                              const PairBatch& batch, double margin);
BatchResult pretrain_batch(const UNetParams& params, const std::vector<LabeledSeries>& items, const PairBatch& batch,
                           const std::vector<const WarpingMatrix*>& targets);

struct LogRecord {
  std::string stage;  // "pretrain", "train", "val", "warning"
  std::size_t epoch = 0;
  std::uint64_t step = 0;
  double loss = 0.0;
  std::optional<double> val_metric;
  std::string message;
};
using LogFn = std::function<void(const LogRecord&)>;

// One JSON object per line.
std::string format_log_record(const LogRecord& r);

struct PretrainConfig {
  std::size_t max_steps = 2000;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  std::size_t match_parts = 0;
  std::size_t nonmatch_parts = 0;
  // Stops early once the mean loss over the last window improves on the
  // previous window by less than plateau_tolerance (relative).
  std::size_t plateau_window = 200;
  double plateau_tolerance = 0.01;
  std::size_t log_every = 10;
  std::size_t cache_limit_bytes = std::size_t{256} << 20;
  std::uint64_t seed = 0;
  AdamConfig adam;

  void validate() const;
};

// Memoized DTW targets keyed by ordered item pair.
class DtwTargetCache {
 public:
  DtwTargetCache(const std::vector<LabeledSeries>& items, std::size_t limit_bytes);
  // Cached entries live as long as the cache; entries past the size limit
  // are valid until the next call.
  std::vector<const WarpingMatrix*> targets(const PairBatch& batch);
  std::size_t size() const noexcept { return cache_.size(); }

 private:
  const std::vector<LabeledSeries>& items_;
  std::size_t limit_bytes_;
  std::size_t bytes_ = 0;
  std::map<std::pair<std::size_t, std::size_t>, WarpingMatrix> cache_;
  std::vector<std::unique_ptr<WarpingMatrix>> overflow_;
};

TrainState pretrain(TrainState state, const std::vector<LabeledSeries>& items, const PretrainConfig& cfg,
                    const LogFn& log = {});

struct ContrastiveConfig {
  TrainingConfig training;
  std::size_t steps_per_epoch = 0;  // 0: ceil(train items / batch size)
  TaskKind task = TaskKind::kClassify;
  std::size_t k = 3;
  std::size_t refs = 5;
  std::size_t log_every = 10;
};

// Validation score where larger is better: k-NN accuracy, or 1 - EER.
double validation_score(const UNetParams& params, const std::vector<LabeledSeries>& train,
                        const std::vector<LabeledSeries>& val, const ContrastiveConfig& cfg);

// Returns the epoch-end state with the best validation score (the earliest on
// ties). Zero epochs returns the input state. Throws kDivergedLoss when a
// batch loss is not finite.
TrainState train_contrastive(TrainState state, const std::vector<LabeledSeries>& train,
                             const std::vector<LabeledSeries>& val, const ContrastiveConfig& cfg,
                             const LogFn& log = {});

}  // namespace warp
