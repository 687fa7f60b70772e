#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "warp/core.hpp"
#include "warp/unet.hpp"

namespace warp {

using DistanceFn = std::function<double(const TimeSeries&, const TimeSeries&)>;

DistanceFn model_metric(const UNetParams& params);  // pair_distance through the U-Net
DistanceFn dtw_metric();                            // plain DTW distance

// queries x references
struct DistanceTable {
  Matrix values;
  std::string model_id;
  std::string dataset_id;
};

// Fills the table in parallel; throws kNonFiniteInput on a NaN or negative entry.
DistanceTable distance_table(const std::vector<TimeSeries>& queries, const std::vector<TimeSeries>& references,
                             const DistanceFn& fn);

// Majority vote among the k nearest; ties go to the smallest mean distance,
// then to the lexicographically smallest label.
std::string knn_vote(std::span<const double> distances, const std::vector<std::string>& labels, std::size_t k);
std::string knn_classify(const TimeSeries& query, const std::vector<LabeledSeries>& train, const DistanceFn& fn,
                         std::size_t k);

double subject_distance(const TimeSeries& test, const std::vector<TimeSeries>& references, const DistanceFn& fn);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Scores are distances; a probe is accepted when its score <= threshold.
// The crossing of FAR and FRR is located on the convex hull of the
// operating points and linearly interpolated between its two bracketing
// vertices.
EerResult compute_eer(const std::vector<double>& genuine, const std::vector<double>& forgery);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<double> matching;
  std::vector<double> nonmatching;
  double overlap = 0.0;
  std::size_t matching_count = 0;
  std::size_t nonmatching_count = 0;
};

Histogram export_histograms(const std::vector<double>& matching, const std::vector<double>& nonmatching,
                            std::size_t bins);
std::string histogram_csv(const Histogram& h);

enum class TaskKind { kClassify, kVerify };

struct EvalReport {
  TaskKind task = TaskKind::kClassify;
  double accuracy = 0.0;  // classify
  double eer = 0.0;       // verify
  double threshold = 0.0;
  std::size_t evaluated = 0;
  std::size_t errors = 0;
  // (true label, predicted label) -> count, misclassifications only
  std::map<std::pair<std::string, std::string>, std::size_t> confusion;
  Histogram histogram;

  friend bool operator==(const EvalReport& l, const EvalReport& r) {
    return l.task == r.task && l.accuracy == r.accuracy && l.eer == r.eer && l.threshold == r.threshold &&
           l.evaluated == r.evaluated && l.errors == r.errors && l.confusion == r.confusion;
  }
};

// k-NN on test against train; the histogram holds every test-train distance
// split by label equality.
EvalReport classification_report(const std::vector<LabeledSeries>& test, const std::vector<LabeledSeries>& train,
                                  const DistanceFn& fn, std::size_t k, std::size_t bins = 50);

struct VerificationScores {
  std::vector<double> genuine;
  std::vector<double> forgery;
};

// Per subject, the first `refs` genuine items are references; the remaining
// genuine items and all forgeries are probes scored by their mean distance
// to the references. Scores from every subject are pooled.
VerificationScores verification_scores(const std::vector<LabeledSeries>& items, const DistanceFn& fn,
                                       std::size_t refs);
EvalReport verification_report(const std::vector<LabeledSeries>& items, const DistanceFn& fn, std::size_t refs,
                               std::size_t bins = 50);

// One "key: value" block per metric, blank-line separated.
std::string format_report(const EvalReport& r);
EvalReport parse_report(const std::string& text);

}  // namespace warp
