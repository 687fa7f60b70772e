#include "warp/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "warp/data.hpp"
#include "warp/dtw.hpp"
#include "warp/parallel.hpp"
#include "warp/warpnet.hpp"

namespace warp {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

DistanceFn model_metric(const UNetParams& params) {
  auto shared = std::make_shared<const UNetParams>(params);
  return [shared](const TimeSeries& a, const TimeSeries& b) { return model_distance(*shared, a, b); };
}

DistanceFn dtw_metric() {
  return [](const TimeSeries& a, const TimeSeries& b) { return dtw::dtw_distance(a, b); };
}

DistanceTable distance_table(const std::vector<TimeSeries>& queries, const std::vector<TimeSeries>& references,
                             const DistanceFn& fn) {
  DistanceTable t;
  t.values = Matrix(queries.size(), references.size());
  const std::size_t cols = references.size();
  parallel_for(queries.size() * cols, [&](std::size_t n) {
    const double d = fn(queries[n / cols], references[n % cols]);
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw Error(ErrorCode::kNonFiniteInput, "distance is negative or not finite");
    }
    t.values(n / cols, n % cols) = d;
  });
  return t;
}

std::string knn_vote(std::span<const double> distances, const std::vector<std::string>& labels, std::size_t k) {
  if (distances.empty()) throw Error(ErrorCode::kEmptyTrainingSet, "no training items to vote");
  if (distances.size() != labels.size()) throw Error(ErrorCode::kShapeMismatch, "one label per distance required");
  if (k < 1 || k > distances.size()) throw Error(ErrorCode::kInvalidConfig, "k must be in [1, |train|]");
  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) { return distances[l] < distances[r]; });

  struct Tally {
    std::size_t votes = 0;
    double sum = 0.0;
  };
  std::map<std::string, Tally> tally;
  for (std::size_t i = 0; i < k; ++i) {
    auto& t = tally[labels[order[i]]];
    ++t.votes;
    t.sum += distances[order[i]];
  }
  // Map order makes the final tie-break lexicographic.
  const std::string* best = nullptr;
  const Tally* best_t = nullptr;
  for (const auto& [label, t] : tally) {
    if (!best) {
      best = &label, best_t = &t;
      continue;
    }
    const double mean = t.sum / t.votes;
    const double best_mean = best_t->sum / best_t->votes;
    if (t.votes > best_t->votes || (t.votes == best_t->votes && mean < best_mean)) best = &label, best_t = &t;
  }
  return *best;
}

std::string knn_classify(const TimeSeries& query, const std::vector<LabeledSeries>& train, const DistanceFn& fn,
                         std::size_t k) {
  if (train.empty()) throw Error(ErrorCode::kEmptyTrainingSet, "no training items");
  std::vector<double> d(train.size());
  std::vector<std::string> labels(train.size());
  parallel_for(train.size(), [&](std::size_t i) { d[i] = fn(query, train[i].series); });
  for (std::size_t i = 0; i < train.size(); ++i) labels[i] = train[i].label;
  return knn_vote(d, labels, k);
}

double subject_distance(const TimeSeries& test, const std::vector<TimeSeries>& references, const DistanceFn& fn) {
  if (references.empty()) throw Error(ErrorCode::kNoReferences, "at least one reference is required");
  double sum = 0.0;
  for (const auto& r : references) sum += fn(test, r);
  return sum / static_cast<double>(references.size());
}

EerResult compute_eer(const std::vector<double>& genuine, const std::vector<double>& forgery) {
  if (genuine.empty() || forgery.empty()) throw Error(ErrorCode::kEmptyScoreList, "both score lists must be non-empty");
  std::vector<double> g = genuine, f = forgery;
  std::sort(g.begin(), g.end());
  std::sort(f.begin(), f.end());
  std::vector<double> pooled = g;
  pooled.insert(pooled.end(), f.begin(), f.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  struct Point {
    double far, frr, t;
  };
  const double ng = static_cast<double>(g.size());
  const double nf = static_cast<double>(f.size());
  std::vector<Point> pts{{0.0, 1.0, -std::numeric_limits<double>::infinity()}};
  for (double t : pooled) {
    const auto accepted_g = std::upper_bound(g.begin(), g.end(), t) - g.begin();
    const auto accepted_f = std::upper_bound(f.begin(), f.end(), t) - f.begin();
    const Point p{static_cast<double>(accepted_f) / nf, (ng - static_cast<double>(accepted_g)) / ng, t};
    // Same FAR: keep the lower FRR.
    if (pts.back().far == p.far) pts.back() = p;
    else pts.push_back(p);
  }

  std::vector<Point> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const Point& o = hull[hull.size() - 2];
      const Point& a = hull.back();
      const double cross = (a.far - o.far) * (p.frr - o.frr) - (a.frr - o.frr) * (p.far - o.far);
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(p);
  }

  for (std::size_t i = 0; i < hull.size(); ++i) {
    const double d = hull[i].far - hull[i].frr;
    if (d < 0.0) continue;
    if (i == 0 || d == 0.0) return {hull[i].far, hull[i].t};
    const Point& p = hull[i - 1];
    const Point& q = hull[i];
    const double dp = p.far - p.frr;
    const double alpha = -dp / (d - dp);
    const double threshold = std::isfinite(p.t) ? p.t + alpha * (q.t - p.t) : q.t;
    return {p.far + alpha * (q.far - p.far), threshold};
  }
  return {hull.back().far, hull.back().t};
}

Histogram export_histograms(const std::vector<double>& matching, const std::vector<double>& nonmatching,
                            std::size_t bins) {
  if (bins < 1) throw Error(ErrorCode::kInvalidConfig, "bins must be >= 1");
  if (matching.empty() || nonmatching.empty()) {
    throw Error(ErrorCode::kEmptyScoreList, "both distance groups must be non-empty");
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* group : {&matching, &nonmatching})
    for (double v : *group) lo = std::min(lo, v), hi = std::max(hi, v);
  if (hi == lo) lo -= 0.5, hi += 0.5;

  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / bins;
  h.edges.back() = hi;
  auto fill = [&](const std::vector<double>& values, std::vector<double>& out) {
    out.assign(bins, 0.0);
    for (double v : values) {
      const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
      out[std::min(b, bins - 1)] += 1.0;
    }
    for (double& c : out) c /= static_cast<double>(values.size());
  };
  fill(matching, h.matching);
  fill(nonmatching, h.nonmatching);
  for (std::size_t i = 0; i < bins; ++i) h.overlap += std::min(h.matching[i], h.nonmatching[i]);
  h.matching_count = matching.size();
  h.nonmatching_count = nonmatching.size();
  return h;
}

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_left,bin_right,matching_density,nonmatching_density\n";
  for (std::size_t i = 0; i < h.matching.size(); ++i) {
    out += fmt(h.edges[i]) + "," + fmt(h.edges[i + 1]) + "," + fmt(h.matching[i]) + "," + fmt(h.nonmatching[i]) +
           "\n";
  }
  return out;
}

EvalReport classification_report(const std::vector<LabeledSeries>& test, const std::vector<LabeledSeries>& train,
                                  const DistanceFn& fn, std::size_t k, std::size_t bins) {
  if (train.empty()) throw Error(ErrorCode::kEmptyTrainingSet, "no training items");
  if (test.empty()) throw Error(ErrorCode::kInsufficientData, "no test items");
  std::vector<TimeSeries> q, r;
  std::vector<std::string> labels;
  for (const auto& t : test) q.push_back(t.series);
  for (const auto& t : train) r.push_back(t.series), labels.push_back(t.label);
  const DistanceTable table = distance_table(q, r, fn);

  EvalReport rep;
  rep.task = TaskKind::kClassify;
  rep.evaluated = test.size();
  std::vector<double> same, different;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto row = table.values.row(i);
    const std::string predicted = knn_vote(row, labels, k);
    if (predicted != test[i].label) {
      ++rep.errors;
      ++rep.confusion[{test[i].label, predicted}];
    }
    for (std::size_t j = 0; j < train.size(); ++j) (labels[j] == test[i].label ? same : different).push_back(row[j]);
  }
  rep.accuracy = 1.0 - static_cast<double>(rep.errors) / static_cast<double>(rep.evaluated);
  if (!same.empty() && !different.empty()) rep.histogram = export_histograms(same, different, bins);
  return rep;
}

VerificationScores verification_scores(const std::vector<LabeledSeries>& items, const DistanceFn& fn,
                                       std::size_t refs) {
  struct Subject {
    std::vector<std::size_t> genuine, forgery;
  };
  std::vector<std::string> order;
  std::map<std::string, Subject> subjects;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string s = subject_of(items[i].label);
    auto [it, inserted] = subjects.try_emplace(s);
    if (inserted) order.push_back(s);
    (is_forgery_label(items[i].label) ? it->second.forgery : it->second.genuine).push_back(i);
  }

  struct Probe {
    std::size_t item;
    const std::vector<TimeSeries>* refs;
    bool genuine;
  };
  std::vector<std::vector<TimeSeries>> ref_sets(order.size());
  std::vector<Probe> probes;
  for (std::size_t s = 0; s < order.size(); ++s) {
    const Subject& sub = subjects[order[s]];
    const std::size_t n = std::min(refs, sub.genuine.size());
    if (n == 0) throw Error(ErrorCode::kNoReferences, "subject '" + order[s] + "' has no genuine references");
    for (std::size_t i = 0; i < n; ++i) ref_sets[s].push_back(items[sub.genuine[i]].series);
    for (std::size_t i = n; i < sub.genuine.size(); ++i) probes.push_back({sub.genuine[i], &ref_sets[s], true});
    for (auto f : sub.forgery) probes.push_back({f, &ref_sets[s], false});
  }
  std::vector<double> scores(probes.size());
  parallel_for(probes.size(),
               [&](std::size_t p) { scores[p] = subject_distance(items[probes[p].item].series, *probes[p].refs, fn); });
  VerificationScores out;
  for (std::size_t p = 0; p < probes.size(); ++p) (probes[p].genuine ? out.genuine : out.forgery).push_back(scores[p]);
  return out;
}

EvalReport verification_report(const std::vector<LabeledSeries>& items, const DistanceFn& fn, std::size_t refs,
                               std::size_t bins) {
  const VerificationScores s = verification_scores(items, fn, refs);
  const EerResult e = compute_eer(s.genuine, s.forgery);
  EvalReport rep;
  rep.task = TaskKind::kVerify;
  rep.eer = e.eer;
  rep.threshold = e.threshold;
  rep.evaluated = s.genuine.size() + s.forgery.size();
  for (double g : s.genuine) rep.errors += g > e.threshold ? 1 : 0;
  for (double f : s.forgery) rep.errors += f <= e.threshold ? 1 : 0;
  rep.histogram = export_histograms(s.genuine, s.forgery, bins);
  return rep;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  out << "[report]\ntask: " << (r.task == TaskKind::kClassify ? "classify" : "verify") << "\n"
      << "evaluated: " << r.evaluated << "\nerrors: " << r.errors << "\n\n";
  if (r.task == TaskKind::kClassify) {
    out << "[accuracy]\nvalue: " << fmt(r.accuracy) << "\n\n[confusion]\n";
    for (const auto& [pair, n] : r.confusion) out << pair.first << " -> " << pair.second << ": " << n << "\n";
    out << "\n";
  } else {
    out << "[eer]\nvalue: " << fmt(r.eer) << "\nthreshold: " << fmt(r.threshold) << "\n\n";
  }
  out << "[histogram]\nbins: " << r.histogram.matching.size() << "\nmatching_pairs: " << r.histogram.matching_count
      << "\nnonmatching_pairs: " << r.histogram.nonmatching_count << "\noverlap: " << fmt(r.histogram.overlap)
      << "\n";
  return out.str();
}

EvalReport parse_report(const std::string& text) {
  EvalReport r;
  std::istringstream in(text);
  std::string line, block;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": " + why);
  };
  auto number = [&](const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw fail("bad number '" + s + "'");
    return v;
  };
  auto count = [&](const std::string& s) {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw fail("bad count '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '[') {
      block = line;
      continue;
    }
    const auto colon = line.rfind(": ");
    if (colon == std::string::npos) throw fail("expected 'key: value'");
    const std::string key = line.substr(0, colon);
    const std::string value = line.substr(colon + 2);
    if (block == "[report]") {
      if (key == "task") {
        if (value != "classify" && value != "verify") throw fail("unknown task");
        r.task = value == "classify" ? TaskKind::kClassify : TaskKind::kVerify;
      } else if (key == "evaluated") {
        r.evaluated = count(value);
      } else if (key == "errors") {
        r.errors = count(value);
      }
    } else if (block == "[accuracy]" && key == "value") {
      r.accuracy = number(value);
    } else if (block == "[eer]") {
      if (key == "value") r.eer = number(value);
      if (key == "threshold") r.threshold = number(value);
    } else if (block == "[confusion]") {
      const auto arrow = key.find(" -> ");
      if (arrow == std::string::npos) throw fail("expected 'true -> predicted'");
      r.confusion[{key.substr(0, arrow), key.substr(arrow + 4)}] = count(value);
    } else if (block == "[histogram]") {
      if (key == "matching_pairs") r.histogram.matching_count = count(value);
      if (key == "nonmatching_pairs") r.histogram.nonmatching_count = count(value);
      if (key == "overlap") r.histogram.overlap = number(value);
    }
  }
  if (line_no == 0) throw Error(ErrorCode::kParseError, "empty report");
  return r;
}

}  // namespace warp
