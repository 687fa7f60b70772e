#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "warp/data.hpp"
#include "warp/eval.hpp"

using namespace warp;
using testing::code_of;

TEST_CASE("knn majority and tie-breaks") {
  const std::vector<std::string> labels{"x", "y", "x", "z"};
  CHECK(knn_vote(std::vector<double>{0.1, 0.2, 0.3, 0.4}, labels, 3) == "x");
  // Three-way tie: y has the smallest mean distance.
  CHECK(knn_vote(std::vector<double>{0.3, 0.1, 9.0, 0.2}, {"x", "y", "q", "z"}, 3) == "y");
  // Same votes and mean: lexicographic.
  CHECK(knn_vote(std::vector<double>{0.5, 0.5}, {"b", "a"}, 2) == "a");
  CHECK(knn_vote(std::vector<double>{0.4, 0.1}, labels.at(0) == "x" ? std::vector<std::string>{"x", "y"}
                                                                      : std::vector<std::string>{}, 1) == "y");
  CHECK(code_of([] { knn_vote(std::vector<double>{}, {}, 1); }) == ErrorCode::kEmptyTrainingSet);
  CHECK(code_of([] { knn_vote(std::vector<double>{1.0}, {"a"}, 2); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("knn is invariant to increasing transforms of the distances") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::uniform_int_distribution<int> lab(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(12), t(12);
    std::vector<std::string> labels(12);
    for (std::size_t i = 0; i < 12; ++i) {
      d[i] = u(rng);
      labels[i] = std::string(1, static_cast<char>('a' + lab(rng)));
    }
    for (std::size_t i = 0; i < 12; ++i) t[i] = std::exp(3 * d[i]) + 5;
    for (std::size_t k : {1, 3, 5}) {
      // Mean-distance tie-breaks are compared on transformed values, so
      // only check cases without a vote tie.
      const std::string a = knn_vote(d, labels, k);
      const std::string b = knn_vote(t, labels, k);
      std::map<std::string, int> votes;
      std::vector<std::size_t> order(12);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto l, auto r) { return d[l] < d[r]; });
      for (std::size_t i = 0; i < k; ++i) ++votes[labels[order[i]]];
      int top = 0, count_top = 0;
      for (auto& [l, v] : votes) top = std::max(top, v);
      for (auto& [l, v] : votes) count_top += v == top;
      if (count_top == 1) CHECK(a == b);
    }
  }
}

TEST_CASE("knn classify with nearest self") {
  std::mt19937_64 rng(2);
  std::vector<LabeledSeries> train;
  for (int i = 0; i < 6; ++i) train.emplace_back(testing::random_series(rng, 8, 2), i < 3 ? "a" : "b");
  CHECK(knn_classify(train[4].series, train, dtw_metric(), 1) == "b");
  CHECK(code_of([&] { knn_classify(train[0].series, {}, dtw_metric(), 1); }) == ErrorCode::kEmptyTrainingSet);
}

TEST_CASE("classification report on separable and mislabeled sets") {
  SynthConfig c;
  c.n_classes = 2;
  c.samples_per_class = 6;
  c.length = 16;
  c.warp_strength = 0;
  c.noise_std = 0.01;
  c.seed = 2;
  Dataset d = generate_synthetic(c);
  split_per_class(d, 0, 2, 1);
  const auto train = d.subset("train");
  auto test = d.subset("test");
  const EvalReport good = classification_report(test, train, dtw_metric(), 3);
  CHECK(good.accuracy == 1.0);
  CHECK(good.confusion.empty());
  CHECK(good.histogram.matching_count + good.histogram.nonmatching_count == test.size() * train.size());

  for (auto& t : test) t.label = t.label == "c0" ? "c1" : "c0";
  const EvalReport bad = classification_report(test, train, dtw_metric(), 3);
  CHECK(bad.accuracy == 0.0);
  std::size_t total = 0;
  for (const auto& [pair, n] : bad.confusion) total += n;
  CHECK(total == bad.errors);
  CHECK(bad.errors == test.size());
}

TEST_CASE("subject distance is the mean over references") {
  const TimeSeries probe(1, 1, {0.0});
  const std::vector<TimeSeries> refs{TimeSeries(1, 1, {1.0}), TimeSeries(1, 1, {2.0}), TimeSeries(1, 1, {3.0})};
  const DistanceFn absdiff = [](const TimeSeries& a, const TimeSeries& b) { return std::abs(a(0, 0) - b(0, 0)); };
  CHECK(subject_distance(probe, refs, absdiff) == 2.0);
  CHECK(subject_distance(probe, {refs[2], refs[0], refs[1]}, absdiff) == 2.0);
  CHECK(subject_distance(probe, {refs[1]}, absdiff) == absdiff(probe, refs[1]));
  CHECK(code_of([&] { subject_distance(probe, {}, absdiff); }) == ErrorCode::kNoReferences);
}

TEST_CASE("eer hand-derived cases") {
  const auto cases = testing::eer_hand_cases();
  for (const auto& c : cases) {
    CAPTURE(c.genuine);
    CAPTURE(c.forgery);
    CHECK(std::abs(compute_eer(c.genuine, c.forgery).eer - c.eer) <= 1e-9);
  }
  const EerResult e = compute_eer({1, 2}, {3, 4});
  CHECK(e.threshold >= 2.0);
  CHECK(e.threshold < 3.0);
  CHECK(code_of([] { compute_eer({}, {1}); }) == ErrorCode::kEmptyScoreList);
  CHECK(code_of([] { compute_eer({1}, {}); }) == ErrorCode::kEmptyScoreList);
}

TEST_CASE("eer matches the grid oracle and shifting forgeries up never raises it") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> size(1, 25);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> g(size(rng)), f(size(rng));
    for (double& v : g) v = n(rng);
    for (double& v : f) v = n(rng) + 1.0;
    const double eer = compute_eer(g, f).eer;
    CHECK(std::abs(eer - testing::grid_eer(g, f, 20000)) <= 0.5 / (g.size() + f.size()));
    auto shifted = f;
    for (double& v : shifted) v += 0.7;
    CHECK(compute_eer(g, shifted).eer <= eer + 1e-12);
  }
}

TEST_CASE("histogram normalization and overlap") {
  const Histogram disjoint = export_histograms({0, 0.1, 0.2}, {0.9, 1.0}, 10);
  CHECK(disjoint.overlap == 0.0);
  const Histogram same = export_histograms({1, 2, 3, 2}, {2, 3, 1, 2}, 7);
  CHECK(same.overlap == doctest::Approx(1.0).epsilon(1e-12));
  double sm = 0, sn = 0;
  for (double v : same.matching) sm += v;
  for (double v : same.nonmatching) sn += v;
  CHECK(std::abs(sm - 1) <= 1e-9);
  CHECK(std::abs(sn - 1) <= 1e-9);
  CHECK(export_histograms({5}, {5}, 3).overlap == doctest::Approx(1.0));
  CHECK(code_of([] { export_histograms({}, {1}, 3); }) == ErrorCode::kEmptyScoreList);
  CHECK(code_of([] { export_histograms({1}, {1}, 0); }) == ErrorCode::kInvalidConfig);

  const std::string csv = histogram_csv(disjoint);
  CHECK(csv.rfind("bin_left,bin_right,matching_density,nonmatching_density\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
}

TEST_CASE("verification protocol and report round trip") {
  VerificationSynthConfig c;
  c.n_subjects = 4;
  c.genuine_per_subject = 8;
  c.forgeries_per_subject = 5;
  c.length = 16;
  c.dims = 2;
  c.seed = 5;
  const Dataset d = generate_verification(c);
  const VerificationScores s = verification_scores(d.items, dtw_metric(), 5);
  CHECK(s.genuine.size() == 4 * 3);
  CHECK(s.forgery.size() == 4 * 5);
  const EvalReport r = verification_report(d.items, dtw_metric(), 5);
  CHECK(r.task == TaskKind::kVerify);
  CHECK(r.eer >= 0.0);
  CHECK(r.eer <= 1.0);
  CHECK(parse_report(format_report(r)) == r);

  // Identical genuine and forgery scores.
  const DistanceFn constant = [](const TimeSeries&, const TimeSeries&) { return 1.0; };
  CHECK(verification_report(d.items, constant, 5).eer == 0.5);

  std::vector<LabeledSeries> only_forgeries{d.items[8], d.items[9]};
  CHECK(code_of([&] { verification_scores(only_forgeries, dtw_metric(), 5); }) == ErrorCode::kNoReferences);
}

TEST_CASE("classification report round trip") {
  EvalReport r;
  r.task = TaskKind::kClassify;
  r.accuracy = 0.9166666666666666;
  r.evaluated = 12;
  r.errors = 1;
  r.confusion[{"c0", "c2"}] = 1;
  r.histogram = export_histograms({0.1, 0.2}, {0.3, 0.25}, 4);
  const EvalReport back = parse_report(format_report(r));
  CHECK(back == r);
  CHECK(back.histogram.overlap == r.histogram.overlap);
  CHECK(code_of([] { parse_report(""); }) == ErrorCode::kParseError);
  CHECK(code_of([] { parse_report("[accuracy]\nvalue: x\n"); }) == ErrorCode::kParseError);
}
