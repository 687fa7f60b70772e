#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace warp {

enum class ErrorCode {
  kShapeMismatch,
  kNonFiniteInput,
  kInvalidPath,
  kArchitectureMismatch,
  kNonFiniteActivation,
  kNotNormalized,
  kGraphNotRecorded,
  kInsufficientData,
  kDivergedLoss,
  kEmptyTrainingSet,
  kNoReferences,
  kEmptyScoreList,
  kInvalidConfig,
  kTooShort,
  kEmptyTrainSplit,
  kParseError,
  kInconsistentShapes,
  kIoError,
};

const char* error_code_name(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transposed() const;
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// A length-W sequence of K-dimensional points; row i is the point at step i.
class TimeSeries {
 public:
  TimeSeries() = default;
  // Throws kInvalidConfig on empty dims and kNonFiniteInput on NaN/Inf.
  explicit TimeSeries(Matrix values);
  TimeSeries(std::size_t length, std::size_t dims, std::vector<double> values);

  std::size_t length() const noexcept { return values_.rows(); }
  std::size_t dims() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }
  double operator()(std::size_t t, std::size_t k) const { return values_(t, k); }
  std::span<const double> point(std::size_t t) const { return values_.row(t); }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  Matrix values_;
};

struct LabeledSeries {
  TimeSeries series;
  std::string label;

  LabeledSeries() = default;
  LabeledSeries(TimeSeries s, std::string l);
  friend bool operator==(const LabeledSeries&, const LabeledSeries&) = default;
};

// Throws kShapeMismatch / kNonFiniteInput when a and b cannot form a pair.
void validate_pair(const TimeSeries& a, const TimeSeries& b);

struct Pair {
  TimeSeries a;
  TimeSeries b;
  int z = 0;  // 1 = matching, 0 = non-matching

  Pair(TimeSeries a_in, TimeSeries b_in, int z_in);
};

// W x W alignment matrix. When normalized, every row is a probability vector.
class WarpingMatrix {
 public:
  WarpingMatrix() = default;
  WarpingMatrix(Matrix entries, bool normalized);

  const Matrix& entries() const noexcept { return entries_; }
  bool normalized() const noexcept { return normalized_; }
  std::size_t size() const noexcept { return entries_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }

 private:
  Matrix entries_;
  bool normalized_ = false;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainingConfig {
  double margin = 1.0;
  double learning_rate = 1e-4;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 20;
  // matching : non-matching per batch; 0:0 selects uniform all-pairs sampling
  std::size_t match_parts = 0;
  std::size_t nonmatch_parts = 0;
  std::uint64_t seed = 0;
  AdamConfig adam;

  void validate() const;
};

}  // namespace warp
