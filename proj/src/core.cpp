#include "warp/core.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>

namespace warp {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kInvalidPath: return "InvalidPath";
    case ErrorCode::kArchitectureMismatch: return "ArchitectureMismatch";
    case ErrorCode::kNonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kGraphNotRecorded: return "GraphNotRecorded";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kNoReferences: return "NoReferences";
    case ErrorCode::kEmptyScoreList: return "EmptyScoreList";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kEmptyTrainSplit: return "EmptyTrainSplit";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInconsistentShapes: return "InconsistentShapes";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kShapeMismatch, "matrix data size does not match rows*cols");
  }
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

TimeSeries::TimeSeries(Matrix values) : values_(std::move(values)) {
  if (values_.rows() == 0 || values_.cols() == 0) {
    throw Error(ErrorCode::kInvalidConfig, "time series needs W >= 1 and K >= 1");
  }
  if (!values_.all_finite()) {
    throw Error(ErrorCode::kNonFiniteInput, "time series contains NaN or Inf");
  }
}

TimeSeries::TimeSeries(std::size_t length, std::size_t dims, std::vector<double> values)
    : TimeSeries(Matrix(length, dims, std::move(values))) {}

LabeledSeries::LabeledSeries(TimeSeries s, std::string l) : series(std::move(s)), label(std::move(l)) {
  if (label.empty()) throw Error(ErrorCode::kInvalidConfig, "label must be non-empty");
}

void validate_pair(const TimeSeries& a, const TimeSeries& b) {
  if (a.length() != b.length() || a.dims() != b.dims()) {
    std::ostringstream msg;
    msg << "W_a=" << a.length() << " W_b=" << b.length() << " K_a=" << a.dims()
        << " K_b=" << b.dims();
    throw Error(ErrorCode::kShapeMismatch, msg.str());
  }
  if (!a.values().all_finite() || !b.values().all_finite()) {
    throw Error(ErrorCode::kNonFiniteInput, "pair member contains NaN or Inf");
  }
}

Pair::Pair(TimeSeries a_in, TimeSeries b_in, int z_in)
    : a(std::move(a_in)), b(std::move(b_in)), z(z_in) {
  validate_pair(a, b);
  if (z != 0 && z != 1) throw Error(ErrorCode::kInvalidConfig, "pair label z must be 0 or 1");
}

WarpingMatrix::WarpingMatrix(Matrix entries, bool normalized)
    : entries_(std::move(entries)), normalized_(normalized) {
  if (entries_.rows() != entries_.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "warping matrix must be square");
  }
  if (!entries_.all_finite()) {
    throw Error(ErrorCode::kNonFiniteInput, "warping matrix contains NaN or Inf");
  }
  if (normalized_) {
    for (std::size_t i = 0; i < entries_.rows(); ++i) {
      double sum = 0.0;
      for (double v : entries_.row(i)) {
        if (!(v >= 0.0 && v <= 1.0)) {
          throw Error(ErrorCode::kNotNormalized, "normalized entry outside [0,1]");
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw Error(ErrorCode::kNotNormalized, "row does not sum to 1");
      }
    }
  }
}

void TrainingConfig::validate() const {
  if (!(margin > 0.0)) throw Error(ErrorCode::kInvalidConfig, "margin must be > 0");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidConfig, "learning_rate must be > 0");
  if (batch_size == 0) throw Error(ErrorCode::kInvalidConfig, "batch_size must be positive");
  if (match_parts > 0 && nonmatch_parts == 0) {
    throw Error(ErrorCode::kInvalidConfig, "match ratio denominator must be > 0");
  }
}

}  // namespace warp
