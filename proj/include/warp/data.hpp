#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "warp/core.hpp"

namespace warp {

struct SynthConfig {
  std::size_t n_classes = 3;
  std::size_t samples_per_class = 100;
  std::size_t length = 32;  // W
  std::size_t dims = 2;     // K
  double warp_strength = 0.3;
  double noise_std = 0.05;
  double reorder_fraction = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Genuine samples per subject plus skilled-forgery style imitations, which
// are labelled "<subject>/forgery".
struct VerificationSynthConfig {
  std::size_t n_subjects = 20;
  std::size_t genuine_per_subject = 15;
  std::size_t forgeries_per_subject = 15;
  std::size_t length = 64;
  std::size_t dims = 4;
  double warp_strength = 0.3;
  double noise_std = 0.05;
  double forgery_strength = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class NormalizationMode { kNone, kZScore };

struct Normalization {
  NormalizationMode mode = NormalizationMode::kNone;
  std::vector<double> mean;  // per dimension
  std::vector<double> scale;

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

struct Dataset {
  std::vector<LabeledSeries> items;
  std::map<std::string, std::vector<std::size_t>> splits;  // "train", "val", "test"
  std::size_t length = 0;
  std::size_t dims = 0;
  std::string provenance;
  Normalization normalization;

  // Items at the given split indices; empty when the split is absent.
  std::vector<LabeledSeries> subset(const std::string& split) const;
  // Throws kInconsistentShapes when an item deviates from (length, dims)
  // and kInvalidConfig when splits overlap or index out of range.
  void check() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline constexpr std::string_view kForgerySuffix = "/forgery";
bool is_forgery_label(const std::string& label);
std::string subject_of(const std::string& label);

Dataset generate_synthetic(const SynthConfig& cfg);
Dataset generate_verification(const VerificationSynthConfig& cfg);

// Per class, val_per_class and test_per_class random items go to val and
// test; the rest to train.
void split_per_class(Dataset& d, std::size_t val_per_class, std::size_t test_per_class, std::uint64_t seed);

// Subjects in order of first appearance: the first train_subjects go to
// train, the next val_subjects to val, the rest to test. Forgeries follow
// their subject.
void split_by_subject(Dataset& d, std::size_t train_subjects, std::size_t val_subjects);

// Linear interpolation of each dimension onto W evenly spaced positions.
// Rows of x are time steps. Throws kTooShort when x has fewer than 2 rows.
TimeSeries resample(const Matrix& x, std::size_t length);

// Statistics come from the train split and are applied to every item.
Dataset normalize(const Dataset& d, NormalizationMode mode);

void save_dataset(const Dataset& d, const std::filesystem::path& path);
// The file carries items only; splits and normalization are not stored.
Dataset load_dataset(const std::filesystem::path& path);
std::string format_dataset(const Dataset& d);
Dataset parse_dataset(const std::string& text);

// Three columns per line (x, y, pen state), separated by whitespace or commas.
// Lines starting with '#' are skipped.
LabeledSeries load_point_file(const std::filesystem::path& path, const std::string& label, std::size_t length,
                              bool keep_pen = false);

}  // namespace warp
