#include "warp/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace warp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Sum of 2-4 sinusoids per dimension on t in [0, 1].
struct Prototype {
  struct Wave {
    double amplitude, frequency, phase;
  };
  std::vector<std::vector<Wave>> dims;

  static Prototype draw(std::mt19937_64& rng, std::size_t k) {
    std::uniform_int_distribution<int> count(2, 4);
    std::uniform_real_distribution<double> amp(0.5, 1.5), freq(0.5, 3.0), phase(0.0, kTwoPi);
    Prototype p;
    p.dims.resize(k);
    for (auto& waves : p.dims) {
      const int n = count(rng);
      for (int i = 0; i < n; ++i) waves.push_back({amp(rng), freq(rng), phase(rng)});
    }
    return p;
  }

  double operator()(std::size_t k, double t) const {
    double v = 0.0;
    for (const auto& w : dims[k]) v += w.amplitude * std::sin(kTwoPi * w.frequency * t + w.phase);
    return v;
  }
};

// Strictly increasing piecewise-linear bijection of [0, 1], blended with the
// identity by strength.
class MonotoneWarp {
 public:
  MonotoneWarp(std::mt19937_64& rng, double strength, std::size_t knots = 8) : strength_(strength) {
    std::gamma_distribution<double> gamma(2.0, 1.0);
    std::vector<double> inc(knots);
    for (double& v : inc) v = std::max(gamma(rng), 1e-3);
    const double total = std::accumulate(inc.begin(), inc.end(), 0.0);
    knots_.push_back(0.0);
    double acc = 0.0;
    for (double v : inc) knots_.push_back((acc += v) / total);
    knots_.back() = 1.0;
  }

  double operator()(double t) const {
    const std::size_t n = knots_.size() - 1;
    const double pos = t * static_cast<double>(n);
    const std::size_t i = std::min(static_cast<std::size_t>(pos), n - 1);
    const double frac = pos - static_cast<double>(i);
    const double g = knots_[i] + frac * (knots_[i + 1] - knots_[i]);
    return (1.0 - strength_) * t + strength_ * g;
  }

 private:
  double strength_;
  std::vector<double> knots_;
};

double grid_time(std::size_t i, std::size_t w) {
  return w == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(w - 1);
}

// Permutes 2-3 contiguous segments of the rows of m (never the identity).
void reorder_segments(std::mt19937_64& rng, Matrix& m) {
  const std::size_t w = m.rows();
  if (w < 4) return;
  std::uniform_int_distribution<int> count(2, 3);
  std::size_t n = static_cast<std::size_t>(count(rng));
  n = std::min(n, w / 2);
  // Cut points at least two rows apart.
  std::vector<std::size_t> cuts;
  while (cuts.size() + 1 < n) {
    std::uniform_int_distribution<std::size_t> pick(2, w - 2);
    const std::size_t c = pick(rng);
    bool ok = true;
    for (auto other : cuts) ok = ok && (c > other ? c - other : other - c) >= 2;
    if (ok) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  std::size_t start = 0;
  for (auto c : cuts) segments.emplace_back(start, c), start = c;
  segments.emplace_back(start, w);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  do {
    std::shuffle(order.begin(), order.end(), rng);
  } while (std::is_sorted(order.begin(), order.end()));

  Matrix out(w, m.cols());
  std::size_t row = 0;
  for (auto s : order)
    for (std::size_t r = segments[s].first; r < segments[s].second; ++r, ++row)
      std::copy(m.row(r).begin(), m.row(r).end(), out.row(row).begin());
  m = std::move(out);
}

Matrix render(const Prototype& proto, const MonotoneWarp* warp, std::size_t w, std::size_t k, double noise_std,
              std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix m(w, k);
  for (std::size_t i = 0; i < w; ++i) {
    const double t = warp ? (*warp)(grid_time(i, w)) : grid_time(i, w);
    for (std::size_t d = 0; d < k; ++d) {
      double v = proto(d, t);
      if (noise_std > 0.0) v += noise_std * noise(rng);
      m(i, d) = v;
    }
  }
  return m;
}

std::string numbered(const char* prefix, std::size_t i, std::size_t n) {
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  std::string digits = std::to_string(i);
  return prefix + std::string(width - std::min(width, digits.size()), '0') + digits;
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); }

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) invalid(std::string(name) + " must be in [0,1]");
}

}  // namespace

void SynthConfig::validate() const {
  if (n_classes < 1) invalid("n_classes must be >= 1");
  if (samples_per_class < 1) invalid("samples_per_class must be >= 1");
  if (length < 1) invalid("length must be >= 1");
  if (dims < 1) invalid("dims must be >= 1");
  check_unit(warp_strength, "warp_strength");
  check_unit(reorder_fraction, "reorder_fraction");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) invalid("noise_std must be >= 0");
}

void VerificationSynthConfig::validate() const {
  if (n_subjects < 1) invalid("n_subjects must be >= 1");
  if (genuine_per_subject < 1) invalid("genuine_per_subject must be >= 1");
  if (length < 1) invalid("length must be >= 1");
  if (dims < 1) invalid("dims must be >= 1");
  check_unit(warp_strength, "warp_strength");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) invalid("noise_std must be >= 0");
  if (!(forgery_strength >= 0.0) || !std::isfinite(forgery_strength)) invalid("forgery_strength must be >= 0");
}

bool is_forgery_label(const std::string& label) { return label.ends_with(kForgerySuffix); }

std::string subject_of(const std::string& label) {
  return is_forgery_label(label) ? label.substr(0, label.size() - kForgerySuffix.size()) : label;
}

std::vector<LabeledSeries> Dataset::subset(const std::string& split) const {
  std::vector<LabeledSeries> out;
  if (auto it = splits.find(split); it != splits.end())
    for (auto i : it->second) out.push_back(items.at(i));
  return out;
}

void Dataset::check() const {
  for (const auto& item : items) {
    if (item.series.length() != length || item.series.dims() != dims) {
      throw Error(ErrorCode::kInconsistentShapes, "item '" + item.label + "' is " +
                                                      std::to_string(item.series.length()) + "x" +
                                                      std::to_string(item.series.dims()) + ", dataset is " +
                                                      std::to_string(length) + "x" + std::to_string(dims));
    }
  }
  std::set<std::size_t> seen;
  for (const auto& [name, idx] : splits) {
    for (auto i : idx) {
      if (i >= items.size()) invalid("split '" + name + "' index out of range");
      if (!seen.insert(i).second) invalid("splits overlap at item " + std::to_string(i));
    }
  }
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  Dataset d;
  d.length = cfg.length;
  d.dims = cfg.dims;
  std::ostringstream prov;
  prov << "synthetic classes=" << cfg.n_classes << " per_class=" << cfg.samples_per_class << " W=" << cfg.length
       << " K=" << cfg.dims << " warp=" << cfg.warp_strength << " noise=" << cfg.noise_std
       << " reorder=" << cfg.reorder_fraction << " seed=" << cfg.seed;
  d.provenance = prov.str();

  std::vector<Prototype> protos;
  for (std::size_t c = 0; c < cfg.n_classes; ++c) protos.push_back(Prototype::draw(rng, cfg.dims));

  const auto reordered =
      static_cast<std::size_t>(std::llround(cfg.reorder_fraction * static_cast<double>(cfg.samples_per_class)));
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    std::vector<std::size_t> order(cfg.samples_per_class);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> reorder(cfg.samples_per_class, false);
    for (std::size_t i = 0; i < reordered; ++i) reorder[order[i]] = true;

    const std::string label = numbered("c", c, cfg.n_classes);
    for (std::size_t s = 0; s < cfg.samples_per_class; ++s) {
      const MonotoneWarp warp(rng, cfg.warp_strength);
      Matrix m = render(protos[c], &warp, cfg.length, cfg.dims, cfg.noise_std, rng);
      if (reorder[s]) reorder_segments(rng, m);
      d.items.emplace_back(TimeSeries(std::move(m)), label);
    }
  }
  return d;
}

Dataset generate_verification(const VerificationSynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  Dataset d;
  d.length = cfg.length;
  d.dims = cfg.dims;
  std::ostringstream prov;
  prov << "verification subjects=" << cfg.n_subjects << " genuine=" << cfg.genuine_per_subject
       << " forgeries=" << cfg.forgeries_per_subject << " W=" << cfg.length << " K=" << cfg.dims
       << " warp=" << cfg.warp_strength << " noise=" << cfg.noise_std << " forgery=" << cfg.forgery_strength
       << " seed=" << cfg.seed;
  d.provenance = prov.str();

  for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
    const Prototype genuine = Prototype::draw(rng, cfg.dims);
    // A forger reproduces the overall shape but adds their own components.
    Prototype forged = genuine;
    std::uniform_real_distribution<double> freq(0.5, 3.0), phase(0.0, kTwoPi);
    for (auto& waves : forged.dims) waves.push_back({cfg.forgery_strength, freq(rng), phase(rng)});

    const std::string label = numbered("s", s, cfg.n_subjects);
    for (std::size_t i = 0; i < cfg.genuine_per_subject; ++i) {
      const MonotoneWarp warp(rng, cfg.warp_strength);
      d.items.emplace_back(TimeSeries(render(genuine, &warp, cfg.length, cfg.dims, cfg.noise_std, rng)), label);
    }
    for (std::size_t i = 0; i < cfg.forgeries_per_subject; ++i) {
      const MonotoneWarp warp(rng, cfg.warp_strength);
      d.items.emplace_back(TimeSeries(render(forged, &warp, cfg.length, cfg.dims, cfg.noise_std, rng)),
                           label + std::string(kForgerySuffix));
    }
  }
  return d;
}

void split_per_class(Dataset& d, std::size_t val_per_class, std::size_t test_per_class, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < d.items.size(); ++i) by_class[d.items[i].label].push_back(i);
  std::mt19937_64 rng(seed);
  d.splits.clear();
  auto& train = d.splits["train"];
  auto& val = d.splits["val"];
  auto& test = d.splits["test"];
  for (auto& [label, idx] : by_class) {
    if (idx.size() < val_per_class + test_per_class + 1) {
      throw Error(ErrorCode::kInsufficientData, "class '" + label + "' has too few items to split");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    val.insert(val.end(), idx.begin(), idx.begin() + val_per_class);
    test.insert(test.end(), idx.begin() + val_per_class, idx.begin() + val_per_class + test_per_class);
    train.insert(train.end(), idx.begin() + val_per_class + test_per_class, idx.end());
  }
  for (auto& [name, idx] : d.splits) std::sort(idx.begin(), idx.end());
}

void split_by_subject(Dataset& d, std::size_t train_subjects, std::size_t val_subjects) {
  std::vector<std::string> subjects;
  std::map<std::string, std::size_t> rank;
  for (const auto& item : d.items) {
    const std::string s = subject_of(item.label);
    if (rank.emplace(s, subjects.size()).second) subjects.push_back(s);
  }
  if (train_subjects + val_subjects >= subjects.size() || train_subjects == 0) {
    throw Error(ErrorCode::kInsufficientData, "not enough subjects for the requested split");
  }
  d.splits.clear();
  auto& train = d.splits["train"];
  auto& val = d.splits["val"];
  auto& test = d.splits["test"];
  for (std::size_t i = 0; i < d.items.size(); ++i) {
    const std::size_t r = rank[subject_of(d.items[i].label)];
    (r < train_subjects ? train : r < train_subjects + val_subjects ? val : test).push_back(i);
  }
  if (val_subjects == 0) d.splits.erase("val");
}

TimeSeries resample(const Matrix& x, std::size_t length) {
  const std::size_t n = x.rows();
  if (n < 2) throw Error(ErrorCode::kTooShort, "resampling needs at least 2 points, got " + std::to_string(n));
  if (length < 1) invalid("target length must be >= 1");
  const std::size_t k = x.cols();
  Matrix out(length, k);
  for (std::size_t i = 0; i < length; ++i) {
    // Integer numerator keeps grid positions exact when n == length.
    const double pos = length == 1 ? 0.0
                                   : static_cast<double>(i * (n - 1)) / static_cast<double>(length - 1);
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), n - 1);
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t d = 0; d < k; ++d) {
      out(i, d) = frac == 0.0 ? x(lo, d) : x(lo, d) + frac * (x(lo + 1, d) - x(lo, d));
    }
  }
  return TimeSeries(std::move(out));
}

Dataset normalize(const Dataset& d, NormalizationMode mode) {
  if (mode == NormalizationMode::kNone) return d;
  const auto it = d.splits.find("train");
  if (it == d.splits.end() || it->second.empty()) {
    throw Error(ErrorCode::kEmptyTrainSplit, "z-score normalization needs a non-empty train split");
  }
  const std::size_t k = d.dims;
  std::vector<double> mean(k, 0.0), var(k, 0.0);
  double count = 0.0;
  for (auto i : it->second) {
    const Matrix& m = d.items.at(i).series.values();
    for (std::size_t t = 0; t < m.rows(); ++t)
      for (std::size_t c = 0; c < k; ++c) mean[c] += m(t, c);
    count += static_cast<double>(m.rows());
  }
  for (double& v : mean) v /= count;
  for (auto i : it->second) {
    const Matrix& m = d.items.at(i).series.values();
    for (std::size_t t = 0; t < m.rows(); ++t)
      for (std::size_t c = 0; c < k; ++c) var[c] += (m(t, c) - mean[c]) * (m(t, c) - mean[c]);
  }
  std::vector<double> scale(k);
  for (std::size_t c = 0; c < k; ++c) {
    const double sd = std::sqrt(var[c] / count);
    scale[c] = sd > 0.0 ? sd : 1.0;
  }

  Dataset out = d;
  for (auto& item : out.items) {
    Matrix m = item.series.values();
    for (std::size_t t = 0; t < m.rows(); ++t)
      for (std::size_t c = 0; c < k; ++c) m(t, c) = (m(t, c) - mean[c]) / scale[c];
    item.series = TimeSeries(std::move(m));
  }
  out.normalization = {mode, std::move(mean), std::move(scale)};
  return out;
}

std::string format_dataset(const Dataset& d) {
  d.check();
  std::string out = "W=" + std::to_string(d.length) + " K=" + std::to_string(d.dims) + "\n";
  char buf[64];
  for (const auto& item : d.items) {
    if (item.label.find_first_of(",\n\r") != std::string::npos) {
      invalid("label '" + item.label + "' contains a comma or newline");
    }
    out += item.label;
    for (double v : item.series.values().data()) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out += ',';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

Dataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& reason) -> Error {
    return Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": " + reason);
  };

  Dataset d;
  if (!std::getline(in, line)) {
    line_no = 1;
    throw fail("empty file");
  }
  ++line_no;
  {
    unsigned long long w = 0, k = 0;
    char tail = 0;
    if (std::sscanf(line.c_str(), "W=%llu K=%llu%c", &w, &k, &tail) != 2 || w == 0 || k == 0) {
      throw fail("expected header 'W=<int> K=<int>'");
    }
    d.length = w;
    d.dims = k;
  }
  const std::size_t expected = d.length * d.dims;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0) throw fail("expected 'label,values...'");
    std::string label = line.substr(0, comma);
    std::vector<double> values;
    values.reserve(expected);
    const char* p = line.data() + comma + 1;
    const char* end = line.data() + line.size();
    while (true) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw fail("bad number at field " + std::to_string(values.size() + 1));
      values.push_back(v);
      p = res.ptr;
      if (p == end) break;
      if (*p != ',') throw fail("unexpected character '" + std::string(1, *p) + "'");
      ++p;
    }
    if (values.size() != expected) {
      throw fail("expected " + std::to_string(expected) + " values, found " + std::to_string(values.size()));
    }
    try {
      d.items.emplace_back(TimeSeries(d.length, d.dims, std::move(values)), std::move(label));
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  const std::string text = format_dataset(d);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Dataset d = parse_dataset(buf.str());
  d.provenance = "file " + path.filename().string();
  return d;
}

LabeledSeries load_point_file(const std::filesystem::path& path, const std::string& label, std::size_t length,
                              bool keep_pen) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0, rows = 0;
  const std::size_t k = keep_pen ? 3 : 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double x, y, pen;
    if (!(fields >> x >> y >> pen)) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": expected x y pen");
    }
    values.push_back(x);
    values.push_back(y);
    if (keep_pen) values.push_back(pen);
    ++rows;
  }
  return LabeledSeries(resample(Matrix(rows, k, std::move(values)), length), label);
}

}  // namespace warp
