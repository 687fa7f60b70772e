// warpctl: dataset generation, training, evaluation and warp export.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "warp/checkpoint.hpp"
#include "warp/data.hpp"
#include "warp/dtw.hpp"
#include "warp/eval.hpp"
#include "warp/train.hpp"
#include "warp/warpnet.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace warp;

namespace {

// FNV-1a over the file bytes.
std::string checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "missing";
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

class Manifest {
 public:
  Manifest(std::string command, fs::path path) : path_(std::move(path)) { doc_["command"] = std::move(command); }

  json& config() { return doc_["config"]; }
  void seed(std::uint64_t s) { doc_["seed"] = s; }
  void input(const fs::path& p) { doc_["inputs"][p.string()] = checksum(p); }
  void output(const fs::path& p) { doc_["outputs"][p.string()] = nullptr; }

  void begin() {
    doc_["status"] = "running";
    flush();
  }
  void finish() {
    for (auto& [p, sum] : doc_["outputs"].items()) sum = checksum(p);
    doc_["status"] = "complete";
    flush();
  }

 private:
  void flush() { write_text(path_, doc_.dump(2) + "\n"); }
  fs::path path_;
  json doc_;
};

std::vector<std::size_t> parse_list(const std::string& s, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size() || v == 0) {
      throw Error(ErrorCode::kInvalidConfig, std::string(flag) + ": expected comma-separated positive integers");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidConfig, std::string(flag) + ": empty list");
  return out;
}

std::pair<std::size_t, std::size_t> parse_ratio(const std::string& s) {
  std::size_t m = 0, n = 0;
  int used = 0;
  if (std::sscanf(s.c_str(), "%zu:%zu%n", &m, &n, &used) != 2 || static_cast<std::size_t>(used) != s.size() ||
      (m == 0) != (n == 0)) {
    throw Error(ErrorCode::kInvalidConfig, "--ratio: expected M:N with both parts > 0, or 0:0 for uniform");
  }
  return {m, n};
}

// Options shared by several subcommands; presets fill in whatever the user
// did not pass explicitly.
struct Options {
  std::string preset;
  // generate
  std::size_t classes = 3, per_class = 100, length = 32, dims = 2;
  double warp_strength = 0.3, noise = 0.05, reorder = 0.0;
  bool verification = false;
  std::size_t subjects = 20, genuine = 15, forgeries = 15;
  double forgery_strength = 0.5;
  // data handling
  std::string data, task = "classify", normalization = "zscore";
  std::size_t val_per_class = 10, test_per_class = 20;
  double train_fraction = 0.5, val_fraction = 0.1;
  std::uint64_t split_seed = 0;
  // model and optimization
  std::string arch = "small", channels = "16,32,64", ratio = "0:0", init = "he";
  std::size_t batch = 512, steps = 2000, epochs = 20, steps_per_epoch = 0, plateau = 200;
  double lr = 1e-4, margin = 1.0;
  std::uint64_t seed = 0;
  // evaluation
  std::size_t k = 3, refs = 5, bins = 50;
  std::string split = "test";
  // io
  std::string ckpt, out, log, report, hist, manifest;
  std::size_t pair_a = 0, pair_b = 1;
};

struct Registered {
  std::map<std::string, std::vector<CLI::Option*>> opts;
  bool given(const std::string& name) const {
    const auto it = opts.find(name);
    if (it == opts.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(), [](const CLI::Option* o) { return o->count() > 0; });
  }
};

void apply_preset(Options& o, const Registered& r) {
  if (o.preset.empty()) return;
  auto set = [&](const char* name, auto& field, auto value) {
    if (!r.given(name)) field = value;
  };
  if (o.preset == "unipen-like") {
    set("--w", o.length, std::size_t{64});
    set("--k", o.dims, std::size_t{2});
    set("--arch", o.arch, std::string("small"));
    set("--batch", o.batch, std::size_t{512});
    set("--ratio", o.ratio, std::string("0:0"));
    set("--task", o.task, std::string("classify"));
  } else if (o.preset == "mcyt-like") {
    set("--w", o.length, std::size_t{256});
    set("--k", o.dims, std::size_t{64});
    set("--arch", o.arch, std::string("large"));
    set("--batch", o.batch, std::size_t{15});
    set("--ratio", o.ratio, std::string("1:2"));
    set("--task", o.task, std::string("verify"));
    set("--verification", o.verification, true);
  }
  set("--margin", o.margin, 1.0);
  set("--lr", o.lr, 1e-4);
  set("--refs", o.refs, std::size_t{5});
  set("--k-nn", o.k, std::size_t{3});
}

json config_json(const Options& o) {
  json j;
  j["preset"] = o.preset;
  j["classes"] = o.classes;
  j["per_class"] = o.per_class;
  j["w"] = o.length;
  j["k"] = o.dims;
  j["warp"] = o.warp_strength;
  j["noise"] = o.noise;
  j["reorder"] = o.reorder;
  j["verification"] = o.verification;
  j["subjects"] = o.subjects;
  j["genuine"] = o.genuine;
  j["forgeries"] = o.forgeries;
  j["forgery_strength"] = o.forgery_strength;
  j["task"] = o.task;
  j["normalize"] = o.normalization;
  j["val_per_class"] = o.val_per_class;
  j["test_per_class"] = o.test_per_class;
  j["train_fraction"] = o.train_fraction;
  j["val_fraction"] = o.val_fraction;
  j["split_seed"] = o.split_seed;
  j["arch"] = o.arch;
  j["channels"] = o.channels;
  j["ratio"] = o.ratio;
  j["init"] = o.init;
  j["batch"] = o.batch;
  j["steps"] = o.steps;
  j["epochs"] = o.epochs;
  j["steps_per_epoch"] = o.steps_per_epoch;
  j["plateau"] = o.plateau;
  j["lr"] = o.lr;
  j["margin"] = o.margin;
  j["k_nn"] = o.k;
  j["refs"] = o.refs;
  j["bins"] = o.bins;
  j["split"] = o.split;
  return j;
}

TaskKind task_of(const Options& o) {
  if (o.task == "classify") return TaskKind::kClassify;
  if (o.task == "verify") return TaskKind::kVerify;
  throw Error(ErrorCode::kInvalidConfig, "--task: expected classify or verify");
}

// Loads the dataset, derives the splits and applies normalization.
Dataset prepared_dataset(const Options& o) {
  Dataset d = load_dataset(o.data);
  if (task_of(o) == TaskKind::kClassify) {
    split_per_class(d, o.val_per_class, o.test_per_class, o.split_seed);
  } else {
    std::set<std::string> subjects;
    for (const auto& item : d.items) subjects.insert(subject_of(item.label));
    const auto n = static_cast<double>(subjects.size());
    const auto train = static_cast<std::size_t>(std::max(1.0, std::floor(o.train_fraction * n)));
    const auto val = static_cast<std::size_t>(std::floor(o.val_fraction * n));
    split_by_subject(d, train, val);
  }
  if (o.normalization == "zscore") return normalize(d, NormalizationMode::kZScore);
  if (o.normalization == "none") return d;
  throw Error(ErrorCode::kInvalidConfig, "--normalize: expected zscore or none");
}

UNetArch arch_of(const Options& o, std::size_t dims) {
  const auto ch = parse_list(o.channels, "--channels");
  if (o.arch == "small") return UNetArch::small(dims, ch);
  if (o.arch == "large") return UNetArch::large(dims, ch);
  throw Error(ErrorCode::kInvalidConfig, "--arch: expected small or large");
}

fs::path manifest_path(const Options& o, const fs::path& primary) {
  return o.manifest.empty() ? fs::path(primary.string() + ".manifest.json") : fs::path(o.manifest);
}

LogFn log_writer(std::ofstream& out) {
  return [&out](const LogRecord& r) {
    out << format_log_record(r) << '\n';
    out.flush();
    if (r.stage == "warning") std::cerr << "warning: " << r.message << "\n";
  };
}

int cmd_generate(const Options& o) {
  Manifest m("generate", manifest_path(o, o.out));
  m.config() = config_json(o);
  m.seed(o.seed);
  m.output(o.out);
  m.begin();
  Dataset d;
  if (o.verification) {
    VerificationSynthConfig c;
    c.n_subjects = o.subjects;
    c.genuine_per_subject = o.genuine;
    c.forgeries_per_subject = o.forgeries;
    c.length = o.length;
    c.dims = o.dims;
    c.warp_strength = o.warp_strength;
    c.noise_std = o.noise;
    c.forgery_strength = o.forgery_strength;
    c.seed = o.seed;
    d = generate_verification(c);
  } else {
    SynthConfig c;
    c.n_classes = o.classes;
    c.samples_per_class = o.per_class;
    c.length = o.length;
    c.dims = o.dims;
    c.warp_strength = o.warp_strength;
    c.noise_std = o.noise;
    c.reorder_fraction = o.reorder;
    c.seed = o.seed;
    d = generate_synthetic(c);
  }
  save_dataset(d, o.out);
  m.finish();
  std::cout << "wrote " << d.items.size() << " records to " << o.out << "\n";
  return 0;
}

int cmd_pretrain(const Options& o) {
  const fs::path log_path = o.log.empty() ? fs::path(o.out + ".log.jsonl") : fs::path(o.log);
  Manifest m("pretrain", manifest_path(o, o.out));
  m.config() = config_json(o);
  m.seed(o.seed);
  m.input(o.data);
  m.output(o.out);
  m.output(log_path);
  m.begin();

  const Dataset d = prepared_dataset(o);
  const auto train = d.subset("train");
  const auto [mp, np] = parse_ratio(o.ratio);
  PretrainConfig pc;
  pc.max_steps = o.steps;
  pc.batch_size = o.batch;
  pc.learning_rate = o.lr;
  pc.match_parts = mp;
  pc.nonmatch_parts = np;
  pc.plateau_window = o.plateau;
  pc.seed = o.seed;
  TrainState st = TrainState::from_params(UNetParams::he_init(arch_of(o, d.dims), o.seed), o.seed);
  st.params.arch().check_length(d.length);
  std::ofstream log(log_path, std::ios::trunc);
  st = pretrain(std::move(st), train, pc, log_writer(log));
  save_checkpoint({st.params, o.seed, st.step}, o.out);
  m.finish();
  std::cout << "pretrained " << st.step << " steps, checkpoint " << o.out << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const fs::path log_path = o.log.empty() ? fs::path(o.out + ".log.jsonl") : fs::path(o.log);
  Manifest m("train", manifest_path(o, o.out));
  m.config() = config_json(o);
  m.seed(o.seed);
  m.input(o.data);
  std::optional<fs::path> init_ckpt;
  if (o.init.rfind("pretrained:", 0) == 0) {
    init_ckpt = o.init.substr(11);
    m.input(*init_ckpt);
  } else if (o.init != "he") {
    throw Error(ErrorCode::kInvalidConfig, "--init: expected he or pretrained:<path>");
  }
  m.output(o.out);
  m.output(log_path);
  m.begin();

  const Dataset d = prepared_dataset(o);
  TrainState st;
  if (init_ckpt) {
    const Checkpoint c = load_checkpoint(*init_ckpt);
    if (c.params.arch().input_dims != d.dims) {
      throw Error(ErrorCode::kArchitectureMismatch, "checkpoint expects K=" + std::to_string(c.params.arch().input_dims));
    }
    st = TrainState::from_params(c.params, c.seed);
    st.step = c.step;
  } else {
    st = TrainState::from_params(UNetParams::he_init(arch_of(o, d.dims), o.seed), o.seed);
  }
  st.params.arch().check_length(d.length);

  const auto [mp, np] = parse_ratio(o.ratio);
  ContrastiveConfig cfg;
  cfg.training.margin = o.margin;
  cfg.training.learning_rate = o.lr;
  cfg.training.batch_size = o.batch;
  cfg.training.max_epochs = o.epochs;
  cfg.training.match_parts = mp;
  cfg.training.nonmatch_parts = np;
  cfg.training.seed = o.seed;
  cfg.steps_per_epoch = o.steps_per_epoch;
  cfg.task = task_of(o);
  cfg.k = o.k;
  cfg.refs = o.refs;
  std::ofstream log(log_path, std::ios::trunc);
  st = train_contrastive(std::move(st), d.subset("train"), d.subset("val"), cfg, log_writer(log));
  save_checkpoint({st.params, st.seed, st.step}, o.out);
  m.finish();
  std::cout << "trained to step " << st.step << " (best epoch " << st.epoch << "), checkpoint " << o.out << "\n";
  return 0;
}

int run_eval(const Options& o, const std::string& command, const std::optional<fs::path>& ckpt) {
  const fs::path report_path = o.report;
  const fs::path hist_path = o.hist.empty() ? fs::path(o.report + ".hist.csv") : fs::path(o.hist);
  Manifest m(command, manifest_path(o, report_path));
  m.config() = config_json(o);
  m.seed(o.seed);
  m.input(o.data);
  if (ckpt) m.input(*ckpt);
  m.output(report_path);
  m.output(hist_path);
  m.begin();

  const Dataset d = prepared_dataset(o);
  DistanceFn fn;
  if (ckpt) {
    const Checkpoint c = load_checkpoint(*ckpt);
    c.params.arch().check_length(d.length);
    if (c.params.arch().input_dims != d.dims) {
      throw Error(ErrorCode::kArchitectureMismatch, "checkpoint expects K=" + std::to_string(c.params.arch().input_dims));
    }
    fn = model_metric(c.params);
  } else {
    fn = dtw_metric();
  }
  const auto probes = d.subset(o.split);
  if (probes.empty()) throw Error(ErrorCode::kInsufficientData, "split '" + o.split + "' is empty");
  EvalReport r = task_of(o) == TaskKind::kClassify ? classification_report(probes, d.subset("train"), fn, o.k, o.bins)
                                                   : verification_report(probes, fn, o.refs, o.bins);
  write_text(report_path, format_report(r));
  write_text(hist_path, histogram_csv(r.histogram));
  m.finish();
  if (r.task == TaskKind::kClassify) std::cout << "accuracy " << r.accuracy << "\n";
  else std::cout << "eer " << r.eer << "\n";
  return 0;
}

void csv_block(std::ostream& out, const std::string& name, const Matrix& x) {
  out << "# " << name << " " << x.rows() << "x" << x.cols() << "\n";
  char buf[64];
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof buf, x(r, c));
      if (c) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << "\n";
  }
  out << "\n";
}

int cmd_export_warp(const Options& o) {
  Manifest m("export-warp", manifest_path(o, o.out));
  m.config() = config_json(o);
  m.config()["pair"] = {o.pair_a, o.pair_b};
  m.input(o.data);
  m.input(o.ckpt);
  m.output(o.out);
  m.begin();

  const Dataset d = prepared_dataset(o);
  if (o.pair_a >= d.items.size() || o.pair_b >= d.items.size()) {
    throw Error(ErrorCode::kInvalidConfig, "--a/--b: item index out of range");
  }
  const Checkpoint c = load_checkpoint(o.ckpt);
  const TimeSeries& a = d.items[o.pair_a].series;
  const TimeSeries& b = d.items[o.pair_b].series;
  const Matrix raw = unet_forward(c.params, a, b);
  const WarpPaths paths = make_paths(raw);
  std::ostringstream out;
  csv_block(out, "A", a.values());
  csv_block(out, "B", b.values());
  csv_block(out, "DTW_cost", dtw::local_cost_matrix(a, b));
  csv_block(out, "P_DTW", dtw::dtw_target(a, b).entries());
  csv_block(out, "P", raw);
  csv_block(out, "P_s", paths.source.entries());
  csv_block(out, "P_t", paths.target.entries());
  csv_block(out, "P_sB", warp::warp(paths.source, b).values());
  csv_block(out, "P_tA", warp::warp(paths.target, a).values());
  write_text(o.out, out.str());
  m.finish();
  std::cout << "wrote warp matrices for items " << o.pair_a << " and " << o.pair_b << " to " << o.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned time-series warping: data generation, training and evaluation"};
  app.require_subcommand(1);
  Options o;
  Registered reg;

  auto add_preset = [&](CLI::App* sub) {
    sub->add_option("--preset", o.preset, "Hyperparameter preset")
        ->check(CLI::IsMember({"unipen-like", "mcyt-like"}));
  };
  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", o.data, "Dataset file")->required()->check(CLI::ExistingFile);
    reg.opts["--task"].push_back(sub->add_option("--task", o.task, "classify or verify")
                             ->check(CLI::IsMember({"classify", "verify"})));
    sub->add_option("--normalize", o.normalization, "zscore or none")->check(CLI::IsMember({"zscore", "none"}));
    sub->add_option("--val-per-class", o.val_per_class, "Validation items per class");
    sub->add_option("--test-per-class", o.test_per_class, "Test items per class");
    sub->add_option("--train-fraction", o.train_fraction, "Fraction of subjects used for training")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--val-fraction", o.val_fraction, "Fraction of subjects used for validation")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--split-seed", o.split_seed, "Seed for the per-class split");
  };
  auto add_model = [&](CLI::App* sub) {
    reg.opts["--arch"].push_back(sub->add_option("--arch", o.arch, "small or large")->check(CLI::IsMember({"small", "large"})));
    sub->add_option("--channels", o.channels, "Channels per U-Net level, comma-separated");
    reg.opts["--batch"].push_back(sub->add_option("--batch", o.batch, "Pairs per batch")->check(CLI::PositiveNumber));
    reg.opts["--ratio"].push_back(sub->add_option("--ratio", o.ratio, "Matching:non-matching pairs per batch (0:0 uniform)"));
    reg.opts["--lr"].push_back(sub->add_option("--lr", o.lr, "Adam learning rate")->check(CLI::PositiveNumber));
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--out", o.out, "Checkpoint path")->required();
    sub->add_option("--log", o.log, "Training log (JSON lines)");
  };
  auto add_manifest = [&](CLI::App* sub) { sub->add_option("--manifest", o.manifest, "Run manifest path"); };

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  add_preset(gen);
  add_manifest(gen);
  gen->add_option("--classes", o.classes, "Number of classes")->check(CLI::PositiveNumber);
  gen->add_option("--per-class", o.per_class, "Samples per class")->check(CLI::PositiveNumber);
  reg.opts["--w"].push_back(gen->add_option("--w", o.length, "Series length W")->check(CLI::PositiveNumber));
  reg.opts["--k"].push_back(gen->add_option("--k", o.dims, "Dimensions K")->check(CLI::PositiveNumber));
  gen->add_option("--warp", o.warp_strength, "Monotone warp strength")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--noise", o.noise, "Gaussian noise std")->check(CLI::NonNegativeNumber);
  gen->add_option("--reorder", o.reorder, "Fraction of samples with permuted segments")->check(CLI::Range(0.0, 1.0));
  reg.opts["--verification"].push_back(gen->add_flag("--verification", o.verification, "Generate subjects with forgeries"));
  gen->add_option("--subjects", o.subjects, "Subjects (verification)")->check(CLI::PositiveNumber);
  gen->add_option("--genuine", o.genuine, "Genuine samples per subject")->check(CLI::PositiveNumber);
  gen->add_option("--forgeries", o.forgeries, "Forgeries per subject")->check(CLI::NonNegativeNumber);
  gen->add_option("--forgery-strength", o.forgery_strength, "Forger deviation amplitude")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", o.seed, "Random seed");
  gen->add_option("--out", o.out, "Dataset file to write")->required();

  auto* pre = app.add_subcommand("pretrain", "Pre-train the U-Net to mimic DTW alignments");
  add_preset(pre);
  add_manifest(pre);
  add_data(pre);
  add_model(pre);
  pre->add_option("--steps", o.steps, "Maximum optimizer steps");
  pre->add_option("--plateau", o.plateau, "Plateau window in steps (0 disables)");

  auto* tr = app.add_subcommand("train", "Contrastive training with validation-based selection");
  add_preset(tr);
  add_manifest(tr);
  add_data(tr);
  add_model(tr);
  tr->add_option("--init", o.init, "he or pretrained:<checkpoint>");
  tr->add_option("--epochs", o.epochs, "Maximum epochs");
  tr->add_option("--steps-per-epoch", o.steps_per_epoch, "Batches per epoch (0: items / batch)");
  reg.opts["--margin"].push_back(tr->add_option("--margin", o.margin, "Contrastive margin")->check(CLI::PositiveNumber));
  reg.opts["--k-nn"].push_back(tr->add_option("--k", o.k, "Neighbours for validation k-NN")->check(CLI::PositiveNumber));
  reg.opts["--refs"].push_back(tr->add_option("--refs", o.refs, "References per subject")->check(CLI::PositiveNumber));

  auto add_eval = [&](CLI::App* sub) {
    add_preset(sub);
    add_manifest(sub);
    add_data(sub);
    reg.opts["--k-nn"].push_back(sub->add_option("--k", o.k, "Neighbours for k-NN")->check(CLI::PositiveNumber));
    reg.opts["--refs"].push_back(sub->add_option("--refs", o.refs, "References per subject")->check(CLI::PositiveNumber));
    sub->add_option("--bins", o.bins, "Histogram bins")->check(CLI::PositiveNumber);
    sub->add_option("--split", o.split, "Split to evaluate")->check(CLI::IsMember({"test", "val", "train"}));
    sub->add_option("--report", o.report, "Report file")->required();
    sub->add_option("--hist", o.hist, "Histogram CSV");
  };
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_eval(ev);
  ev->add_option("--ckpt", o.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  auto* dt = app.add_subcommand("dtw", "Evaluate the DTW baseline");
  add_eval(dt);

  auto* ex = app.add_subcommand("export-warp", "Write the warping matrices of one pair as CSV blocks");
  add_preset(ex);
  add_manifest(ex);
  add_data(ex);
  ex->add_option("--ckpt", o.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  ex->add_option("--a", o.pair_a, "Index of the first item");
  ex->add_option("--b", o.pair_b, "Index of the second item");
  ex->add_option("--out", o.out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    apply_preset(o, reg);
    if (*gen) return cmd_generate(o);
    if (*pre) return cmd_pretrain(o);
    if (*tr) return cmd_train(o);
    if (*ev) return run_eval(o, "eval", fs::path(o.ckpt));
    if (*dt) return run_eval(o, "dtw", std::nullopt);
    if (*ex) return cmd_export_warp(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
