#include "da/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "da/baselines.hpp"
#include "da/error.hpp"
#include "da/mmd.hpp"
#include "da/rng.hpp"

namespace da::harness {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

int argmax_low_tie(const Eigen::RowVectorXd& scores) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c) {
    if (scores(c) > scores(best)) best = c;
  }
  return static_cast<int>(best);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());

  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

void Config::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

bool Config::has(const std::string& key) const {
  return get(key).has_value();
}

std::optional<std::string> Config::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  char* end = nullptr;
  const double out = std::strtod(v->c_str(), &end);
  if (end != v->c_str() + v->size() || v->empty()) {
    throw InvalidArgumentError("config: key '" + key + "' is not a number: '" +
                               *v + "'");
  }
  return out;
}

int Config::get_int(const std::string& key, int fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  int out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw InvalidArgumentError("config: key '" + key +
                               "' is not an integer: '" + *v + "'");
  }
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw InvalidArgumentError("config: key '" + key + "' is not a bool: '" + *v +
                             "'");
}

std::uint64_t Config::get_u64(const std::string& key,
                              std::uint64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw InvalidArgumentError("config: key '" + key +
                               "' is not an unsigned integer: '" + *v + "'");
  }
  return out;
}

Config parse_config_text(const std::string& text, const std::string& name) {
  Config cfg;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string line = text.substr(
        start, nl == std::string::npos ? std::string::npos : nl - start);
    start = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(name + ":" + std::to_string(line_no) +
                      ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw DataError(name + ":" + std::to_string(line_no) + ": empty key");
    }
    if (cfg.has(key)) {
      throw DataError(name + ":" + std::to_string(line_no) +
                      ": duplicate key '" + key + "'");
    }
    cfg.set(key, value);
  }
  return cfg;
}

Config parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text, path);
}

Method method_from_name(const std::string& name) {
  if (name == "confusion_finetune") return Method::ConfusionFinetune;
  if (name == "svm_source_only") return Method::SvmSourceOnly;
  if (name == "late_fusion") return Method::LateFusion;
  if (name == "daume") return Method::Daume;
  if (name == "sa") return Method::Sa;
  if (name == "gfk") return Method::Gfk;
  if (name == "pmt") return Method::Pmt;
  if (name == "mmdt") return Method::Mmdt;
  throw InvalidArgumentError("unknown method '" + name + "'");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::ConfusionFinetune: return "confusion_finetune";
    case Method::SvmSourceOnly: return "svm_source_only";
    case Method::LateFusion: return "late_fusion";
    case Method::Daume: return "daume";
    case Method::Sa: return "sa";
    case Method::Gfk: return "gfk";
    case Method::Pmt: return "pmt";
    case Method::Mmdt: return "mmdt";
  }
  throw InvalidArgumentError("unknown method enum value");
}

namespace {

struct TaskData {
  LabeledDataset source;
  LabeledDataset target;
};

Vector parse_offset(const std::string& text, int dim) {
  Vector offset = Vector::Zero(dim);
  if (text.empty()) return offset;

  std::vector<double> vals;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find(',', start);
    std::string tok = trim(text.substr(
        start, pos == std::string::npos ? std::string::npos : pos - start));
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size()) {
      throw InvalidArgumentError("config: bad synth.offset entry '" + tok + "'");
    }
    vals.push_back(v);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }

  if (vals.size() == 1) {
    offset(0) = vals[0];  // shorthand: magnitude along the first axis
  } else if (static_cast<int>(vals.size()) == dim) {
    for (int i = 0; i < dim; ++i) offset(i) = vals[static_cast<std::size_t>(i)];
  } else {
    throw InvalidArgumentError(
        "config: synth.offset needs 1 or dim entries, got " +
        std::to_string(vals.size()));
  }
  return offset;
}

void l2_normalize_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n > 0.0) m.row(i) /= n;
  }
}

TaskData load_task(const Config& cfg) {
  const bool has_files = cfg.has("source_path") || cfg.has("target_path");
  bool has_synth = false;
  for (const auto& [k, v] : cfg.entries()) {
    if (k.rfind("synth.", 0) == 0) has_synth = true;
  }
  if (has_files == has_synth) {
    throw InvalidArgumentError(
        "config: exactly one data source required (source_path/target_path or "
        "synth.*)");
  }

  TaskData task;
  if (has_files) {
    if (!cfg.has("source_path") || !cfg.has("target_path")) {
      throw InvalidArgumentError(
          "config: both source_path and target_path are required");
    }
    task.source = data::load_features(*cfg.get("source_path"));
    task.target = data::load_features(*cfg.get("target_path"));
    const int n_classes = std::max(task.source.n_classes, task.target.n_classes);
    task.source.n_classes = n_classes;
    task.target.n_classes = n_classes;
  } else {
    data::SynthSpec spec;
    spec.n_classes = cfg.get_int("synth.n_classes", 5);
    spec.dim = cfg.get_int("synth.dim", 16);
    spec.n_per_class_source = cfg.get_int("synth.n_source_per_class", 40);
    spec.n_per_class_target = cfg.get_int("synth.n_target_per_class", 40);
    spec.noise_sd = cfg.get_double("synth.noise_sd", 0.5);
    spec.shift.rotation_angle =
        cfg.get_double("synth.rotation_deg", 0.0) * std::numbers::pi / 180.0;
    spec.shift.mean_offset =
        parse_offset(cfg.get_string("synth.offset", ""), spec.dim);
    spec.seed = cfg.get_u64("seed", 0);
    auto [src, tgt] = data::synth_domains(spec);
    task.source = std::move(src);
    task.target = std::move(tgt);
  }

  if (cfg.get_bool("preprocess.l2norm", false)) {
    l2_normalize_rows(task.source.features);
    l2_normalize_rows(task.target.features);
  }
  return task;
}

data::SplitSpec split_spec_from(const Config& cfg) {
  data::SplitSpec spec;
  spec.n_source_per_class = cfg.get_int("split.n_source_per_class", 20);
  spec.n_target_labeled_per_class =
      cfg.get_int("split.n_target_labeled_per_class", 3);
  spec.n_splits = cfg.get_int("split.n_splits", 5);
  spec.seed = cfg.get_u64("seed", 0);
  return spec;
}

baselines::SvmParams svm_params_from(const Config& cfg, std::uint64_t seed) {
  baselines::SvmParams p;
  p.c_reg = cfg.get_double("svm.c_reg", 0.01);
  p.epochs = cfg.get_int("svm.epochs", 100);
  p.seed = seed;
  return p;
}

net::JointLossConfig loss_config_from(const Config& cfg, bool supervised) {
  net::JointLossConfig c;
  c.lambda = cfg.get_double("net.lambda", 0.25);
  c.batch_size = cfg.get_int("net.batch_size", 64);
  c.supervised = supervised;
  return c;
}

net::OptimizerConfig optimizer_from(const Config& cfg) {
  net::OptimizerConfig o;
  o.base_lr = cfg.get_double("net.base_lr", 1e-3);
  o.momentum = cfg.get_double("net.momentum", 0.9);
  o.iterations = cfg.get_int("net.iterations", 1000);
  o.eval_interval = cfg.get_int("net.eval_interval", 10);
  return o;
}

// Pooled target features: everything the unsupervised machinery may see.
Matrix target_pool_of(const data::Split& split) {
  const Eigen::Index labeled = split.target_train_labeled.rows();
  Matrix pool(split.target_test.rows() + labeled, split.target_test.cols());
  if (labeled > 0) {
    pool << split.target_test.features, split.target_train_labeled.features;
  } else {
    pool = split.target_test.features;
  }
  return pool;
}

void require_target_labels(const data::Split& split, const char* method) {
  if (split.target_train_labeled.rows() < 1) {
    throw InvalidArgumentError(
        std::string(method) +
        " requires labeled target examples "
        "(split.n_target_labeled_per_class > 0)");
  }
}

struct SplitOutcome {
  double accuracy = 0.0;
  double mmd_diag = 0.0;
  std::optional<net::TrainReport> curve;
};

SplitOutcome run_split(Method method, const data::Split& split,
                       const Config& cfg, std::uint64_t seed) {
  SplitOutcome out;
  out.mmd_diag =
      mmd::mmd_linear(split.source_train.features, split.target_test.features);

  switch (method) {
    case Method::SvmSourceOnly: {
      auto p = svm_params_from(cfg, seed);
      auto clf = baselines::svm_train(split.source_train, p.c_reg, p.epochs,
                                      p.seed);
      out.accuracy = baselines::accuracy(clf, split.target_test);
      break;
    }

    case Method::LateFusion: {
      require_target_labels(split, "late_fusion");
      auto p = svm_params_from(cfg, seed);
      auto src_clf = baselines::svm_train(split.source_train, p.c_reg, p.epochs,
                                          p.seed);
      auto tgt_clf = baselines::svm_train(split.target_train_labeled, p.c_reg,
                                          p.epochs, Rng::mix(p.seed, 1));

      baselines::FusionConfig fusion;
      fusion.alpha = cfg.get_double("fusion.alpha", 0.5);
      const std::string mode_name = cfg.get_string("fusion.mode", "max");
      baselines::FusionMode mode;
      if (mode_name == "max") {
        mode = baselines::FusionMode::Max;
      } else if (mode_name == "interp") {
        mode = baselines::FusionMode::Interp;
      } else {
        throw InvalidArgumentError("config: fusion.mode must be max or interp");
      }

      Matrix vs = src_clf.scores(split.target_test.features);
      Matrix vt = tgt_clf.scores(split.target_test.features);
      int correct = 0;
      for (Eigen::Index i = 0; i < vs.rows(); ++i) {
        Vector fused = baselines::late_fusion(vs.row(i).transpose(),
                                              vt.row(i).transpose(), mode,
                                              fusion);
        if (argmax_low_tie(fused.transpose()) ==
            split.target_test.labels[static_cast<std::size_t>(i)]) {
          ++correct;
        }
      }
      out.accuracy = static_cast<double>(correct) /
                     static_cast<double>(split.target_test.rows());
      break;
    }

    case Method::Daume: {
      LabeledDataset train;
      const Eigen::Index labeled = split.target_train_labeled.rows();
      Matrix aug_src = baselines::daume_augment(split.source_train.features, true);
      if (labeled > 0) {
        Matrix aug_tgt = baselines::daume_augment(
            split.target_train_labeled.features, false);
        train.features.resize(aug_src.rows() + aug_tgt.rows(), aug_src.cols());
        train.features << aug_src, aug_tgt;
        train.labels = split.source_train.labels;
        train.labels.insert(train.labels.end(),
                            split.target_train_labeled.labels.begin(),
                            split.target_train_labeled.labels.end());
      } else {
        train.features = aug_src;
        train.labels = split.source_train.labels;
      }
      train.n_classes = split.source_train.n_classes;
      train.domain = "daume-augmented";

      auto p = svm_params_from(cfg, seed);
      auto clf = baselines::svm_train(train, p.c_reg, p.epochs, p.seed);
      LabeledDataset test = split.target_test;
      test.features = baselines::daume_augment(split.target_test.features, false);
      out.accuracy = baselines::accuracy(clf, test);
      break;
    }

    case Method::Sa:
    case Method::Gfk: {
      Matrix pool = target_pool_of(split);
      Eigen::Index k = cfg.get_int("subspace.k", 0);
      if (k <= 0) {
        k = numerics::default_subspace_dim(split.source_train.cols(),
                                           split.source_train.rows(),
                                           pool.rows());
        // the geodesic construction needs a nonempty orthogonal complement
        if (method == Method::Gfk) {
          k = std::min(k, split.source_train.cols() - 1);
        }
      }
      auto p = svm_params_from(cfg, seed);
      out.accuracy =
          method == Method::Sa
              ? baselines::sa_adapt_and_classify(split.source_train, pool,
                                                 split.target_test, k, p)
              : baselines::gfk_adapt_and_classify(split.source_train, pool,
                                                  split.target_test, k, p);
      break;
    }

    case Method::Pmt: {
      require_target_labels(split, "pmt");
      auto p = svm_params_from(cfg, seed);
      auto src_clf = baselines::svm_train(split.source_train, p.c_reg, p.epochs,
                                          p.seed);
      auto clf = baselines::pmt_train(src_clf, split.target_train_labeled,
                                      cfg.get_double("pmt.gamma", 100.0),
                                      cfg.get_int("pmt.epochs", 500),
                                      Rng::mix(seed, 2));
      out.accuracy = baselines::accuracy(clf, split.target_test);
      break;
    }

    case Method::Mmdt: {
      require_target_labels(split, "mmdt");
      baselines::MmdtConfig mc;
      mc.c_source = cfg.get_double("mmdt.c_s", 1.0);
      mc.c_target = cfg.get_double("mmdt.c_t", 1.0);
      mc.theta_epochs = cfg.get_int("mmdt.theta_epochs", 60);
      mc.transform_epochs = cfg.get_int("mmdt.transform_epochs", 60);
      auto res = baselines::mmdt_train(split.source_train,
                                       split.target_train_labeled, mc,
                                       cfg.get_int("mmdt.outer_iters", 10),
                                       seed);
      LabeledDataset test = split.target_test;
      test.features = split.target_test.features * res.transform.transpose();
      out.accuracy = baselines::accuracy(res.classifier, test);
      break;
    }

    case Method::ConfusionFinetune: {
      const bool supervised = split.target_train_labeled.rows() > 0;
      auto lc = loss_config_from(cfg, supervised);
      auto oc = optimizer_from(cfg);
      auto nn = net::init_net(split.source_train.cols(),
                              cfg.get_int("net.width", 64),
                              split.source_train.n_classes, seed);
      net::TrainReport report = net::train(
          nn, split.source_train,
          supervised ? &split.target_train_labeled : nullptr,
          split.target_test.features, lc, oc, seed, &split.target_test);
      out.accuracy = net::evaluate(nn, split.target_test);
      out.mmd_diag = report.records.back().mmd;
      out.curve = std::move(report);
      break;
    }
  }
  return out;
}

[[noreturn]] void rethrow_with_prefix(const Error& e, const std::string& prefix) {
  const std::string msg = prefix + e.what();
  switch (e.code()) {
    case ErrorCode::InvalidArgument: throw InvalidArgumentError(msg);
    case ErrorCode::Data: throw DataError(msg);
    case ErrorCode::Numeric: throw NumericError(msg);
    case ErrorCode::Io: throw IoError(msg);
    case ErrorCode::Internal: break;
  }
  throw Error(ErrorCode::Internal, msg);
}

double sample_std_error(const std::vector<double>& xs) {
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

std::string render_kv_report(const ExperimentReport& rep, const Config& cfg) {
  std::string s;
  s += "task = " + rep.task + "\n";
  s += "method = " + method_name(rep.method) + "\n";
  s += "n_splits = " + std::to_string(rep.split_accuracies.size()) + "\n";
  for (std::size_t i = 0; i < rep.split_accuracies.size(); ++i) {
    s += "split" + std::to_string(i) +
         ".accuracy = " + format_double(rep.split_accuracies[i]) + "\n";
    s += "split" + std::to_string(i) +
         ".mmd = " + format_double(rep.split_mmds[i]) + "\n";
  }
  s += "mean_accuracy = " + format_double(rep.mean_accuracy) + "\n";
  s += "std_error = " + format_double(rep.std_error) + "\n";
  for (const auto& [k, v] : cfg.entries()) {
    s += "config." + k + " = " + v + "\n";
  }
  return s;
}

std::string render_text_report(const ExperimentReport& rep) {
  std::string s;
  s += "domadapt experiment report\n";
  s += "task:   " + rep.task + "\n";
  s += "method: " + method_name(rep.method) + "\n";
  for (std::size_t i = 0; i < rep.split_accuracies.size(); ++i) {
    s += "  split " + std::to_string(i) +
         ": accuracy=" + format_double(rep.split_accuracies[i]) +
         " mmd=" + format_double(rep.split_mmds[i]) + "\n";
  }
  s += "mean accuracy: " + format_double(rep.mean_accuracy) + "\n";
  s += "std error:     " + format_double(rep.std_error) + "\n";
  s += "# --- timing ---\n";
  s += "wall_clock_seconds = " + format_double(rep.wall_seconds) + "\n";
  return s;
}

}  // namespace

ExperimentReport run_experiment(const Config& cfg,
                                const std::string& method_override,
                                const std::string& output_dir_override) {
  const auto t0 = std::chrono::steady_clock::now();

  const std::string method_str = !method_override.empty()
                                     ? method_override
                                     : cfg.get_string("method", "");
  if (method_str.empty()) {
    throw InvalidArgumentError("config: method is required");
  }
  const Method method = method_from_name(method_str);

  const std::string out_dir = !output_dir_override.empty()
                                  ? output_dir_override
                                  : cfg.get_string("output_dir", "");

  TaskData task = load_task(cfg);
  auto splits = data::make_splits(task.source, task.target, split_spec_from(cfg));

  ExperimentReport rep;
  rep.task = cfg.get_string("task", "unnamed");
  rep.method = method;

  const std::uint64_t seed = cfg.get_u64("seed", 0);
  std::vector<net::TrainReport> curves;
  for (std::size_t s = 0; s < splits.size(); ++s) {
    try {
      SplitOutcome outcome =
          run_split(method, splits[s], cfg, Rng::mix(seed, 1000 + s));
      rep.split_accuracies.push_back(outcome.accuracy);
      rep.split_mmds.push_back(outcome.mmd_diag);
      if (outcome.curve) curves.push_back(std::move(*outcome.curve));
    } catch (const Error& e) {
      rethrow_with_prefix(e, "split " + std::to_string(s) + ": ");
    }
  }

  double mean = 0.0;
  for (double a : rep.split_accuracies) mean += a;
  rep.mean_accuracy = mean / static_cast<double>(rep.split_accuracies.size());
  rep.std_error = sample_std_error(rep.split_accuracies);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  if (!out_dir.empty()) {
    atomic_write(out_dir + "/report.kv", render_kv_report(rep, cfg));
    atomic_write(out_dir + "/report.txt", render_text_report(rep));
    for (std::size_t i = 0; i < curves.size(); ++i) {
      emit_learning_curve(curves[i],
                          out_dir + "/curve_split" + std::to_string(i) + ".csv");
    }
  }
  return rep;
}

WidthStudyResult run_width_study(const Config& cfg,
                                 const std::vector<int>& widths,
                                 const std::string& out_csv) {
  if (widths.empty()) {
    throw InvalidArgumentError("width study: empty width list");
  }

  TaskData task = load_task(cfg);
  data::SplitSpec spec = split_spec_from(cfg);
  spec.n_splits = 1;  // the study trains on one protocol split
  auto split = data::make_splits(task.source, task.target, spec).front();
  const bool supervised = split.target_train_labeled.rows() > 0;

  auto lc = loss_config_from(cfg, supervised);
  auto oc = optimizer_from(cfg);
  const std::uint64_t seed = cfg.get_u64("seed", 0);

  std::vector<mmd::WidthCandidate> candidates;
  for (int w : widths) {
    if (w < 1) throw InvalidArgumentError("width study: width must be >= 1");
    auto nn = net::init_net(split.source_train.cols(), w,
                            split.source_train.n_classes,
                            Rng::mix(seed, 20000 + static_cast<std::uint64_t>(w)));
    net::train(nn, split.source_train,
               supervised ? &split.target_train_labeled : nullptr,
               split.target_test.features, lc, oc,
               Rng::mix(seed, 30000 + static_cast<std::uint64_t>(w)));
    Matrix pool = target_pool_of(split);
    candidates.push_back({w, net::forward(nn, split.source_train.features)
                                 .adapt_activations,
                          net::forward(nn, pool).adapt_activations});
  }

  WidthStudyResult result;
  result.selected_width = mmd::select_width(candidates);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    result.rows.push_back({std::to_string(c.width),
                           mmd::mmd_linear(c.source_repr, c.target_repr),
                           c.width == result.selected_width, i});
  }

  if (!out_csv.empty()) {
    std::string csv = "candidate,mmd,selected\n";
    for (const auto& row : result.rows) {
      csv += row.candidate + "," + format_double(row.mmd) + "," +
             (row.selected ? "1" : "0") + "\n";
    }
    atomic_write(out_csv, csv);
  }
  return result;
}

std::vector<SelectionRow> run_layer_study(
    const std::vector<LayerCandidate>& candidates, const std::string& out_csv) {
  if (candidates.empty()) {
    throw InvalidArgumentError("layer study: empty candidate list");
  }

  std::vector<mmd::RepresentationPair> pairs;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    LabeledDataset src = data::load_features(candidates[i].source_path);
    LabeledDataset tgt = data::load_features(candidates[i].target_path);
    // Rank by a positional key so duplicate display names stay unambiguous.
    pairs.push_back({std::to_string(i), std::move(src.features),
                     std::move(tgt.features)});
  }

  auto ranked = mmd::rank_representations(pairs);
  std::vector<SelectionRow> rows;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto idx = static_cast<std::size_t>(std::stoul(ranked[r].name));
    rows.push_back({candidates[idx].name, ranked[r].mmd, r == 0, idx});
  }

  if (!out_csv.empty()) {
    std::string csv = "candidate,mmd,selected\n";
    for (const auto& row : rows) {
      csv += row.candidate + "," + format_double(row.mmd) + "," +
             (row.selected ? "1" : "0") + "\n";
    }
    atomic_write(out_csv, csv);
  }
  return rows;
}

TrainRunResult run_train(const Config& cfg,
                         const std::string& output_dir_override) {
  TaskData task = load_task(cfg);
  data::SplitSpec spec = split_spec_from(cfg);
  spec.n_splits = 1;
  auto split = data::make_splits(task.source, task.target, spec).front();
  const bool supervised = split.target_train_labeled.rows() > 0;

  const std::uint64_t seed = cfg.get_u64("seed", 0);
  auto nn = net::init_net(split.source_train.cols(),
                          cfg.get_int("net.width", 64),
                          split.source_train.n_classes, seed);

  TrainRunResult result;
  result.report = net::train(nn, split.source_train,
                             supervised ? &split.target_train_labeled : nullptr,
                             split.target_test.features,
                             loss_config_from(cfg, supervised),
                             optimizer_from(cfg), seed, &split.target_test);
  result.final_accuracy = net::evaluate(nn, split.target_test);

  const std::string out_dir = !output_dir_override.empty()
                                  ? output_dir_override
                                  : cfg.get_string("output_dir", "");
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    emit_learning_curve(result.report, out_dir + "/curve.csv");
    net::save_weights(nn, out_dir + "/weights.dbnt");

    std::string kv;
    kv += "task = " + cfg.get_string("task", "unnamed") + "\n";
    kv += "iterations = " +
          std::to_string(result.report.records.back().iteration) + "\n";
    kv += "final_cls_loss = " +
          format_double(result.report.records.back().cls_loss) + "\n";
    kv += "final_mmd = " + format_double(result.report.records.back().mmd) +
          "\n";
    kv += "final_accuracy = " + format_double(result.final_accuracy) + "\n";
    kv += "seed = " + std::to_string(result.report.seed) + "\n";
    atomic_write(out_dir + "/train_report.kv", kv);
  }
  return result;
}

void emit_learning_curve(const net::TrainReport& report,
                         const std::string& path) {
  if (report.records.empty()) {
    throw InvalidArgumentError("emit_learning_curve: empty report");
  }
  std::string csv = "iteration,cls_loss,mmd,test_accuracy\n";
  for (const auto& rec : report.records) {
    csv += std::to_string(rec.iteration) + "," + format_double(rec.cls_loss) +
           "," + format_double(rec.mmd) + ",";
    csv += rec.test_accuracy ? format_double(*rec.test_accuracy) : "nan";
    csv += "\n";
  }
  atomic_write(path, csv);
}

std::vector<int> parse_widths(const std::string& spec) {
  std::vector<int> widths;
  auto parse_int = [&](const std::string& tok) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || v < 1) {
      throw InvalidArgumentError("bad width '" + tok + "'");
    }
    return v;
  };

  if (spec.find(':') != std::string::npos) {
    // geometric grid START:END:xFACTOR
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos || spec.size() <= c2 + 1 ||
        spec[c2 + 1] != 'x') {
      throw InvalidArgumentError("width grid must look like 64:4096:x2");
    }
    const int start = parse_int(spec.substr(0, c1));
    const int end = parse_int(spec.substr(c1 + 1, c2 - c1 - 1));
    const int factor = parse_int(spec.substr(c2 + 2));
    if (factor < 2 || end < start) {
      throw InvalidArgumentError("width grid must grow: " + spec);
    }
    for (long w = start; w <= end; w *= factor) {
      widths.push_back(static_cast<int>(w));
    }
  } else {
    std::size_t start = 0;
    while (start <= spec.size()) {
      auto pos = spec.find(',', start);
      std::string tok = trim(spec.substr(
          start, pos == std::string::npos ? std::string::npos : pos - start));
      if (!tok.empty()) widths.push_back(parse_int(tok));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
  }
  if (widths.empty()) throw InvalidArgumentError("empty width list");
  return widths;
}

}  // namespace da::harness
