#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "da/adaptnet.hpp"
#include "da/data.hpp"

namespace da::harness {

/// Flat `key = value` config with `#` comments; nested method parameters use
/// dotted keys (e.g. `pmt.gamma = 100`). Keys keep file order for the report
/// echo. Duplicate keys are a parse error.
class Config {
 public:
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

Config parse_config_file(const std::string& path);
Config parse_config_text(const std::string& text, const std::string& name);

enum class Method {
  ConfusionFinetune,
  SvmSourceOnly,
  LateFusion,
  Daume,
  Sa,
  Gfk,
  Pmt,
  Mmdt,
};

Method method_from_name(const std::string& name);
std::string method_name(Method m);

struct ExperimentReport {
  std::string task;
  Method method = Method::SvmSourceOnly;
  std::vector<double> split_accuracies;
  std::vector<double> split_mmds;  // per-split MMD diagnostic
  double mean_accuracy = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n_splits)
  double wall_seconds = 0.0;
};

/// Full protocol: build the task data, make the splits, run the configured
/// method on each split, aggregate, and write report.kv / report.txt (plus
/// per-split learning curves for confusion_finetune) into the output
/// directory. Deterministic per config seed; wall clock appears only in the
/// report.txt footer.
ExperimentReport run_experiment(const Config& cfg,
                                const std::string& method_override = "",
                                const std::string& output_dir_override = "");

struct SelectionRow {
  std::string candidate;
  double mmd = 0.0;
  bool selected = false;
  std::size_t input_index = 0;  // position in the caller's candidate list
};

struct WidthStudyResult {
  std::vector<SelectionRow> rows;  // in input width order
  int selected_width = 0;
};

/// Trains one network per width on split 0 of the configured task, computes
/// the linear MMD between pooled source/target adaptation activations, marks
/// the argmin, and writes a `candidate,mmd,selected` CSV when out_csv is
/// nonempty.
WidthStudyResult run_width_study(const Config& cfg,
                                 const std::vector<int>& widths,
                                 const std::string& out_csv);

struct LayerCandidate {
  std::string name;
  std::string source_path;
  std::string target_path;
};

/// Ranks feature-file pairs by linear MMD, ascending; writes the same CSV
/// shape as the width study when out_csv is nonempty.
std::vector<SelectionRow> run_layer_study(
    const std::vector<LayerCandidate>& candidates, const std::string& out_csv);

struct TrainRunResult {
  net::TrainReport report;
  double final_accuracy = 0.0;
};

/// Single fine-tuning run on split 0 of the configured task; writes curve.csv,
/// weights.dbnt and train_report.kv to the output directory.
TrainRunResult run_train(const Config& cfg,
                         const std::string& output_dir_override = "");

/// CSV `iteration,cls_loss,mmd,test_accuracy`; accuracy column is `nan` when
/// the report carries none.
void emit_learning_curve(const net::TrainReport& report,
                         const std::string& path);

/// Width lists: `4,8,16` or geometric `64:4096:x2`.
std::vector<int> parse_widths(const std::string& spec);

/// Shortest round-trip decimal rendering used by every report writer.
std::string format_double(double v);

/// Writes via a temp file + rename so readers never observe partial output.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace da::harness
