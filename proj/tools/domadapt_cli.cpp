// domadapt command-line experiment runner. Talks to the library exclusively
// through the C API in domadapt.h.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "domadapt.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

constexpr double kGradCheckTolerance = 1e-4;

void print_usage(std::FILE* out) {
  std::fprintf(out,
               "usage: domadapt <command> [options]\n"
               "\n"
               "commands:\n"
               "  mmd <src.csv> <tgt.csv> [--kernel linear|rbf] [--gamma G] [--unbiased]\n"
               "      linear MMD between the two feature files; with --kernel or\n"
               "      --unbiased, the kernel MMD^2 estimator instead (rbf without\n"
               "      --gamma uses the median heuristic)\n"
               "  select-layer <name:src.csv:tgt.csv>... [--out FILE]\n"
               "      rank candidate representations by MMD, ascending\n"
               "  select-width --widths LIST --config FILE [--out FILE]\n"
               "      train one network per width (LIST like 4,8,16 or 64:4096:x2)\n"
               "      and pick the width minimizing MMD\n"
               "  train --config FILE [--out DIR]\n"
               "      one fine-tuning run; writes curve.csv, weights.dbnt,\n"
               "      train_report.kv\n"
               "  baseline --method NAME --config FILE [--out DIR]\n"
               "      full split protocol with the given method\n"
               "  bench --config FILE [--out DIR]\n"
               "      full split protocol with the method from the config\n"
               "  gradcheck [--seed N] [--configs N]\n"
               "      verify analytic gradients against central differences\n");
}

[[noreturn]] void die_usage(const std::string& message) {
  std::string line = message;
  std::replace(line.begin(), line.end(), '\n', ' ');
  std::fprintf(stderr, "error: usage: %s\n", line.c_str());
  std::exit(kExitUsage);
}

std::string last_error() {
  char buf[1024];
  da_last_error(buf, sizeof(buf));
  return buf;
}

[[noreturn]] void die_status(da_status status) {
  const char* tag = "internal";
  int exit_code = kExitNumeric;
  switch (status) {
    case DA_ERR_INVALID_ARGUMENT:
      tag = "invalid-argument";
      exit_code = kExitUsage;
      break;
    case DA_ERR_DATA:
      tag = "data";
      exit_code = kExitData;
      break;
    case DA_ERR_IO:
      tag = "io";
      exit_code = kExitData;
      break;
    case DA_ERR_NUMERIC:
      tag = "numeric";
      exit_code = kExitNumeric;
      break;
    default:
      break;
  }
  std::string line = last_error();
  std::replace(line.begin(), line.end(), '\n', ' ');
  std::fprintf(stderr, "error: %s: %s\n", tag, line.c_str());
  std::exit(exit_code);
}

void check(da_status status) {
  if (status != DA_OK) die_status(status);
}

struct Args {
  std::vector<std::string> positional;
  std::vector<std::pair<std::string, std::string>> options;  // --key value
  std::vector<std::string> flags;                            // bare --key
};

Args parse_args(int argc, char** argv, int start,
                const std::vector<std::string>& value_options,
                const std::vector<std::string>& flag_options) {
  Args args;
  for (int i = start; i < argc; ++i) {
    std::string a = argv[i];
    if (a.rfind("--", 0) == 0) {
      if (std::find(flag_options.begin(), flag_options.end(), a) !=
          flag_options.end()) {
        args.flags.push_back(a);
      } else if (std::find(value_options.begin(), value_options.end(), a) !=
                 value_options.end()) {
        if (i + 1 >= argc) die_usage(a + " needs a value");
        args.options.emplace_back(a, argv[++i]);
      } else {
        die_usage("unknown option " + a);
      }
    } else {
      args.positional.push_back(a);
    }
  }
  return args;
}

std::string option_of(const Args& args, const std::string& key,
                      const std::string& fallback) {
  for (const auto& [k, v] : args.options) {
    if (k == key) return v;
  }
  return fallback;
}

bool has_flag(const Args& args, const std::string& key) {
  return std::find(args.flags.begin(), args.flags.end(), key) !=
         args.flags.end();
}

int cmd_mmd(int argc, char** argv) {
  Args args = parse_args(argc, argv, 2, {"--kernel", "--gamma"}, {"--unbiased"});
  if (args.positional.size() != 2) {
    die_usage("mmd needs exactly two feature files");
  }

  // flag validation comes before any file access
  const std::string kernel = option_of(args, "--kernel", "");
  const std::string gamma_str = option_of(args, "--gamma", "");
  const bool unbiased = has_flag(args, "--unbiased");
  const bool kernel_path = !kernel.empty() || unbiased;

  da_kernel_kind kind = DA_KERNEL_LINEAR;
  if (kernel == "rbf") {
    kind = DA_KERNEL_RBF;
  } else if (!kernel.empty() && kernel != "linear") {
    die_usage("--kernel must be linear or rbf");
  }
  double gamma = 0.0;
  if (!gamma_str.empty()) {
    if (kind != DA_KERNEL_RBF) die_usage("--gamma needs --kernel rbf");
    char* end = nullptr;
    gamma = std::strtod(gamma_str.c_str(), &end);
    if (end != gamma_str.c_str() + gamma_str.size() || gamma <= 0.0) {
      die_usage("--gamma must be a positive number");
    }
  }

  da_dataset* src = nullptr;
  da_dataset* tgt = nullptr;
  check(da_dataset_load(args.positional[0].c_str(), &src));
  check(da_dataset_load(args.positional[1].c_str(), &tgt));

  if (!kernel_path) {
    double value = 0.0;
    check(da_mmd_linear(src, tgt, &value));
    std::printf("mmd_linear %.17g\n", value);
  } else {
    if (kind == DA_KERNEL_RBF && gamma_str.empty()) {
      check(da_rbf_median_gamma(src, tgt, &gamma));
      std::printf("gamma %.17g\n", gamma);
    }
    double value = 0.0;
    check(da_mmd2_kernel(src, tgt, kind, gamma, unbiased ? 1 : 0, &value));
    std::printf("mmd2_%s_%s %.17g\n", kind == DA_KERNEL_RBF ? "rbf" : "linear",
                unbiased ? "unbiased" : "biased", value);
  }

  da_dataset_free(src);
  da_dataset_free(tgt);
  return kExitOk;
}

int cmd_select_layer(int argc, char** argv) {
  Args args = parse_args(argc, argv, 2, {"--out"}, {});
  if (args.positional.empty()) {
    die_usage("select-layer needs at least one name:src.csv:tgt.csv triple");
  }

  std::vector<std::string> names, sources, targets;
  for (const std::string& triple : args.positional) {
    const auto c1 = triple.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos
                                            : triple.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        triple.find(':', c2 + 1) != std::string::npos) {
      die_usage("candidate must look like name:src.csv:tgt.csv, got '" +
                triple + "'");
    }
    names.push_back(triple.substr(0, c1));
    sources.push_back(triple.substr(c1 + 1, c2 - c1 - 1));
    targets.push_back(triple.substr(c2 + 1));
  }

  const size_t n = names.size();
  std::vector<const char*> name_ptrs, src_ptrs, tgt_ptrs;
  for (size_t i = 0; i < n; ++i) {
    name_ptrs.push_back(names[i].c_str());
    src_ptrs.push_back(sources[i].c_str());
    tgt_ptrs.push_back(targets[i].c_str());
  }

  const std::string out = option_of(args, "--out", "");
  std::vector<size_t> order(n);
  std::vector<double> mmds(n);
  check(da_run_layer_study(n, name_ptrs.data(), src_ptrs.data(),
                           tgt_ptrs.data(), out.empty() ? nullptr : out.c_str(),
                           order.data(), mmds.data()));

  std::printf("candidate,mmd,selected\n");
  for (size_t r = 0; r < n; ++r) {
    std::printf("%s,%.17g,%d\n", names[order[r]].c_str(), mmds[order[r]],
                r == 0 ? 1 : 0);
  }
  return kExitOk;
}

int cmd_select_width(int argc, char** argv) {
  Args args = parse_args(argc, argv, 2, {"--widths", "--config", "--out"}, {});
  const std::string widths = option_of(args, "--widths", "");
  const std::string config = option_of(args, "--config", "");
  if (widths.empty() || config.empty()) {
    die_usage("select-width needs --widths and --config");
  }

  const std::string out = option_of(args, "--out", "");
  int64_t selected = 0;
  check(da_run_width_study(config.c_str(), widths.c_str(),
                           out.empty() ? nullptr : out.c_str(), &selected));
  std::printf("selected_width %lld\n", static_cast<long long>(selected));
  return kExitOk;
}

int cmd_train(int argc, char** argv) {
  Args args = parse_args(argc, argv, 2, {"--config", "--out"}, {});
  const std::string config = option_of(args, "--config", "");
  if (config.empty()) die_usage("train needs --config");

  const std::string out = option_of(args, "--out", "");
  double accuracy = 0.0;
  check(da_run_train(config.c_str(), out.empty() ? nullptr : out.c_str(),
                     &accuracy));
  std::printf("final_accuracy %.17g\n", accuracy);
  return kExitOk;
}

int cmd_experiment(int argc, char** argv, bool method_required) {
  Args args = parse_args(argc, argv, 2, {"--method", "--config", "--out"}, {});
  const std::string config = option_of(args, "--config", "");
  const std::string method = option_of(args, "--method", "");
  if (config.empty()) die_usage("missing --config");
  if (method_required && method.empty()) die_usage("baseline needs --method");

  const std::string out = option_of(args, "--out", "");
  double mean = 0.0, stderr_acc = 0.0;
  check(da_run_experiment(config.c_str(), method.empty() ? nullptr : method.c_str(),
                          out.empty() ? nullptr : out.c_str(), &mean,
                          &stderr_acc));
  std::printf("mean_accuracy %.17g\n", mean);
  std::printf("std_error %.17g\n", stderr_acc);
  return kExitOk;
}

int cmd_gradcheck(int argc, char** argv) {
  Args args = parse_args(argc, argv, 2, {"--seed", "--configs"}, {});
  const std::string seed_str = option_of(args, "--seed", "0");
  const std::string configs_str = option_of(args, "--configs", "50");

  uint64_t seed = 0;
  int configs = 0;
  try {
    seed = std::stoull(seed_str);
    configs = std::stoi(configs_str);
  } catch (...) {
    die_usage("--seed and --configs must be integers");
  }

  double worst = 0.0;
  check(da_grad_check(seed, configs, &worst));
  std::printf("max_rel_err %.17g\n", worst);
  if (worst >= kGradCheckTolerance) {
    std::fprintf(stderr,
                 "error: numeric: gradient check failed, max relative error "
                 "%.17g >= %.17g\n",
                 worst, kGradCheckTolerance);
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    print_usage(stderr);
    return kExitUsage;
  }
  const std::string command = argv[1];

  if (command == "--help" || command == "-h" || command == "help") {
    print_usage(stdout);
    return kExitOk;
  }
  if (command == "--version") {
    std::printf("domadapt %s\n", da_version());
    return kExitOk;
  }

  if (command == "mmd") return cmd_mmd(argc, argv);
  if (command == "select-layer") return cmd_select_layer(argc, argv);
  if (command == "select-width") return cmd_select_width(argc, argv);
  if (command == "train") return cmd_train(argc, argv);
  if (command == "baseline") return cmd_experiment(argc, argv, true);
  if (command == "bench") return cmd_experiment(argc, argv, false);
  if (command == "gradcheck") return cmd_gradcheck(argc, argv);

  die_usage("unknown command '" + command + "'");
}
