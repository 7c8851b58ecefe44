#include "domadapt.h"

#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "da/adaptnet.hpp"
#include "da/baselines.hpp"
#include "da/data.hpp"
#include "da/error.hpp"
#include "da/harness.hpp"
#include "da/mmd.hpp"

struct da_dataset {
  da::LabeledDataset impl;
};

struct da_net {
  da::net::AdaptationNet impl;
};

namespace {

thread_local std::string t_last_error;

da_status map_code(da::ErrorCode code) {
  switch (code) {
    case da::ErrorCode::InvalidArgument: return DA_ERR_INVALID_ARGUMENT;
    case da::ErrorCode::Data: return DA_ERR_DATA;
    case da::ErrorCode::Numeric: return DA_ERR_NUMERIC;
    case da::ErrorCode::Io: return DA_ERR_IO;
    case da::ErrorCode::Internal: return DA_ERR_INTERNAL;
  }
  return DA_ERR_INTERNAL;
}

template <typename F>
da_status wrap(F&& fn) noexcept {
  try {
    fn();
    return DA_OK;
  } catch (const da::Error& e) {
    t_last_error = e.what();
    return map_code(e.code());
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return DA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return DA_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return DA_ERR_INTERNAL;
  }
}

da_status fail_arg(const char* what) {
  t_last_error = std::string(what);
  return DA_ERR_INVALID_ARGUMENT;
}

da::mmd::KernelSpec make_kernel(const da_dataset* a, const da_dataset* b,
                                da_kernel_kind kind, double gamma) {
  da::mmd::KernelSpec spec;
  if (kind == DA_KERNEL_RBF) {
    spec.kind = da::mmd::KernelKind::Rbf;
    spec.gamma = gamma > 0.0
                     ? gamma
                     : da::mmd::rbf_median_gamma(a->impl.features,
                                                 b->impl.features);
  } else {
    spec.kind = da::mmd::KernelKind::Linear;
  }
  return spec;
}

}  // namespace

extern "C" {

const char* da_version(void) { return "1.0.0"; }

size_t da_last_error(char* buf, size_t cap) {
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, t_last_error.size());
    std::memcpy(buf, t_last_error.data(), n);
    buf[n] = '\0';
  }
  return t_last_error.size();
}

da_status da_dataset_load(const char* path, da_dataset** out) {
  if (!path) return fail_arg("path is null");
  if (!out) return fail_arg("out is null");
  return wrap([&] {
    auto* ds = new da_dataset{da::data::load_features(path)};
    *out = ds;
  });
}

da_status da_dataset_save(const da_dataset* ds, const char* path) {
  if (!ds) return fail_arg("dataset handle is null");
  if (!path) return fail_arg("path is null");
  return wrap([&] { da::data::save_features(ds->impl, path); });
}

da_status da_dataset_synth(int32_t n_classes, int32_t dim,
                           int32_t n_per_class_source,
                           int32_t n_per_class_target, const double* offset,
                           double rotation_angle, double noise_sd,
                           uint64_t seed, da_dataset** source_out,
                           da_dataset** target_out) {
  if (!source_out || !target_out) return fail_arg("output handle is null");
  return wrap([&] {
    da::data::SynthSpec spec;
    spec.n_classes = n_classes;
    spec.dim = dim;
    spec.n_per_class_source = n_per_class_source;
    spec.n_per_class_target = n_per_class_target;
    spec.noise_sd = noise_sd;
    spec.seed = seed;
    spec.shift.rotation_angle = rotation_angle;
    if (offset) {
      spec.shift.mean_offset = Eigen::Map<const da::Vector>(offset, dim);
    }
    auto [src, tgt] = da::data::synth_domains(spec);
    *source_out = new da_dataset{std::move(src)};
    *target_out = new da_dataset{std::move(tgt)};
  });
}

da_status da_dataset_info(const da_dataset* ds, int64_t* rows, int64_t* cols,
                          int64_t* n_classes) {
  if (!ds) return fail_arg("dataset handle is null");
  if (rows) *rows = ds->impl.rows();
  if (cols) *cols = ds->impl.cols();
  if (n_classes) *n_classes = ds->impl.n_classes;
  return DA_OK;
}

void da_dataset_free(da_dataset* ds) { delete ds; }

da_status da_mmd_linear(const da_dataset* a, const da_dataset* b, double* out) {
  if (!a || !b) return fail_arg("dataset handle is null");
  if (!out) return fail_arg("out is null");
  return wrap([&] { *out = da::mmd::mmd_linear(a->impl.features, b->impl.features); });
}

da_status da_mmd2_kernel(const da_dataset* a, const da_dataset* b,
                         da_kernel_kind kind, double gamma, int unbiased,
                         double* out) {
  if (!a || !b) return fail_arg("dataset handle is null");
  if (!out) return fail_arg("out is null");
  return wrap([&] {
    *out = da::mmd::mmd2_kernel(a->impl.features, b->impl.features,
                                make_kernel(a, b, kind, gamma), unbiased != 0);
  });
}

da_status da_rbf_median_gamma(const da_dataset* a, const da_dataset* b,
                              double* gamma_out) {
  if (!a || !b) return fail_arg("dataset handle is null");
  if (!gamma_out) return fail_arg("gamma_out is null");
  return wrap([&] {
    *gamma_out = da::mmd::rbf_median_gamma(a->impl.features, b->impl.features);
  });
}

da_status da_rank_representations(size_t n, const da_dataset* const* sources,
                                  const da_dataset* const* targets,
                                  size_t* order_out, double* mmd_out) {
  if (n == 0) return fail_arg("empty candidate list");
  if (!sources || !targets) return fail_arg("candidate array is null");
  for (size_t i = 0; i < n; ++i) {
    if (!sources[i] || !targets[i]) return fail_arg("dataset handle is null");
  }
  return wrap([&] {
    std::vector<da::mmd::RepresentationPair> pairs;
    pairs.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      pairs.push_back({std::to_string(i), sources[i]->impl.features,
                       targets[i]->impl.features});
    }
    auto ranked = da::mmd::rank_representations(pairs);
    for (size_t r = 0; r < ranked.size(); ++r) {
      const auto idx = static_cast<size_t>(std::stoul(ranked[r].name));
      if (order_out) order_out[r] = idx;
      if (mmd_out) mmd_out[idx] = ranked[r].mmd;
    }
  });
}

da_status da_net_init(int64_t input_dim, int64_t width, int64_t n_classes,
                      uint64_t seed, da_net** out) {
  if (!out) return fail_arg("out is null");
  return wrap([&] {
    *out = new da_net{da::net::init_net(input_dim, width, n_classes, seed)};
  });
}

da_status da_net_save(const da_net* net, const char* path) {
  if (!net) return fail_arg("net handle is null");
  if (!path) return fail_arg("path is null");
  return wrap([&] { da::net::save_weights(net->impl, path); });
}

da_status da_net_load(const char* path, da_net** out) {
  if (!path) return fail_arg("path is null");
  if (!out) return fail_arg("out is null");
  return wrap([&] { *out = new da_net{da::net::load_weights(path)}; });
}

da_status da_net_info(const da_net* net, int64_t* input_dim, int64_t* width,
                      int64_t* n_classes) {
  if (!net) return fail_arg("net handle is null");
  if (input_dim) *input_dim = net->impl.input_dim();
  if (width) *width = net->impl.width();
  if (n_classes) *n_classes = net->impl.n_classes();
  return DA_OK;
}

da_status da_net_evaluate(const da_net* net, const da_dataset* test,
                          double* accuracy_out) {
  if (!net) return fail_arg("net handle is null");
  if (!test) return fail_arg("dataset handle is null");
  if (!accuracy_out) return fail_arg("accuracy_out is null");
  return wrap([&] { *accuracy_out = da::net::evaluate(net->impl, test->impl); });
}

void da_net_free(da_net* net) { delete net; }

da_status da_run_experiment(const char* config_path, const char* method_override,
                            const char* output_dir_override,
                            double* mean_accuracy_out, double* std_error_out) {
  if (!config_path) return fail_arg("config_path is null");
  return wrap([&] {
    auto cfg = da::harness::parse_config_file(config_path);
    auto rep = da::harness::run_experiment(
        cfg, method_override ? method_override : "",
        output_dir_override ? output_dir_override : "");
    if (mean_accuracy_out) *mean_accuracy_out = rep.mean_accuracy;
    if (std_error_out) *std_error_out = rep.std_error;
  });
}

da_status da_run_train(const char* config_path,
                       const char* output_dir_override,
                       double* final_accuracy_out) {
  if (!config_path) return fail_arg("config_path is null");
  return wrap([&] {
    auto cfg = da::harness::parse_config_file(config_path);
    auto res = da::harness::run_train(
        cfg, output_dir_override ? output_dir_override : "");
    if (final_accuracy_out) *final_accuracy_out = res.final_accuracy;
  });
}

da_status da_run_width_study(const char* config_path, const char* widths_spec,
                             const char* out_csv, int64_t* selected_width_out) {
  if (!config_path) return fail_arg("config_path is null");
  if (!widths_spec) return fail_arg("widths_spec is null");
  return wrap([&] {
    auto cfg = da::harness::parse_config_file(config_path);
    auto res = da::harness::run_width_study(
        cfg, da::harness::parse_widths(widths_spec), out_csv ? out_csv : "");
    if (selected_width_out) *selected_width_out = res.selected_width;
  });
}

da_status da_run_layer_study(size_t n, const char* const* names,
                             const char* const* source_paths,
                             const char* const* target_paths,
                             const char* out_csv, size_t* order_out,
                             double* mmd_out) {
  if (n == 0) return fail_arg("empty candidate list");
  if (!names || !source_paths || !target_paths) {
    return fail_arg("candidate array is null");
  }
  return wrap([&] {
    std::vector<da::harness::LayerCandidate> candidates;
    candidates.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      if (!names[i] || !source_paths[i] || !target_paths[i]) {
        throw da::InvalidArgumentError("candidate entry is null");
      }
      candidates.push_back({names[i], source_paths[i], target_paths[i]});
    }
    auto rows = da::harness::run_layer_study(candidates, out_csv ? out_csv : "");
    for (size_t r = 0; r < rows.size(); ++r) {
      if (order_out) order_out[r] = rows[r].input_index;
      if (mmd_out) mmd_out[rows[r].input_index] = rows[r].mmd;
    }
  });
}

da_status da_grad_check(uint64_t seed, int32_t n_configs,
                        double* max_rel_err_out) {
  if (!max_rel_err_out) return fail_arg("max_rel_err_out is null");
  return wrap([&] {
    *max_rel_err_out = da::net::grad_check_sweep(seed, n_configs);
  });
}

}  // extern "C"
