/* domadapt — C API for the domain-adaptation toolkit.
 *
 * All functions return a da_status; every other result travels through out
 * parameters. On failure the thread-local message retrieved by
 * da_last_error() describes what went wrong. Handles are opaque and must be
 * released with the matching *_free function.
 */

#ifndef DOMADAPT_H
#define DOMADAPT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum da_status {
  DA_OK = 0,
  DA_ERR_INVALID_ARGUMENT = 1,
  DA_ERR_DATA = 2,
  DA_ERR_NUMERIC = 3,
  DA_ERR_IO = 4,
  DA_ERR_INTERNAL = 5
} da_status;

typedef enum da_kernel_kind {
  DA_KERNEL_LINEAR = 0,
  DA_KERNEL_RBF = 1
} da_kernel_kind;

typedef struct da_dataset da_dataset; /* labeled feature matrix */
typedef struct da_net da_net;         /* adaptation network */

const char* da_version(void);

/* Copies the last error message of the calling thread into buf (always
 * NUL-terminated when cap > 0) and returns the full message length. */
size_t da_last_error(char* buf, size_t cap);

/* ---- datasets ---------------------------------------------------------- */

/* Loads the feature CSV format (header id,domain,label,f0,...). */
da_status da_dataset_load(const char* path, da_dataset** out);

da_status da_dataset_save(const da_dataset* ds, const char* path);

/* Synthetic covariate-shift pair; rotation is in radians and applies to the
 * first two coordinates, offset may be NULL (none) or have dim entries. */
da_status da_dataset_synth(int32_t n_classes, int32_t dim,
                           int32_t n_per_class_source,
                           int32_t n_per_class_target, const double* offset,
                           double rotation_angle, double noise_sd,
                           uint64_t seed, da_dataset** source_out,
                           da_dataset** target_out);

da_status da_dataset_info(const da_dataset* ds, int64_t* rows, int64_t* cols,
                          int64_t* n_classes);

void da_dataset_free(da_dataset* ds);

/* ---- maximum mean discrepancy ------------------------------------------ */

/* Euclidean distance between the empirical feature means. */
da_status da_mmd_linear(const da_dataset* a, const da_dataset* b, double* out);

/* Kernel MMD^2. gamma is the rbf bandwidth (ignored for linear); pass
 * gamma <= 0 with DA_KERNEL_RBF to use the median heuristic. */
da_status da_mmd2_kernel(const da_dataset* a, const da_dataset* b,
                         da_kernel_kind kind, double gamma, int unbiased,
                         double* out);

/* Median-heuristic rbf bandwidth over the pooled sample. */
da_status da_rbf_median_gamma(const da_dataset* a, const da_dataset* b,
                              double* gamma_out);

/* Ranks n candidate representations by ascending linear MMD. order_out[r]
 * receives the candidate index at rank r; mmd_out[i] the value of candidate
 * i. Either output may be NULL. */
da_status da_rank_representations(size_t n, const da_dataset* const* sources,
                                  const da_dataset* const* targets,
                                  size_t* order_out, double* mmd_out);

/* ---- adaptation network ------------------------------------------------ */

da_status da_net_init(int64_t input_dim, int64_t width, int64_t n_classes,
                      uint64_t seed, da_net** out);

/* Flat binary weight format (magic "DBNT"). */
da_status da_net_save(const da_net* net, const char* path);
da_status da_net_load(const char* path, da_net** out);

da_status da_net_info(const da_net* net, int64_t* input_dim, int64_t* width,
                      int64_t* n_classes);

/* Multiclass accuracy of the network on a labeled dataset. */
da_status da_net_evaluate(const da_net* net, const da_dataset* test,
                          double* accuracy_out);

void da_net_free(da_net* net);

/* ---- experiment harness ------------------------------------------------ */

/* Runs the full split protocol described by the config file. method_override
 * and output_dir_override may be NULL or empty to use the config values.
 * mean_accuracy_out / std_error_out may be NULL. */
da_status da_run_experiment(const char* config_path, const char* method_override,
                            const char* output_dir_override,
                            double* mean_accuracy_out, double* std_error_out);

/* Single fine-tuning run on split 0; writes curve.csv, weights.dbnt and
 * train_report.kv into the output directory. */
da_status da_run_train(const char* config_path,
                       const char* output_dir_override,
                       double* final_accuracy_out);

/* Width-selection study over a width list ("4,8,16" or "64:4096:x2");
 * writes a candidate,mmd,selected CSV when out_csv is non-NULL. */
da_status da_run_width_study(const char* config_path, const char* widths_spec,
                             const char* out_csv, int64_t* selected_width_out);

/* Layer-selection study over n (name, source csv, target csv) triples. */
da_status da_run_layer_study(size_t n, const char* const* names,
                             const char* const* source_paths,
                             const char* const* target_paths,
                             const char* out_csv, size_t* order_out,
                             double* mmd_out);

/* Gradient verification on n_configs random tiny networks; returns the worst
 * relative error between analytic gradients and central differences. */
da_status da_grad_check(uint64_t seed, int32_t n_configs,
                        double* max_rel_err_out);

#ifdef __cplusplus
}
#endif

#endif /* DOMADAPT_H */
