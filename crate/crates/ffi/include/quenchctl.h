/* SPDX-License-Identifier: Apache-2.0 */

#ifndef QUENCHCTL_H
#define QUENCHCTL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum QcStatus {
  QC_STATUS_OK = 0,
  QC_STATUS_NULL_POINTER = 1,
  QC_STATUS_INVALID_ARGUMENT = 2,
  // The invariant control is not real: the duration is below `tau_min`.
  QC_STATUS_NON_REAL_CONTROL = 3,
  QC_STATUS_DEGENERATE_GAP = 4,
  // Adaptive integration failed (step underflow or step budget).
  QC_STATUS_INTEGRATOR = 5,
  // Eigensolver, isometry or other numerical check failed.
  QC_STATUS_NUMERICAL = 6,
  // A config file failed to parse or validate.
  QC_STATUS_CONFIG = 7,
  QC_STATUS_IO = 8,
  QC_STATUS_PANIC = 9,
} QcStatus;

// Protocol family selector.
typedef enum QcFamily {
  QC_FAMILY_INVARIANT = 0,
  QC_FAMILY_FAQUAD = 1,
  QC_FAMILY_LINEAR = 2,
} QcFamily;

// Opaque momentum-space chain model.
typedef struct QcModel QcModel;

// Opaque control schedule `g(t)`.
typedef struct QcProtocol QcProtocol;

// Summary of a quench over all modes.
typedef struct QcQuenchSummary {
  double tau;
  double tau_over_qsl;
  // Density of excitations.
  double n;
  double fidelity;
  double infidelity;
} QcQuenchSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next `qc_*` call on the same thread.
const char *qc_last_error(void);

// Library version as a static NUL-terminated string.
const char *qc_version(void);

// Periodic transverse-field Ising chain of `n` spins (even, at least 4).
enum QcStatus qc_model_tfim_new(size_t n, double j, struct QcModel **out);

// Long-range Kitaev chain with hopping exponent `alpha` and pairing exponent `beta`.
enum QcStatus qc_model_lrk_new(size_t n, double j, double alpha, double beta, struct QcModel **out);

// Releases a model; null is ignored.
//
// # Safety
// `model` must come from a `qc_model_*_new` call and not be freed twice.
void qc_model_free(struct QcModel *model);

// `tau_QSL = pi / Delta` for the sweep `g0 -> g1`.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum QcStatus qc_model_tau_qsl(const struct QcModel *model, double g0, double g1, double *out);

// Builds a control of duration `tau` designed on the slowest mode of `model`.
// `k_order` and `k_norm` only matter for the invariant family.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum QcStatus qc_protocol_new(const struct QcModel *model,
                              enum QcFamily family,
                              double g0,
                              double g1,
                              double tau,
                              size_t k_order,
                              double k_norm,
                              struct QcProtocol **out);

// Releases a protocol; null is ignored.
//
// # Safety
// `protocol` must come from `qc_protocol_new` and not be freed twice.
void qc_protocol_free(struct QcProtocol *protocol);

// Duration of the protocol; NaN for a null handle.
//
// # Safety
// `protocol` must be a live handle.
double qc_protocol_tau(const struct QcProtocol *protocol);

// `g(t)` and `dg/dt(t)`; `t` is clamped to `[0, tau]`. Either out-pointer may be null.
//
// # Safety
// `protocol` must be a live handle; non-null out-pointers must be writable.
enum QcStatus qc_protocol_eval(const struct QcProtocol *protocol,
                               double t,
                               double *g,
                               double *dg_dt);

// Minimum feasible duration of the order-`k_order` invariant control on `model`.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum QcStatus qc_invariant_tau_min(const struct QcModel *model,
                                   double g0,
                                   double g1,
                                   size_t k_order,
                                   double k_norm,
                                   double *out);

// Applies `protocol` to every mode of the model it was built for.
// `w > 0` adds white control noise of that strength (Lindblad dephasing).
//
// # Safety
// `protocol` must be a live handle and `out` writable.
enum QcStatus qc_quench(const struct QcProtocol *protocol,
                        double w,
                        double rtol,
                        double atol,
                        struct QcQuenchSummary *out);

// Mean and sample standard deviation of the defect density over
// `realizations` disordered chains (seeds `base_seed + i`) driven by `protocol`.
// The chain size and coupling come from the protocol's model, which must be a TFIM.
//
// # Safety
// `protocol` must be a live handle; `mean` and `stddev` writable.
enum QcStatus qc_disorder_ensemble(const struct QcProtocol *protocol,
                                   double lambda_width,
                                   size_t realizations,
                                   uint64_t base_seed,
                                   double rtol,
                                   double atol,
                                   double *mean,
                                   double *stddev);

// Runs a TOML experiment config, writing CSVs and `manifest.json` into `out_dir`.
// A null `out_dir` uses the config's `output.dir`.
//
// # Safety
// `config_path` must be a NUL-terminated string; `out_dir` null or NUL-terminated.
enum QcStatus qc_run_config(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUENCHCTL_H */
