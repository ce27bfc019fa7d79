#ifndef OPINION_FFI_H
#define OPINION_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum OpnStatus {
  OPN_STATUS_OK = 0,
  OPN_STATUS_NULL_POINTER = 1,
  OPN_STATUS_INVALID_ARGUMENT = 2,
  OPN_STATUS_DIMENSION_MISMATCH = 3,
  OPN_STATUS_OUT_OF_SIMPLEX = 4,
  OPN_STATUS_DEGENERATE = 5,
  OPN_STATUS_SIZE_EXCEEDED = 6,
  OPN_STATUS_DIVERGED = 7,
  OPN_STATUS_JSON = 8,
  OPN_STATUS_PANIC = 9,
} OpnStatus;

typedef enum OpnBifurcationKind {
  OPN_BIFURCATION_KIND_CONSENSUS = 0,
  OPN_BIFURCATION_KIND_DISSENSUS = 1,
  OPN_BIFURCATION_KIND_MODE_INTERACTION = 2,
} OpnBifurcationKind;

typedef enum OpnGroupClass {
  OPN_GROUP_CLASS_UNOPINIONATED = 0,
  OPN_GROUP_CLASS_CONSENSUS = 1,
  OPN_GROUP_CLASS_AGREEMENT = 2,
  OPN_GROUP_CLASS_DISSENSUS_UNIFORM = 3,
  OPN_GROUP_CLASS_DISSENSUS_MODERATE_EXTREMIST = 4,
  OPN_GROUP_CLASS_DISSENSUS_OTHER = 5,
  OPN_GROUP_CLASS_DISAGREEMENT = 6,
} OpnGroupClass;

typedef enum OpnMode {
  OPN_MODE_CONSENSUS = 0,
  OPN_MODE_DISSENSUS = 1,
} OpnMode;

typedef struct OpnCatalog OpnCatalog;

typedef struct OpnModel OpnModel;

// Linear analysis at the neutral point. `lambda_crit` is NaN under mode
// interaction.
typedef struct OpnAnalysis {
  enum OpnBifurcationKind kind;
  double lambda_crit;
  double c1;
  double c2;
  double eig_consensus;
  double eig_dissensus;
} OpnAnalysis;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *opn_last_error_message(void);

// Homogeneous all-to-all model with zero bias.
//
// # Safety
// `out` must be a valid pointer to write the handle into.
enum OpnStatus opn_model_new_homogeneous(size_t na,
                                         size_t no,
                                         double alpha,
                                         double beta,
                                         double gamma,
                                         double delta,
                                         double lambda,
                                         struct OpnModel **out);

// Model from the JSON model layout used by scenario files.
//
// # Safety
// `json` must be a NUL-terminated string; `out` a valid pointer.
enum OpnStatus opn_model_from_json(const char *json, struct OpnModel **out);

// New handle holding `model` with every coupling and bias entry shifted
// by an independent uniform draw on `[-epsilon, epsilon]`.
//
// # Safety
// `model` must be a live handle; `out` a valid pointer.
enum OpnStatus opn_model_perturb(const struct OpnModel *model,
                                 double epsilon,
                                 uint64_t seed,
                                 struct OpnModel **out);

// # Safety
// `model` must be null or a handle not yet freed.
void opn_model_free(struct OpnModel *model);

// # Safety
// `model` must be a live handle; `na` and `no` valid pointers.
enum OpnStatus opn_model_dims(const struct OpnModel *model, size_t *na, size_t *no);

// # Safety
// `model` must be a live handle.
enum OpnStatus opn_model_set_lambda(struct OpnModel *model, double lambda);

// Tangent drift at `z`, written to `out`. Both arrays hold `len = na * no`
// values.
//
// # Safety
// `z` and `out` must point to `len` doubles.
enum OpnStatus opn_drift(const struct OpnModel *model, const double *z, size_t len, double *out);

// # Safety
// `model` must be a live handle; `out` a valid pointer.
enum OpnStatus opn_analyze(const struct OpnModel *model, struct OpnAnalysis *out);

// Critical values from the gains. A branch whose denominator is not
// positive reports NaN.
//
// # Safety
// Output pointers must be valid.
enum OpnStatus opn_critical_lambdas(double alpha,
                                    double beta,
                                    double gamma,
                                    double delta,
                                    size_t na,
                                    enum OpnBifurcationKind *kind_out,
                                    double *lambda_consensus,
                                    double *lambda_dissensus);

// Integrate at the model's λ from `z0` with RK4 step `dt` until `t_max` or
// equilibrium. Writes the final state to `z_out` and its class to
// `class_out` (classified with the default simulation tolerance).
//
// # Safety
// `z0` and `z_out` must point to `len` doubles; `class_out` must be valid.
enum OpnStatus opn_integrate(const struct OpnModel *model,
                             const double *z0,
                             size_t len,
                             double dt,
                             double t_max,
                             double *z_out,
                             enum OpnGroupClass *class_out);

// Group class of a deviation state at tolerance `theta`.
//
// # Safety
// `z` must point to `na * no` doubles; `out` must be valid.
enum OpnStatus opn_classify(const double *z,
                            size_t na,
                            size_t no,
                            double theta,
                            enum OpnGroupClass *out);

// Axial catalog for `S_na x S_no` on the consensus or dissensus space.
//
// # Safety
// `out` must be a valid pointer.
enum OpnStatus opn_catalog_new(size_t na, size_t no, enum OpnMode mode, struct OpnCatalog **out);

// # Safety
// `catalog` must be null or a handle not yet freed.
void opn_catalog_free(struct OpnCatalog *catalog);

// # Safety
// `catalog` must be a live handle; `out` a valid pointer.
enum OpnStatus opn_catalog_len(const struct OpnCatalog *catalog, size_t *out);

// Unit fix vector of record `index`, `len = na * no` values.
//
// # Safety
// `catalog` must be a live handle; `out` must point to `len` doubles.
enum OpnStatus opn_catalog_fix_vector(const struct OpnCatalog *catalog,
                                      size_t index,
                                      double *out,
                                      size_t len);

// Label of record `index`, e.g. `Sigma_x_m[m=2]`. Free with
// [`opn_string_free`].
//
// # Safety
// `catalog` must be a live handle; `out` a valid pointer.
enum OpnStatus opn_catalog_label(const struct OpnCatalog *catalog, size_t index, char **out);

// Whole catalog as a JSON array. Free with [`opn_string_free`].
//
// # Safety
// `catalog` must be a live handle; `out` a valid pointer.
enum OpnStatus opn_catalog_to_json(const struct OpnCatalog *catalog, char **out);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void opn_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPINION_FFI_H */
