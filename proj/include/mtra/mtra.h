/* C interface of the knee MRI segmentation library.
 *
 * Every function returns an mtra_status. On failure the thread-local message
 * from mtra_last_error() describes the problem. Handles are opaque and must be
 * released with their matching *_free function. Text outputs use the
 * (buf, cap, needed) convention: *needed receives the full length including
 * the terminator, and the text is truncated to fit cap. */
#ifndef MTRA_MTRA_H
#define MTRA_MTRA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MTRA_API __declspec(dllexport)
#else
#define MTRA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mtra_status {
    MTRA_OK = 0,
    MTRA_ERR_VALIDATION = 1, /* bad arguments, config or input data */
    MTRA_ERR_RUNTIME = 2     /* I/O failure, divergence, internal error */
} mtra_status;

typedef struct mtra_config mtra_config;
typedef struct mtra_model mtra_model;

MTRA_API const char* mtra_last_error(void);
MTRA_API const char* mtra_version(void);

/* ---- configuration ---------------------------------------------------- */

/* `source` is a preset name ("default", "tiny") or a key=value file. The n
 * override pairs are applied last; a "mode" override is applied first so the
 * mode-dependent defaults do not clobber other keys. */
MTRA_API mtra_status mtra_config_resolve(const char* source, const char* const* keys, const char* const* values,
                                         size_t n, mtra_config** out);
/* Configuration stored in a checkpoint, then the overrides. */
MTRA_API mtra_status mtra_config_from_checkpoint(const char* checkpoint, const char* const* keys,
                                                 const char* const* values, size_t n, mtra_config** out);
MTRA_API mtra_status mtra_config_set(mtra_config* config, const char* key, const char* value);
MTRA_API mtra_status mtra_config_to_text(const mtra_config* config, char* buf, size_t cap, size_t* needed);
MTRA_API void mtra_config_free(mtra_config* config);

/* ---- model -------------------------------------------------------------- */

typedef struct mtra_model_info {
    int class_count;
    int input_size;
    int64_t parameter_count;
} mtra_model_info;

/* Analytic trainable parameter count of the configured network. */
MTRA_API mtra_status mtra_count_parameters(const mtra_config* config, int64_t* out);

MTRA_API mtra_status mtra_model_create(const mtra_config* config, mtra_model** out);
MTRA_API mtra_status mtra_model_load(const char* checkpoint, mtra_model** out);
MTRA_API mtra_status mtra_model_save(mtra_model* model, const char* checkpoint);
MTRA_API mtra_status mtra_model_info_get(const mtra_model* model, mtra_model_info* out);
/* images: n x size x size floats in [0,1]; logits: n x m x size x size. */
MTRA_API mtra_status mtra_model_forward(mtra_model* model, const float* images, int64_t n, int64_t size,
                                        float* logits, size_t logits_cap);
MTRA_API void mtra_model_free(mtra_model* model);

/* ---- pipeline ------------------------------------------------------------ */

/* Synthetic dataset under out_dir/{train,val,test}/<subject>/. */
MTRA_API mtra_status mtra_phantom_write(const mtra_config* config, uint64_t seed, const char* out_dir);

typedef void (*mtra_epoch_fn)(int epoch, double train_loss, double val_loss, double seconds, void* user);

typedef struct mtra_train_summary {
    int epochs;
    int best_epoch;
    double best_loss;
    double first_train_loss;
    double final_train_loss;
} mtra_train_summary;

/* data_dir may be NULL to train on an in-memory phantom dataset. val_loss in
 * the callback is NaN without a validation split. Writes model.ckpt,
 * loss_history.csv and config.txt to out_dir. */
MTRA_API mtra_status mtra_train(const mtra_config* config, const char* data_dir, const char* out_dir,
                                mtra_epoch_fn on_epoch, void* user, mtra_train_summary* out);

typedef struct mtra_eval_summary {
    size_t slices_total;
    size_t slices_selected;
    size_t records;
    int empty_selection;
    double average_dsc; /* NaN for an empty selection */
} mtra_eval_summary;

/* Exactly one of checkpoint and pred_dir must be non-NULL. */
MTRA_API mtra_status mtra_evaluate(const mtra_config* config, const char* data_dir, const char* checkpoint,
                                   const char* pred_dir, const char* out_dir, mtra_eval_summary* out);

typedef struct mtra_segment_summary {
    size_t volumes;
    size_t slices;
    double total_seconds;
    double slice_sum_seconds;
    double compute_seconds;
    double io_seconds;
} mtra_segment_summary;

MTRA_API mtra_status mtra_segment(const mtra_config* config, const char* checkpoint, const char* data_dir,
                                  const char* out_dir, mtra_segment_summary* out);

/* Recomputes summaries from a per-slice metrics CSV into out_dir and returns
 * a text table. */
MTRA_API mtra_status mtra_report(const char* metrics_csv, const char* out_dir, char* buf, size_t cap,
                                 size_t* needed);

/* gamma/eta in {0.1/0.9, 0.5/0.5, 0.9/0.1} on the overfit task;
 * writes out_dir/loss_sweep.csv. */
MTRA_API mtra_status mtra_loss_sweep(const mtra_config* config, const char* out_dir, size_t* rows);

/* ---- metrics on binary masks (nonzero = foreground) --------------------- */

MTRA_API mtra_status mtra_dsc(const uint8_t* pred, const uint8_t* truth, size_t n, double* out);
MTRA_API mtra_status mtra_voe(double dsc_percent, double* out);
/* *defined is 0 when exactly one mask is empty (distance undefined). */
MTRA_API mtra_status mtra_hausdorff(const uint8_t* pred, const uint8_t* truth, int height, int width, double row_mm,
                                    double col_mm, double* out, int* defined);
/* Label maps of n pixels. */
MTRA_API mtra_status mtra_pixel_accuracy(const uint8_t* pred, const uint8_t* truth, size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif
