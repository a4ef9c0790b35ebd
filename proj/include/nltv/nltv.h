#ifndef NLTV_NLTV_H
#define NLTV_NLTV_H

/* C interface to the NLTV hyperspectral clustering library.
 *
 * Every object is an opaque handle created by a *_create / *_load / producer
 * call and released with the matching *_free. Functions that can fail return
 * an nltv_status; on failure nltv_last_error() describes the problem for the
 * calling thread. Output handles are only written on success. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(NLTV_BUILDING)
#    define NLTV_API __declspec(dllexport)
#  else
#    define NLTV_API __declspec(dllimport)
#  endif
#else
#  define NLTV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nltv_status {
    NLTV_OK = 0,
    NLTV_ERR_INVALID_ARGUMENT = 1,
    NLTV_ERR_IO = 2,
    NLTV_ERR_FORMAT = 3,
    NLTV_ERR_NUMERIC = 4,
    NLTV_ERR_INTERNAL = 5
} nltv_status;

typedef struct nltv_cube nltv_cube;
typedef struct nltv_truth nltv_truth;
typedef struct nltv_labels nltv_labels;
typedef struct nltv_matrix nltv_matrix;
typedef struct nltv_graph nltv_graph;
typedef struct nltv_result nltv_result;
typedef struct nltv_report nltv_report;

NLTV_API const char* nltv_version(void);
NLTV_API const char* nltv_status_string(nltv_status status);
/* Message for the last failure on this thread; empty after a success. */
NLTV_API const char* nltv_last_error(void);

/* ---- cubes ------------------------------------------------------------- */

/* data holds rows*cols*bands floats, band-interleaved-by-pixel. */
NLTV_API nltv_status nltv_cube_create(size_t rows, size_t cols, size_t bands, const float* data,
                                      nltv_cube** out);
NLTV_API nltv_status nltv_cube_load(const char* data_path, const char* header_path, nltv_cube** out);
NLTV_API nltv_status nltv_cube_save(const nltv_cube* cube, const char* data_path, const char* header_path);
NLTV_API nltv_status nltv_cube_shape(const nltv_cube* cube, size_t* rows, size_t* cols, size_t* bands);
/* Borrowed pointer, valid until the cube is freed. */
NLTV_API const float* nltv_cube_data(const nltv_cube* cube);
NLTV_API void nltv_cube_free(nltv_cube* cube);

/* ---- dense matrices (centroids, endmembers, abundances) ---------------- */

NLTV_API nltv_status nltv_matrix_create(size_t rows, size_t cols, const double* data, nltv_matrix** out);
NLTV_API nltv_status nltv_matrix_load_csv(const char* path, nltv_matrix** out);
NLTV_API nltv_status nltv_matrix_save_csv(const nltv_matrix* m, const char* path);
NLTV_API nltv_status nltv_matrix_shape(const nltv_matrix* m, size_t* rows, size_t* cols);
NLTV_API const double* nltv_matrix_data(const nltv_matrix* m);
NLTV_API void nltv_matrix_free(nltv_matrix* m);

/* ---- ground truth ------------------------------------------------------ */

/* CSV of integer class ids, -1 for unlabeled. expected_pixels == 0 skips the
 * length check. */
NLTV_API nltv_status nltv_truth_load(const char* path, size_t expected_pixels, nltv_truth** out);
NLTV_API nltv_status nltv_truth_save(const nltv_truth* truth, const char* path);
NLTV_API size_t nltv_truth_size(const nltv_truth* truth);
/* Copies n labels into out; unlabeled pixels become -1. */
NLTV_API nltv_status nltv_truth_labels(const nltv_truth* truth, int32_t* out, size_t n);
NLTV_API void nltv_truth_free(nltv_truth* truth);

/* ---- label maps -------------------------------------------------------- */

NLTV_API nltv_status nltv_labels_create(size_t rows, size_t cols, size_t k, const uint32_t* assignment,
                                        nltv_labels** out);
/* k == 0 infers k from the largest index. */
NLTV_API nltv_status nltv_labels_load(const char* csv_path, size_t k, nltv_labels** out);
/* Writes the CSV of indices and the indexed-colour PNG; either path may be NULL. */
NLTV_API nltv_status nltv_labels_save(const nltv_labels* labels, const char* csv_path, const char* png_path);
NLTV_API nltv_status nltv_labels_shape(const nltv_labels* labels, size_t* rows, size_t* cols, size_t* k);
NLTV_API const uint32_t* nltv_labels_data(const nltv_labels* labels);
NLTV_API void nltv_labels_free(nltv_labels* labels);

/* ---- synthetic scenes -------------------------------------------------- */

typedef struct nltv_gbm_config {
    size_t p;
    size_t bands;
    size_t rows;
    size_t cols;
    double snr_db;
    double smoothness;
    double mixing_scale;
    double reflectance_scale;
    uint64_t gamma_seed;
    uint64_t field_seed;
    uint64_t noise_seed;
    uint64_t endmember_seed;
    int add_noise;
} nltv_gbm_config;

NLTV_API void nltv_gbm_config_default(nltv_gbm_config* cfg);

/* endmembers may be NULL for the bundled spectra. Any output pointer may be
 * NULL when that product is not wanted. */
NLTV_API nltv_status nltv_synth_generate(const nltv_gbm_config* cfg, const nltv_matrix* endmembers,
                                         nltv_cube** cube, nltv_truth** truth, nltv_matrix** endmembers_out,
                                         nltv_matrix** abundances_out);

/* ---- nonlocal graphs --------------------------------------------------- */

typedef struct nltv_patch_config {
    int patch_radius;
    size_t m;
    double sigma; /* <= 0 selects the default */
    int binarize;
    int normalize_spectra;
    size_t ann_trees;
    size_t ann_checks;
    uint64_t seed;
} nltv_patch_config;

NLTV_API void nltv_patch_config_default(nltv_patch_config* cfg);
NLTV_API nltv_status nltv_patch_distance(const nltv_cube* cube, size_t i, size_t j, const nltv_patch_config* cfg,
                                         double* out);
NLTV_API nltv_status nltv_graph_build(const nltv_cube* cube, const nltv_patch_config* cfg, nltv_graph** out);
NLTV_API nltv_status nltv_graph_load(const char* path, nltv_graph** out);
NLTV_API nltv_status nltv_graph_save(const nltv_graph* graph, const char* path);
NLTV_API nltv_status nltv_graph_info(const nltv_graph* graph, size_t* pixels, size_t* m, double* operator_norm);
/* Copies the m targets and weights of pixel i; either output may be NULL. */
NLTV_API nltv_status nltv_graph_row(const nltv_graph* graph, size_t i, uint32_t* targets, double* weights);
NLTV_API void nltv_graph_free(nltv_graph* graph);

/* ---- clustering -------------------------------------------------------- */

typedef enum nltv_model { NLTV_MODEL_LINEAR = 0, NLTV_MODEL_QUADRATIC = 1 } nltv_model;

typedef enum nltv_init {
    NLTV_INIT_RANDOM = 0,
    NLTV_INIT_KMEANSPP = 1,
    NLTV_INIT_KMEANS = 2,
    NLTV_INIT_EXTERNAL = 3
} nltv_init;

typedef struct nltv_solver_config {
    double tau;
    double sigma;
    double theta;
    size_t max_iters;
    double rel_tol;
    int auto_steps;
    int randomize_dual;
    uint64_t seed;
} nltv_solver_config;

typedef struct nltv_cluster_config {
    size_t k;
    int auto_lambda; /* nonzero ignores lambda */
    double lambda;
    int auto_mu;     /* nonzero ignores mu */
    double mu;
    nltv_model model;
    nltv_init init;
    size_t outer_max;
    double outer_tol;
    double eta;
    double grid_h;   /* <= 0 selects the default for k */
    double band_eps; /* <= 0 selects grid_h / 2 */
    uint64_t seed;
} nltv_cluster_config;

typedef struct nltv_outer_record {
    size_t outer_iter;
    size_t inner_iters;
    double energy;
    double changed_fraction;
} nltv_outer_record;

NLTV_API void nltv_solver_config_default(nltv_solver_config* cfg);
NLTV_API void nltv_cluster_config_default(nltv_cluster_config* cfg);

/* Initial centroids for cfg->init; mu is the distance used by the seeding. */
NLTV_API nltv_status nltv_initial_centroids(const nltv_cube* cube, const nltv_cluster_config* cfg, double mu,
                                            const nltv_matrix* external, nltv_matrix** out);
/* Heuristic lambda and mu for the given centroids. fixed_mu < 0 estimates mu
 * too. *fallback is set when the defaults (1, 0) had to be used. */
NLTV_API nltv_status nltv_auto_params(const nltv_cube* cube, const nltv_graph* graph, const nltv_matrix* centroids,
                                      double fixed_mu, double* lambda, double* mu, int* fallback);

/* external_centroids is required for NLTV_INIT_EXTERNAL and ignored otherwise. */
NLTV_API nltv_status nltv_cluster(const nltv_cube* cube, const nltv_graph* graph, const nltv_cluster_config* ccfg,
                                  const nltv_solver_config* scfg, const nltv_matrix* external_centroids,
                                  nltv_result** out);
NLTV_API nltv_status nltv_result_labels(const nltv_result* result, nltv_labels** out);
NLTV_API nltv_status nltv_result_centroids(const nltv_result* result, nltv_matrix** out);
NLTV_API nltv_status nltv_result_params(const nltv_result* result, double* lambda, double* mu);
NLTV_API size_t nltv_result_history_size(const nltv_result* result);
NLTV_API nltv_status nltv_result_history(const nltv_result* result, size_t index, nltv_outer_record* out);
NLTV_API void nltv_result_free(nltv_result* result);

/* ---- evaluation -------------------------------------------------------- */

/* merges such as "1+2;4+5" collapse ground-truth classes; may be NULL. */
NLTV_API nltv_status nltv_evaluate(const nltv_labels* labels, const nltv_truth* truth, const char* merges,
                                   nltv_report** out);
NLTV_API double nltv_report_accuracy(const nltv_report* report);
/* Borrowed strings, valid until the report is freed. */
NLTV_API const char* nltv_report_json(const nltv_report* report);
NLTV_API const char* nltv_report_confusion_csv(const nltv_report* report);
NLTV_API void nltv_report_free(nltv_report* report);

#ifdef __cplusplus
}
#endif

#endif
