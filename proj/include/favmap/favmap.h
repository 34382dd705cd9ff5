/*
 * C interface to favmap.
 *
 * Every fallible function returns a favmap_status; on failure the message is
 * available from favmap_last_error() on the same thread until the next call.
 * Objects are opaque handles released with the matching *_free function
 * (passing NULL is allowed). Handles are immutable after creation and may be
 * read from several threads at once.
 */
#ifndef FAVMAP_H
#define FAVMAP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FAVMAP_BUILDING_LIBRARY)
#    define FAVMAP_API __declspec(dllexport)
#  else
#    define FAVMAP_API __declspec(dllimport)
#  endif
#else
#  define FAVMAP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum favmap_status {
    FAVMAP_OK = 0,
    FAVMAP_ERR_INVALID_ARGUMENT = 1,
    FAVMAP_ERR_DATA = 2,
    FAVMAP_ERR_IO = 3,
    FAVMAP_ERR_INTERNAL = 4
} favmap_status;

FAVMAP_API const char* favmap_version(void);
FAVMAP_API const char* favmap_last_error(void);

/* ---- configuration structs (fill with the *_default functions) ---- */

typedef struct favmap_label_rules {
    double building_min;   /* removed if building proportion <  this */
    double veg_max;        /* removed if vegetation proportion > this */
    double favela_min;     /* favela if favela proportion >= this */
    double ndvi_threshold; /* vegetation pixel if NDVI >= this */
} favmap_label_rules;

typedef struct favmap_forest_config {
    size_t n_trees;
    size_t max_features;     /* 0: ceil(sqrt(d)) */
    size_t min_samples_leaf;
    size_t max_depth;        /* 0: unlimited */
    uint64_t seed;
    int bootstrap;           /* nonzero: bootstrap samples (default) */
} favmap_forest_config;

typedef struct favmap_cv_config {
    size_t k;
    size_t repeats;
    uint64_t seed;
    favmap_forest_config forest;
} favmap_cv_config;

typedef struct favmap_scenario_config {
    double min_x, min_y, max_x, max_y;
    double pixel_size;
    double tile_size;
    size_t n_favelas;
    double favela_texture_std;
    double formal_texture_std;
    double target_imbalance;
    uint64_t seed;
} favmap_scenario_config;

FAVMAP_API void favmap_label_rules_default(favmap_label_rules* rules);
FAVMAP_API void favmap_forest_config_default(favmap_forest_config* cfg);
FAVMAP_API void favmap_cv_config_default(favmap_cv_config* cfg);
FAVMAP_API void favmap_scenario_config_default(favmap_scenario_config* cfg);

/* ---- synthetic fixtures ---- */

/* Generates a synthetic city and writes it to out_dir. achieved_imbalance
 * (nullable) receives the nonfavela:favela ratio of the expected labels. */
FAVMAP_API favmap_status favmap_synth(const favmap_scenario_config* cfg, const char* out_dir,
                                      double* achieved_imbalance);

/* ---- labeled dataset ---- */

typedef struct favmap_dataset favmap_dataset;

typedef struct favmap_label_inputs {
    const char* imagery;    /* raster with an "ndvi" band or red + nir bands */
    const char* buildings;  /* raster with the built-up fraction band */
    const char* favelas;    /* GeoJSON polygons */
    const char* industrial; /* GeoJSON polygons */
    double tile_size;       /* <= 0: 150 */
    const char* red_band;      /* NULL: "red" */
    const char* nir_band;      /* NULL: "nir" */
    const char* building_band; /* NULL: "built" */
} favmap_label_inputs;

FAVMAP_API favmap_status favmap_dataset_build(const favmap_label_inputs* inputs,
                                              const favmap_label_rules* rules, unsigned threads,
                                              favmap_dataset** out);
/* provenance_path may be NULL; without it the grid is unknown and baseline
 * features cannot be extracted. */
FAVMAP_API favmap_status favmap_dataset_load(const char* csv_path, const char* provenance_path,
                                             favmap_dataset** out);
/* Any path may be NULL to skip that output. */
FAVMAP_API favmap_status favmap_dataset_write(const favmap_dataset* ds, const char* csv_path,
                                              const char* provenance_path,
                                              const char* geojson_path);
FAVMAP_API favmap_status favmap_dataset_counts(const favmap_dataset* ds, size_t* n_favela,
                                               size_t* n_nonfavela);
FAVMAP_API void favmap_dataset_free(favmap_dataset* ds);

/* ---- feature sets ---- */

typedef struct favmap_features favmap_features;

FAVMAP_API favmap_status favmap_features_baseline(const favmap_dataset* ds,
                                                  const char* imagery_path, unsigned threads,
                                                  favmap_features** out);
FAVMAP_API favmap_status favmap_features_load(const char* path, favmap_features** out);
FAVMAP_API favmap_status favmap_features_write(const favmap_features* fs, const char* path);
FAVMAP_API size_t favmap_features_dimension(const favmap_features* fs);
FAVMAP_API size_t favmap_features_count(const favmap_features* fs);
FAVMAP_API void favmap_features_free(favmap_features* fs);

/* ---- cross-validation reports ---- */

typedef struct favmap_report favmap_report;

/* method may be NULL (defaults to the feature source). */
FAVMAP_API favmap_status favmap_cv_run(const favmap_dataset* ds, const favmap_features* fs,
                                       const favmap_cv_config* cfg, const char* method,
                                       unsigned threads, favmap_report** out);
FAVMAP_API favmap_status favmap_report_load(const char* path, favmap_report** out);
FAVMAP_API favmap_status favmap_report_write_json(const favmap_report* report, const char* path);
FAVMAP_API size_t favmap_report_rows(const favmap_report* report);
/* out[6] = precision mean, std, recall mean, std, f1 mean, std */
FAVMAP_API favmap_status favmap_report_summary(const favmap_report* report, double out[6]);
/* Renders the Method | Precision | Recall | F1-score table for n reports
 * (with_config: also the effective configuration; only when n == 1).
 * *needed receives the size including the terminating NUL; pass buf = NULL
 * to query it. */
FAVMAP_API favmap_status favmap_report_render(const favmap_report* const* reports, size_t n,
                                              int with_config, char* buf, size_t cap,
                                              size_t* needed);
FAVMAP_API void favmap_report_free(favmap_report* report);

/* ---- classifier ---- */

typedef struct favmap_forest favmap_forest;

/* x is row-major n x d; y holds 0/1 labels. */
FAVMAP_API favmap_status favmap_forest_fit(const double* x, size_t n, size_t d, const int* y,
                                           const favmap_forest_config* cfg, unsigned threads,
                                           favmap_forest** out);
/* label and proba may be NULL. */
FAVMAP_API favmap_status favmap_forest_predict(const favmap_forest* forest, const double* x,
                                               size_t d, int* label, double* proba);
FAVMAP_API void favmap_forest_free(favmap_forest* forest);

/* ---- geometry ---- */

/* Fraction of [min_x, max_x] x [min_y, max_y] covered by the polygons of a
 * GeoJSON document. */
FAVMAP_API favmap_status favmap_coverage_proportion(const char* geojson, double min_x,
                                                    double min_y, double max_x, double max_y,
                                                    double* out);

#ifdef __cplusplus
}
#endif

#endif /* FAVMAP_H */
