// Copyright 2026 The cmivf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to libcmivf: opaque handles and integer status codes.
 *
 * Every function returning int returns CMIVF_OK (0) on success or one of the
 * CMIVF_E_* codes; cmivf_last_error() then holds a message for the calling
 * thread. Output handles are only written on success and are released with
 * the matching *_free function. */
#ifndef CMIVF_CMIVF_H_
#define CMIVF_CMIVF_H_

#include <stddef.h>
#include <stdint.h>

#if defined(CMIVF_BUILDING_LIBRARY)
#define CMIVF_API __attribute__((visibility("default")))
#else
#define CMIVF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  CMIVF_OK = 0,
  CMIVF_E_INVALID_ARGUMENT = 1,
  CMIVF_E_DIMENSION_MISMATCH = 2,
  CMIVF_E_ZERO_VECTOR = 3,
  CMIVF_E_DOMAIN = 4,
  CMIVF_E_INVALID_K = 5,
  CMIVF_E_EMPTY_PAIRS = 6,
  CMIVF_E_INVALID_NPROBE = 7,
  CMIVF_E_IO = 8,
  CMIVF_E_FORMAT = 9,
  CMIVF_E_CONFIG = 10,
  CMIVF_E_SINGLE_CENTROID = 11,
  CMIVF_E_TOO_FEW_AUGMENTATIONS = 12,
  CMIVF_E_EMPTY_RESULT = 13,
  CMIVF_E_NOT_A_DISTRIBUTION = 14,
  CMIVF_E_INTERNAL = 15
};

enum { CMIVF_QUANT_NONE = 0, CMIVF_QUANT_SCALAR8 = 1 };

typedef struct cmivf_embeddings cmivf_embeddings;
typedef struct cmivf_centroids cmivf_centroids;
typedef struct cmivf_index cmivf_index;
typedef struct cmivf_table cmivf_table;

CMIVF_API const char* cmivf_version(void);
CMIVF_API const char* cmivf_last_error(void);
CMIVF_API const char* cmivf_status_name(int status);
/* 0 restores the default (CMIVF_THREADS, else hardware concurrency). */
CMIVF_API void cmivf_set_threads(size_t n);
CMIVF_API size_t cmivf_threads(void);

/* Embedding sets (CMEB files). */
CMIVF_API int cmivf_embeddings_create(size_t rows, size_t dim, const float* data, int normalized,
                                      cmivf_embeddings** out);
CMIVF_API int cmivf_embeddings_read(const char* path, cmivf_embeddings** out);
CMIVF_API int cmivf_embeddings_write(const cmivf_embeddings* e, const char* path);
CMIVF_API int cmivf_embeddings_normalize(const cmivf_embeddings* e, cmivf_embeddings** out);
CMIVF_API size_t cmivf_embeddings_rows(const cmivf_embeddings* e);
CMIVF_API size_t cmivf_embeddings_dim(const cmivf_embeddings* e);
CMIVF_API int cmivf_embeddings_is_normalized(const cmivf_embeddings* e);
CMIVF_API const float* cmivf_embeddings_data(const cmivf_embeddings* e);
CMIVF_API void cmivf_embeddings_free(cmivf_embeddings* e);

/* Synthetic data. Each generator writes CMEB files and a manifest.json into
 * an existing directory. */
typedef struct {
  size_t n_concepts;
  size_t per_concept_images;
  size_t d;
  double concept_spread;
  double gap_magnitude;
  double text_noise;
  size_t train_texts_per_concept;
  uint64_t seed;
} cmivf_gap_config;

CMIVF_API void cmivf_gap_config_default(cmivf_gap_config* cfg);
/* gallery, text_queries, image_queries, train_texts */
CMIVF_API int cmivf_gen_gap(const cmivf_gap_config* cfg, const char* dir);
/* label_texts, gallery */
CMIVF_API int cmivf_gen_hub(size_t n_labels, uint32_t hub_label, size_t d, size_t images_per_label,
                            uint64_t seed, int orthogonalize_hub, const char* dir);
/* labels, aug_000 ... */
CMIVF_API int cmivf_gen_augs(size_t n_labels, size_t n_augs, size_t k2, size_t d, uint64_t seed,
                             int include_collapsing, const char* dir);

/* Coarse quantizers. */
CMIVF_API int cmivf_train_kmeans(const cmivf_embeddings* points, size_t k, size_t iters, uint64_t seed,
                                 cmivf_centroids** out);
/* Pairs each text with its exact nearest gallery image. */
CMIVF_API int cmivf_train_paired(const cmivf_embeddings* texts, const cmivf_embeddings* gallery, size_t k,
                                 size_t iters, uint64_t seed, cmivf_centroids** out);
CMIVF_API int cmivf_centroids_save(const cmivf_centroids* c, const char* cmeb_path, const char* json_path);
CMIVF_API size_t cmivf_centroids_k(const cmivf_centroids* c);
CMIVF_API void cmivf_centroids_free(cmivf_centroids* c);

/* IVF index. */
CMIVF_API int cmivf_index_build(const cmivf_embeddings* gallery, const cmivf_centroids* c, int quantization,
                                cmivf_index** out);
CMIVF_API int cmivf_index_save(const cmivf_index* index, const char* path);
CMIVF_API int cmivf_index_load(const char* path, cmivf_index** out);
CMIVF_API size_t cmivf_index_k(const cmivf_index* index);
CMIVF_API size_t cmivf_index_dim(const cmivf_index* index);
CMIVF_API size_t cmivf_index_total(const cmivf_index* index);
CMIVF_API void cmivf_index_free(cmivf_index* index);

/* ids and sims hold rows*topk slots; counts[q] receives the list length of
 * query q (less than topk when fewer candidates were scanned). */
CMIVF_API int cmivf_search(const cmivf_index* index, const cmivf_embeddings* queries, size_t n_probe,
                           size_t topk, uint64_t* ids, double* sims, size_t* counts);
/* One row per n_probe: n_probe, recall_at_1, mean_buckets, mean_candidates. */
CMIVF_API int cmivf_eval_recall(const cmivf_index* index, const cmivf_embeddings* queries,
                                const cmivf_embeddings* gallery, const size_t* n_probes, size_t count,
                                cmivf_table** out);

/* Geometry checks. */
CMIVF_API int cmivf_cap_fraction(double s, size_t d, double* out);

typedef struct {
  size_t n;
  size_t k;
  size_t d;
  size_t n_bins;
  size_t n_queries;
  size_t n_boundary;
  size_t iters;
  uint64_t seed;
} cmivf_thm1_config;

CMIVF_API void cmivf_thm1_config_default(cmivf_thm1_config* cfg);
CMIVF_API int cmivf_verify_thm1(const cmivf_thm1_config* cfg, cmivf_table** bins, double* spearman,
                                double* boundary_recall);

CMIVF_API int cmivf_verify_thm2(size_t d, size_t n, const double* p_norms, size_t p_count, size_t trials,
                                uint64_t seed, cmivf_table** out);
CMIVF_API int cmivf_voronoi_map(size_t n, size_t k, size_t probes_per_bin, uint64_t seed, cmivf_table** out);

/* Dataset construction. losses and selected hold n_augs slots. */
CMIVF_API int cmivf_select_augs(const cmivf_embeddings* labels, const cmivf_embeddings* const* augs,
                                size_t n_augs, size_t k2, size_t m, uint64_t seed, uint32_t* losses,
                                int* selected, const char* json_path);

typedef struct {
  size_t n_neighbors;
  size_t n_probe;
  size_t k1;
  double min_similarity;
  int rank_labeling;
  uint64_t seed;
} cmivf_construct_config;

CMIVF_API void cmivf_construct_config_default(cmivf_construct_config* cfg);
/* queries[a] holds one row per label for augmentation a. */
CMIVF_API int cmivf_construct_dataset(const cmivf_index* index, const cmivf_embeddings* const* queries,
                                      size_t m, const cmivf_construct_config* cfg, const char* manifest_path,
                                      size_t* entries);

/* Standard vs paired k-means on the gap benchmark. */
CMIVF_API int cmivf_compare_clustering(const cmivf_gap_config* data, size_t k, size_t iters,
                                       const size_t* n_probes, size_t count, int quantization,
                                       uint64_t kmeans_seed, cmivf_table** out, double* crossmodal_standard,
                                       double* crossmodal_paired);

/* Report tables. */
CMIVF_API size_t cmivf_table_rows(const cmivf_table* t);
/* Returned string is owned by the table. */
CMIVF_API const char* cmivf_table_csv(const cmivf_table* t);
CMIVF_API int cmivf_table_write_csv(const cmivf_table* t, const char* path);
CMIVF_API void cmivf_table_free(cmivf_table* t);

#ifdef __cplusplus
}
#endif

#endif /* CMIVF_CMIVF_H_ */
