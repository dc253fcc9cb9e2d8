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

#include "cmivf/cmivf.h"

#include <cstdio>
#include <exception>
#include <fstream>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmivf/cmeb.hpp"
#include "cmivf/error.hpp"
#include "cmivf/experiments.hpp"
#include "cmivf/ivf.hpp"
#include "cmivf/kmeans.hpp"
#include "cmivf/parallel.hpp"
#include "cmivf/pipeline.hpp"
#include "cmivf/report.hpp"
#include "cmivf/special.hpp"
#include "cmivf/synth.hpp"
#include "cmivf/theory.hpp"

struct cmivf_embeddings {
  cmivf::EmbeddingSet set;
};

struct cmivf_centroids {
  cmivf::TrainResult trained;
  cmivf::CentroidsMeta meta;
};

struct cmivf_index {
  cmivf::IvfIndex index;
};

struct cmivf_table {
  cmivf::Table table;
  std::string csv;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
int guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return CMIVF_OK;
  } catch (const cmivf::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return CMIVF_E_INTERNAL;
}

void require_ptr(const void* p, const char* name) {
  if (p == nullptr) cmivf::raise(cmivf::ErrorCode::kInvalidArgument, std::string(name) + " is null");
}

std::string join(const char* dir, const std::string& file) { return std::string(dir) + "/" + file; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) cmivf::raise(cmivf::ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) cmivf::raise(cmivf::ErrorCode::kIoError, "write failed for '" + path + "'");
}

cmivf::Quantization to_quant(int q) {
  if (q == CMIVF_QUANT_NONE) return cmivf::Quantization::kNone;
  if (q == CMIVF_QUANT_SCALAR8) return cmivf::Quantization::kScalar8;
  cmivf::raise(cmivf::ErrorCode::kInvalidArgument, "unknown quantization " + std::to_string(q));
}

cmivf::GapConfig to_gap(const cmivf_gap_config& c) {
  cmivf::GapConfig g;
  g.n_concepts = c.n_concepts;
  g.per_concept_images = c.per_concept_images;
  g.d = c.d;
  g.concept_spread = c.concept_spread;
  g.gap_magnitude = c.gap_magnitude;
  g.text_noise = c.text_noise;
  g.train_texts_per_concept = c.train_texts_per_concept;
  g.seed = cmivf::RngSeed{c.seed};
  return g;
}

cmivf_table* new_table(cmivf::Table t) {
  auto* out = new cmivf_table{std::move(t), {}};
  out->csv = cmivf::to_csv(out->table);
  return out;
}

std::vector<cmivf::EmbeddingSet> gather(const cmivf_embeddings* const* sets, size_t count) {
  require_ptr(sets, "set array");
  std::vector<cmivf::EmbeddingSet> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    require_ptr(sets[i], "embedding set");
    out.push_back(sets[i]->set);
  }
  return out;
}

}  // namespace

extern "C" {

const char* cmivf_version(void) { return "1.0.0"; }

const char* cmivf_last_error(void) { return g_last_error.c_str(); }

const char* cmivf_status_name(int status) {
  if (status < 0 || status > CMIVF_E_INTERNAL) return "Unknown";
  return cmivf::error_code_name(static_cast<cmivf::ErrorCode>(status));
}

void cmivf_set_threads(size_t n) { cmivf::set_num_threads(n); }

size_t cmivf_threads(void) { return cmivf::num_threads(); }

int cmivf_embeddings_create(size_t rows, size_t dim, const float* data, int normalized, cmivf_embeddings** out) {
  return guarded([&] {
    require_ptr(data, "data");
    require_ptr(out, "out");
    std::vector<float> v(data, data + rows * dim);
    *out = new cmivf_embeddings{cmivf::EmbeddingSet(rows, dim, std::move(v), normalized != 0)};
  });
}

int cmivf_embeddings_read(const char* path, cmivf_embeddings** out) {
  return guarded([&] {
    require_ptr(path, "path");
    require_ptr(out, "out");
    *out = new cmivf_embeddings{cmivf::read_cmeb(path)};
  });
}

int cmivf_embeddings_write(const cmivf_embeddings* e, const char* path) {
  return guarded([&] {
    require_ptr(e, "embeddings");
    require_ptr(path, "path");
    cmivf::write_cmeb(e->set, path);
  });
}

int cmivf_embeddings_normalize(const cmivf_embeddings* e, cmivf_embeddings** out) {
  return guarded([&] {
    require_ptr(e, "embeddings");
    require_ptr(out, "out");
    *out = new cmivf_embeddings{cmivf::l2_normalize(e->set)};
  });
}

size_t cmivf_embeddings_rows(const cmivf_embeddings* e) { return e ? e->set.rows() : 0; }
size_t cmivf_embeddings_dim(const cmivf_embeddings* e) { return e ? e->set.dim() : 0; }
int cmivf_embeddings_is_normalized(const cmivf_embeddings* e) { return e && e->set.normalized() ? 1 : 0; }
const float* cmivf_embeddings_data(const cmivf_embeddings* e) { return e ? e->set.data().data() : nullptr; }
void cmivf_embeddings_free(cmivf_embeddings* e) { delete e; }

void cmivf_gap_config_default(cmivf_gap_config* cfg) {
  if (!cfg) return;
  const cmivf::GapConfig g;
  *cfg = cmivf_gap_config{g.n_concepts,   g.per_concept_images, g.d,
                          g.concept_spread, g.gap_magnitude,    g.text_noise,
                          g.train_texts_per_concept, g.seed.value};
}

int cmivf_gen_gap(const cmivf_gap_config* cfg, const char* dir) {
  return guarded([&] {
    require_ptr(cfg, "config");
    require_ptr(dir, "dir");
    const auto b = cmivf::gen_gap_dataset(to_gap(*cfg));
    cmivf::write_cmeb(b.gallery, join(dir, "gallery.cmeb"));
    cmivf::write_cmeb(b.text_queries, join(dir, "text_queries.cmeb"));
    cmivf::write_cmeb(b.image_queries, join(dir, "image_queries.cmeb"));
    cmivf::write_cmeb(b.train_texts, join(dir, "train_texts.cmeb"));
    nlohmann::ordered_json j;
    j["kind"] = "gap";
    j["files"] = {{"gallery", "gallery.cmeb"},
                  {"text_queries", "text_queries.cmeb"},
                  {"image_queries", "image_queries.cmeb"},
                  {"train_texts", "train_texts.cmeb"}};
    j["gallery_concept_ids"] = b.gallery_concept_ids;
    j["text_concept_ids"] = b.text_concept_ids;
    j["ground_truth_nn"] = b.ground_truth_nn;
    j["image_ground_truth_nn"] = b.image_ground_truth_nn;
    j["train_concept_ids"] = b.train_concept_ids;
    write_text(join(dir, "manifest.json"), j.dump() + "\n");
  });
}

int cmivf_gen_hub(size_t n_labels, uint32_t hub_label, size_t d, size_t images_per_label, uint64_t seed,
                  int orthogonalize_hub, const char* dir) {
  return guarded([&] {
    require_ptr(dir, "dir");
    cmivf::HubConfig cfg;
    cfg.n_labels = n_labels;
    cfg.hub_label = hub_label;
    cfg.d = d;
    cfg.images_per_label = images_per_label;
    cfg.seed = cmivf::RngSeed{seed};
    cfg.orthogonalize_hub = orthogonalize_hub != 0;
    const auto s = cmivf::gen_hub_scenario(cfg);
    cmivf::write_cmeb(s.label_texts, join(dir, "label_texts.cmeb"));
    cmivf::write_cmeb(s.gallery, join(dir, "gallery.cmeb"));
    nlohmann::ordered_json j;
    j["kind"] = "hub";
    j["hub_label"] = hub_label;
    j["files"] = {{"label_texts", "label_texts.cmeb"}, {"gallery", "gallery.cmeb"}};
    j["true_labels"] = s.true_labels;
    write_text(join(dir, "manifest.json"), j.dump() + "\n");
  });
}

int cmivf_gen_augs(size_t n_labels, size_t n_augs, size_t k2, size_t d, uint64_t seed, int include_collapsing,
                   const char* dir) {
  return guarded([&] {
    require_ptr(dir, "dir");
    cmivf::AugConfig cfg;
    cfg.n_labels = n_labels;
    cfg.n_augs = n_augs;
    cfg.k2 = k2;
    cfg.d = d;
    cfg.seed = cmivf::RngSeed{seed};
    cfg.include_collapsing = include_collapsing != 0;
    const auto a = cmivf::gen_label_augmentations(cfg);
    cmivf::write_cmeb(a.labels, join(dir, "labels.cmeb"));
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (size_t i = 0; i < a.augmented.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "aug_%03zu.cmeb", i);
      cmivf::write_cmeb(a.augmented[i], join(dir, name));
      files.push_back(name);
    }
    nlohmann::ordered_json j;
    j["kind"] = "augs";
    j["labels"] = "labels.cmeb";
    j["augmentations"] = files;
    j["cluster_ids"] = a.cluster_ids;
    j["collapsing"] = a.collapsing;
    write_text(join(dir, "manifest.json"), j.dump() + "\n");
  });
}

int cmivf_train_kmeans(const cmivf_embeddings* points, size_t k, size_t iters, uint64_t seed,
                       cmivf_centroids** out) {
  return guarded([&] {
    require_ptr(points, "points");
    require_ptr(out, "out");
    auto trained = cmivf::run_kmeans(points->set, k, iters, cmivf::RngSeed{seed});
    *out = new cmivf_centroids{std::move(trained), {"kmeans", iters, seed}};
  });
}

int cmivf_train_paired(const cmivf_embeddings* texts, const cmivf_embeddings* gallery, size_t k, size_t iters,
                       uint64_t seed, cmivf_centroids** out) {
  return guarded([&] {
    require_ptr(texts, "texts");
    require_ptr(gallery, "gallery");
    require_ptr(out, "out");
    const auto pairs = cmivf::make_pairs(texts->set, gallery->set);
    auto trained = cmivf::run_paired_kmeans(pairs, gallery->set, k, iters, cmivf::RngSeed{seed});
    *out = new cmivf_centroids{std::move(trained), {"paired", iters, seed}};
  });
}

int cmivf_centroids_save(const cmivf_centroids* c, const char* cmeb_path, const char* json_path) {
  return guarded([&] {
    require_ptr(c, "centroids");
    require_ptr(cmeb_path, "cmeb_path");
    require_ptr(json_path, "json_path");
    cmivf::save_centroids(c->trained, c->meta, cmeb_path, json_path);
  });
}

size_t cmivf_centroids_k(const cmivf_centroids* c) { return c ? c->trained.centroids.k() : 0; }
void cmivf_centroids_free(cmivf_centroids* c) { delete c; }

int cmivf_index_build(const cmivf_embeddings* gallery, const cmivf_centroids* c, int quantization,
                      cmivf_index** out) {
  return guarded([&] {
    require_ptr(gallery, "gallery");
    require_ptr(c, "centroids");
    require_ptr(out, "out");
    *out = new cmivf_index{cmivf::build_index(gallery->set, c->trained.centroids, to_quant(quantization))};
  });
}

int cmivf_index_save(const cmivf_index* index, const char* path) {
  return guarded([&] {
    require_ptr(index, "index");
    require_ptr(path, "path");
    cmivf::save_index(index->index, path);
  });
}

int cmivf_index_load(const char* path, cmivf_index** out) {
  return guarded([&] {
    require_ptr(path, "path");
    require_ptr(out, "out");
    *out = new cmivf_index{cmivf::load_index(path)};
  });
}

size_t cmivf_index_k(const cmivf_index* index) { return index ? index->index.k() : 0; }
size_t cmivf_index_dim(const cmivf_index* index) { return index ? index->index.dim() : 0; }
size_t cmivf_index_total(const cmivf_index* index) { return index ? index->index.total() : 0; }
void cmivf_index_free(cmivf_index* index) { delete index; }

int cmivf_search(const cmivf_index* index, const cmivf_embeddings* queries, size_t n_probe, size_t topk,
                 uint64_t* ids, double* sims, size_t* counts) {
  return guarded([&] {
    require_ptr(index, "index");
    require_ptr(queries, "queries");
    require_ptr(ids, "ids");
    require_ptr(counts, "counts");
    const auto res = cmivf::search(index->index, queries->set, n_probe, topk);
    for (size_t q = 0; q < res.queries(); ++q) {
      counts[q] = res.lists[q].size();
      for (size_t r = 0; r < res.lists[q].size(); ++r) {
        ids[q * topk + r] = res.lists[q][r].id;
        if (sims) sims[q * topk + r] = res.lists[q][r].similarity;
      }
    }
  });
}

int cmivf_eval_recall(const cmivf_index* index, const cmivf_embeddings* queries, const cmivf_embeddings* gallery,
                      const size_t* n_probes, size_t count, cmivf_table** out) {
  return guarded([&] {
    require_ptr(index, "index");
    require_ptr(queries, "queries");
    require_ptr(gallery, "gallery");
    require_ptr(n_probes, "n_probes");
    require_ptr(out, "out");
    if (gallery->set.rows() != index->index.total())
      cmivf::raise(cmivf::ErrorCode::kInvalidArgument, "gallery does not match the index");
    const auto truth = cmivf::exact_nn_ids(queries->set, gallery->set);
    std::vector<cmivf::RecallReport> reports;
    for (size_t i = 0; i < count; ++i)
      reports.push_back(cmivf::eval_recall(index->index, queries->set, truth, n_probes[i]));
    *out = new_table(cmivf::recall_table(reports));
  });
}

int cmivf_cap_fraction(double s, size_t d, double* out) {
  return guarded([&] {
    require_ptr(out, "out");
    *out = cmivf::cap_fraction(s, d);
  });
}

void cmivf_thm1_config_default(cmivf_thm1_config* cfg) {
  if (!cfg) return;
  const cmivf::Thm1Config c;
  *cfg = cmivf_thm1_config{c.n, c.k, c.d, c.n_bins, c.n_queries, c.n_boundary, c.iters, c.seed.value};
}

int cmivf_verify_thm1(const cmivf_thm1_config* cfg, cmivf_table** bins, double* spearman,
                      double* boundary_recall) {
  return guarded([&] {
    require_ptr(cfg, "config");
    require_ptr(bins, "bins");
    cmivf::Thm1Config c;
    c.n = cfg->n;
    c.k = cfg->k;
    c.d = cfg->d;
    c.n_bins = cfg->n_bins;
    c.n_queries = cfg->n_queries;
    c.n_boundary = cfg->n_boundary;
    c.iters = cfg->iters;
    c.seed = cmivf::RngSeed{cfg->seed};
    const auto rep = cmivf::verify_thm1(c);
    *bins = new_table(cmivf::thm1_table(rep));
    if (spearman) *spearman = rep.spearman;
    if (boundary_recall) *boundary_recall = rep.boundary_recall_estimate;
  });
}

int cmivf_verify_thm2(size_t d, size_t n, const double* p_norms, size_t p_count, size_t trials, uint64_t seed,
                      cmivf_table** out) {
  return guarded([&] {
    require_ptr(p_norms, "p_norms");
    require_ptr(out, "out");
    cmivf::Thm2Config c;
    c.d = d;
    c.n = n;
    c.p_norms.assign(p_norms, p_norms + p_count);
    c.trials = trials;
    c.seed = cmivf::RngSeed{seed};
    *out = new_table(cmivf::thm2_table(cmivf::verify_thm2(c)));
  });
}

int cmivf_voronoi_map(size_t n, size_t k, size_t probes_per_bin, uint64_t seed, cmivf_table** out) {
  return guarded([&] {
    require_ptr(out, "out");
    cmivf::VoronoiConfig c;
    c.n = n;
    c.k = k;
    c.probes_per_bin = probes_per_bin;
    c.seed = cmivf::RngSeed{seed};
    *out = new_table(cmivf::voronoi_table(cmivf::voronoi_mismatch_map(c)));
  });
}

int cmivf_select_augs(const cmivf_embeddings* labels, const cmivf_embeddings* const* augs, size_t n_augs,
                      size_t k2, size_t m, uint64_t seed, uint32_t* losses, int* selected, const char* json_path) {
  return guarded([&] {
    require_ptr(labels, "labels");
    const auto sets = gather(augs, n_augs);
    const auto scores = cmivf::select_augmentations(labels->set, sets, k2, m, cmivf::RngSeed{seed});
    for (size_t i = 0; i < scores.size(); ++i) {
      if (losses) losses[i] = scores[i].loss;
      if (selected) selected[i] = scores[i].selected ? 1 : 0;
    }
    if (json_path) write_text(json_path, cmivf::scores_to_json(scores, k2, m));
  });
}

void cmivf_construct_config_default(cmivf_construct_config* cfg) {
  if (!cfg) return;
  const cmivf::ConstructOptions o;
  *cfg = cmivf_construct_config{o.n_neighbors, o.n_probe, o.k1, o.min_similarity, o.rank_labeling ? 1 : 0,
                                o.seed.value};
}

int cmivf_construct_dataset(const cmivf_index* index, const cmivf_embeddings* const* queries, size_t m,
                            const cmivf_construct_config* cfg, const char* manifest_path, size_t* entries) {
  return guarded([&] {
    require_ptr(index, "index");
    require_ptr(cfg, "config");
    const auto sets = gather(queries, m);
    cmivf::ConstructOptions o;
    o.n_neighbors = cfg->n_neighbors;
    o.n_probe = cfg->n_probe;
    o.k1 = cfg->k1;
    o.min_similarity = cfg->min_similarity;
    o.rank_labeling = cfg->rank_labeling != 0;
    o.seed = cmivf::RngSeed{cfg->seed};
    const auto manifest = cmivf::construct_dataset(index->index, sets, o);
    if (manifest_path) write_text(manifest_path, cmivf::manifest_to_json(manifest));
    if (entries) *entries = manifest.entries.size();
  });
}

int cmivf_compare_clustering(const cmivf_gap_config* data, size_t k, size_t iters, const size_t* n_probes,
                             size_t count, int quantization, uint64_t kmeans_seed, cmivf_table** out,
                             double* crossmodal_standard, double* crossmodal_paired) {
  return guarded([&] {
    require_ptr(data, "data config");
    require_ptr(n_probes, "n_probes");
    require_ptr(out, "out");
    cmivf::CompareConfig c;
    c.data = to_gap(*data);
    c.k = k;
    c.iters = iters;
    c.n_probes.assign(n_probes, n_probes + count);
    c.quantization = to_quant(quantization);
    c.kmeans_seed = cmivf::RngSeed{kmeans_seed};
    const auto cmp = cmivf::compare_clustering(c);
    *out = new_table(cmivf::comparison_table(cmp));
    if (crossmodal_standard) *crossmodal_standard = cmp.crossmodal_standard;
    if (crossmodal_paired) *crossmodal_paired = cmp.crossmodal_paired;
  });
}

size_t cmivf_table_rows(const cmivf_table* t) { return t ? t->table.rows.size() : 0; }
const char* cmivf_table_csv(const cmivf_table* t) { return t ? t->csv.c_str() : ""; }

int cmivf_table_write_csv(const cmivf_table* t, const char* path) {
  return guarded([&] {
    require_ptr(t, "table");
    require_ptr(path, "path");
    cmivf::write_csv(t->table, path);
  });
}

void cmivf_table_free(cmivf_table* t) { delete t; }

}  // extern "C"
