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

// cmivf command-line tool. Talks to the library only through cmivf.h.

#include <cmivf/cmivf.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitInternal = 4;

struct Failure {
  int status;
  std::string message;
};

void check(int status, const std::string& what) {
  if (status != CMIVF_OK)
    throw Failure{status, what + ": " + cmivf_status_name(status) + ": " + cmivf_last_error()};
}

int exit_code_for(int status) {
  switch (status) {
    case CMIVF_E_IO:
    case CMIVF_E_FORMAT:
      return kExitIo;
    case CMIVF_E_INTERNAL:
      return kExitInternal;
    default:
      return kExitUsage;
  }
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Embeddings = std::unique_ptr<cmivf_embeddings, Deleter<cmivf_embeddings, cmivf_embeddings_free>>;
using CentroidsPtr = std::unique_ptr<cmivf_centroids, Deleter<cmivf_centroids, cmivf_centroids_free>>;
using Index = std::unique_ptr<cmivf_index, Deleter<cmivf_index, cmivf_index_free>>;
using TablePtr = std::unique_ptr<cmivf_table, Deleter<cmivf_table, cmivf_table_free>>;

Embeddings read_embeddings(const std::string& path) {
  cmivf_embeddings* e = nullptr;
  check(cmivf_embeddings_read(path.c_str(), &e), "reading " + path);
  return Embeddings(e);
}

Index load_index(const std::string& path) {
  cmivf_index* ix = nullptr;
  check(cmivf_index_load(path.c_str(), &ix), "loading " + path);
  return Index(ix);
}

// Every aug_*.cmeb in dir, in file-name order.
std::vector<Embeddings> read_aug_dir(const std::string& dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("aug_", 0) == 0 && entry.path().extension() == ".cmeb") files.push_back(entry.path());
  }
  if (ec) throw Failure{CMIVF_E_IO, "cannot list '" + dir + "': " + ec.message()};
  if (files.empty()) throw Failure{CMIVF_E_IO, "no aug_*.cmeb files in '" + dir + "'"};
  std::sort(files.begin(), files.end());
  std::vector<Embeddings> out;
  for (const auto& f : files) out.push_back(read_embeddings(f.string()));
  return out;
}

std::vector<const cmivf_embeddings*> raw(const std::vector<Embeddings>& v) {
  std::vector<const cmivf_embeddings*> out;
  for (const auto& e : v) out.push_back(e.get());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Failure{CMIVF_E_IO, "cannot write '" + path.string() + "'"};
}

void write_table(const cmivf_table* t, const std::string& path) {
  check(cmivf_table_write_csv(t, path.c_str()), "writing " + path);
}

// Effective values of every option of the subcommand, defaults included.
nlohmann::ordered_json describe(const CLI::App& sub) {
  nlohmann::ordered_json opts = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "--help-all") continue;
    std::string name = opt->get_single_name();
    std::vector<std::string> values = opt->results();
    if (values.empty() && !opt->get_default_str().empty()) values = {opt->get_default_str()};
    if (opt->get_expected_max() > 1 || values.size() > 1) {
      opts[name] = values;
    } else if (opt->get_type_size() == 0) {
      opts[name] = opt->count() > 0;
    } else {
      opts[name] = values.empty() ? "" : values.front();
    }
  }
  nlohmann::ordered_json j;
  j["command"] = sub.get_name();
  j["version"] = cmivf_version();
  j["threads"] = cmivf_threads();
  j["options"] = opts;
  return j;
}

// config.json for a directory output, <file>.config.json for a file output.
void write_config(const CLI::App& sub, const fs::path& out, bool out_is_dir) {
  const fs::path target = out_is_dir ? out / "config.json" : fs::path(out.string() + ".config.json");
  write_text(target, describe(sub).dump(2) + "\n");
}

void ensure_parent(const std::string& file) {
  const fs::path parent = fs::path(file).parent_path();
  std::error_code ec;
  if (!parent.empty()) fs::create_directories(parent, ec);
  if (ec) throw Failure{CMIVF_E_IO, "cannot create '" + parent.string() + "': " + ec.message()};
}

struct GapFlags {
  cmivf_gap_config cfg{};
  GapFlags() { cmivf_gap_config_default(&cfg); }
  void attach(CLI::App* sub) {
    sub->add_option("--concepts", cfg.n_concepts, "Number of concepts")->capture_default_str();
    sub->add_option("--per-concept", cfg.per_concept_images, "Gallery images per concept")->capture_default_str();
    sub->add_option("--d", cfg.d, "Embedding dimension")->capture_default_str();
    sub->add_option("--spread", cfg.concept_spread, "Within-concept image noise (total norm)")
        ->capture_default_str();
    sub->add_option("--gap", cfg.gap_magnitude, "Modality gap magnitude")->capture_default_str();
    sub->add_option("--text-noise", cfg.text_noise, "Text noise (total norm)")->capture_default_str();
    sub->add_option("--train-per-concept", cfg.train_texts_per_concept, "Training texts per concept")
        ->capture_default_str();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-modal IVF retrieval toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: CMIVF_THREADS or hardware concurrency)");

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic dataset as CMEB files plus manifest.json");
  std::string gen_kind = "gap", gen_out;
  std::uint64_t gen_seed = 0;
  GapFlags gen_gap;
  std::size_t hub_labels = 10, hub_per_label = 100, hub_d = 64;
  std::uint32_t hub_label = 0;
  bool hub_orth = false;
  std::size_t aug_labels = 128, aug_count = 8, aug_k2 = 16, aug_d = 64;
  bool aug_no_collapse = false;
  gen->add_option("--kind", gen_kind, "gap, hub or augs")
      ->check(CLI::IsMember({"gap", "hub", "augs"}))
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen_gap.attach(gen);
  gen->add_option("--hub-labels", hub_labels, "hub: number of labels")->capture_default_str();
  gen->add_option("--hub-label", hub_label, "hub: index of the hub label")->capture_default_str();
  gen->add_option("--hub-d", hub_d, "hub: dimension")->capture_default_str();
  gen->add_option("--hub-per-label", hub_per_label, "hub: images per label")->capture_default_str();
  gen->add_flag("--hub-orthogonalize", hub_orth, "hub: remove the hub direction from the hub text");
  gen->add_option("--aug-labels", aug_labels, "augs: number of labels")->capture_default_str();
  gen->add_option("--aug-count", aug_count, "augs: number of augmentations")->capture_default_str();
  gen->add_option("--aug-k2", aug_k2, "augs: generator clusters")->capture_default_str();
  gen->add_option("--aug-d", aug_d, "augs: dimension")->capture_default_str();
  gen->add_flag("--aug-no-collapsing", aug_no_collapse, "augs: omit collapsing augmentations");

  // build-index
  auto* bld = app.add_subcommand("build-index", "Train a coarse quantizer and build an IVF index");
  std::string bld_gallery, bld_texts, bld_out, bld_clustering = "kmeans", bld_quant = "none";
  std::size_t bld_k = 256, bld_iters = 10;
  std::uint64_t bld_seed = 0;
  bld->add_option("--gallery", bld_gallery, "Gallery CMEB")->required();
  bld->add_option("--texts", bld_texts, "Training texts CMEB (paired clustering)");
  bld->add_option("--clustering", bld_clustering, "kmeans or paired")
      ->check(CLI::IsMember({"kmeans", "paired"}))
      ->capture_default_str();
  bld->add_option("--k", bld_k, "Number of cells")->capture_default_str();
  bld->add_option("--iters", bld_iters, "Lloyd iterations")->capture_default_str();
  bld->add_option("--seed", bld_seed, "Seed")->capture_default_str();
  bld->add_option("--quant", bld_quant, "none or scalar8")
      ->check(CLI::IsMember({"none", "scalar8"}))
      ->capture_default_str();
  bld->add_option("--out", bld_out, "Index file (.cmiv)")->required();

  // search
  auto* srch = app.add_subcommand("search", "Top-k IVF search, one CSV row per result");
  std::string srch_index, srch_queries, srch_out;
  std::size_t srch_nprobe = 8, srch_topk = 10;
  srch->add_option("--index", srch_index, "Index file")->required();
  srch->add_option("--queries", srch_queries, "Query CMEB")->required();
  srch->add_option("--nprobe", srch_nprobe, "Cells probed")->capture_default_str();
  srch->add_option("--topk", srch_topk, "Results per query")->capture_default_str();
  srch->add_option("--out", srch_out, "Output CSV")->required();

  // eval-recall
  auto* evr = app.add_subcommand("eval-recall", "Recall@1 against exact search over an n_probe grid");
  std::string evr_index, evr_queries, evr_gallery, evr_out;
  std::vector<std::size_t> evr_nprobe{1, 4, 16};
  evr->add_option("--index", evr_index, "Index file")->required();
  evr->add_option("--queries", evr_queries, "Query CMEB")->required();
  evr->add_option("--gallery", evr_gallery, "Gallery CMEB the index was built from")->required();
  evr->add_option("--nprobe", evr_nprobe, "Comma-separated n_probe values")->delimiter(',')->capture_default_str();
  evr->add_option("--out", evr_out, "Output CSV")->required();

  // verify-thm1
  auto* th1 = app.add_subcommand("verify-thm1", "Recall@1 by query-centroid cosine on the uniform sphere");
  cmivf_thm1_config th1_cfg;
  cmivf_thm1_config_default(&th1_cfg);
  std::string th1_out;
  th1->add_option("--n", th1_cfg.n, "Gallery size")->capture_default_str();
  th1->add_option("--k", th1_cfg.k, "Cells")->capture_default_str();
  th1->add_option("--d", th1_cfg.d, "Dimension")->capture_default_str();
  th1->add_option("--bins", th1_cfg.n_bins, "Cosine bins")->capture_default_str();
  th1->add_option("--queries", th1_cfg.n_queries, "Uniform queries")->capture_default_str();
  th1->add_option("--boundary", th1_cfg.n_boundary, "Boundary queries")->capture_default_str();
  th1->add_option("--iters", th1_cfg.iters, "Lloyd iterations")->capture_default_str();
  th1->add_option("--seed", th1_cfg.seed, "Seed")->capture_default_str();
  th1->add_option("--out", th1_out, "Output CSV")->required();

  // verify-thm2
  auto* th2 = app.add_subcommand("verify-thm2", "Monte Carlo check of the Gaussian nearest-neighbor law");
  std::size_t th2_d = 8, th2_n = 100, th2_trials = 10000;
  std::vector<double> th2_p{0.0, 2.0, 5.0, 20.0};
  std::uint64_t th2_seed = 0;
  std::string th2_out;
  th2->add_option("--d", th2_d, "Dimension")->capture_default_str();
  th2->add_option("--n", th2_n, "Gallery size per trial")->capture_default_str();
  th2->add_option("--pnorms", th2_p, "Comma-separated query norms")->delimiter(',')->capture_default_str();
  th2->add_option("--trials", th2_trials, "Trials per query norm")->capture_default_str();
  th2->add_option("--seed", th2_seed, "Seed")->capture_default_str();
  th2->add_option("--out", th2_out, "Output CSV")->required();

  // verify-cap
  auto* cap = app.add_subcommand("verify-cap", "Print the cap fraction {x : <x,e> >= s} of the unit sphere");
  std::size_t cap_d = 3;
  double cap_s = 0.5;
  cap->add_option("--d", cap_d, "Ambient dimension")->capture_default_str();
  cap->add_option("--s", cap_s, "Threshold in [-1, 1]")->capture_default_str();

  // voronoi-map
  auto* vor = app.add_subcommand("voronoi-map", "Cell mismatch rate of Gaussian probes by radius");
  std::size_t vor_n = 10000, vor_k = 20, vor_probes = 10000;
  std::uint64_t vor_seed = 0;
  std::string vor_out;
  vor->add_option("--n", vor_n, "Gallery size")->capture_default_str();
  vor->add_option("--k", vor_k, "Cells")->capture_default_str();
  vor->add_option("--probes", vor_probes, "Probes per radius")->capture_default_str();
  vor->add_option("--seed", vor_seed, "Seed")->capture_default_str();
  vor->add_option("--out", vor_out, "Output CSV")->required();

  // select-augs
  auto* sel = app.add_subcommand("select-augs", "Score augmentations by cluster agreement and keep the best m");
  std::string sel_labels, sel_augs, sel_out;
  std::size_t sel_k2 = 16, sel_m = 16;
  std::uint64_t sel_seed = 0;
  sel->add_option("--labels", sel_labels, "Label embeddings CMEB")->required();
  sel->add_option("--augs", sel_augs, "Directory of aug_*.cmeb files")->required();
  sel->add_option("--k2", sel_k2, "Clusters over the label embeddings")->capture_default_str();
  sel->add_option("--m", sel_m, "Augmentations kept")->capture_default_str();
  sel->add_option("--seed", sel_seed, "Seed")->capture_default_str();
  sel->add_option("--out", sel_out, "Output JSON")->required();

  // construct-dataset
  auto* con = app.add_subcommand("construct-dataset", "Retrieve, pseudo-label and balance a training set");
  cmivf_construct_config con_cfg;
  cmivf_construct_config_default(&con_cfg);
  std::string con_index, con_queries, con_out, con_labeling = "rank";
  con->add_option("--index", con_index, "Index file")->required();
  con->add_option("--queries", con_queries, "Directory of aug_*.cmeb query files")->required();
  con->add_option("--n-neighbors", con_cfg.n_neighbors, "Neighbors per query")->capture_default_str();
  con->add_option("--nprobe", con_cfg.n_probe, "Cells probed")->capture_default_str();
  con->add_option("--k1", con_cfg.k1, "Images kept per label")->capture_default_str();
  con->add_option("--min-sim", con_cfg.min_similarity, "Similarity floor")->capture_default_str();
  con->add_option("--labeling", con_labeling, "rank or cosine")
      ->check(CLI::IsMember({"rank", "cosine"}))
      ->capture_default_str();
  con->add_option("--seed", con_cfg.seed, "Seed")->capture_default_str();
  con->add_option("--out", con_out, "Manifest JSON")->required();

  // compare-clustering
  auto* cmp = app.add_subcommand("compare-clustering", "Standard vs paired k-means recall on the gap benchmark");
  GapFlags cmp_gap;
  std::size_t cmp_k = 256, cmp_iters = 10;
  std::vector<std::size_t> cmp_nprobe{1, 2, 4, 8, 16};
  std::string cmp_quant = "none", cmp_out;
  std::uint64_t cmp_seed = 0, cmp_kseed = 1;
  cmp_gap.attach(cmp);
  cmp->add_option("--k", cmp_k, "Cells")->capture_default_str();
  cmp->add_option("--iters", cmp_iters, "Lloyd iterations")->capture_default_str();
  cmp->add_option("--nprobe", cmp_nprobe, "Comma-separated n_probe values")->delimiter(',')->capture_default_str();
  cmp->add_option("--quant", cmp_quant, "none or scalar8")
      ->check(CLI::IsMember({"none", "scalar8"}))
      ->capture_default_str();
  cmp->add_option("--seed", cmp_seed, "Data seed")->capture_default_str();
  cmp->add_option("--kmeans-seed", cmp_kseed, "Clustering seed")->capture_default_str();
  cmp->add_option("--out", cmp_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  cmivf_set_threads(threads);
  const int quant_none = CMIVF_QUANT_NONE, quant_s8 = CMIVF_QUANT_SCALAR8;

  try {
    if (gen->parsed()) {
      std::error_code ec;
      fs::create_directories(gen_out, ec);
      if (ec) throw Failure{CMIVF_E_IO, "cannot create '" + gen_out + "': " + ec.message()};
      if (gen_kind == "gap") {
        gen_gap.cfg.seed = gen_seed;
        check(cmivf_gen_gap(&gen_gap.cfg, gen_out.c_str()), "gen-synth");
      } else if (gen_kind == "hub") {
        check(cmivf_gen_hub(hub_labels, hub_label, hub_d, hub_per_label, gen_seed, hub_orth ? 1 : 0,
                            gen_out.c_str()),
              "gen-synth");
      } else {
        check(cmivf_gen_augs(aug_labels, aug_count, aug_k2, aug_d, gen_seed, aug_no_collapse ? 0 : 1,
                             gen_out.c_str()),
              "gen-synth");
      }
      write_config(*gen, gen_out, true);
    } else if (bld->parsed()) {
      const auto gallery = read_embeddings(bld_gallery);
      cmivf_centroids* c = nullptr;
      if (bld_clustering == "paired") {
        if (bld_texts.empty()) throw Failure{CMIVF_E_INVALID_ARGUMENT, "--clustering paired requires --texts"};
        const auto texts = read_embeddings(bld_texts);
        check(cmivf_train_paired(texts.get(), gallery.get(), bld_k, bld_iters, bld_seed, &c), "training");
      } else {
        check(cmivf_train_kmeans(gallery.get(), bld_k, bld_iters, bld_seed, &c), "training");
      }
      const CentroidsPtr centroids(c);
      cmivf_index* ix = nullptr;
      check(cmivf_index_build(gallery.get(), centroids.get(), bld_quant == "scalar8" ? quant_s8 : quant_none, &ix),
            "building index");
      const Index index(ix);
      ensure_parent(bld_out);
      check(cmivf_index_save(index.get(), bld_out.c_str()), "saving index");
      check(cmivf_centroids_save(centroids.get(), (bld_out + ".centroids.cmeb").c_str(),
                                 (bld_out + ".centroids.json").c_str()),
            "saving centroids");
      write_config(*bld, bld_out, false);
    } else if (srch->parsed()) {
      const auto index = load_index(srch_index);
      const auto queries = read_embeddings(srch_queries);
      const std::size_t nq = cmivf_embeddings_rows(queries.get());
      std::vector<std::uint64_t> ids(nq * srch_topk);
      std::vector<double> sims(nq * srch_topk);
      std::vector<std::size_t> counts(nq);
      check(cmivf_search(index.get(), queries.get(), srch_nprobe, srch_topk, ids.data(), sims.data(), counts.data()),
            "search");
      std::string csv = "query,rank,id,similarity\n";
      char line[128];
      for (std::size_t q = 0; q < nq; ++q)
        for (std::size_t r = 0; r < counts[q]; ++r) {
          std::snprintf(line, sizeof line, "%zu,%zu,%llu,%.6g\n", q, r,
                        static_cast<unsigned long long>(ids[q * srch_topk + r]), sims[q * srch_topk + r]);
          csv += line;
        }
      ensure_parent(srch_out);
      write_text(srch_out, csv);
      write_config(*srch, srch_out, false);
    } else if (evr->parsed()) {
      const auto index = load_index(evr_index);
      const auto queries = read_embeddings(evr_queries);
      const auto gallery = read_embeddings(evr_gallery);
      cmivf_table* t = nullptr;
      check(cmivf_eval_recall(index.get(), queries.get(), gallery.get(), evr_nprobe.data(), evr_nprobe.size(), &t),
            "eval-recall");
      const TablePtr table(t);
      ensure_parent(evr_out);
      write_table(table.get(), evr_out);
      write_config(*evr, evr_out, false);
    } else if (th1->parsed()) {
      cmivf_table* t = nullptr;
      double spearman = 0.0, boundary = 0.0;
      check(cmivf_verify_thm1(&th1_cfg, &t, &spearman, &boundary), "verify-thm1");
      const TablePtr table(t);
      ensure_parent(th1_out);
      write_table(table.get(), th1_out);
      write_config(*th1, th1_out, false);
      std::printf("spearman %.6g\nboundary_recall_at_1 %.6g\n", spearman, boundary);
    } else if (th2->parsed()) {
      cmivf_table* t = nullptr;
      check(cmivf_verify_thm2(th2_d, th2_n, th2_p.data(), th2_p.size(), th2_trials, th2_seed, &t), "verify-thm2");
      const TablePtr table(t);
      ensure_parent(th2_out);
      write_table(table.get(), th2_out);
      write_config(*th2, th2_out, false);
    } else if (cap->parsed()) {
      double v = 0.0;
      check(cmivf_cap_fraction(cap_s, cap_d, &v), "verify-cap");
      std::printf("%.10g\n", v);
    } else if (vor->parsed()) {
      cmivf_table* t = nullptr;
      check(cmivf_voronoi_map(vor_n, vor_k, vor_probes, vor_seed, &t), "voronoi-map");
      const TablePtr table(t);
      ensure_parent(vor_out);
      write_table(table.get(), vor_out);
      write_config(*vor, vor_out, false);
    } else if (sel->parsed()) {
      const auto labels = read_embeddings(sel_labels);
      const auto augs = read_aug_dir(sel_augs);
      const auto ptrs = raw(augs);
      ensure_parent(sel_out);
      check(cmivf_select_augs(labels.get(), ptrs.data(), ptrs.size(), sel_k2, sel_m, sel_seed, nullptr, nullptr,
                              sel_out.c_str()),
            "select-augs");
      write_config(*sel, sel_out, false);
    } else if (con->parsed()) {
      const auto index = load_index(con_index);
      const auto queries = read_aug_dir(con_queries);
      const auto ptrs = raw(queries);
      con_cfg.rank_labeling = con_labeling == "rank" ? 1 : 0;
      ensure_parent(con_out);
      std::size_t entries = 0;
      check(cmivf_construct_dataset(index.get(), ptrs.data(), ptrs.size(), &con_cfg, con_out.c_str(), &entries),
            "construct-dataset");
      write_config(*con, con_out, false);
      std::printf("entries %zu\n", entries);
    } else if (cmp->parsed()) {
      cmp_gap.cfg.seed = cmp_seed;
      cmivf_table* t = nullptr;
      double xs = 0.0, xp = 0.0;
      check(cmivf_compare_clustering(&cmp_gap.cfg, cmp_k, cmp_iters, cmp_nprobe.data(), cmp_nprobe.size(),
                                     cmp_quant == "scalar8" ? quant_s8 : quant_none, cmp_kseed, &t, &xs, &xp),
            "compare-clustering");
      const TablePtr table(t);
      ensure_parent(cmp_out);
      write_table(table.get(), cmp_out);
      write_config(*cmp, cmp_out, false);
      std::printf("crossmodal_standard %.6g\ncrossmodal_paired %.6g\n", xs, xp);
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return exit_code_for(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
