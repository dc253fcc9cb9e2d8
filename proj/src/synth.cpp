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

#include "cmivf/synth.hpp"

#include <cmath>
#include <string>

#include "cmivf/distance.hpp"
#include "cmivf/error.hpp"
#include "cmivf/parallel.hpp"

namespace cmivf {
namespace {

using Vec = std::vector<double>;

constexpr std::uint64_t kDirectionStream = 0;
constexpr std::uint64_t kGapStream = 1;
constexpr std::uint64_t kItemStreamBase = 1u << 20;

void require(bool ok, const std::string& what) {
  if (!ok) raise(ErrorCode::kConfigError, what);
}

Vec unit(Vec v) {
  double n2 = 0.0;
  for (const double x : v) n2 += x * x;
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& x : v) x *= inv;
  return v;
}

Vec random_unit(Rng& rng, std::size_t d) {
  Vec v(d);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      n2 += x * x;
    }
  } while (n2 < 1e-24);
  return unit(std::move(v));
}

// normalize(base + noise_norm/sqrt(d) * N(0, I)) written as float into out.
void emit_noisy(const Vec& base, double noise_norm, Rng& rng, float* out) {
  const std::size_t d = base.size();
  const double sigma = noise_norm / std::sqrt(static_cast<double>(d));
  Vec v(base);
  if (sigma > 0.0)
    for (auto& x : v) x += sigma * rng.normal();
  v = unit(std::move(v));
  for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(v[j]);
}

Vec axpy(const Vec& a, double s, const Vec& b) {
  Vec out(a);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += s * b[j];
  return out;
}

double dot_d(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

// Double-precision brute force over a sample of queries; the float search
// must reach the same minimal distance.
void check_ground_truth(const EmbeddingSet& queries, const EmbeddingSet& gallery,
                        const std::vector<std::uint64_t>& ids) {
  const std::size_t d = gallery.dim();
  const std::size_t step = std::max<std::size_t>(1, queries.rows() / 64);
  for (std::size_t q = 0; q < queries.rows(); q += step) {
    double best = INFINITY;
    for (std::size_t i = 0; i < gallery.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = double(queries.row_ptr(q)[j]) - double(gallery.row_ptr(i)[j]);
        s += diff * diff;
      }
      best = std::min(best, s);
    }
    const double got = l2_sq(queries.row_ptr(q), gallery.row_ptr(ids[q]), d);
    check_invariant(std::abs(got - best) <= 1e-12 * std::max(1.0, best), "synthetic ground truth");
  }
}

}  // namespace

SynthBundle gen_gap_dataset(const GapConfig& cfg) {
  require(cfg.n_concepts >= 1, "n_concepts must be >= 1");
  require(cfg.per_concept_images >= 1, "per_concept_images must be >= 1");
  require(cfg.train_texts_per_concept >= 1, "train_texts_per_concept must be >= 1");
  require(cfg.d >= 2, "d must be >= 2");
  for (const double knob : {cfg.concept_spread, cfg.gap_magnitude, cfg.text_noise})
    require(std::isfinite(knob) && knob >= 0.0, "spread, gap and noise must be finite and >= 0");

  const std::size_t c = cfg.n_concepts, d = cfg.d, per = cfg.per_concept_images,
                    tpc = cfg.train_texts_per_concept;
  std::vector<Vec> dirs(c);
  {
    Rng rng(cfg.seed, kDirectionStream);
    for (auto& v : dirs) v = random_unit(rng, d);
  }
  Rng gap_rng(cfg.seed, kGapStream);
  const Vec gap = random_unit(gap_rng, d);

  std::vector<float> gallery(c * per * d), image_q(c * d), text_q(c * d), train(c * tpc * d);
  parallel_for(c, 16, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(cfg.seed, kItemStreamBase + i);
      for (std::size_t j = 0; j < per; ++j)
        emit_noisy(dirs[i], cfg.concept_spread, rng, gallery.data() + (i * per + j) * d);
      emit_noisy(dirs[i], cfg.concept_spread, rng, image_q.data() + i * d);
      const Vec shifted = axpy(dirs[i], cfg.gap_magnitude, gap);
      emit_noisy(shifted, cfg.text_noise, rng, text_q.data() + i * d);
      for (std::size_t j = 0; j < tpc; ++j)
        emit_noisy(shifted, cfg.text_noise, rng, train.data() + (i * tpc + j) * d);
    }
  });

  SynthBundle b{EmbeddingSet(c * per, d, std::move(gallery), true),
                {},
                EmbeddingSet(c, d, std::move(text_q), true),
                {},
                {},
                EmbeddingSet(c, d, std::move(image_q), true),
                {},
                EmbeddingSet(c * tpc, d, std::move(train), true),
                {}};
  b.gallery_concept_ids.resize(c * per);
  b.train_concept_ids.resize(c * tpc);
  b.text_concept_ids.resize(c);
  for (std::size_t i = 0; i < c; ++i) {
    b.text_concept_ids[i] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 0; j < per; ++j) b.gallery_concept_ids[i * per + j] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 0; j < tpc; ++j) b.train_concept_ids[i * tpc + j] = static_cast<std::uint32_t>(i);
  }
  b.ground_truth_nn = exact_nn_ids(b.text_queries, b.gallery);
  b.image_ground_truth_nn = exact_nn_ids(b.image_queries, b.gallery);
  check_ground_truth(b.text_queries, b.gallery, b.ground_truth_nn);
  check_ground_truth(b.image_queries, b.gallery, b.image_ground_truth_nn);
  return b;
}

HubScenario gen_hub_scenario(const HubConfig& cfg) {
  require(cfg.n_labels >= 2, "hub scenario needs >= 2 labels");
  require(cfg.hub_label < cfg.n_labels, "hub_label must be < n_labels");
  require(cfg.d >= 2, "d must be >= 2");
  require(cfg.images_per_label >= 1, "images_per_label must be >= 1");
  constexpr double kCone = 1.0;
  constexpr double kSpread = 0.5;
  constexpr double kGap = 0.5;
  constexpr double kHubPull = 0.3;

  const std::size_t L = cfg.n_labels, d = cfg.d, per = cfg.images_per_label;
  Rng rng(cfg.seed, kDirectionStream);
  std::vector<Vec> dirs(L);
  for (auto& v : dirs) v = random_unit(rng, d);
  const Vec cone = random_unit(rng, d);
  const Vec gap = random_unit(rng, d);

  std::vector<float> gallery(L * per * d);
  std::vector<std::uint32_t> labels(L * per);
  parallel_for(L, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t l = begin; l < end; ++l) {
      Rng item(cfg.seed, kItemStreamBase + l);
      const Vec center = axpy(dirs[l], kCone, cone);
      for (std::size_t j = 0; j < per; ++j) {
        emit_noisy(center, kSpread, item, gallery.data() + (l * per + j) * d);
        labels[l * per + j] = static_cast<std::uint32_t>(l);
      }
    }
  });

  Vec mean(d, 0.0);
  for (std::size_t i = 0; i < L * per; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += gallery[i * d + j];
  mean = unit(std::move(mean));

  std::vector<float> texts(L * d);
  for (std::size_t l = 0; l < L; ++l) {
    Vec t;
    if (l != cfg.hub_label) {
      t = unit(axpy(dirs[l], kGap, gap));
    } else if (cfg.orthogonalize_hub) {
      t = unit(axpy(axpy(dirs[l], -dot_d(dirs[l], mean), mean), kGap, gap));
    } else {
      t = unit(axpy(mean, kHubPull, dirs[l]));
    }
    for (std::size_t j = 0; j < d; ++j) texts[l * d + j] = static_cast<float>(t[j]);
  }
  return HubScenario{EmbeddingSet(L, d, std::move(texts), true),
                     EmbeddingSet(L * per, d, std::move(gallery), true), std::move(labels)};
}

LabelAugmentations gen_label_augmentations(const AugConfig& cfg) {
  require(cfg.n_augs >= 2, "n_augs must be >= 2");
  require(cfg.k2 >= 1, "k2 must be >= 1");
  require(cfg.n_labels >= 2 * cfg.k2, "need at least two labels per cluster");
  require(cfg.d >= 2, "d must be >= 2");
  constexpr double kLabelNoise = 0.2;
  constexpr double kBenignNoise = 0.05;
  constexpr double kPull = 0.9;

  const std::size_t n = cfg.n_labels, d = cfg.d, k2 = cfg.k2;
  Rng rng(cfg.seed, kDirectionStream);
  std::vector<Vec> centers(k2);
  for (auto& v : centers) v = random_unit(rng, d);

  std::vector<std::uint32_t> cluster(n);
  std::vector<Vec> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    cluster[i] = static_cast<std::uint32_t>(i % k2);
    std::vector<float> tmp(d);
    emit_noisy(centers[cluster[i]], kLabelNoise, rng, tmp.data());
    labels[i].assign(tmp.begin(), tmp.end());
  }
  std::vector<Vec> means(k2, Vec(d, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) means[cluster[i]][j] += labels[i][j];
  for (auto& m : means) m = unit(std::move(m));

  const std::size_t n_collapse =
      cfg.include_collapsing ? std::max<std::size_t>(1, cfg.n_augs / 4) : 0;
  const std::size_t first_collapse = cfg.n_augs - n_collapse;

  auto flatten = [&](const std::vector<Vec>& rows) {
    std::vector<float> out(n * d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] = static_cast<float>(rows[i][j]);
    return out;
  };
  std::vector<float> label_data = flatten(labels);

  LabelAugmentations out{EmbeddingSet(n, d, label_data, true), {}, cluster, {}};
  out.augmented.reserve(cfg.n_augs);
  for (std::size_t a = 0; a < cfg.n_augs; ++a) {
    Rng arng(cfg.seed, kItemStreamBase + a);
    if (a == 0) {
      out.augmented.emplace_back(n, d, label_data, true);
      out.collapsing.push_back(0);
      continue;
    }
    std::vector<float> data(n * d);
    if (a < first_collapse) {
      for (std::size_t i = 0; i < n; ++i) emit_noisy(labels[i], kBenignNoise, arng, data.data() + i * d);
      out.augmented.emplace_back(n, d, std::move(data), true);
      out.collapsing.push_back(0);
      continue;
    }
    std::vector<char> pulled(k2, 1);
    if (a + 1 < cfg.n_augs)
      for (auto& p : pulled) p = arng.uniform() < 0.5;
    std::vector<Vec> rows(labels);
    for (std::size_t i = 0; i < n; ++i)
      if (pulled[cluster[i]]) {
        Vec v(d);
        for (std::size_t j = 0; j < d; ++j) v[j] = (1.0 - kPull) * labels[i][j] + kPull * means[cluster[i]][j];
        rows[i] = unit(std::move(v));
      }
    out.augmented.emplace_back(n, d, flatten(rows), true);
    out.collapsing.push_back(1);
  }
  return out;
}

}  // namespace cmivf
