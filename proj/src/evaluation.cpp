#include "medrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "medrec/recommender.hpp"

namespace medrec {

// ---------------------------------------------------------------------------
// Split

SplitResult split_half(const Corpus& corpus, const SplitSpec& spec) {
  const auto triples = corpus.triples();
  std::map<DiseaseId, std::vector<std::size_t>> by_disease;
  for (std::size_t k = 0; k < triples.size(); ++k) by_disease[triples[k].did].push_back(k);
  if (std::none_of(by_disease.begin(), by_disease.end(), [](const auto& e) { return e.second.size() >= 2; })) {
    throw std::invalid_argument("degenerate corpus: no disease has two or more weight triples");
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> to_a;
  std::vector<std::size_t> to_b;
  std::vector<DiseaseId> single_sided;
  std::size_t odd = 0;
  for (auto& [did, indices] : by_disease) {
    std::shuffle(indices.begin(), indices.end(), rng);
    // Successive odd-sized groups alternate which half receives the extra triple.
    bool first_to_a = true;
    if (indices.size() % 2 == 1) first_to_a = (odd++ % 2 == 0);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const bool to_first = (k % 2 == 0);
      (to_first == first_to_a ? to_a : to_b).push_back(indices[k]);
    }
    if (indices.size() == 1) single_sided.push_back(did);
  }
  std::sort(to_a.begin(), to_a.end());
  std::sort(to_b.begin(), to_b.end());
  auto gather = [&](const std::vector<std::size_t>& idx) {
    std::vector<WeightTriple> out;
    out.reserve(idx.size());
    for (std::size_t k : idx) out.push_back(triples[k]);
    return out;
  };
  return SplitResult{corpus.with_triples(gather(to_a)), corpus.with_triples(gather(to_b)), std::move(single_sided),
                     odd};
}

// ---------------------------------------------------------------------------
// Similarity and distance

std::vector<DiseaseId> shared_diseases(std::span<const Model* const> models) {
  std::vector<DiseaseId> out;
  if (models.empty()) return out;
  const auto& corpus = models.front()->corpus();
  for (std::size_t i = 0; i < corpus.diseases().size(); ++i) {
    const DiseaseId did = corpus.disease_at(i).did;
    const bool everywhere = std::all_of(models.begin(), models.end(), [&](const Model* m) {
      auto row = m->corpus().disease_index().dense(did);
      return row && m->eligible(*row);
    });
    if (everywhere) out.push_back(did);
  }
  return out;
}

SimilarityMatrix similarity_matrix(const Model& model, std::span<const DiseaseId> dids) {
  const std::size_t r = model.factorization().rank();
  DenseMatrix unit(dids.size(), r);
  for (std::size_t i = 0; i < dids.size(); ++i) {
    auto row = model.corpus().disease_index().dense(dids[i]);
    if (!row) throw std::invalid_argument(fmt::format("disease {} is not in the model corpus", dids[i]));
    if (!model.eligible(*row)) throw std::invalid_argument(fmt::format("disease {} has a zero latent vector", dids[i]));
    auto latent = model.latents().row(*row);
    const double norm = norm2(latent);
    auto dst = unit.row(i);
    for (std::size_t k = 0; k < r; ++k) dst[k] = latent[k] / norm;
  }
  return {std::vector<DiseaseId>(dids.begin(), dids.end()), multiply_transposed(unit, unit)};
}

namespace {

double row_distance(std::span<const double> a, std::span<const double> b) {
  // Four accumulators keep the loop pipelined.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= a.size(); k += 4) {
    const double d0 = a[k] - b[k];
    const double d1 = a[k + 1] - b[k + 1];
    const double d2 = a[k + 2] - b[k + 2];
    const double d3 = a[k + 3] - b[k + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s0 += d * d;
  }
  return std::sqrt((s0 + s1) + (s2 + s3));
}

}  // namespace

DistanceMatrix distance_matrix(const SimilarityMatrix& a, const SimilarityMatrix& b) {
  if (a.dids != b.dids || a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
    throw std::invalid_argument("similarity matrices differ in shape or disease order");
  }
  const std::size_t p = a.values.rows();
  DistanceMatrix out{a.dids, DenseMatrix(p, p)};
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) out.values(i, j) = row_distance(a.values.row(i), b.values.row(j));
  return out;
}

SanityVerdict sanity_verdict(const DistanceMatrix& d, double threshold) {
  const std::size_t p = d.values.rows();
  if (p < 2) throw std::invalid_argument("sanity verdict needs at least two shared diseases");
  double diag = 0.0;
  double off = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      (i == j ? diag : off) += d.values(i, j);
    }
  }
  SanityVerdict v;
  v.threshold = threshold;
  v.mean_diag = diag / static_cast<double>(p);
  v.mean_offdiag = off / static_cast<double>(p * (p - 1));
  if (v.mean_offdiag > 0.0) {
    v.ratio = v.mean_diag / v.mean_offdiag;
  } else {
    v.ratio = v.mean_diag == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  v.pass = v.ratio <= threshold;
  return v;
}

// ---------------------------------------------------------------------------
// Sanity check

namespace {

std::string_view control_name(SanityControl c) {
  switch (c) {
    case SanityControl::none: return "none";
    case SanityControl::identical_halves: return "identical-halves";
    case SanityControl::shuffled_labels: return "shuffled-labels";
  }
  return "unknown";
}

SimilarityMatrix permuted(const SimilarityMatrix& s, std::uint64_t seed) {
  const std::size_t p = s.values.rows();
  std::vector<std::size_t> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::shuffle(perm.begin(), perm.end(), rng);
  SimilarityMatrix out{s.dids, DenseMatrix(p, p)};
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) out.values(i, j) = s.values(perm[i], perm[j]);
  return out;
}

nlohmann::json verdict_json(const SanityVerdict& v) {
  return {{"mean_diag", v.mean_diag},
          {"mean_offdiag", v.mean_offdiag},
          {"ratio", v.ratio},
          {"threshold", v.threshold},
          {"pass", v.pass}};
}

nlohmann::json corner_json(const DistanceMatrix& d, std::size_t corner) {
  const std::size_t k = std::min(corner, d.values.rows());
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < k; ++j) row.push_back(std::round(d.values(i, j) * 1e4) / 1e4);
    rows.push_back(row);
  }
  return {{"dids", std::vector<DiseaseId>(d.dids.begin(), d.dids.begin() + static_cast<std::ptrdiff_t>(k))},
          {"values", rows}};
}

}  // namespace

nlohmann::json SanityReport::to_json(std::size_t corner) const {
  return {{"seed", seed},
          {"control", control_name(control)},
          {"triples_a", triples_a},
          {"triples_b", triples_b},
          {"single_sided_diseases", single_sided.size()},
          {"shared_diseases", full_vs_half.dids.size()},
          {"full_vs_half", {{"verdict", verdict_json(full_vs_half_verdict)}, {"corner", corner_json(full_vs_half, corner)}}},
          {"half_vs_half", {{"verdict", verdict_json(half_vs_half_verdict)}, {"corner", corner_json(half_vs_half, corner)}}},
          {"pass", pass()}};
}

SanityReport sanity_check(const Model& full, const SplitSpec& spec, SanityControl control, double threshold) {
  const auto& params = full.params();
  SanityReport report;
  report.seed = spec.seed;
  report.control = control;

  std::shared_ptr<const Corpus> corpus_a;
  std::shared_ptr<const Corpus> corpus_b;
  if (control == SanityControl::identical_halves) {
    corpus_a = std::make_shared<const Corpus>(full.corpus());
    corpus_b = std::make_shared<const Corpus>(full.corpus());
  } else {
    auto split = split_half(full.corpus(), spec);
    report.single_sided = std::move(split.single_sided);
    corpus_a = std::make_shared<const Corpus>(std::move(split.half_a));
    corpus_b = std::make_shared<const Corpus>(std::move(split.half_b));
  }
  report.triples_a = corpus_a->triples().size();
  report.triples_b = corpus_b->triples().size();

  const Model model_a = Model::train(corpus_a, params);
  const Model model_b = Model::train(corpus_b, params);
  const Model* models[] = {&full, &model_a, &model_b};
  const auto shared = shared_diseases(models);
  spdlog::debug("sanity seed {}: {} shared diseases", spec.seed, shared.size());

  const auto sim_full = similarity_matrix(full, shared);
  const auto sim_a = similarity_matrix(model_a, shared);
  auto sim_b = similarity_matrix(model_b, shared);
  if (control == SanityControl::shuffled_labels) sim_b = permuted(sim_b, spec.seed);

  report.full_vs_half = distance_matrix(sim_full, sim_a);
  report.half_vs_half = distance_matrix(sim_a, sim_b);
  report.full_vs_half_verdict = sanity_verdict(report.full_vs_half, threshold);
  report.half_vs_half_verdict = sanity_verdict(report.half_vs_half, threshold);
  return report;
}

SanityReport sanity_check(const Corpus& corpus, const SplitSpec& spec, const ModelParams& params,
                          SanityControl control, double threshold) {
  const Model full = Model::train(std::make_shared<const Corpus>(corpus), params);
  return sanity_check(full, spec, control, threshold);
}

void write_distance_csv(const DistanceMatrix& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(fmt::format("cannot write {}", path.string()));
  out << "did";
  for (DiseaseId did : d.dids) out << ',' << did;
  out << '\n';
  for (std::size_t i = 0; i < d.values.rows(); ++i) {
    out << d.dids[i];
    for (std::size_t j = 0; j < d.values.cols(); ++j) out << ',' << fmt::format("{:.6f}", d.values(i, j));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Regression

std::vector<DiseaseId> expected_by_raw_weight(const Model& model, std::span<const SymptomId> symptoms, std::size_t n) {
  const auto& corpus = model.corpus();
  std::set<std::size_t> columns;
  for (SymptomId s : symptoms) {
    auto col = corpus.symptom_index().dense(s);
    if (!col) throw QueryError("unknown_symptom", fmt::format("unknown symptom id: {}", s), {s});
    columns.insert(*col);
  }
  const auto& csr = model.raw_matrix().csr();
  std::vector<std::pair<double, std::size_t>> sums;
  for (std::size_t i = 0; i < csr.rows; ++i) {
    double sum = 0.0;
    for (std::size_t col : columns) sum += csr.at(i, col);
    if (sum > 0.0) sums.emplace_back(sum, i);
  }
  std::sort(sums.begin(), sums.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<DiseaseId> out;
  for (std::size_t k = 0; k < sums.size() && k < n; ++k) out.push_back(corpus.disease_at(sums[k].second).did);
  return out;
}

std::vector<std::vector<SymptomId>> sample_queries(const Corpus& corpus, const RegressionOptions& options) {
  if (options.samples == 0) throw std::invalid_argument("regression sample is empty");
  if (options.min_symptoms == 0 || options.max_symptoms < options.min_symptoms) {
    throw std::invalid_argument("invalid query size range");
  }
  const auto matrix = build_matrix(corpus);
  const auto& csr = matrix.csr();
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < csr.rows; ++i) {
    if (csr.row_cols(i).size() >= options.min_symptoms) candidates.push_back(i);
  }
  if (candidates.empty()) throw std::invalid_argument("no disease has enough symptoms to sample a query");

  std::mt19937_64 rng(options.seed);
  std::vector<std::vector<SymptomId>> queries;
  for (std::size_t q = 0; q < options.samples; ++q) {
    const std::size_t row = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
    auto cols = csr.row_cols(row);
    std::vector<std::uint32_t> pool(cols.begin(), cols.end());
    const std::size_t hi = std::min(options.max_symptoms, pool.size());
    const std::size_t k = std::uniform_int_distribution<std::size_t>(options.min_symptoms, hi)(rng);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<SymptomId> query;
    for (std::size_t t = 0; t < k; ++t) query.push_back(corpus.symptom_at(pool[t]).syd);
    std::sort(query.begin(), query.end());
    queries.push_back(std::move(query));
  }
  return queries;
}

RegressionReport regression_check(const Model& model, std::span<const std::vector<SymptomId>> queries, std::size_t n) {
  if (n == 0) throw std::invalid_argument("regression n must be at least 1");
  if (queries.empty()) throw std::invalid_argument("regression sample is empty");
  RegressionReport report;
  report.n = n;
  std::size_t total = 0;
  for (const auto& symptoms : queries) {
    RegressionQuery rq;
    rq.symptoms = symptoms;
    for (const auto& r : recommend(Query{symptoms, n}, model).results) rq.predicted.push_back(r.did);
    rq.expected = expected_by_raw_weight(model, symptoms, n);
    for (DiseaseId did : rq.predicted) {
      if (std::find(rq.expected.begin(), rq.expected.end(), did) != rq.expected.end()) ++rq.hits;
    }
    total += rq.hits;
    report.queries.push_back(std::move(rq));
  }
  report.mean_hits = static_cast<double>(total) / static_cast<double>(queries.size());
  report.hit_rate = report.mean_hits / static_cast<double>(n);
  return report;
}

RegressionReport regression_check(const Model& model, const RegressionOptions& options) {
  const auto queries = sample_queries(model.corpus(), options);
  return regression_check(model, queries, options.n);
}

nlohmann::json RegressionReport::to_json() const {
  auto items = nlohmann::json::array();
  for (const auto& q : queries) {
    items.push_back({{"symptoms", q.symptoms}, {"predicted", q.predicted}, {"expected", q.expected}, {"hits", q.hits}});
  }
  return {{"n", n}, {"queries", items}, {"mean_hits", mean_hits}, {"hit_rate", hit_rate}};
}

}  // namespace medrec
