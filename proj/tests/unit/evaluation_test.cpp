#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "medrec/evaluation.hpp"
#include "medrec/recommender.hpp"
#include "oracles.hpp"

using namespace medrec;

namespace {

ModelParams params_with(std::size_t rank, Scheme scheme = Scheme::bm25) {
  ModelParams p;
  p.weighting.scheme = scheme;
  p.svd.rank = rank;
  return p;
}

Model train(const Corpus& corpus, const ModelParams& p) {
  return Model::train(std::make_shared<const Corpus>(corpus), p);
}

std::map<DiseaseId, std::size_t> triples_per_disease(const Corpus& c) {
  std::map<DiseaseId, std::size_t> out;
  for (const auto& t : c.triples()) ++out[t.did];
  return out;
}

SimilarityMatrix sim(std::vector<std::vector<double>> rows) {
  SimilarityMatrix s;
  for (std::size_t i = 0; i < rows.size(); ++i) s.dids.push_back(static_cast<DiseaseId>(i + 1));
  s.values = DenseMatrix(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) s.values(i, j) = rows[i][j];
  return s;
}

}  // namespace

TEST(SplitHalf, AlternatesWithinDiseases) {
  const Corpus c({{1, "a"}, {2, "b"}, {3, "c"}, {4, "d"}}, {{10, "four"}, {20, "one"}, {30, "three"}},
                 {{1, 10, 1}, {2, 10, 2}, {3, 10, 3}, {4, 10, 4}, {1, 20, 5}, {1, 30, 1}, {2, 30, 1}, {3, 30, 1}},
                 {{10, "four", "rest"}});
  const auto split = split_half(c, {42});
  const auto a = triples_per_disease(split.half_a), b = triples_per_disease(split.half_b);
  EXPECT_EQ(a.at(10), 2u);
  EXPECT_EQ(b.at(10), 2u);
  EXPECT_EQ(a.count(20) + b.count(20), 1u);
  EXPECT_EQ(split.single_sided, std::vector<DiseaseId>{20});
  EXPECT_EQ(split.odd_diseases, 2u);
  // The two odd diseases place their extra triple on opposite sides.
  EXPECT_EQ(split.half_a.triples().size(), 4u);
  EXPECT_EQ(split.half_b.triples().size(), 4u);
  EXPECT_EQ(split.half_a.symptoms().size(), 4u);
  EXPECT_EQ(split.half_b.diseases().size(), 3u);
  EXPECT_EQ(split.half_b.remedies().size(), 1u);
}

TEST(SplitHalf, PartitionsAndBalances) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = medrec::testing::random_corpus(rng, 5 + rng() % 30, 5 + rng() % 20, 0.3);
    const auto counts = triples_per_disease(c);
    if (std::none_of(counts.begin(), counts.end(), [](const auto& e) { return e.second >= 2; })) continue;
    const auto split = split_half(c, {static_cast<std::uint64_t>(trial)});
    std::multiset<std::tuple<SymptomId, DiseaseId, double>> all, parts;
    for (const auto& t : c.triples()) all.insert({t.syd, t.did, t.wei});
    for (const auto* half : {&split.half_a, &split.half_b})
      for (const auto& t : half->triples()) parts.insert({t.syd, t.did, t.wei});
    EXPECT_EQ(all, parts);

    std::size_t odd = 0;
    for (const auto& [did, k] : counts) odd += k % 2;
    EXPECT_EQ(split.odd_diseases, odd);
    const auto na = static_cast<long>(split.half_a.triples().size());
    const auto nb = static_cast<long>(split.half_b.triples().size());
    EXPECT_LE(std::abs(na - nb), static_cast<long>(odd));
    EXPECT_LE(std::abs(na - nb), 1);

    const auto a = triples_per_disease(split.half_a), b = triples_per_disease(split.half_b);
    for (const auto& [did, k] : counts) {
      const std::size_t ka = a.count(did) ? a.at(did) : 0, kb = b.count(did) ? b.at(did) : 0;
      EXPECT_LE(std::max(ka, kb) - std::min(ka, kb), 1u);
      if (k >= 2) EXPECT_TRUE(ka > 0 && kb > 0);
    }

    const auto again = split_half(c, {static_cast<std::uint64_t>(trial)});
    EXPECT_TRUE(again.half_a == split.half_a);
    EXPECT_TRUE(again.half_b == split.half_b);
  }
}

TEST(SplitHalf, SeedChangesSplit) {
  const auto c = medrec::testing::synthetic_corpus(60, 40, 4, 2);
  EXPECT_FALSE(split_half(c, {1}).half_a == split_half(c, {2}).half_a);
}

TEST(SplitHalf, DegenerateCorpus) {
  const Corpus c({{1, "a"}, {2, "b"}}, {{10, "x"}, {20, "y"}}, {{1, 10, 1}, {2, 20, 1}}, {});
  EXPECT_THROW(split_half(c, {0}), std::invalid_argument);
}

TEST(DistanceMatrix, HandOracle) {
  const double h = 1.0 / std::sqrt(2.0);
  const auto d = distance_matrix(sim({{1, 0}, {0, 1}}), sim({{h, h}, {h, h}}));
  // |(1,0) - (h,h)| = sqrt((1 - h)^2 + h^2) = sqrt(2 - sqrt 2), and likewise for every entry.
  const double want = std::sqrt(2.0 - std::sqrt(2.0));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(d.values(i, j), want, 1e-15);
  EXPECT_NEAR(want, 0.765367, 1e-6);
  const auto v = sanity_verdict(d);
  EXPECT_NEAR(v.ratio, 1.0, 1e-15);
  EXPECT_FALSE(v.pass);
}

TEST(DistanceMatrix, IdenticalInputsGiveExactZeroDiagonal) {
  const auto a = sim({{1, 0.3, -0.2}, {0.3, 1, 0.5}, {-0.2, 0.5, 1}});
  const auto d = distance_matrix(a, a);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(d.values(i, i), 0.0);
  const auto v = sanity_verdict(d);
  EXPECT_EQ(v.mean_diag, 0.0);
  EXPECT_EQ(v.ratio, 0.0);
  EXPECT_TRUE(v.pass);
}

TEST(DistanceMatrix, TriangleBoundAndShapeErrors) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t p = 2 + rng() % 8;
    std::vector<std::vector<double>> ra(p, std::vector<double>(p)), rb = ra;
    for (auto& r : ra) for (auto& x : r) x = u(rng);
    for (auto& r : rb) for (auto& x : r) x = u(rng);
    const auto a = sim(ra), b = sim(rb);
    const auto d = distance_matrix(a, b);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        EXPECT_GE(d.values(i, j), 0.0);
        EXPECT_LE(d.values(i, j), norm2(a.values.row(i)) + norm2(b.values.row(j)) + 1e-12);
      }
    }
  }
  EXPECT_THROW(distance_matrix(sim({{1, 0}, {0, 1}}), sim({{1}})), std::invalid_argument);
  auto reordered = sim({{1, 0}, {0, 1}});
  std::swap(reordered.dids[0], reordered.dids[1]);
  EXPECT_THROW(distance_matrix(sim({{1, 0}, {0, 1}}), reordered), std::invalid_argument);
  EXPECT_THROW(sanity_verdict(distance_matrix(sim({{1}}), sim({{1}}))), std::invalid_argument);
}

TEST(SimilarityMatrix, SymmetricWithUnitDiagonal) {
  const auto model = train(medrec::testing::synthetic_corpus(50, 40, 5, 3), params_with(12));
  const Model* models[] = {&model};
  const auto dids = shared_diseases(models);
  const auto s = similarity_matrix(model, dids);
  for (std::size_t i = 0; i < dids.size(); ++i) {
    EXPECT_NEAR(s.values(i, i), 1.0, 1e-9);
    for (std::size_t j = 0; j < dids.size(); ++j) EXPECT_NEAR(s.values(i, j), s.values(j, i), 1e-9);
  }
  const std::vector<DiseaseId> unknown{424242};
  EXPECT_THROW(similarity_matrix(model, unknown), std::invalid_argument);
}

TEST(SanityCheck, ControlsAndDefault) {
  const auto corpus = medrec::testing::synthetic_corpus(150, 80, 6, 4);
  const auto full = train(corpus, params_with(20));

  const auto identical = sanity_check(full, {7}, SanityControl::identical_halves);
  for (const auto* d : {&identical.full_vs_half, &identical.half_vs_half})
    for (std::size_t i = 0; i < d->dids.size(); ++i) EXPECT_EQ(d->values(i, i), 0.0);
  EXPECT_EQ(identical.full_vs_half_verdict.ratio, 0.0);
  EXPECT_TRUE(identical.pass());

  const auto shuffled = sanity_check(full, {7}, SanityControl::shuffled_labels);
  EXPECT_FALSE(shuffled.half_vs_half_verdict.pass);

  const auto real = sanity_check(full, {7});
  EXPECT_LT(real.half_vs_half_verdict.mean_diag, real.half_vs_half_verdict.mean_offdiag);
  EXPECT_LT(real.full_vs_half_verdict.ratio, real.half_vs_half_verdict.ratio);
  EXPECT_LT(real.half_vs_half_verdict.ratio, shuffled.half_vs_half_verdict.ratio);
  EXPECT_EQ(real.triples_a + real.triples_b, corpus.triples().size());
  EXPECT_EQ(sanity_check(full, {7}).to_json().dump(), real.to_json().dump());

  const auto j = real.to_json(3);
  EXPECT_EQ(j["full_vs_half"]["corner"]["values"].size(), 3u);
  EXPECT_EQ(j["full_vs_half"]["corner"]["values"][0].size(), 3u);
  EXPECT_EQ(j["control"], "none");
  EXPECT_EQ(j["pass"], real.pass());
}

TEST(SanityCheck, DistanceCsv) {
  const auto d = distance_matrix(sim({{1, 0}, {0, 1}}), sim({{1, 0}, {0, 1}}));
  medrec::testing::TempDir dir;
  write_distance_csv(d, dir.path() / "d.csv");
  std::ifstream in(dir.path() / "d.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "did,1,2");
  EXPECT_EQ(first, "1,0.000000,1.414214");
}

TEST(Regression, BlockCorpusHitsEverything) {
  // Five diseases with disjoint symptom blocks: every query has one unambiguous answer.
  std::vector<SymptomRecord> symptoms;
  std::vector<DiseaseRecord> diseases;
  std::vector<WeightTriple> triples;
  for (int d = 0; d < 5; ++d) {
    diseases.push_back({100 + d, "disease " + std::to_string(d)});
    for (int k = 0; k < 3; ++k) {
      const SymptomId s = 10 * d + k + 1;
      symptoms.push_back({s, "symptom " + std::to_string(s)});
      triples.push_back({s, 100 + d, static_cast<double>(k + 1)});
    }
  }
  const auto model = train(Corpus(symptoms, diseases, triples, {}), params_with(5, Scheme::raw));
  RegressionOptions opts;
  opts.n = 1;
  opts.samples = 30;
  const auto report = regression_check(model, opts);
  EXPECT_EQ(report.queries.size(), 30u);
  EXPECT_DOUBLE_EQ(report.hit_rate, 1.0);
  EXPECT_DOUBLE_EQ(report.mean_hits, 1.0);
  EXPECT_EQ(report.to_json()["hit_rate"], 1.0);
}

TEST(Regression, Errors) {
  const auto model = train(medrec::testing::synthetic_corpus(20, 30, 2, 5), params_with(5));
  RegressionOptions opts;
  opts.n = 0;
  EXPECT_THROW(regression_check(model, opts), std::invalid_argument);
  opts = {};
  opts.samples = 0;
  EXPECT_THROW(regression_check(model, opts), std::invalid_argument);
  const std::vector<std::vector<SymptomId>> none;
  EXPECT_THROW(regression_check(model, none, 4), std::invalid_argument);
}

TEST(Regression, SampledQueriesComeFromOneDisease) {
  const auto corpus = medrec::testing::synthetic_corpus(40, 50, 4, 6);
  RegressionOptions opts;
  opts.samples = 50;
  opts.seed = 3;
  const auto queries = sample_queries(corpus, opts);
  EXPECT_EQ(queries, sample_queries(corpus, opts));
  std::map<DiseaseId, std::set<SymptomId>> by_disease;
  for (const auto& t : corpus.triples()) by_disease[t.did].insert(t.syd);
  for (const auto& q : queries) {
    EXPECT_GE(q.size(), 2u);
    EXPECT_LE(q.size(), 3u);
    EXPECT_EQ(std::set<SymptomId>(q.begin(), q.end()).size(), q.size());
    const bool one_disease = std::any_of(by_disease.begin(), by_disease.end(), [&](const auto& e) {
      return std::all_of(q.begin(), q.end(), [&](SymptomId s) { return e.second.count(s) > 0; });
    });
    EXPECT_TRUE(one_disease);
  }
}

TEST(Regression, MatchesBruteForceExpectedSets) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 15; ++trial) {
    const auto c = medrec::testing::random_corpus(rng, 5 + rng() % 16, 6 + rng() % 10, 0.35);
    const auto model = train(c, params_with(std::min<std::size_t>(4, c.diseases().size()), Scheme::raw));
    RegressionOptions opts;
    opts.samples = 10;
    opts.seed = static_cast<std::uint64_t>(trial);
    std::vector<std::vector<SymptomId>> queries;
    try {
      queries = sample_queries(c, opts);
    } catch (const std::invalid_argument&) {
      continue;  // no disease with two symptoms
    }
    std::vector<std::vector<SymptomId>> usable;
    for (const auto& q : queries) {
      try {
        recommend({q, 4}, model);
        usable.push_back(q);
      } catch (const QueryError&) {
      }
    }
    if (usable.empty()) continue;
    const auto report = regression_check(model, usable, 4);
    double total = 0;
    for (const auto& rq : report.queries) {
      const auto want = medrec::testing::brute_force_expected(c, rq.symptoms, 4);
      EXPECT_EQ(rq.expected, want);
      std::size_t hits = 0;
      for (DiseaseId d : rq.predicted) hits += std::count(want.begin(), want.end(), d);
      EXPECT_EQ(rq.hits, hits);
      EXPECT_LE(rq.hits, 4u);
      total += static_cast<double>(hits);
    }
    EXPECT_NEAR(report.mean_hits, total / static_cast<double>(report.queries.size()), 1e-12);
    EXPECT_NEAR(report.hit_rate, report.mean_hits / 4.0, 1e-12);
  }
}
