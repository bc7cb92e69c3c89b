#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "medrec/model.hpp"
#include "medrec/recommender.hpp"

using namespace medrec;
using medrec::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModelParams small_params() {
  ModelParams p;
  p.svd.rank = 8;
  return p;
}

}  // namespace

TEST(ModelFile, RoundTripIsExact) {
  auto corpus = std::make_shared<const Corpus>(medrec::testing::synthetic_corpus(30, 20, 3, 4));
  const auto model = Model::train(corpus, small_params());
  TempDir dir;
  const auto path = dir.path() / "m.json";
  save_model(model, path, "2026-01-01T00:00:00Z");
  const auto loaded = load_model(path, corpus);
  EXPECT_TRUE(loaded.factorization().u == model.factorization().u);
  EXPECT_EQ(loaded.factorization().s, model.factorization().s);
  EXPECT_TRUE(loaded.factorization().v == model.factorization().v);
  EXPECT_EQ(loaded.model_hash(), model.model_hash());
  const Query q{{corpus->symptoms()[0].syd, corpus->symptoms()[5].syd}, 6};
  EXPECT_EQ(to_json(recommend(q, loaded)).dump(), to_json(recommend(q, model)).dump());

  const auto header = read_model(path).header;
  EXPECT_EQ(header.m, 30u);
  EXPECT_EQ(header.n, 20u);
  EXPECT_EQ(header.r, 8u);
  EXPECT_EQ(header.corpus_hash, corpus->content_hash());
  EXPECT_EQ(header.built_at, "2026-01-01T00:00:00Z");
}

TEST(ModelFile, ByteIdenticalForIdenticalBuilds) {
  auto corpus = std::make_shared<const Corpus>(medrec::testing::synthetic_corpus(30, 20, 3, 4));
  TempDir dir;
  save_model(Model::train(corpus, small_params()), dir.path() / "a.json", "t");
  save_model(Model::train(corpus, small_params()), dir.path() / "b.json", "t");
  EXPECT_EQ(slurp(dir.path() / "a.json"), slurp(dir.path() / "b.json"));
}

TEST(ModelFile, CorpusMismatchRejected) {
  auto corpus = std::make_shared<const Corpus>(medrec::testing::synthetic_corpus(30, 20, 3, 4));
  auto other = std::make_shared<const Corpus>(medrec::testing::synthetic_corpus(30, 20, 3, 5));
  TempDir dir;
  save_model(Model::train(corpus, small_params()), dir.path() / "m.json", "t");
  EXPECT_THROW(load_model(dir.path() / "m.json", other), std::invalid_argument);
}

TEST(ModelFile, MalformedFilesRejected) {
  auto corpus = std::make_shared<const Corpus>(medrec::testing::synthetic_corpus(30, 20, 3, 4));
  TempDir dir;
  EXPECT_THROW(read_model(dir.path() / "absent.json"), DatasetError);
  medrec::testing::write_text(dir.path() / "junk.json", "{not json");
  EXPECT_THROW(read_model(dir.path() / "junk.json"), DatasetError);

  const auto path = dir.path() / "m.json";
  save_model(Model::train(corpus, small_params()), path, "t");
  auto j = nlohmann::json::parse(slurp(path));
  j["header"]["schema_version"] = 99;
  medrec::testing::write_text(path, j.dump());
  EXPECT_THROW(read_model(path), DatasetError);

  j["header"]["schema_version"] = kModelSchemaVersion;
  j["s"].erase(0);
  medrec::testing::write_text(path, j.dump());
  EXPECT_THROW(read_model(path), DatasetError);

  j = nlohmann::json::parse(slurp(path));
  j["header"]["k1"] = 2.0;  // header no longer matches its digest
  j["s"].push_back(0.0);
  medrec::testing::write_text(path, j.dump());
  EXPECT_THROW(load_model(path, corpus), DatasetError);
}

TEST(ModelHash, DependsOnEveryParameter) {
  const std::string h = "abc";
  const auto base = model_hash(h, ModelParams{});
  auto p = ModelParams{};
  p.weighting.bm25.k1 = 1.3;
  EXPECT_NE(model_hash(h, p), base);
  p = {};
  p.weighting.scheme = Scheme::tfidf;
  EXPECT_NE(model_hash(h, p), base);
  p = {};
  p.svd.rank = 49;
  EXPECT_NE(model_hash(h, p), base);
  p = {};
  p.weighting.bm25.idf_floor = true;
  EXPECT_NE(model_hash(h, p), base);
  EXPECT_NE(model_hash("abd", ModelParams{}), base);
  EXPECT_EQ(model_hash(h, ModelParams{}), base);
}

TEST(ModelTrain, RankOutOfRange) {
  auto corpus = std::make_shared<const Corpus>(medrec::testing::synthetic_corpus(10, 6, 2, 4));
  ModelParams p;
  p.svd.rank = 7;
  EXPECT_THROW(Model::train(corpus, p), std::invalid_argument);
}
