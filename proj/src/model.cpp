#include "medrec/model.hpp"

#include <chrono>
#include <fstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "medrec/hash.hpp"

namespace medrec {

namespace {

std::vector<bool> eligibility(const Factorization& f, const DenseMatrix& latents) {
  const double floor = f.s.empty() ? 0.0 : kZeroLatentTolerance * f.s.front();
  std::vector<bool> out(latents.rows());
  for (std::size_t i = 0; i < latents.rows(); ++i) out[i] = !f.zero_rows[i] && norm2(latents.row(i)) > floor;
  return out;
}

}  // namespace

std::string model_hash(const std::string& corpus_hash, const ModelParams& params) {
  return sha256_hex(fmt::format("{}|{}|{}|{}|{}|{}|{}|{}|{}|{}", corpus_hash, to_string(params.weighting.scheme),
                                params.weighting.bm25.k1, params.weighting.bm25.b, params.weighting.bm25.idf_floor,
                                params.svd.rank, to_string(params.svd.method), params.svd.seed,
                                params.svd.oversampling, params.svd.power_iterations));
}

Model::Model(std::shared_ptr<const Corpus> corpus, const ModelParams& params, SparseWeightMatrix raw,
             Factorization factorization)
    : corpus_(std::move(corpus)),
      params_(params),
      raw_(std::move(raw)),
      factorization_(std::move(factorization)),
      latents_(disease_latents(factorization_)),
      eligible_(eligibility(factorization_, latents_)),
      model_hash_(medrec::model_hash(corpus_->content_hash(), params_)) {
  excluded_ = static_cast<std::size_t>(std::count(eligible_.begin(), eligible_.end(), false));
}

Model Model::train(std::shared_ptr<const Corpus> corpus, const ModelParams& params) {
  auto raw = build_matrix(*corpus);
  auto weighted = apply_weighting(raw, params.weighting);
  auto factorization = truncated_svd(weighted, params.svd);
  spdlog::debug("trained {}x{} model, rank {}, scheme {}", raw.rows(), raw.cols(), params.svd.rank,
                to_string(params.weighting.scheme));
  return Model(std::move(corpus), params, std::move(raw), std::move(factorization));
}

Model Model::assemble(std::shared_ptr<const Corpus> corpus, const ModelParams& params, Factorization factorization,
                      const std::string& expected_corpus_hash) {
  if (corpus->content_hash() != expected_corpus_hash) {
    throw std::invalid_argument(fmt::format("model was built from corpus {} but the loaded corpus is {}",
                                            expected_corpus_hash, corpus->content_hash()));
  }
  auto raw = build_matrix(*corpus);
  if (factorization.rows() != raw.rows() || factorization.cols() != raw.cols() ||
      factorization.zero_rows.size() != raw.rows()) {
    throw std::invalid_argument("stored factorization shape does not match the corpus");
  }
  return Model(std::move(corpus), params, std::move(raw), std::move(factorization));
}

// ---------------------------------------------------------------------------
// Model files

namespace {

nlohmann::json matrix_json(const DenseMatrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return rows;
}

DenseMatrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows) throw DatasetError("model file: matrix row count mismatch");
  DenseMatrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || row.size() != cols) throw DatasetError("model file: matrix column count mismatch");
    for (std::size_t k = 0; k < cols; ++k) out(i, k) = row[k].get<double>();
  }
  return out;
}

}  // namespace

nlohmann::json model_to_json(const Model& model, const std::string& built_at) {
  const auto& f = model.factorization();
  const auto& p = model.params();
  std::vector<std::size_t> zero_rows;
  for (std::size_t i = 0; i < f.zero_rows.size(); ++i) {
    if (f.zero_rows[i]) zero_rows.push_back(i);
  }
  nlohmann::json header = {{"schema_version", kModelSchemaVersion},
                           {"m", f.rows()},
                           {"n", f.cols()},
                           {"r", f.rank()},
                           {"scheme", to_string(p.weighting.scheme)},
                           {"k1", p.weighting.bm25.k1},
                           {"b", p.weighting.bm25.b},
                           {"idf_floor", p.weighting.bm25.idf_floor},
                           {"svd_method", to_string(p.svd.method)},
                           {"seed", p.svd.seed},
                           {"oversampling", p.svd.oversampling},
                           {"power_iterations", p.svd.power_iterations},
                           {"corpus_hash", model.corpus_hash()},
                           {"model_hash", model.model_hash()},
                           {"built_at", built_at}};
  return {{"format", "medrec-model"},
          {"header", header},
          {"s", f.s},
          {"u", matrix_json(f.u)},
          {"v", matrix_json(f.v)},
          {"zero_rows", zero_rows}};
}

void save_model(const Model& model, const std::filesystem::path& path, const std::string& built_at) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(fmt::format("cannot write model file {}", path.string()));
  out << model_to_json(model, built_at).dump() << '\n';
}

StoredModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(fmt::format("cannot open model file {}", path.string()));
  StoredModel stored;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format") != "medrec-model") throw DatasetError("not a medrec model file");
    const auto& h = j.at("header");
    auto& header = stored.header;
    header.schema_version = h.at("schema_version").get<int>();
    if (header.schema_version != kModelSchemaVersion) {
      throw DatasetError(fmt::format("unsupported model schema version {}", header.schema_version));
    }
    header.m = h.at("m").get<std::size_t>();
    header.n = h.at("n").get<std::size_t>();
    header.r = h.at("r").get<std::size_t>();
    header.params.weighting.scheme = parse_scheme(h.at("scheme").get<std::string>());
    header.params.weighting.bm25.k1 = h.at("k1").get<double>();
    header.params.weighting.bm25.b = h.at("b").get<double>();
    header.params.weighting.bm25.idf_floor = h.at("idf_floor").get<bool>();
    header.params.svd.rank = header.r;
    header.params.svd.method = parse_svd_method(h.at("svd_method").get<std::string>());
    header.params.svd.seed = h.at("seed").get<std::uint64_t>();
    header.params.svd.oversampling = h.at("oversampling").get<std::size_t>();
    header.params.svd.power_iterations = h.at("power_iterations").get<std::size_t>();
    header.corpus_hash = h.at("corpus_hash").get<std::string>();
    header.model_hash = h.at("model_hash").get<std::string>();
    header.built_at = h.at("built_at").get<std::string>();

    auto& f = stored.factorization;
    f.s = j.at("s").get<std::vector<double>>();
    if (f.s.size() != header.r) throw DatasetError("model file: singular value count mismatch");
    f.u = matrix_from_json(j.at("u"), header.m, header.r);
    f.v = matrix_from_json(j.at("v"), header.r, header.n);
    f.zero_rows.assign(header.m, false);
    for (auto i : j.at("zero_rows").get<std::vector<std::size_t>>()) f.zero_rows.at(i) = true;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(fmt::format("malformed model file {}: {}", path.string(), e.what()));
  } catch (const std::invalid_argument& e) {
    throw DatasetError(fmt::format("malformed model file {}: {}", path.string(), e.what()));
  }
  return stored;
}

Model load_model(const std::filesystem::path& path, std::shared_ptr<const Corpus> corpus) {
  auto stored = read_model(path);
  auto model = Model::assemble(std::move(corpus), stored.header.params, std::move(stored.factorization),
                               stored.header.corpus_hash);
  if (model.model_hash() != stored.header.model_hash) {
    throw DatasetError(fmt::format("model file {}: header hash does not match its parameters", path.string()));
  }
  return model;
}

std::string utc_timestamp() {
  const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

}  // namespace medrec
