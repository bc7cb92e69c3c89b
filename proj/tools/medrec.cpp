// medrec: build, query, evaluate and serve the symptom-to-remedy recommender.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <httplib.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "medrec/evaluation.hpp"
#include "medrec/model.hpp"
#include "medrec/recommender.hpp"
#include "medrec/service.hpp"

namespace fs = std::filesystem;
using namespace medrec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerdict = 2;

struct Options {
  std::string data_dir;
  std::string symptoms_file, diseases_file, weights_file, remedies_file;
  std::string scheme = "bm25";
  double k1 = 1.2;
  double b = 0.75;
  bool idf_floor = false;
  std::size_t rank = 50;
  std::string svd = "jacobi";
  std::uint64_t seed = 0;
  bool json = false;
  bool verbose = false;

  std::string model_path;
  std::string cleaning_report;

  std::string symptoms;
  std::size_t n = 4;
  std::string rank_by = "cosine";

  std::string control = "none";
  double threshold = kSanityThreshold;
  std::string report_path;
  std::string dump_dir;

  std::size_t samples = 100;
  double min_mean_hits = 3.0;

  std::string host = "127.0.0.1";
  int port = 8080;
  bool build_on_start = false;
};

std::string default_data_dir() {
  if (const char* env = std::getenv("MEDREC_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return MEDREC_DEFAULT_DATA_DIR;
}

DatasetPaths dataset_paths(const Options& o) {
  auto paths = DatasetPaths::in_directory(o.data_dir);
  if (!o.symptoms_file.empty()) paths.symptoms = o.symptoms_file;
  if (!o.diseases_file.empty()) paths.diseases = o.diseases_file;
  if (!o.weights_file.empty()) paths.weights = o.weights_file;
  if (!o.remedies_file.empty()) paths.remedies = o.remedies_file;
  return paths;
}

ModelParams model_params(const Options& o) {
  ModelParams p;
  p.weighting.scheme = parse_scheme(o.scheme);
  p.weighting.bm25 = {o.k1, o.b, o.idf_floor};
  p.weighting.bm25.validate();
  p.svd.rank = o.rank;
  p.svd.method = parse_svd_method(o.svd);
  p.svd.seed = o.seed;
  return p;
}

std::vector<SymptomId> parse_symptom_list(const std::string& text) {
  std::vector<SymptomId> ids;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    std::string token = text.substr(start, end - start);
    token.erase(0, token.find_first_not_of(" \t"));
    token.erase(token.find_last_not_of(" \t") + 1);
    SymptomId id = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), id);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw CLI::ValidationError("--symptoms", "expected a comma-separated list of symptom ids");
    }
    ids.push_back(id);
    start = end + 1;
  }
  return ids;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty()) return;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(fmt::format("cannot write {}", path));
  out << j.dump(2) << '\n';
}

std::shared_ptr<const Corpus> load_corpus(const Options& o) {
  return std::make_shared<const Corpus>(load_dataset(dataset_paths(o)));
}

Model obtain_model(const Options& o) {
  const auto params = model_params(o);
  auto corpus = load_corpus(o);
  if (!o.model_path.empty()) return load_model(o.model_path, std::move(corpus));
  return Model::train(std::move(corpus), params);
}

int run_build(const Options& o) {
  const auto params = model_params(o);
  auto corpus = load_corpus(o);
  write_json(corpus->report().to_json(), o.cleaning_report);
  const Model model = Model::train(corpus, params);
  const std::string path = o.model_path.empty() ? "model.json" : o.model_path;
  save_model(model, path, utc_timestamp());
  const auto& f = model.factorization();
  if (o.json) {
    std::cout << nlohmann::json{{"model", path},
                                {"m", f.rows()},
                                {"n", f.cols()},
                                {"r", f.rank()},
                                {"nnz", model.raw_matrix().nnz()},
                                {"excluded_diseases", model.excluded_count()},
                                {"corpus_hash", model.corpus_hash()},
                                {"model_hash", model.model_hash()}}
                     .dump(2)
              << '\n';
  } else {
    fmt::print("model      {}\n", path);
    fmt::print("diseases   {}\nsymptoms   {}\ntriples    {} ({} distinct pairs, density {:.4f})\n", f.rows(),
               f.cols(), corpus->triples().size(), model.raw_matrix().nnz(), model.raw_matrix().density());
    fmt::print("scheme     {}  rank {}\n", to_string(params.weighting.scheme), f.rank());
    fmt::print("excluded   {} diseases with no symptom weight\n", model.excluded_count());
    fmt::print("corpus     {}\n", model.corpus_hash());
  }
  return kExitOk;
}

int run_recommend(const Options& o, const std::vector<SymptomId>& ids) {
  const auto rank_by = parse_rank_by(o.rank_by);
  const Model model = obtain_model(o);
  const auto response = recommend(Query{ids, o.n}, model, rank_by);
  if (o.json) {
    std::cout << to_json(response).dump(2) << '\n';
    return kExitOk;
  }
  const auto& corpus = model.corpus();
  fmt::print("Symptoms:");
  for (SymptomId id : ids) fmt::print(" {}: {};", id, corpus.symptom_at(*corpus.symptom_index().dense(id)).name);
  fmt::print("\n\n{:<4} {:<40} {:>9}  {}\n", "#", "Disease", "Score", "Treatment");
  std::size_t rank = 1;
  for (const auto& r : response.results) {
    const std::string treatment = r.has_treatment() ? fmt::format("{}", fmt::join(r.remedies, " | "))
                                                    : std::string("(no recorded treatment)");
    fmt::print("{:<4} {:<40} {:>9.6f}  {}\n", rank++, r.disease, r.score, treatment);
  }
  return kExitOk;
}

SanityControl parse_control(const std::string& name) {
  if (name == "identical") return SanityControl::identical_halves;
  if (name == "shuffled") return SanityControl::shuffled_labels;
  return SanityControl::none;
}

int run_sanity(const Options& o) {
  const auto params = model_params(o);
  const Model full = Model::train(load_corpus(o), params);
  const auto report = sanity_check(full, SplitSpec{o.seed}, parse_control(o.control), o.threshold);
  write_json(report.to_json(), o.report_path);
  if (!o.dump_dir.empty()) {
    fs::create_directories(o.dump_dir);
    write_distance_csv(report.full_vs_half, fs::path(o.dump_dir) / "full_vs_half.csv");
    write_distance_csv(report.half_vs_half, fs::path(o.dump_dir) / "half_vs_half.csv");
  }
  if (o.json) {
    std::cout << report.to_json().dump(2) << '\n';
  } else {
    auto line = [](const char* name, const SanityVerdict& v) {
      fmt::print("{:<14} mean diag {:.4f}  mean off-diag {:.4f}  ratio {:.4f}  {}\n", name, v.mean_diag,
                 v.mean_offdiag, v.ratio, v.pass ? "PASS" : "FAIL");
    };
    fmt::print("seed {}  control {}  shared diseases {}  triples {} / {}\n", o.seed, o.control,
               report.full_vs_half.dids.size(), report.triples_a, report.triples_b);
    line("full vs half", report.full_vs_half_verdict);
    line("half vs half", report.half_vs_half_verdict);
    fmt::print("threshold {:.2f}: {}\n", o.threshold, report.pass() ? "PASS" : "FAIL");
  }
  return report.pass() ? kExitOk : kExitVerdict;
}

int run_regress(const Options& o) {
  const Model model = obtain_model(o);
  RegressionOptions ro;
  ro.samples = o.samples;
  ro.n = o.n;
  ro.seed = o.seed;
  const auto report = regression_check(model, ro);
  const bool pass = report.mean_hits >= o.min_mean_hits;
  auto j = report.to_json();
  j["min_mean_hits"] = o.min_mean_hits;
  j["pass"] = pass;
  write_json(j, o.report_path);
  if (o.json) {
    std::cout << j.dump(2) << '\n';
  } else {
    fmt::print("queries {}  n {}  mean hits {:.3f}/{}  hit rate {:.3f}  {}\n", report.queries.size(), report.n,
               report.mean_hits, report.n, report.hit_rate, pass ? "PASS" : "FAIL");
  }
  return pass ? kExitOk : kExitVerdict;
}

int run_serve(const Options& o) {
  ModelHandle handle;
  if (!o.model_path.empty() && fs::exists(o.model_path)) {
    auto stored = read_model(o.model_path);
    handle.swap(std::make_shared<const Model>(load_model(o.model_path, load_corpus(o))), stored.header.built_at);
  } else if (o.build_on_start) {
    handle.swap(std::make_shared<const Model>(Model::train(load_corpus(o), model_params(o))), utc_timestamp());
  } else {
    spdlog::warn("no model loaded; /health reports \"empty\" until one is supplied");
  }
  const Api api(handle);
  httplib::Server server;
  register_routes(server, api);
  spdlog::info("listening on http://{}:{}", o.host, o.port);
  if (!server.listen(o.host, o.port)) {
    spdlog::error("cannot bind {}:{}", o.host, o.port);
    return kExitUsage;
  }
  return kExitOk;
}

void add_dataset_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--data-dir", o.data_dir, "Directory holding sym_t.csv, dia_t.csv, diffsydiw.csv, prec_t.csv")
      ->envname("MEDREC_DATA_DIR");
  cmd->add_option("--symptoms-file", o.symptoms_file, "Override path of sym_t.csv");
  cmd->add_option("--diseases-file", o.diseases_file, "Override path of dia_t.csv");
  cmd->add_option("--weights-file", o.weights_file, "Override path of diffsydiw.csv");
  cmd->add_option("--remedies-file", o.remedies_file, "Override path of prec_t.csv");
}

void add_model_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--scheme", o.scheme, "Weighting scheme")->check(CLI::IsMember({"bm25", "tfidf", "raw"}));
  cmd->add_option("--k1", o.k1, "BM25 saturation parameter")->check(CLI::NonNegativeNumber);
  cmd->add_option("--b", o.b, "BM25 length normalization")->check(CLI::Range(0.0, 1.0));
  cmd->add_flag("--idf-floor", o.idf_floor, "Clamp negative BM25 IDF at zero");
  cmd->add_option("--rank,-r", o.rank, "Truncation rank")->check(CLI::PositiveNumber);
  cmd->add_option("--svd", o.svd, "SVD algorithm")->check(CLI::IsMember({"jacobi", "randomized"}));
  cmd->add_option("--seed", o.seed, "Seed for splits, sampling and randomized SVD");
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("medrec");
  spdlog::set_default_logger(logger);

  Options o;
  o.data_dir = default_data_dir();
  std::vector<SymptomId> symptom_ids;

  CLI::App app{"Symptom-driven disease and remedy recommender"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", o.json, "Print machine-readable JSON");
  app.add_flag("-v,--verbose", o.verbose, "Debug logging");

  auto* build = app.add_subcommand("build", "Clean the dataset, train and write a model file");
  add_dataset_flags(build, o);
  add_model_flags(build, o);
  build->add_option("--model,-o", o.model_path, "Output model file (default model.json)");
  build->add_option("--cleaning-report", o.cleaning_report, "Write the cleaning report as JSON");

  auto* rec = app.add_subcommand("recommend", "Rank diseases and treatments for a symptom set");
  add_dataset_flags(rec, o);
  add_model_flags(rec, o);
  rec->add_option("--symptoms,-s", o.symptoms, "Comma-separated symptom ids, e.g. 1,2")->required();
  rec->add_option("--n,-n", o.n, "Number of diseases")->check(CLI::PositiveNumber);
  rec->add_option("--model,-m", o.model_path, "Use a stored model instead of training");
  rec->add_option("--rank-by", o.rank_by, "Ranking mode")->check(CLI::IsMember({"cosine", "raw-sum"}));

  auto* sanity = app.add_subcommand("sanity", "Split-half sanity test");
  add_dataset_flags(sanity, o);
  add_model_flags(sanity, o);
  sanity->add_option("--control", o.control, "Control run")->check(CLI::IsMember({"none", "identical", "shuffled"}));
  sanity->add_option("--threshold", o.threshold, "Pass threshold on the diagonal ratio")->check(CLI::PositiveNumber);
  sanity->add_option("--report", o.report_path, "Write the JSON report here");
  sanity->add_option("--dump-csv", o.dump_dir, "Write both distance matrices as CSV into this directory");

  auto* regress = app.add_subcommand("regress", "Regression hit-rate test against training weights");
  add_dataset_flags(regress, o);
  add_model_flags(regress, o);
  regress->add_option("--samples", o.samples, "Number of sampled queries")->check(CLI::PositiveNumber);
  regress->add_option("--n,-n", o.n, "Predictions per query")->check(CLI::PositiveNumber);
  regress->add_option("--min-mean-hits", o.min_mean_hits, "Pass threshold on mean hits per query");
  regress->add_option("--model,-m", o.model_path, "Use a stored model instead of training");
  regress->add_option("--report", o.report_path, "Write the JSON report here");

  auto* serve = app.add_subcommand("serve", "Run the HTTP JSON API");
  add_dataset_flags(serve, o);
  add_model_flags(serve, o);
  serve->add_option("--model,-m", o.model_path, "Model file to serve");
  serve->add_flag("--build", o.build_on_start, "Train from the dataset when no model file is given");
  serve->add_option("--host", o.host, "Bind address");
  serve->add_option("--port,-p", o.port, "Port")->check(CLI::Range(1, 65535));

  try {
    app.parse(argc, argv);
    if (rec->parsed()) symptom_ids = parse_symptom_list(o.symptoms);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (o.verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (build->parsed()) return run_build(o);
    if (rec->parsed()) return run_recommend(o, symptom_ids);
    if (sanity->parsed()) return run_sanity(o);
    if (regress->parsed()) return run_regress(o);
    if (serve->parsed()) return run_serve(o);
  } catch (const QueryError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
