#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "medrec/sparse.hpp"

namespace medrec {

using SymptomId = std::int64_t;
using DiseaseId = std::int64_t;

struct SymptomRecord {
  SymptomId syd = 0;
  std::string name;
  bool operator==(const SymptomRecord&) const = default;
};

struct DiseaseRecord {
  DiseaseId did = 0;
  std::string name;
  bool operator==(const DiseaseRecord&) const = default;
};

struct WeightTriple {
  SymptomId syd = 0;
  DiseaseId did = 0;
  double wei = 0.0;
  bool operator==(const WeightTriple&) const = default;
};

/// One row of the treatment file. The file labels the text column "pid".
struct RemedyRecord {
  DiseaseId did = 0;
  std::string disease_name;
  std::string treatment;
  bool operator==(const RemedyRecord&) const = default;
};

/// Bidirectional map between external identifiers and dense 0-based indices,
/// assigned in ascending identifier order.
class IdIndex {
 public:
  IdIndex() = default;
  explicit IdIndex(std::vector<std::int64_t> ids);

  std::optional<std::size_t> dense(std::int64_t id) const;
  std::int64_t external(std::size_t dense) const { return ids_.at(dense); }
  std::size_t size() const { return ids_.size(); }
  std::span<const std::int64_t> ids() const { return ids_; }

 private:
  std::vector<std::int64_t> ids_;
  std::unordered_map<std::int64_t, std::size_t> lookup_;
};

/// Per-file counts gathered while cleaning.
struct FileReport {
  std::string file;
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  std::size_t delimiter_fixes = 0;
  std::map<std::string, std::size_t> dropped;  // reason -> rows

  void drop(const std::string& reason) { ++dropped[reason]; }
  std::size_t total_dropped() const;
};

struct CleaningReport {
  FileReport symptoms;
  FileReport diseases;
  FileReport weights;
  FileReport remedies;
  std::vector<DiseaseId> diseases_without_triples;
  std::vector<DiseaseId> diseases_without_remedies;

  nlohmann::json to_json() const;
};

struct DatasetPaths {
  std::filesystem::path symptoms;  // sym_t.csv
  std::filesystem::path diseases;  // dia_t.csv
  std::filesystem::path weights;   // diffsydiw.csv
  std::filesystem::path remedies;  // prec_t.csv

  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

/// Thrown for missing files, unusable headers and files without valid rows.
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Validated, id-indexed symptom/disease/remedy records and weight triples.
/// Immutable once constructed.
class Corpus {
 public:
  /// Records are sorted by identifier; triples and remedies keep their order.
  /// Throws std::invalid_argument when an invariant does not hold (duplicate
  /// ids, empty names, negative weights, triples or remedies with unknown ids).
  Corpus(std::vector<SymptomRecord> symptoms, std::vector<DiseaseRecord> diseases,
         std::vector<WeightTriple> triples, std::vector<RemedyRecord> remedies,
         CleaningReport report = {});

  std::span<const SymptomRecord> symptoms() const { return symptoms_; }
  std::span<const DiseaseRecord> diseases() const { return diseases_; }
  std::span<const WeightTriple> triples() const { return triples_; }
  std::span<const RemedyRecord> remedies() const { return remedies_; }

  const IdIndex& symptom_index() const { return symptom_index_; }
  const IdIndex& disease_index() const { return disease_index_; }

  const SymptomRecord& symptom_at(std::size_t dense) const { return symptoms_.at(dense); }
  const DiseaseRecord& disease_at(std::size_t dense) const { return diseases_.at(dense); }

  /// Treatment texts for a disease in file order; empty when none recorded.
  std::vector<std::string> treatments(DiseaseId did) const;

  const CleaningReport& report() const { return report_; }

  /// SHA-256 over a canonical rendering of every record.
  const std::string& content_hash() const { return hash_; }

  /// Same tables, different triples. Used for split halves.
  Corpus with_triples(std::vector<WeightTriple> triples) const;

  bool operator==(const Corpus& other) const;

 private:
  std::vector<SymptomRecord> symptoms_;
  std::vector<DiseaseRecord> diseases_;
  std::vector<WeightTriple> triples_;
  std::vector<RemedyRecord> remedies_;
  IdIndex symptom_index_;
  IdIndex disease_index_;
  std::unordered_map<DiseaseId, std::vector<std::size_t>> remedies_by_disease_;
  CleaningReport report_;
  std::string hash_;
};

/// Parses and cleans the four dataset files.
Corpus load_dataset(const DatasetPaths& paths);

/// Writes the corpus back as four CSV files with the canonical headers.
void write_dataset(const Corpus& corpus, const DatasetPaths& paths);

/// Aggregates triples into a disease x symptom matrix. Duplicate pairs are
/// summed. Throws std::invalid_argument for a corpus without diseases or symptoms.
SparseWeightMatrix build_matrix(const Corpus& corpus);

}  // namespace medrec
