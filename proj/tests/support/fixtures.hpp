#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "medrec/corpus.hpp"

namespace medrec::testing {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& content);

/// Four CSV files with 2 symptoms, 2 diseases, 3 triples and 2 remedies.
DatasetPaths write_tiny_dataset(const std::filesystem::path& dir);

/// Random corpus with non-contiguous ids and integer weights in [1, 9].
Corpus random_corpus(std::mt19937_64& rng, std::size_t diseases, std::size_t symptoms, double density);

/// Clustered corpus resembling the published dataset's shape: each disease
/// draws most of its symptoms from its group's core set.
Corpus synthetic_corpus(std::size_t diseases, std::size_t symptoms, std::size_t groups, std::uint64_t seed);

/// Directory of the published dataset, when present (MEDREC_DATA_DIR or the
/// repository's data/ directory).
std::optional<std::filesystem::path> published_dataset_dir();

}  // namespace medrec::testing
