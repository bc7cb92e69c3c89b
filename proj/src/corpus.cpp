#include "medrec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "medrec/csv.hpp"
#include "medrec/hash.hpp"

namespace medrec {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// IdIndex

IdIndex::IdIndex(std::vector<std::int64_t> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end()) {
    throw std::invalid_argument("duplicate identifier in index");
  }
  lookup_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) lookup_.emplace(ids_[i], i);
}

std::optional<std::size_t> IdIndex::dense(std::int64_t id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Reports

std::size_t FileReport::total_dropped() const {
  std::size_t total = 0;
  for (const auto& [reason, count] : dropped) total += count;
  return total;
}

namespace {

nlohmann::json file_report_json(const FileReport& r) {
  return {{"file", r.file},
          {"rows_read", r.rows_read},
          {"rows_kept", r.rows_kept},
          {"delimiter_fixes", r.delimiter_fixes},
          {"dropped", r.dropped}};
}

}  // namespace

nlohmann::json CleaningReport::to_json() const {
  return {{"symptoms", file_report_json(symptoms)},
          {"diseases", file_report_json(diseases)},
          {"weights", file_report_json(weights)},
          {"remedies", file_report_json(remedies)},
          {"diseases_without_triples", diseases_without_triples},
          {"diseases_without_remedies", diseases_without_remedies}};
}

DatasetPaths DatasetPaths::in_directory(const fs::path& dir) {
  return {dir / "sym_t.csv", dir / "dia_t.csv", dir / "diffsydiw.csv", dir / "prec_t.csv"};
}

// ---------------------------------------------------------------------------
// Corpus

namespace {

std::string canonical_rendering(std::span<const SymptomRecord> symptoms, std::span<const DiseaseRecord> diseases,
                                std::span<const WeightTriple> triples, std::span<const RemedyRecord> remedies) {
  std::string out;
  for (const auto& s : symptoms) out += fmt::format("S\t{}\t{}\n", s.syd, s.name);
  for (const auto& d : diseases) out += fmt::format("D\t{}\t{}\n", d.did, d.name);
  for (const auto& t : triples) out += fmt::format("T\t{}\t{}\t{}\n", t.syd, t.did, t.wei);
  for (const auto& r : remedies) out += fmt::format("R\t{}\t{}\t{}\n", r.did, r.disease_name, r.treatment);
  return out;
}

template <typename Record, typename Key>
std::vector<std::int64_t> sorted_ids(std::vector<Record>& records, Key key) {
  std::stable_sort(records.begin(), records.end(), [&](const Record& a, const Record& b) { return key(a) < key(b); });
  std::vector<std::int64_t> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(key(r));
  return ids;
}

}  // namespace

Corpus::Corpus(std::vector<SymptomRecord> symptoms, std::vector<DiseaseRecord> diseases,
               std::vector<WeightTriple> triples, std::vector<RemedyRecord> remedies, CleaningReport report)
    : symptoms_(std::move(symptoms)),
      diseases_(std::move(diseases)),
      triples_(std::move(triples)),
      remedies_(std::move(remedies)),
      report_(std::move(report)) {
  for (auto& s : symptoms_) {
    s.name = csv::trim(s.name);
    if (s.name.empty()) throw std::invalid_argument(fmt::format("symptom {} has an empty name", s.syd));
  }
  for (auto& d : diseases_) {
    d.name = csv::trim(d.name);
    if (d.name.empty()) throw std::invalid_argument(fmt::format("disease {} has an empty name", d.did));
  }
  symptom_index_ = IdIndex(sorted_ids(symptoms_, [](const SymptomRecord& s) { return s.syd; }));
  disease_index_ = IdIndex(sorted_ids(diseases_, [](const DiseaseRecord& d) { return d.did; }));

  std::vector<bool> has_triple(diseases_.size(), false);
  for (const auto& t : triples_) {
    if (!std::isfinite(t.wei) || t.wei < 0.0) {
      throw std::invalid_argument(fmt::format("triple ({}, {}) has invalid weight {}", t.syd, t.did, t.wei));
    }
    auto row = disease_index_.dense(t.did);
    if (!row || !symptom_index_.dense(t.syd)) {
      throw std::invalid_argument(fmt::format("triple ({}, {}) references an unknown id", t.syd, t.did));
    }
    has_triple[*row] = true;
  }
  for (std::size_t i = 0; i < remedies_.size(); ++i) {
    auto& r = remedies_[i];
    r.treatment = csv::trim(r.treatment);
    r.disease_name = csv::trim(r.disease_name);
    if (r.treatment.empty()) throw std::invalid_argument(fmt::format("remedy for disease {} is empty", r.did));
    if (!disease_index_.dense(r.did)) {
      throw std::invalid_argument(fmt::format("remedy references unknown disease {}", r.did));
    }
    remedies_by_disease_[r.did].push_back(i);
  }

  report_.diseases_without_triples.clear();
  report_.diseases_without_remedies.clear();
  for (std::size_t i = 0; i < diseases_.size(); ++i) {
    if (!has_triple[i]) report_.diseases_without_triples.push_back(diseases_[i].did);
    if (!remedies_by_disease_.contains(diseases_[i].did)) report_.diseases_without_remedies.push_back(diseases_[i].did);
  }
  hash_ = sha256_hex(canonical_rendering(symptoms_, diseases_, triples_, remedies_));
}

std::vector<std::string> Corpus::treatments(DiseaseId did) const {
  std::vector<std::string> out;
  auto it = remedies_by_disease_.find(did);
  if (it == remedies_by_disease_.end()) return out;
  for (std::size_t idx : it->second) out.push_back(remedies_[idx].treatment);
  return out;
}

Corpus Corpus::with_triples(std::vector<WeightTriple> triples) const {
  return Corpus(symptoms_, diseases_, std::move(triples), remedies_, report_);
}

bool Corpus::operator==(const Corpus& other) const {
  return symptoms_ == other.symptoms_ && diseases_ == other.diseases_ && triples_ == other.triples_ &&
         remedies_ == other.remedies_;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct TableSpec {
  std::vector<std::string> columns;
  // Surplus fields are folded back into the last column (free-text columns).
  bool fold_surplus_into_last = false;
};

/// Reads a CSV table and returns, per surviving row, the required columns in
/// TableSpec order. Rows with a null attribute are dropped.
std::vector<std::vector<std::string>> read_table(const fs::path& path, const TableSpec& spec, FileReport& report) {
  report.file = path.filename().string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(fmt::format("cannot open dataset file {}", path.string()));

  std::string line;
  if (!std::getline(in, line)) throw DatasetError(fmt::format("{}: missing header row", path.string()));
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = csv::split_fields(csv::normalize_delimiters(line));
  std::vector<std::size_t> positions;
  for (const auto& wanted : spec.columns) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](const std::string& h) { return lower(csv::trim(h)) == wanted; });
    if (it == header.end()) {
      throw DatasetError(fmt::format("{}: unparseable header '{}' (expected column '{}')", path.string(), line, wanted));
    }
    positions.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  const bool last_is_final_column = positions.back() + 1 == header.size();

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv::trim(line).empty()) continue;
    ++report.rows_read;

    std::size_t fixes = 0;
    auto fields = csv::split_fields(csv::normalize_delimiters(line, &fixes));
    report.delimiter_fixes += fixes;

    if (fields.size() > header.size()) {
      if (spec.fold_surplus_into_last && last_is_final_column) {
        std::string joined = fields[header.size() - 1];
        for (std::size_t k = header.size(); k < fields.size(); ++k) joined += "," + fields[k];
        fields.resize(header.size());
        fields.back() = std::move(joined);
      } else {
        report.drop("extra_fields");
        continue;
      }
    }
    if (fields.size() < header.size()) {
      report.drop("null_field");
      continue;
    }
    // Any null attribute drops the row, including columns we do not consume.
    if (std::any_of(fields.begin(), fields.end(), [](const std::string& f) { return csv::is_null_token(f); })) {
      report.drop("null_field");
      continue;
    }
    std::vector<std::string> picked;
    picked.reserve(positions.size());
    for (std::size_t p : positions) picked.push_back(csv::trim(fields[p]));
    rows.push_back(std::move(picked));
  }
  return rows;
}

std::optional<std::int64_t> parse_id(const std::string& s) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    // Identifiers exported as floats ("12.0").
    double d = 0.0;
    auto [p2, ec2] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ec2 != std::errc() || p2 != s.data() + s.size() || d != std::floor(d) || std::abs(d) > 9.0e15) {
      return std::nullopt;
    }
    return static_cast<std::int64_t>(d);
  }
  return value;
}

std::optional<double> parse_weight(const std::string& s) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

void require_rows(std::size_t kept, const fs::path& path) {
  if (kept == 0) throw DatasetError(fmt::format("{}: no valid rows after cleaning", path.string()));
}

}  // namespace

Corpus load_dataset(const DatasetPaths& paths) {
  for (const auto* p : {&paths.symptoms, &paths.diseases, &paths.weights, &paths.remedies}) {
    if (!fs::exists(*p)) throw DatasetError(fmt::format("dataset file not found: {}", p->string()));
  }
  CleaningReport report;

  std::vector<SymptomRecord> symptoms;
  {
    std::unordered_set<SymptomId> seen;
    for (auto& row : read_table(paths.symptoms, {{"syd", "symptom"}}, report.symptoms)) {
      auto id = parse_id(row[0]);
      if (!id) {
        report.symptoms.drop("malformed");
      } else if (!seen.insert(*id).second) {
        report.symptoms.drop("duplicate_id");
      } else {
        symptoms.push_back({*id, std::move(row[1])});
      }
    }
    report.symptoms.rows_kept = symptoms.size();
    require_rows(symptoms.size(), paths.symptoms);
  }

  std::vector<DiseaseRecord> diseases;
  {
    std::unordered_set<DiseaseId> seen;
    for (auto& row : read_table(paths.diseases, {{"did", "diagnose"}}, report.diseases)) {
      auto id = parse_id(row[0]);
      if (!id) {
        report.diseases.drop("malformed");
      } else if (!seen.insert(*id).second) {
        report.diseases.drop("duplicate_id");
      } else {
        diseases.push_back({*id, std::move(row[1])});
      }
    }
    report.diseases.rows_kept = diseases.size();
    require_rows(diseases.size(), paths.diseases);
  }
  spdlog::debug("parsed {} symptom and {} disease records", symptoms.size(), diseases.size());

  std::unordered_set<SymptomId> symptom_ids;
  for (const auto& s : symptoms) symptom_ids.insert(s.syd);
  std::unordered_set<DiseaseId> disease_ids;
  for (const auto& d : diseases) disease_ids.insert(d.did);

  std::vector<WeightTriple> triples;
  for (auto& row : read_table(paths.weights, {{"syd", "did", "wei"}}, report.weights)) {
    auto syd = parse_id(row[0]);
    auto did = parse_id(row[1]);
    auto wei = parse_weight(row[2]);
    if (!syd || !did || !wei) {
      report.weights.drop("malformed");
    } else if (*wei < 0.0) {
      report.weights.drop("negative_weight");
    } else if (!symptom_ids.contains(*syd) || !disease_ids.contains(*did)) {
      report.weights.drop("unknown_id");
      spdlog::debug("dropping triple ({}, {}): unknown id", *syd, *did);
    } else {
      triples.push_back({*syd, *did, *wei});
    }
  }
  report.weights.rows_kept = triples.size();
  if (auto it = report.weights.dropped.find("unknown_id"); it != report.weights.dropped.end()) {
    spdlog::warn("{}: dropped {} weight rows referencing unknown symptom or disease ids", report.weights.file,
                 it->second);
  }
  require_rows(triples.size(), paths.weights);

  std::vector<RemedyRecord> remedies;
  for (auto& row : read_table(paths.remedies, {{"did", "diagnose", "pid"}, true}, report.remedies)) {
    auto did = parse_id(row[0]);
    if (!did) {
      report.remedies.drop("malformed");
    } else if (!disease_ids.contains(*did)) {
      report.remedies.drop("unknown_id");
    } else {
      remedies.push_back({*did, std::move(row[1]), std::move(row[2])});
    }
  }
  report.remedies.rows_kept = remedies.size();
  require_rows(remedies.size(), paths.remedies);

  return Corpus(std::move(symptoms), std::move(diseases), std::move(triples), std::move(remedies),
                std::move(report));
}

void write_dataset(const Corpus& corpus, const DatasetPaths& paths) {
  auto open = [](const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError(fmt::format("cannot write {}", p.string()));
    return out;
  };
  {
    auto out = open(paths.symptoms);
    out << "syd,symptom\n";
    for (const auto& s : corpus.symptoms()) out << s.syd << ',' << csv::quote_field(s.name) << '\n';
  }
  {
    auto out = open(paths.diseases);
    out << "did,diagnose\n";
    for (const auto& d : corpus.diseases()) out << d.did << ',' << csv::quote_field(d.name) << '\n';
  }
  {
    auto out = open(paths.weights);
    out << "syd,did,wei\n";
    for (const auto& t : corpus.triples()) out << fmt::format("{},{},{}\n", t.syd, t.did, t.wei);
  }
  {
    auto out = open(paths.remedies);
    out << "did,diagnose,pid\n";
    for (const auto& r : corpus.remedies()) {
      out << r.did << ',' << csv::quote_field(r.disease_name) << ',' << csv::quote_field(r.treatment) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Matrix

SparseWeightMatrix build_matrix(const Corpus& corpus) {
  const std::size_t m = corpus.diseases().size();
  const std::size_t n = corpus.symptoms().size();
  if (m == 0 || n == 0) throw std::invalid_argument("corpus has no diseases or no symptoms");

  struct Entry {
    std::size_t row;
    std::uint32_t col;
    double value;
  };
  std::vector<Entry> entries;
  entries.reserve(corpus.triples().size());
  for (const auto& t : corpus.triples()) {
    entries.push_back({*corpus.disease_index().dense(t.did),
                       static_cast<std::uint32_t>(*corpus.symptom_index().dense(t.syd)), t.wei});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });

  CsrMatrix csr;
  csr.rows = m;
  csr.cols = n;
  csr.row_ptr.assign(m + 1, 0);
  for (std::size_t k = 0; k < entries.size();) {
    const auto& head = entries[k];
    double sum = 0.0;
    std::size_t end = k;
    for (; end < entries.size() && entries[end].row == head.row && entries[end].col == head.col; ++end) {
      sum += entries[end].value;
    }
    if (sum > 0.0) {
      csr.col_idx.push_back(head.col);
      csr.values.push_back(sum);
      ++csr.row_ptr[head.row + 1];
    }
    k = end;
  }
  for (std::size_t i = 0; i < m; ++i) csr.row_ptr[i + 1] += csr.row_ptr[i];

  SparseWeightMatrix matrix(std::move(csr));
  if (auto empty = matrix.empty_rows(); !empty.empty()) {
    spdlog::info("{} of {} diseases carry no symptom weight and stay as zero rows", empty.size(), m);
  }
  return matrix;
}

}  // namespace medrec
