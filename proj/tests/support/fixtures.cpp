#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace medrec::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() / fmt::format("medrec-test-{}-{}", rd(), counter++);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

DatasetPaths write_tiny_dataset(const fs::path& dir) {
  auto paths = DatasetPaths::in_directory(dir);
  write_text(paths.symptoms, "syd,symptom\n1,Upper abdominal pain\n2,Lower abdominal pain\n");
  write_text(paths.diseases, "did,diagnose\n10,Ventral hernia\n20,Diverticulosis\n");
  write_text(paths.weights, "syd,did,wei\n1,10,3\n2,10,1\n2,20,2\n");
  write_text(paths.remedies,
             "did,diagnose,pid\n10,Ventral hernia,Laparoscopic surgery\n"
             "20,Diverticulosis,\"Eating smaller meals may help prevent bloating and swelling.\"\n");
  return paths;
}

Corpus random_corpus(std::mt19937_64& rng, std::size_t diseases, std::size_t symptoms, double density) {
  std::vector<SymptomRecord> s;
  for (std::size_t j = 0; j < symptoms; ++j) s.push_back({static_cast<SymptomId>(3 * j + 1), fmt::format("Symptom {}", j)});
  std::vector<DiseaseRecord> d;
  for (std::size_t i = 0; i < diseases; ++i) d.push_back({static_cast<DiseaseId>(100 + 7 * i), fmt::format("Disease {}", i)});
  std::bernoulli_distribution present(density);
  std::uniform_int_distribution<int> weight(1, 9);
  std::vector<WeightTriple> t;
  for (std::size_t i = 0; i < diseases; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < symptoms; ++j) {
      if (present(rng)) {
        t.push_back({s[j].syd, d[i].did, static_cast<double>(weight(rng))});
        any = true;
      }
    }
    if (!any) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(0, symptoms - 1)(rng);
      t.push_back({s[j].syd, d[i].did, static_cast<double>(weight(rng))});
    }
  }
  std::shuffle(t.begin(), t.end(), rng);
  std::vector<RemedyRecord> r;
  for (std::size_t i = 0; i < diseases; i += 2) r.push_back({d[i].did, d[i].name, fmt::format("Treatment {}", i)});
  return Corpus(std::move(s), std::move(d), std::move(t), std::move(r));
}

Corpus synthetic_corpus(std::size_t diseases, std::size_t symptoms, std::size_t groups, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SymptomRecord> s;
  for (std::size_t j = 0; j < symptoms; ++j) s.push_back({static_cast<SymptomId>(j + 1), fmt::format("Symptom {}", j + 1)});
  std::vector<DiseaseRecord> d;
  for (std::size_t i = 0; i < diseases; ++i) d.push_back({static_cast<DiseaseId>(i + 1), fmt::format("Disease {}", i + 1)});

  std::uniform_int_distribution<std::size_t> any_symptom(0, symptoms - 1);
  const std::size_t core_size = std::min<std::size_t>(12, symptoms);
  std::vector<std::vector<std::size_t>> cores(groups);
  for (auto& core : cores) {
    std::set<std::size_t> picked;
    while (picked.size() < core_size) picked.insert(any_symptom(rng));
    core.assign(picked.begin(), picked.end());
  }
  std::uniform_int_distribution<std::size_t> group_of(0, groups - 1);
  std::uniform_int_distribution<std::size_t> triple_count(6, 14);
  std::uniform_int_distribution<int> weight(1, 12);
  std::bernoulli_distribution off_core(0.2);

  std::vector<WeightTriple> t;
  for (std::size_t i = 0; i < diseases; ++i) {
    const auto& core = cores[group_of(rng)];
    std::uniform_int_distribution<std::size_t> in_core(0, core.size() - 1);
    std::set<std::size_t> chosen;
    const std::size_t count = std::min(triple_count(rng), symptoms);
    while (chosen.size() < count) chosen.insert(off_core(rng) ? any_symptom(rng) : core[in_core(rng)]);
    for (std::size_t j : chosen) t.push_back({s[j].syd, d[i].did, static_cast<double>(weight(rng))});
  }
  std::vector<RemedyRecord> r;
  for (std::size_t i = 0; i < diseases; ++i) r.push_back({d[i].did, d[i].name, fmt::format("Treatment for {}", d[i].name)});
  return Corpus(std::move(s), std::move(d), std::move(t), std::move(r));
}

std::optional<fs::path> published_dataset_dir() {
  std::vector<fs::path> candidates;
  if (const char* env = std::getenv("MEDREC_DATA_DIR"); env != nullptr && *env != '\0') candidates.emplace_back(env);
  candidates.emplace_back(MEDREC_SOURCE_DIR "/data");
  for (const auto& dir : candidates) {
    const auto p = DatasetPaths::in_directory(dir);
    if (fs::exists(p.symptoms) && fs::exists(p.diseases) && fs::exists(p.weights) && fs::exists(p.remedies)) return dir;
  }
  return std::nullopt;
}

}  // namespace medrec::testing
