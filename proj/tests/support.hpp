#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "misinfo/corpus.hpp"

namespace test {

inline std::filesystem::path source_dir() { return MISINFO_SOURCE_DIR; }

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("misinfo-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Canonical-schema post line, the format save_corpus writes.
inline std::string post_line(const std::string& id, const std::string& author, const std::string& created,
                             std::vector<std::string> hashtags, std::vector<std::string> urls = {},
                             std::uint64_t likes = 0) {
  nlohmann::json j{{"post_id", id}, {"author_id", author}, {"created_at", created}, {"text", ""},
                   {"hashtags", hashtags}, {"urls", urls}, {"likes", likes}, {"reshares", 0}};
  return j.dump();
}

inline misinfo::corpus::IngestResult ingest_text(const std::string& text, misinfo::corpus::RecordKind kind,
                                                 const misinfo::corpus::IngestFilter& filter = {}) {
  std::istringstream in(text);
  return misinfo::corpus::ingest(in, kind, misinfo::corpus::FieldMap::canonical(), filter);
}

}  // namespace test
