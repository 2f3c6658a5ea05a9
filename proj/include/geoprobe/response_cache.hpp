#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "geoprobe/backend.hpp"

namespace geoprobe {

struct CacheRecord {
  std::string key;
  std::string backend_id;
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  std::int64_t sample_index = 0;
  std::string text;
  std::string created_at;
};

// Canonical request serialization: compact JSON, keys sorted, temperature as
// a string with exactly 6 decimals. UTF-8.
std::string canonical_request(std::string_view backend_id, std::string_view model, std::string_view prompt,
                              double temperature, std::int64_t sample_index);

// Lowercase hex SHA-256 of canonical_request(...).
std::string cache_key(std::string_view backend_id, std::string_view model, std::string_view prompt,
                      double temperature, std::int64_t sample_index);

std::string sha256_hex(std::string_view data);

std::string to_jsonl(const CacheRecord& rec);

// Append-only JSONL store at <dir>/responses.jsonl.
//
// The whole file is indexed on open. Appends are serialized through one
// writer; a key, once present, is never rewritten.
class ResponseCache {
 public:
  using Clock = std::function<std::string()>;

  // Throws CacheCorrupt naming the offending line.
  explicit ResponseCache(std::filesystem::path dir, Clock clock = {});

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  std::optional<CacheRecord> find(const std::string& key) const;

  // Stores rec (key and created_at are filled in when empty). If the key is
  // already present the stored record wins and is returned.
  CacheRecord append(CacheRecord rec);

  std::size_t size() const;
  const std::filesystem::path& file() const { return file_; }

 private:
  void load();

  std::filesystem::path file_;
  Clock clock_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, CacheRecord> index_;
  std::ofstream out_;
  bool needs_newline_ = false;
};

struct CachedText {
  std::string text;
  bool cache_hit = false;
  std::string created_at;
};

// Returns the stored response on a key hit, otherwise calls the backend and
// records the result. A null cache passes straight through.
CachedText cached_generate(ResponseCache* cache, Backend& backend, std::string_view prompt,
                           const GenerationParams& params);

}  // namespace geoprobe
