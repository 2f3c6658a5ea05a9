#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "geoprobe/backend.hpp"
#include "geoprobe/response_cache.hpp"

namespace geoprobe {

// Issues cached generations with bounded parallelism. Results are returned in
// sample-index order regardless of completion order.
class Sampler {
 public:
  Sampler(Backend& backend, ResponseCache* cache, GenerationParams base, int parallelism = 4);

  std::string generate_one(std::string_view prompt, double temperature, std::int64_t sample_index);

  // Sample indices first_index .. first_index + n - 1. The first failure stops
  // further dispatch; the failed sample with the lowest index is rethrown.
  std::vector<std::string> generate_batch(std::string_view prompt, double temperature, int n,
                                          std::int64_t first_index = 0);

  const GenerationParams& base_params() const { return base_; }
  int parallelism() const { return parallelism_; }

  std::size_t backend_calls() const { return backend_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }

  // Range of cache timestamps of every response served so far; empty when
  // no cache is attached.
  std::string earliest_response_at() const;
  std::string latest_response_at() const;

 private:
  void note_timestamp(const std::string& ts);

  Backend& backend_;
  ResponseCache* cache_;
  GenerationParams base_;
  int parallelism_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  mutable std::mutex ts_mu_;
  std::string earliest_;
  std::string latest_;
};

}  // namespace geoprobe
