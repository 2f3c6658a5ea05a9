#include "geoprobe/sampler.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "geoprobe/error.hpp"

namespace geoprobe {

Sampler::Sampler(Backend& backend, ResponseCache* cache, GenerationParams base, int parallelism)
    : backend_(backend), cache_(cache), base_(std::move(base)), parallelism_(parallelism) {
  if (parallelism_ < 1) throw Error(ErrorKind::InvalidArgument, "parallelism must be >= 1");
}

std::string Sampler::generate_one(std::string_view prompt, double temperature, std::int64_t sample_index) {
  GenerationParams params = base_;
  params.temperature = temperature;
  params.sample_index = sample_index;
  auto result = cached_generate(cache_, backend_, prompt, params);
  if (result.cache_hit) {
    ++cache_hits_;
  } else {
    ++backend_calls_;
  }
  if (!result.created_at.empty()) note_timestamp(result.created_at);
  return std::move(result.text);
}

std::vector<std::string> Sampler::generate_batch(std::string_view prompt, double temperature, int n,
                                                 std::int64_t first_index) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "sample count must be >= 1");
  std::vector<std::string> texts(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (int i = next++; i < n && !failed.load(); i = next++) {
      try {
        texts[static_cast<std::size_t>(i)] = generate_one(prompt, temperature, first_index + i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
        failed = true;
      }
    }
  };

  const int threads = std::min(parallelism_, n);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return texts;
}

void Sampler::note_timestamp(const std::string& ts) {
  std::lock_guard lock(ts_mu_);
  if (earliest_.empty() || ts < earliest_) earliest_ = ts;
  if (latest_.empty() || ts > latest_) latest_ = ts;
}

std::string Sampler::earliest_response_at() const {
  std::lock_guard lock(ts_mu_);
  return earliest_;
}

std::string Sampler::latest_response_at() const {
  std::lock_guard lock(ts_mu_);
  return latest_;
}

}  // namespace geoprobe
