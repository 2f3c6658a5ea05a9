#include "geoprobe/response_cache.hpp"

#include <array>
#include <mutex>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "geoprobe/error.hpp"
#include "geoprobe/format.hpp"

namespace geoprobe {

using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoError, "SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0x0F]);
  }
  return out;
}

std::string canonical_request(std::string_view backend_id, std::string_view model, std::string_view prompt,
                              double temperature, std::int64_t sample_index) {
  // nlohmann::json objects are std::map backed, so keys serialize sorted.
  json j = {
      {"backend_id", backend_id},
      {"model", model},
      {"prompt", prompt},
      {"sample_index", sample_index},
      {"temperature", format_fixed(temperature, 6)},
  };
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string cache_key(std::string_view backend_id, std::string_view model, std::string_view prompt,
                      double temperature, std::int64_t sample_index) {
  return sha256_hex(canonical_request(backend_id, model, prompt, temperature, sample_index));
}

std::string to_jsonl(const CacheRecord& rec) {
  json j = {
      {"key", rec.key},
      {"backend_id", rec.backend_id},
      {"model", rec.model},
      {"prompt", rec.prompt},
      {"temperature", std::stod(format_fixed(rec.temperature, 6))},
      {"sample_index", rec.sample_index},
      {"text", rec.text},
      {"created_at", rec.created_at},
  };
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

ResponseCache::ResponseCache(std::filesystem::path dir, Clock clock)
    : file_(dir / "responses.jsonl"), clock_(clock ? std::move(clock) : Clock(utc_now_iso8601)) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create cache directory '" + dir.string() + "': " + ec.message());
  load();
  out_.open(file_, std::ios::binary | std::ios::app);
  if (!out_) throw Error(ErrorKind::IoError, "cannot open cache file '" + file_.string() + "' for append");
}

void ResponseCache::load() {
  std::ifstream in(file_, std::ios::binary);
  if (!in) return;
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();
  needs_newline_ = !content.empty() && content.back() != '\n';

  auto corrupt = [&](std::size_t line_no, const std::string& why) {
    throw Error(ErrorKind::CacheCorrupt, file_.string() + ":" + std::to_string(line_no) + ": " + why);
  };

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    const std::string_view line(content.data() + start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;

    CacheRecord rec;
    try {
      const auto j = json::parse(line);
      rec.key = j.at("key").get<std::string>();
      rec.backend_id = j.at("backend_id").get<std::string>();
      rec.model = j.at("model").get<std::string>();
      rec.prompt = j.at("prompt").get<std::string>();
      rec.temperature = j.at("temperature").get<double>();
      rec.sample_index = j.at("sample_index").get<std::int64_t>();
      rec.text = j.at("text").get<std::string>();
      rec.created_at = j.value("created_at", "");
    } catch (const json::exception& ex) {
      corrupt(line_no, ex.what());
    }
    const auto expected = cache_key(rec.backend_id, rec.model, rec.prompt, rec.temperature, rec.sample_index);
    if (rec.key != expected) corrupt(line_no, "key does not match request fields");
    auto [it, inserted] = index_.emplace(rec.key, rec);
    if (!inserted && it->second.text != rec.text) corrupt(line_no, "key rewritten with different text");
  }
}

std::optional<CacheRecord> ResponseCache::find(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

CacheRecord ResponseCache::append(CacheRecord rec) {
  if (rec.key.empty()) {
    rec.key = cache_key(rec.backend_id, rec.model, rec.prompt, rec.temperature, rec.sample_index);
  }
  std::unique_lock lock(mu_);
  if (auto it = index_.find(rec.key); it != index_.end()) return it->second;
  if (rec.created_at.empty()) rec.created_at = clock_();
  if (needs_newline_) {
    out_ << '\n';
    needs_newline_ = false;
  }
  out_ << to_jsonl(rec) << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorKind::IoError, "write to cache file '" + file_.string() + "' failed");
  index_.emplace(rec.key, rec);
  return rec;
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mu_);
  return index_.size();
}

CachedText cached_generate(ResponseCache* cache, Backend& backend, std::string_view prompt,
                           const GenerationParams& params) {
  params.validate();
  if (prompt.empty()) throw Error(ErrorKind::InvalidParams, "prompt must not be empty");
  if (cache == nullptr) return {backend.generate(prompt, params), false, {}};

  const auto backend_id = backend.cache_id(params);
  const auto key = cache_key(backend_id, params.model, prompt, params.temperature, params.sample_index);
  if (auto hit = cache->find(key)) return {hit->text, true, hit->created_at};

  CacheRecord rec;
  rec.key = key;
  rec.backend_id = backend_id;
  rec.model = params.model;
  rec.prompt = std::string(prompt);
  rec.temperature = params.temperature;
  rec.sample_index = params.sample_index;
  rec.text = backend.generate(prompt, params);
  const auto stored = cache->append(std::move(rec));
  return {stored.text, false, stored.created_at};
}

}  // namespace geoprobe
