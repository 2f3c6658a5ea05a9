#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geoprobe/stats.hpp"

namespace geoprobe {

inline constexpr double kMaxTemperature = 2.0;

struct GenerationParams {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 64;
  std::int64_t sample_index = 0;
  std::uint64_t run_seed = 0;

  // Throws InvalidParams.
  void validate() const;
};

// Single-turn text generation. Implementations must tolerate concurrent
// generate() calls.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string generate(std::string_view prompt, const GenerationParams& params) = 0;

  // Stable identifier, part of the response-cache key.
  virtual std::string id() const = 0;

  // Identifier used for cache keys. Backends whose output depends on more
  // than the cached request fields fold that state in here.
  virtual std::string cache_id(const GenerationParams&) const { return id(); }
};

// ---------------------------------------------------------------------------
// Simulated softmax model.

struct SimPrompt {
  std::vector<std::string> candidates;
  std::vector<double> base_logits;
  std::vector<double> offsets;  // empty or same length as base_logits

  std::vector<double> logits() const;
};

struct SimConfig {
  std::map<std::string, SimPrompt, std::less<>> prompts;
  double temperature_floor = 0.01;

  void validate() const;
  const SimPrompt& at(std::string_view prompt_key) const;  // UnknownPromptKey

  static SimConfig from_json_text(std::string_view text, std::string_view source = "<memory>");
  static SimConfig load(const std::filesystem::path& path);
};

// Softmax probabilities p_i ∝ exp(l_i / max(T, floor)) in candidate order.
std::vector<double> sim_probabilities(const SimConfig& cfg, std::string_view prompt_key, double temperature);

ShareMap sim_exact_distribution(const SimConfig& cfg, std::string_view prompt_key, double temperature);

// Uniform variate in [0, 1) determined by (seed, index) alone:
//   bits = splitmix64(splitmix64(seed) XOR index), u = (bits >> 11) * 2^-53
// where splitmix64 is the standard SplitMix64 step (add golden gamma, then
// the 30/27/31 xor-shift-multiply finalizer). Fixed for the 0.x series.
double counter_uniform(std::uint64_t seed, std::uint64_t index);

// Inverse-CDF draw over candidates in declaration order.
std::string sim_sample(const SimConfig& cfg, std::string_view prompt_key, const GenerationParams& params);

// The prompt text is the SimConfig prompt key.
class SimBackend final : public Backend {
 public:
  explicit SimBackend(SimConfig cfg);

  std::string generate(std::string_view prompt, const GenerationParams& params) override;
  std::string id() const override { return "sim"; }
  std::string cache_id(const GenerationParams& params) const override;

  const SimConfig& config() const { return cfg_; }

 private:
  SimConfig cfg_;
};

// ---------------------------------------------------------------------------
// Replay of recorded responses.

// Serves recorded texts keyed by (prompt, temperature at 6 decimals,
// sample_index). Fixture files use the response-cache line format; only
// prompt, temperature, sample_index and text are read.
class ReplayBackend final : public Backend {
 public:
  ReplayBackend() = default;

  static ReplayBackend from_jsonl(std::string_view text, std::string_view source = "<memory>");
  static ReplayBackend load(const std::filesystem::path& path);

  void add(std::string_view prompt, double temperature, std::int64_t sample_index, std::string text);

  std::string generate(std::string_view prompt, const GenerationParams& params) override;
  std::string id() const override { return "replay"; }

  std::size_t size() const { return records_.size(); }

 private:
  static std::string key(std::string_view prompt, double temperature, std::int64_t sample_index);

  std::unordered_map<std::string, std::string> records_;
};

}  // namespace geoprobe
