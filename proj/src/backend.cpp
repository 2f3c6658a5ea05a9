#include "geoprobe/backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "geoprobe/error.hpp"
#include "geoprobe/format.hpp"

namespace geoprobe {

using nlohmann::json;

void GenerationParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= kMaxTemperature)) {
    throw Error(ErrorKind::InvalidParams, "temperature " + std::to_string(temperature) + " outside [0, 2]");
  }
  if (max_tokens <= 0) throw Error(ErrorKind::InvalidParams, "max_tokens must be > 0");
  if (sample_index < 0) throw Error(ErrorKind::InvalidParams, "sample_index must be >= 0");
}

std::vector<double> SimPrompt::logits() const {
  std::vector<double> out = base_logits;
  for (std::size_t i = 0; i < offsets.size() && i < out.size(); ++i) out[i] += offsets[i];
  return out;
}

void SimConfig::validate() const {
  if (!(temperature_floor > 0.0)) throw Error(ErrorKind::ConfigError, "sim temperature_floor must be > 0");
  for (const auto& [key, p] : prompts) {
    if (p.candidates.empty()) throw Error(ErrorKind::ConfigError, "sim prompt '" + key + "' has no candidates");
    if (p.base_logits.size() != p.candidates.size()) {
      throw Error(ErrorKind::ConfigError, "sim prompt '" + key + "': base_logits length differs from candidates");
    }
    if (!p.offsets.empty() && p.offsets.size() != p.candidates.size()) {
      throw Error(ErrorKind::ConfigError, "sim prompt '" + key + "': offsets length differs from candidates");
    }
    std::unordered_set<std::string> seen;
    for (const auto& c : p.candidates) {
      if (!seen.insert(c).second) {
        throw Error(ErrorKind::ConfigError, "sim prompt '" + key + "': duplicate candidate '" + c + "'");
      }
    }
    for (const double l : p.logits()) {
      if (!std::isfinite(l)) throw Error(ErrorKind::ConfigError, "sim prompt '" + key + "': non-finite logit");
    }
  }
}

const SimPrompt& SimConfig::at(std::string_view prompt_key) const {
  auto it = prompts.find(prompt_key);
  if (it == prompts.end()) {
    throw Error(ErrorKind::UnknownPromptKey, "no simulated prompt named '" + std::string(prompt_key) + "'");
  }
  return it->second;
}

SimConfig SimConfig::from_json_text(std::string_view text, std::string_view source) {
  SimConfig cfg;
  try {
    const auto doc = json::parse(text);
    cfg.temperature_floor = doc.value("temperature_floor", 0.01);
    for (const auto& [key, p] : doc.at("prompts").items()) {
      SimPrompt prompt;
      prompt.candidates = p.at("candidates").get<std::vector<std::string>>();
      prompt.base_logits = p.at("base_logits").get<std::vector<double>>();
      if (p.contains("offsets") && !p["offsets"].is_null()) prompt.offsets = p["offsets"].get<std::vector<double>>();
      cfg.prompts.emplace(key, std::move(prompt));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::ParseError, std::string(source) + ": invalid sim config: " + ex.what());
  }
  cfg.validate();
  return cfg;
}

SimConfig SimConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open sim config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str(), path.string());
}

std::vector<double> sim_probabilities(const SimConfig& cfg, std::string_view prompt_key, double temperature) {
  const auto logits = cfg.at(prompt_key).logits();
  const double t = std::max(temperature, cfg.temperature_floor);
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - top) / t);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

ShareMap sim_exact_distribution(const SimConfig& cfg, std::string_view prompt_key, double temperature) {
  const auto& prompt = cfg.at(prompt_key);
  const auto p = sim_probabilities(cfg, prompt_key, temperature);
  ShareMap out;
  for (std::size_t i = 0; i < p.size(); ++i) out.emplace(prompt.candidates[i], p[i]);
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t bits = splitmix64(splitmix64(seed) ^ index);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::string sim_sample(const SimConfig& cfg, std::string_view prompt_key, const GenerationParams& params) {
  const auto& prompt = cfg.at(prompt_key);
  const auto p = sim_probabilities(cfg, prompt_key, params.temperature);
  const double u = counter_uniform(params.run_seed, static_cast<std::uint64_t>(params.sample_index));
  double cumulative = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cumulative += p[i];
    if (u < cumulative) return prompt.candidates[i];
  }
  return prompt.candidates.back();
}

SimBackend::SimBackend(SimConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::string SimBackend::generate(std::string_view prompt, const GenerationParams& params) {
  params.validate();
  return sim_sample(cfg_, prompt, params);
}

std::string SimBackend::cache_id(const GenerationParams& params) const {
  return "sim#seed=" + std::to_string(params.run_seed);
}

std::string ReplayBackend::key(std::string_view prompt, double temperature, std::int64_t sample_index) {
  return json::array({prompt, format_fixed(temperature, 6), sample_index}).dump();
}

void ReplayBackend::add(std::string_view prompt, double temperature, std::int64_t sample_index, std::string text) {
  records_[key(prompt, temperature, sample_index)] = std::move(text);
}

ReplayBackend ReplayBackend::from_jsonl(std::string_view text, std::string_view source) {
  ReplayBackend out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto rec = json::parse(line);
      out.add(rec.at("prompt").get<std::string>(), rec.at("temperature").get<double>(),
              rec.at("sample_index").get<std::int64_t>(), rec.at("text").get<std::string>());
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::ParseError, std::string(source) + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

ReplayBackend ReplayBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open replay fixture '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str(), path.string());
}

std::string ReplayBackend::generate(std::string_view prompt, const GenerationParams& params) {
  params.validate();
  auto it = records_.find(key(prompt, params.temperature, params.sample_index));
  if (it == records_.end()) {
    throw Error(ErrorKind::BackendUnavailable, "no recorded response for sample " +
                                                   std::to_string(params.sample_index) + " at temperature " +
                                                   format_fixed(params.temperature, 6));
  }
  return it->second;
}

}  // namespace geoprobe
