#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace geoprobe {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitProbe = 4;

struct BackendSettings {
  std::string type;  // sim | http | replay
  std::filesystem::path sim_config;
  std::filesystem::path fixtures;
  std::string endpoint;
  int timeout_seconds = 120;
};

// Parsed run configuration. Relative paths resolve against the config file's
// directory.
struct RunConfig {
  nlohmann::json raw;
  std::filesystem::path base_dir;

  BackendSettings backend;
  std::string model;
  int max_tokens = 64;
  std::uint64_t seed = 0;
  int parallelism = 4;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> gazetteer;

  std::string probe;  // the single probe block present
  nlohmann::json probe_block;

  // Throws ConfigError (including missing referenced files).
  static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

inline const std::vector<std::string> kProbeNames{"defaults", "brittleness", "personas", "ranksize"};

// Entry point behind the geoprobe binary. Errors are written to `err` as
// `geoprobe:error:<config|backend|probe>: <Kind>: <message>`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace geoprobe
