#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geoprobe {

enum class ErrorKind {
  // configuration / input files
  ConfigError,
  InvalidArgument,
  InvalidParams,
  ParseError,
  DuplicateAlias,
  UnknownPromptKey,
  InvalidReference,
  IoError,
  // generation
  BackendUnavailable,
  ProtocolError,
  CacheCorrupt,
  // probe outcomes
  InvalidDistribution,
  InsufficientCategories,
  DegenerateAbscissa,
  NoDefault,
  NoJsonArrayFound,
  EmptyPopulation,
  NoFlaggedPersonas,
  NoCitiesFound,
  TooFewCities,
  InvalidCity,
  InvalidChart,
};

// Coarse class used for process exit codes.
enum class ErrorClass { Config, Backend, Probe };

std::string_view to_string(ErrorKind kind);
ErrorClass classify(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace geoprobe
