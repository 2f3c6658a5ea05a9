#include "geoprobe/error.hpp"

namespace geoprobe {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DuplicateAlias: return "DuplicateAlias";
    case ErrorKind::UnknownPromptKey: return "UnknownPromptKey";
    case ErrorKind::InvalidReference: return "InvalidReference";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::ProtocolError: return "ProtocolError";
    case ErrorKind::CacheCorrupt: return "CacheCorrupt";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::InsufficientCategories: return "InsufficientCategories";
    case ErrorKind::DegenerateAbscissa: return "DegenerateAbscissa";
    case ErrorKind::NoDefault: return "NoDefault";
    case ErrorKind::NoJsonArrayFound: return "NoJsonArrayFound";
    case ErrorKind::EmptyPopulation: return "EmptyPopulation";
    case ErrorKind::NoFlaggedPersonas: return "NoFlaggedPersonas";
    case ErrorKind::NoCitiesFound: return "NoCitiesFound";
    case ErrorKind::TooFewCities: return "TooFewCities";
    case ErrorKind::InvalidCity: return "InvalidCity";
    case ErrorKind::InvalidChart: return "InvalidChart";
  }
  return "Unknown";
}

ErrorClass classify(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidParams:
    case ErrorKind::ParseError:
    case ErrorKind::DuplicateAlias:
    case ErrorKind::UnknownPromptKey:
    case ErrorKind::InvalidReference:
    case ErrorKind::IoError:
      return ErrorClass::Config;
    case ErrorKind::BackendUnavailable:
    case ErrorKind::ProtocolError:
    case ErrorKind::CacheCorrupt:
      return ErrorClass::Backend;
    default:
      return ErrorClass::Probe;
  }
}

}  // namespace geoprobe
