#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace geoprobe {

// Lowercases (ASCII, Latin-1, Latin Extended-A, Greek, Cyrillic), replaces
// punctuation with spaces, collapses whitespace, trims and drops leading
// "the " articles. Idempotent.
std::string normalize_text(std::string_view raw);

struct GazetteerEntry {
  std::string canonical;
  std::vector<std::string> aliases;
};

// Alias table mapping surface forms onto canonical entity names.
// Immutable after construction; safe for concurrent lookups.
class Gazetteer {
 public:
  Gazetteer() = default;

  // Throws DuplicateAlias when one normalized alias names two canonicals and
  // ParseError for empty or duplicate canonical names.
  static Gazetteer from_entries(std::vector<GazetteerEntry> entries);

  // JSON array of {"canonical": str, "aliases": [str]}. An empty (or
  // whitespace-only) document is an empty gazetteer.
  static Gazetteer parse(std::string_view json_text, std::string_view source = "<memory>");
  static Gazetteer load(const std::filesystem::path& path);

  const std::vector<GazetteerEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t alias_count() const { return index_.size(); }
  bool contains_canonical(std::string_view name) const;

  // Whole-string lookup after normalization.
  std::optional<std::string> lookup(std::string_view text) const;

  // Longest alias (in tokens) occurring at word boundaries, earliest on ties.
  std::optional<std::string> extract(std::string_view response) const;

 private:
  struct AliasTokens {
    std::vector<std::string> tokens;
    std::size_t entry = 0;
  };

  std::vector<GazetteerEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<AliasTokens> aliases_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_token_;
};

// nullopt means Unresolved.
inline std::optional<std::string> extract_entity(std::string_view raw_response, const Gazetteer& g) {
  return g.extract(raw_response);
}

}  // namespace geoprobe
