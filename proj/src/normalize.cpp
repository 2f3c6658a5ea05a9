#include "geoprobe/normalize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "geoprobe/error.hpp"
#include "geoprobe/stats.hpp"

namespace geoprobe {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one UTF-8 sequence starting at i; malformed input yields U+FFFD
// and consumes one byte.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return kReplacement;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return kReplacement;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c < 0x80) return c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c >= 0x100 && c <= 0x137 && c % 2 == 0) return c + 1;
  if (c >= 0x139 && c <= 0x148 && c % 2 == 1) return c + 1;
  if (c >= 0x14A && c <= 0x177 && c % 2 == 0) return c + 1;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E && c % 2 == 1) return c + 1;
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 0x20;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' || c == 0xA0 ||
         (c >= 0x2000 && c <= 0x200B) || c == 0x202F || c == 0x205F || c == 0x3000 || c == 0xFEFF;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    const bool alnum = (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || (c >= U'0' && c <= U'9');
    return !alnum && c > 0x20;
  }
  return (c >= 0xA1 && c <= 0xBF) || c == 0xD7 || c == 0xF7 || (c >= 0x2010 && c <= 0x205E) ||
         (c >= 0x3001 && c <= 0x303F) || (c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
         c == kReplacement;
}

std::vector<std::string> split_tokens(std::string_view normalized) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < normalized.size()) {
    const auto end = normalized.find(' ', start);
    const auto stop = end == std::string_view::npos ? normalized.size() : end;
    if (stop > start) out.emplace_back(normalized.substr(start, stop - start));
    start = stop + 1;
  }
  return out;
}

}  // namespace

std::string normalize_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < raw.size()) {
    char32_t c = decode_utf8(raw, i);
    if (is_space(c) || is_punct(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    encode_utf8(to_lower(c), out);
  }
  constexpr std::string_view article = "the ";
  while (out.starts_with(article)) out.erase(0, article.size());
  return out;
}

Gazetteer Gazetteer::from_entries(std::vector<GazetteerEntry> entries) {
  Gazetteer g;
  g.entries_ = std::move(entries);
  std::unordered_map<std::string, std::size_t> canonicals;
  for (std::size_t e = 0; e < g.entries_.size(); ++e) {
    const auto& entry = g.entries_[e];
    if (entry.canonical.empty() || normalize_text(entry.canonical).empty()) {
      throw Error(ErrorKind::ParseError, "gazetteer record " + std::to_string(e) + ": empty canonical name");
    }
    if (entry.canonical == kUnresolvedLabel) {
      throw Error(ErrorKind::ParseError, "gazetteer record " + std::to_string(e) + ": reserved canonical name");
    }
    if (!canonicals.emplace(entry.canonical, e).second) {
      throw Error(ErrorKind::ParseError,
                  "gazetteer record " + std::to_string(e) + ": duplicate canonical '" + entry.canonical + "'");
    }

    std::vector<std::string_view> forms{entry.canonical};
    forms.insert(forms.end(), entry.aliases.begin(), entry.aliases.end());
    for (const auto form : forms) {
      auto key = normalize_text(form);
      if (key.empty()) {
        throw Error(ErrorKind::ParseError, "gazetteer record " + std::to_string(e) + ": alias '" +
                                               std::string(form) + "' is empty after normalization");
      }
      auto [it, inserted] = g.index_.emplace(key, e);
      if (!inserted) {
        if (it->second != e) {
          throw Error(ErrorKind::DuplicateAlias, "alias '" + key + "' maps to both '" +
                                                     g.entries_[it->second].canonical + "' and '" +
                                                     entry.canonical + "'");
        }
        continue;
      }
      AliasTokens alias{split_tokens(key), e};
      g.by_first_token_[alias.tokens.front()].push_back(g.aliases_.size());
      g.aliases_.push_back(std::move(alias));
    }
  }
  return g;
}

Gazetteer Gazetteer::parse(std::string_view json_text, std::string_view source) {
  if (json_text.find_first_not_of(" \t\r\n") == std::string_view::npos) return Gazetteer{};

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& ex) {
    const auto upto = json_text.substr(0, std::min<std::size_t>(ex.byte, json_text.size()));
    const auto line = 1 + std::count(upto.begin(), upto.end(), '\n');
    throw Error(ErrorKind::ParseError, std::string(source) + ":" + std::to_string(line) + ": " + ex.what());
  }
  if (!doc.is_array()) throw Error(ErrorKind::ParseError, std::string(source) + ": expected a JSON array");

  std::vector<GazetteerEntry> entries;
  entries.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    auto fail = [&](const std::string& what) {
      throw Error(ErrorKind::ParseError, std::string(source) + ": record " + std::to_string(i) + ": " + what);
    };
    if (!rec.is_object()) fail("expected an object");
    if (!rec.contains("canonical") || !rec["canonical"].is_string()) fail("missing string field 'canonical'");
    GazetteerEntry entry;
    entry.canonical = rec["canonical"].get<std::string>();
    if (rec.contains("aliases")) {
      if (!rec["aliases"].is_array()) fail("'aliases' must be an array");
      for (const auto& a : rec["aliases"]) {
        if (!a.is_string()) fail("aliases must be strings");
        entry.aliases.push_back(a.get<std::string>());
      }
    }
    entries.push_back(std::move(entry));
  }
  return from_entries(std::move(entries));
}

Gazetteer Gazetteer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open gazetteer '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

bool Gazetteer::contains_canonical(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.canonical == name) return true;
  }
  return false;
}

std::optional<std::string> Gazetteer::lookup(std::string_view text) const {
  auto it = index_.find(normalize_text(text));
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].canonical;
}

std::optional<std::string> Gazetteer::extract(std::string_view response) const {
  const auto tokens = split_tokens(normalize_text(response));
  const AliasTokens* best = nullptr;
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    auto bucket = by_first_token_.find(tokens[pos]);
    if (bucket == by_first_token_.end()) continue;
    for (const auto idx : bucket->second) {
      const auto& alias = aliases_[idx];
      if (pos + alias.tokens.size() > tokens.size()) continue;
      if (!std::equal(alias.tokens.begin(), alias.tokens.end(), tokens.begin() + static_cast<std::ptrdiff_t>(pos))) {
        continue;
      }
      // Positions are visited in order, so only a strictly longer alias displaces the current best.
      if (best == nullptr || alias.tokens.size() > best->tokens.size()) best = &alias;
    }
  }
  if (best == nullptr) return std::nullopt;
  return entries_[best->entry].canonical;
}

}  // namespace geoprobe
