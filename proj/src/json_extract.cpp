#include "geoprobe/json_extract.hpp"

namespace geoprobe {

namespace {

// Index one past the bracket closing the '[' at `open`, or npos.
std::size_t matching_close(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      ++depth;
    } else if (c == ']' || c == '}') {
      if (--depth == 0) return i + 1;
      if (depth < 0) return std::string_view::npos;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<nlohmann::json> first_json_array(std::string_view text,
                                               const std::function<bool(const nlohmann::json&)>& accept) {
  for (auto open = text.find('['); open != std::string_view::npos; open = text.find('[', open + 1)) {
    const auto close = matching_close(text, open);
    if (close == std::string_view::npos) continue;
    auto doc = nlohmann::json::parse(text.substr(open, close - open), nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) continue;
    if (accept && !accept(doc)) continue;
    return doc;
  }
  return std::nullopt;
}

}  // namespace geoprobe
