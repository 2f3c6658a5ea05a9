#pragma once

#include <functional>
#include <optional>
#include <string_view>

#include <json.hpp>

namespace geoprobe {

// First bracket-balanced substring of `text` that parses as a JSON array and
// satisfies `accept`. Surrounding prose and markdown code fences are ignored.
std::optional<nlohmann::json> first_json_array(std::string_view text,
                                               const std::function<bool(const nlohmann::json&)>& accept = {});

}  // namespace geoprobe
