#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geoprobe/sampler.hpp"
#include "geoprobe/stats.hpp"

namespace geoprobe {

struct CityEntry {
  std::string name;
  std::int64_t population = 0;
  int rank = 0;

  bool operator==(const CityEntry&) const = default;
};

struct LineFailure {
  int line = 0;  // 1-based
  std::string text;
  std::string reason;
};

struct ParseReport {
  std::vector<std::string> raw_order;  // city names as they appeared
  std::vector<LineFailure> failures;
};

struct CityParse {
  std::vector<CityEntry> cities;  // sorted by population, ranks 1..n
  ParseReport report;
};

// Accepts numbered or bulleted lines ("1. Veltara – 5,200,000"), markdown
// table rows, thousands separators and magnitude words ("3.1 million").
// Unparseable lines are recorded, not fatal. Throws NoCitiesFound.
CityParse parse_city_list(std::string_view raw);

// Sorts by population descending (stable, so ties keep input order) and
// assigns ranks 1..n.
std::vector<CityEntry> assign_ranks(std::vector<CityEntry> cities);

// Canonical numbered form, one "r. name – population" line per city.
std::string format_city_list(std::span<const CityEntry> cities);

struct RankSizeFit {
  OlsFit fit;  // ln population on ln rank; slope = −α
  double zipf_deviation = 0.0;
  std::int64_t budget = 0;
  std::optional<int> violation_rank;
  std::vector<std::int64_t> cumulative;

  double zipf_exponent() const { return -fit.slope; }
};

// Throws TooFewCities (< 3) or InvalidCity (population <= 0). Budget fields
// are left empty.
RankSizeFit fit_rank_size(std::span<const CityEntry> cities);

// mean |log10 pop_r − log10(pop_1 / r)| over ranks.
double zipf_deviation(std::span<const CityEntry> cities);

// Smallest rank whose running total exceeds the budget.
std::optional<int> budget_check(std::span<const CityEntry> cities, std::int64_t budget);

std::vector<std::int64_t> cumulative_populations(std::span<const CityEntry> cities);

// Fit plus budget bookkeeping.
RankSizeFit assess_city_list(std::span<const CityEntry> cities, std::int64_t budget);

// Case-insensitive "zipf" / "rank-size" mention.
bool mentions_rank_size(std::string_view reply);

struct NationRun {
  int run = 0;
  std::string raw;
  std::vector<CityEntry> cities;
  ParseReport parse_report;
  std::optional<RankSizeFit> fit;
  bool mentions_rank_size = false;
  bool excluded = false;
  std::string error;  // why the run was excluded
  std::vector<std::string> warnings;
};

// Default fictitious-nation prompt. The wording is a reconstruction, not a
// recorded original.
std::string build_nation_prompt(std::string_view nation, std::int64_t population, int city_count);

// One generation per run (sample_index = run). Runs that fail to parse or
// fit are excluded and carry the reason.
std::vector<NationRun> nation_probe(Sampler& sampler, std::string_view nation_prompt, int runs, double temperature,
                                    std::int64_t budget, int expected_count);

// CSV with header `name,population`.
std::vector<CityEntry> load_reference_cities(const std::filesystem::path& path);
std::vector<CityEntry> reference_cities_from_csv(std::string_view text, std::string_view source = "<memory>");

struct ReferenceComparison {
  RankSizeFit reference;
  double slope_delta = 0.0;      // generated − reference
  double r2_delta = 0.0;
  double deviation_delta = 0.0;
};

ReferenceComparison compare_reference(const RankSizeFit& generated, std::span<const CityEntry> reference);
ReferenceComparison compare_reference(const RankSizeFit& generated, const std::filesystem::path& reference_csv);

}  // namespace geoprobe
