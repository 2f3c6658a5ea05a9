#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "geoprobe/defaults.hpp"
#include "geoprobe/personas.hpp"
#include "geoprobe/ranksize.hpp"
#include "geoprobe/stats.hpp"

namespace geoprobe {

using nlohmann::json;

// Reports round floats to 6 significant digits for byte stability.
json num(double value);

json to_json(const CategoricalDist& dist);
CategoricalDist dist_from_json(const json& j);

json to_json(const DefaultStrengthResult& r);
json to_json(const BrittlenessResult& r);
json to_json(const PersonaRecord& p);
json to_json(const DistributionAudit& a);
json to_json(const RankSizeFit& f);
json to_json(const NationRun& run);
json to_json(const ReferenceComparison& c);

// ---------------------------------------------------------------------------
// distributions.csv

using DistributionTable = std::map<std::string, CategoricalDist>;

// Header `key,label,count,share`; rows by key, then descending count, then
// label. The unresolved bucket is written as `__unresolved__`.
std::string distribution_csv(const DistributionTable& dists);
void emit_distribution_csv(const DistributionTable& dists, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Charts

struct Bar {
  std::string label;
  std::vector<double> values;  // one per series
};

struct BarChart {
  std::string title;
  std::vector<std::string> series;  // legend entries; one unnamed series is fine
  std::vector<Bar> bars;
};

BarChart bar_chart(const CategoricalDist& dist, std::string title);

// Self-contained 800x400 SVG with bars sorted by the first series,
// descending. Output depends only on the chart. Throws InvalidChart.
std::string render_bar_chart_svg(const BarChart& chart);
void write_bar_chart_svg(const BarChart& chart, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Report-derived artifacts; shared by the probe subcommands and `report`.

DistributionTable distributions_from_report(const json& report);
std::vector<std::pair<std::string, BarChart>> charts_from_report(const json& report);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace geoprobe
