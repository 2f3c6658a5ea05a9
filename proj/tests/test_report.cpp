#include <cstdlib>

#include <gtest/gtest.h>

#include "geoprobe/error.hpp"
#include "geoprobe/report.hpp"
#include "test_util.hpp"

using namespace geoprobe;

namespace {

std::filesystem::path golden(const std::string& name) { return std::filesystem::path(GEOPROBE_TEST_DIR) / "golden" / name; }

// Set GEOPROBE_UPDATE_GOLDEN=1 to rewrite the stored files.
void expect_golden(const std::string& name, const std::string& actual) {
  if (std::getenv("GEOPROBE_UPDATE_GOLDEN") != nullptr) write_text_file(golden(name), actual);
  EXPECT_EQ(read_text_file(golden(name)), actual) << name;
}

const CategoricalDist kCountries{{{"Japan", 168}, {"Canada", 20}, {"Brazil", 12}}};

}  // namespace

TEST(Num, SixSignificantDigits) {
  EXPECT_EQ(num(0.123456789).dump(), "0.123457");
  EXPECT_EQ(num(1234567.0).dump(), "1234570.0");
  EXPECT_EQ(num(0.84).dump(), "0.84");
  EXPECT_TRUE(num(std::nan("")).is_null());
}

TEST(DistributionCsv, RowsAndShares) {
  const auto csv = distribution_csv({{"T=0.3", kCountries}});
  EXPECT_EQ(csv,
            "key,label,count,share\n"
            "T=0.3,Japan,168,0.840000\n"
            "T=0.3,Canada,20,0.100000\n"
            "T=0.3,Brazil,12,0.060000\n");
}

TEST(DistributionCsv, UnresolvedAndQuoting) {
  CategoricalDist d{{{"Korea, South", 3}, {"Chad", 3}}, 4};
  const auto csv = distribution_csv({{"b", d}, {"a", CategoricalDist{{{"x", 1}}}}});
  EXPECT_EQ(csv,
            "key,label,count,share\n"
            "a,x,1,1.000000\n"
            "b,__unresolved__,4,0.400000\n"
            "b,Chad,3,0.300000\n"
            "b,\"Korea, South\",3,0.300000\n");
}

TEST(DistJson, RoundTrip) {
  CategoricalDist d{{{"a", 3}, {"b", 1}}, 2};
  EXPECT_EQ(dist_from_json(to_json(d)), d);
  auto j = to_json(d);
  j["total"] = 99;
  EXPECT_THROW(dist_from_json(j), Error);
}

TEST(Svg, Golden) {
  expect_golden("countries.svg", render_bar_chart_svg(bar_chart(kCountries, "Name a country <T=0.3>")));
  BarChart grouped{"Shares", {"generated", "reference"}, {{"A", {0.5, 0.4}}, {"B", {0.2, 0.35}}, {"C", {0.3, 0.25}}}};
  expect_golden("grouped.svg", render_bar_chart_svg(grouped));
}

TEST(Svg, DeterministicAndOrderIndependent) {
  const auto a = render_bar_chart_svg(bar_chart(kCountries, "t"));
  EXPECT_EQ(a, render_bar_chart_svg(bar_chart(kCountries, "t")));
  BarChart shuffled{"t", {"count"}, {{"Brazil", {12}}, {"Japan", {168}}, {"Canada", {20}}}};
  EXPECT_EQ(a, render_bar_chart_svg(shuffled));
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_NE(a.find("viewBox=\"0 0 800 400\""), std::string::npos);
  EXPECT_NE(render_bar_chart_svg(bar_chart(kCountries, "a&b")).find("a&amp;b"), std::string::npos);
}

TEST(Svg, InvalidCharts) {
  auto kind = [](const BarChart& c) {
    try {
      render_bar_chart_svg(c);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::ConfigError;
  };
  EXPECT_EQ(kind(BarChart{"empty", {"n"}, {}}), ErrorKind::InvalidChart);
  EXPECT_EQ(kind(BarChart{"neg", {"n"}, {{"a", {-1.0}}}}), ErrorKind::InvalidChart);
  EXPECT_EQ(kind(BarChart{"nan", {"n"}, {{"a", {std::nan("")}}}}), ErrorKind::InvalidChart);
  EXPECT_EQ(kind(BarChart{"arity", {"x", "y"}, {{"a", {1.0}}}}), ErrorKind::InvalidChart);
}

TEST(Svg, AllZeroIsFine) {
  EXPECT_NO_THROW(render_bar_chart_svg(BarChart{"z", {"n"}, {{"a", {0.0}}, {"b", {0.0}}}}));
}

TEST(ReportDerived, DefaultsReport) {
  json result = {{"concept", "country"},
                 {"per_temperature",
                  json::array({{{"temperature", 0.3}, {"distribution", to_json(kCountries)}},
                               {{"temperature", 1.0}, {"distribution", to_json(CategoricalDist{{{"Peru", 2}}})}}})}};
  const json report = {{"probe", "defaults"}, {"result", result}};
  const auto dists = distributions_from_report(report);
  ASSERT_EQ(dists.size(), 2u);
  EXPECT_EQ(dists.at("T=0.3"), kCountries);
  const auto charts = charts_from_report(report);
  ASSERT_EQ(charts.size(), 2u);
  EXPECT_EQ(charts[0].first, "chart-defaults-T0.3.svg");
  EXPECT_EQ(charts[1].first, "chart-defaults-T1.svg");

  // Re-serializing the parsed report reproduces it byte for byte.
  const auto text = report.dump(2);
  EXPECT_EQ(json::parse(text).dump(2), text);
  EXPECT_THROW(distributions_from_report(json{{"probe", "weather"}, {"result", json::object()}}), Error);
}

TEST(Files, WriteAndRead) {
  testutil::TempDir dir;
  write_text_file(dir / "a.txt", "hello\n");
  EXPECT_EQ(read_text_file(dir / "a.txt"), "hello\n");
  EXPECT_THROW(read_text_file(dir / "missing.txt"), Error);
  EXPECT_THROW(write_text_file(dir.path() / "no" / "such" / "dir.txt", "x"), Error);
}
