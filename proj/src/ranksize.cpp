#include "geoprobe/ranksize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "geoprobe/csv.hpp"
#include "geoprobe/error.hpp"

namespace geoprobe {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool has_letter(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalpha(c) || c >= 0x80; });
}

void erase_all(std::string& s, std::string_view what) {
  for (auto pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos)) s.erase(pos, what.size());
}

double magnitude(std::string_view suffix) {
  const auto s = lower_ascii(suffix);
  if (s == "million" || s == "millions" || s == "mio" || s == "mn" || s == "m") return 1e6;
  if (s == "thousand" || s == "k") return 1e3;
  if (s == "billion" || s == "bn" || s == "b") return 1e9;
  return 1.0;
}

// Number with optional magnitude word. Group 1: digits, group 2: suffix.
const std::regex& number_re() {
  static const std::regex re(
      R"((\d{1,3}(?:,\d{3})+|\d{1,3}(?:\.\d{3}){2,}|\d{1,3}(?:\xE2\x80\xAF\d{3})+|\d+(?:\.\d+)?)(?:\s*(millions?|mio|mn|thousand|billion|bn|[mkb])(?![A-Za-z]))?)",
      std::regex::icase);
  return re;
}

std::optional<std::int64_t> number_value(std::string digits, std::string_view suffix) {
  const bool dotted_thousands = std::count(digits.begin(), digits.end(), '.') >= 2;
  erase_all(digits, ",");
  erase_all(digits, "\xE2\x80\xAF");
  if (dotted_thousands) erase_all(digits, ".");
  double v = 0.0;
  try {
    v = std::stod(digits);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  const double scale = magnitude(suffix);
  if (scale == 1.0 && v != std::floor(v)) return std::nullopt;
  const auto value = std::llround(v * scale);
  if (value <= 0) return std::nullopt;
  return value;
}

bool is_trailer_ok(std::string_view trailer) {
  const auto t = trim(trailer);
  if (t.empty()) return true;
  const auto c = static_cast<unsigned char>(t.front());
  if (!std::isalpha(c)) return true;
  static const std::regex unit_re(R"(^(people|persons|residents|inhabitants|inh\.?|pop\.?|population)\b.*)",
                                  std::regex::icase);
  return std::regex_match(t, unit_re);
}

std::string clean_name(std::string_view raw) {
  std::string name = trim(raw);
  // Strip trailing separators and filler words until stable.
  static const std::vector<std::string> fillers{"population", "pop.", "pop", "approx.", "approx", "approximately",
                                                "about", "around", "roughly", "est.", "est", "estimated", "~", "≈"};
  static const std::vector<std::string> separators{"–", "—", "-", ":", "|", ",", "=", "(", "~", "≈"};
  bool changed = true;
  while (changed && !name.empty()) {
    changed = false;
    name = trim(name);
    for (const auto& sep : separators) {
      if (name.size() >= sep.size() && name.ends_with(sep)) {
        name.erase(name.size() - sep.size());
        changed = true;
      }
    }
    const auto lower = lower_ascii(name);
    for (const auto& f : fillers) {
      if (lower.size() > f.size() && lower.ends_with(f)) {
        const auto before = static_cast<unsigned char>(lower[lower.size() - f.size() - 1]);
        if (!std::isalnum(before)) {
          name.erase(name.size() - f.size());
          changed = true;
          break;
        }
      }
    }
  }
  // Trailing parenthetical annotation, e.g. "Veltara (capital)".
  if (name.ends_with(")")) {
    const auto open = name.rfind('(');
    if (open != std::string::npos && open > 0) name = trim(name.substr(0, open));
  }
  if (name.size() >= 2 && (name.front() == '"' || name.front() == '\'') && name.back() == name.front()) {
    name = name.substr(1, name.size() - 2);
  }
  return trim(name);
}

struct LineResult {
  std::optional<CityEntry> city;
  std::string reason;
  bool skip = false;  // structural line, not a failure
};

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (const char c : s) {
    const bool space = c == ' ' || c == '\t';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

LineResult finish(std::string name, std::int64_t population) {
  if (name.empty() || !has_letter(name)) return {std::nullopt, "no city name", false};
  const auto lower = lower_ascii(name);
  if (lower.starts_with("total") || lower.starts_with("sum") || lower.starts_with("combined")) {
    return {std::nullopt, "summary line", false};
  }
  if (word_count(name) > 6) return {std::nullopt, "prose, not a list entry", false};
  return {CityEntry{std::move(name), population, 0}, {}, false};
}

LineResult parse_table_row(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (start <= line.size()) {
    auto bar = line.find('|', start);
    if (bar == std::string_view::npos) bar = line.size();
    cells.push_back(trim(line.substr(start, bar - start)));
    start = bar + 1;
  }
  if (!cells.empty() && cells.front().empty()) cells.erase(cells.begin());
  if (!cells.empty() && cells.back().empty()) cells.pop_back();
  const bool separator = std::all_of(cells.begin(), cells.end(), [](const std::string& c) {
    return c.find_first_not_of("-: ") == std::string::npos;
  });
  if (separator) return {std::nullopt, {}, true};

  std::optional<std::int64_t> best;
  std::size_t best_cell = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string cell = cells[i];
    erase_all(cell, "*");
    std::smatch m;
    if (!std::regex_match(cell, m, number_re())) continue;
    const auto v = number_value(m[1].str(), m[2].matched ? m[2].str() : "");
    if (v && (!best || *v > *best)) {
      best = v;
      best_cell = i;
    }
  }
  if (!best) return {std::nullopt, "no population figure", false};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i == best_cell) continue;
    std::string cell = cells[i];
    erase_all(cell, "*");
    if (has_letter(cell)) return finish(clean_name(cell), *best);
  }
  return {std::nullopt, "no city name", false};
}

LineResult parse_list_line(std::string_view raw_line) {
  std::string line = trim(raw_line);
  static const std::regex marker_re(R"(^(?:#?\d+\s*[.):]|[-*+]|\xE2\x80\xA2)\s+)");
  line = std::regex_replace(line, marker_re, "", std::regex_constants::format_first_only);
  erase_all(line, "**");
  erase_all(line, "__");
  erase_all(line, "`");
  erase_all(line, "*");

  std::optional<std::int64_t> best;
  std::string best_name;
  std::string reason = "no population figure";
  const auto begin = std::sregex_iterator(line.begin(), line.end(), number_re());
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const auto value = number_value(m[1].str(), m[2].matched ? m[2].str() : "");
    if (!value) continue;
    const auto before = std::string_view(line).substr(0, static_cast<std::size_t>(m.position(0)));
    const auto after = std::string_view(line).substr(static_cast<std::size_t>(m.position(0) + m.length(0)));
    if (!is_trailer_ok(after)) {
      reason = "number followed by prose";
      continue;
    }
    auto name = clean_name(before);
    if (!has_letter(name)) {
      reason = "no city name";
      continue;
    }
    if (!best || *value > *best) {
      best = value;
      best_name = std::move(name);
    }
  }
  if (!best) return {std::nullopt, reason, false};
  return finish(std::move(best_name), *best);
}

}  // namespace

std::vector<CityEntry> assign_ranks(std::vector<CityEntry> cities) {
  std::stable_sort(cities.begin(), cities.end(),
                   [](const CityEntry& a, const CityEntry& b) { return a.population > b.population; });
  for (std::size_t i = 0; i < cities.size(); ++i) cities[i].rank = static_cast<int>(i + 1);
  return cities;
}

namespace {

CityParse parse_city_lines(std::string_view raw) {
  CityParse out;
  std::vector<CityEntry> found;
  int line_no = 0;
  std::size_t start = 0;
  while (start < raw.size()) {
    auto end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    const auto line = raw.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.starts_with("```")) continue;

    const auto result = text.starts_with('|') ? parse_table_row(text) : parse_list_line(text);
    if (result.skip) continue;
    if (result.city) {
      out.report.raw_order.push_back(result.city->name);
      found.push_back(*result.city);
    } else {
      out.report.failures.push_back({line_no, text, result.reason});
    }
  }
  out.cities = assign_ranks(std::move(found));
  return out;
}

}  // namespace

CityParse parse_city_list(std::string_view raw) {
  auto out = parse_city_lines(raw);
  if (out.cities.empty()) throw Error(ErrorKind::NoCitiesFound, "no city entries could be parsed");
  return out;
}

std::string format_city_list(std::span<const CityEntry> cities) {
  std::string out;
  for (const auto& c : cities) {
    std::string digits = std::to_string(c.population);
    for (int pos = static_cast<int>(digits.size()) - 3; pos > 0; pos -= 3) digits.insert(static_cast<std::size_t>(pos), ",");
    out += std::to_string(c.rank) + ". " + c.name + " \xE2\x80\x93 " + digits + "\n";
  }
  return out;
}

double zipf_deviation(std::span<const CityEntry> cities) {
  if (cities.empty()) return 0.0;
  std::vector<CityEntry> ranked(cities.begin(), cities.end());
  std::sort(ranked.begin(), ranked.end(), [](const CityEntry& a, const CityEntry& b) { return a.rank < b.rank; });
  const double anchor = std::log10(static_cast<double>(ranked.front().population));
  double sum = 0.0;
  for (const auto& c : ranked) {
    const double predicted = anchor - std::log10(static_cast<double>(c.rank));
    sum += std::abs(std::log10(static_cast<double>(c.population)) - predicted);
  }
  return sum / static_cast<double>(ranked.size());
}

RankSizeFit fit_rank_size(std::span<const CityEntry> cities) {
  if (cities.size() < 3) throw Error(ErrorKind::TooFewCities, "rank-size fit needs at least 3 cities");
  std::vector<Point> points;
  points.reserve(cities.size());
  for (const auto& c : cities) {
    if (c.population <= 0) throw Error(ErrorKind::InvalidCity, "city '" + c.name + "' has non-positive population");
    if (c.rank < 1) throw Error(ErrorKind::InvalidCity, "city '" + c.name + "' has no rank");
    points.push_back({static_cast<double>(c.rank), static_cast<double>(c.population)});
  }
  RankSizeFit out;
  out.fit = ols_loglog(points);
  out.zipf_deviation = zipf_deviation(cities);
  return out;
}

std::vector<std::int64_t> cumulative_populations(std::span<const CityEntry> cities) {
  std::vector<CityEntry> ranked(cities.begin(), cities.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const CityEntry& a, const CityEntry& b) { return a.rank < b.rank; });
  std::vector<std::int64_t> out;
  std::int64_t running = 0;
  for (const auto& c : ranked) {
    running += c.population;
    out.push_back(running);
  }
  return out;
}

std::optional<int> budget_check(std::span<const CityEntry> cities, std::int64_t budget) {
  if (budget <= 0) throw Error(ErrorKind::InvalidArgument, "budget must be > 0");
  const auto cumulative = cumulative_populations(cities);
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (cumulative[i] > budget) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

RankSizeFit assess_city_list(std::span<const CityEntry> cities, std::int64_t budget) {
  auto out = fit_rank_size(cities);
  out.budget = budget;
  out.violation_rank = budget_check(cities, budget);
  out.cumulative = cumulative_populations(cities);
  return out;
}

bool mentions_rank_size(std::string_view reply) {
  const auto lower = lower_ascii(reply);
  return lower.find("zipf") != std::string::npos || lower.find("rank-size") != std::string::npos ||
         lower.find("rank\xE2\x80\x93size") != std::string::npos || lower.find("rank size") != std::string::npos;
}

std::string build_nation_prompt(std::string_view nation, std::int64_t population, int city_count) {
  if (population <= 0 || city_count < 1) throw Error(ErrorKind::InvalidArgument, "nation prompt needs population > 0 and count >= 1");
  std::string millions = std::to_string(population / 1'000'000);
  const std::string pop = population % 1'000'000 == 0 ? millions + " million" : std::to_string(population);
  return "Imagine a newly founded island nation called " + std::string(nation) +
         ". Its technology and economy are comparable to those of the United States or Japan, and its total "
         "population is " + pop + ". List the names and populations of its " + std::to_string(city_count) +
         " largest cities.";
}

std::vector<NationRun> nation_probe(Sampler& sampler, std::string_view nation_prompt, int runs, double temperature,
                                    std::int64_t budget, int expected_count) {
  if (runs < 1) throw Error(ErrorKind::InvalidArgument, "runs must be >= 1");
  const auto replies = sampler.generate_batch(nation_prompt, temperature, runs);
  std::vector<NationRun> out;
  for (int r = 0; r < runs; ++r) {
    NationRun run;
    run.run = r;
    run.raw = replies[static_cast<std::size_t>(r)];
    run.mentions_rank_size = mentions_rank_size(run.raw);
    auto parsed = parse_city_lines(run.raw);
    run.cities = std::move(parsed.cities);
    run.parse_report = std::move(parsed.report);
    if (run.cities.empty()) {
      run.excluded = true;
      run.error = std::string(to_string(ErrorKind::NoCitiesFound));
    } else {
      if (expected_count > 0 && static_cast<int>(run.cities.size()) != expected_count) {
        run.warnings.push_back("parsed " + std::to_string(run.cities.size()) + " cities, expected " +
                               std::to_string(expected_count));
      }
      try {
        run.fit = assess_city_list(run.cities, budget);
      } catch (const Error& ex) {
        run.excluded = true;
        run.error = std::string(to_string(ex.kind()));
      }
    }
    out.push_back(std::move(run));
  }
  return out;
}

std::vector<CityEntry> reference_cities_from_csv(std::string_view text, std::string_view source) {
  const auto rows = parse_csv(text, source);
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "name" || rows[0][1] != "population") {
    throw Error(ErrorKind::ParseError, std::string(source) + ": expected header 'name,population'");
  }
  std::vector<CityEntry> cities;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::ParseError, std::string(source) + ": row " + std::to_string(r + 1) + ": " + why);
    };
    if (row.size() != 2) fail("expected 2 fields");
    std::string digits = row[1];
    erase_all(digits, ",");
    digits = trim(digits);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
      fail("bad population '" + row[1] + "'");
    }
    cities.push_back({trim(row[0]), std::stoll(digits), 0});
  }
  return assign_ranks(std::move(cities));
}

std::vector<CityEntry> load_reference_cities(const std::filesystem::path& path) {
  const auto rows_text = [&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open reference cities '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }();
  return reference_cities_from_csv(rows_text, path.string());
}

ReferenceComparison compare_reference(const RankSizeFit& generated, std::span<const CityEntry> reference) {
  ReferenceComparison out;
  out.reference = fit_rank_size(reference);
  out.slope_delta = generated.fit.slope - out.reference.fit.slope;
  out.r2_delta = generated.fit.r_squared - out.reference.fit.r_squared;
  out.deviation_delta = generated.zipf_deviation - out.reference.zipf_deviation;
  return out;
}

ReferenceComparison compare_reference(const RankSizeFit& generated, const std::filesystem::path& reference_csv) {
  return compare_reference(generated, load_reference_cities(reference_csv));
}

}  // namespace geoprobe
