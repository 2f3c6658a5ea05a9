#include "geoprobe/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "geoprobe/csv.hpp"
#include "geoprobe/error.hpp"
#include "geoprobe/format.hpp"

namespace geoprobe {

json num(double value) {
  if (!std::isfinite(value)) return nullptr;
  return round_significant(value, 6);
}

namespace {

json opt_num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

json matrix(const std::vector<std::vector<double>>& m) {
  json out = json::array();
  for (const auto& row : m) {
    json r = json::array();
    for (const double v : row) r.push_back(num(v));
    out.push_back(std::move(r));
  }
  return out;
}

std::string short_number(double v) {
  auto s = format_fixed(v, 6);
  if (s.find('.') != std::string::npos) {
    while (s.ends_with('0')) s.pop_back();
    if (s.ends_with('.')) s.pop_back();
  }
  return s;
}

}  // namespace

json to_json(const CategoricalDist& dist) {
  json counts = json::object();
  for (const auto& [label, n] : dist.entries()) counts[label] = n;
  return {{"total", dist.total()}, {"unresolved", dist.unresolved()}, {"counts", counts}};
}

CategoricalDist dist_from_json(const json& j) {
  CategoricalDist d;
  for (const auto& [label, n] : j.at("counts").items()) d.add(label, n.get<std::int64_t>());
  d.add_unresolved(j.value("unresolved", std::int64_t{0}));
  if (j.contains("total") && j["total"].get<std::int64_t>() != d.total()) {
    throw Error(ErrorKind::ParseError, "distribution total does not match its counts");
  }
  return d;
}

namespace {

json break_json(const std::optional<BreakPoint>& b) {
  if (!b) return nullptr;
  return {{"temperature", num(b->temperature)},
          {"challenger", b->challenger},
          {"challenger_share", num(b->challenger_share)},
          {"challenger_lower_bound", num(b->challenger_lower_bound)}};
}

}  // namespace

json to_json(const DefaultStrengthResult& r) {
  json per_t = json::array();
  for (const auto& p : r.per_temperature) {
    per_t.push_back({{"temperature", num(p.temperature)},
                     {"default_share", num(p.dist.probability(r.default_label))},
                     {"distribution", to_json(p.dist)}});
  }
  return {
      {"concept", r.concept_name},
      {"prompt", r.prompt},
      {"default_label", r.default_label},
      {"break_temperature", opt_num(r.break_temperature())},
      {"no_break", !r.wilson_break.has_value()},
      {"challenger", r.wilson_break ? json(r.wilson_break->challenger) : json(nullptr)},
      {"wilson_break", break_json(r.wilson_break)},
      {"raw_frequency_break", break_json(r.raw_break)},
      {"decision_rule",
       {{"delta", num(r.rule.delta)},
        {"z", num(r.rule.z)},
        {"samples_per_temperature", r.rule.samples_per_temperature},
        {"criterion", "wilson_lower_bound(count_i, n, z) > delta for some label i != default"}}},
      {"per_temperature", per_t},
  };
}

json to_json(const BrittlenessResult& r) {
  json per_prompt = json::array();
  for (const auto& p : r.per_prompt) {
    json entry = {{"prompt", p.prompt}, {"all_unresolved", p.all_unresolved}, {"distribution", to_json(p.dist)}};
    try {
      const auto mode = identify_default(p.dist);
      entry["mode"] = mode;
      entry["mode_count"] = p.dist.count(mode);
      entry["mode_share"] = num(p.dist.probability(mode));
    } catch (const Error&) {
      entry["mode"] = nullptr;
    }
    per_prompt.push_back(std::move(entry));
  }
  return {{"temperature", num(r.temperature)}, {"samples_per_prompt", r.samples},
          {"per_prompt", per_prompt},         {"pairwise_jsd", matrix(r.pairwise_jsd)},
          {"pairwise_tv", matrix(r.pairwise_tv)}, {"max_jsd", num(r.max_jsd)},
          {"max_tv", num(r.max_tv)},          {"jsd_units", "nats"}};
}

json to_json(const PersonaRecord& p) {
  return {{"id", p.id},
          {"name", p.name},
          {"age", p.age},
          {"occupation", p.occupation},
          {"ethnicity", p.ethnicity},
          {"residence", p.residence}};
}

json to_json(const DistributionAudit& a) {
  json per_category = json::array();
  for (const auto& d : a.per_category) {
    per_category.push_back({{"category", d.category},
                            {"observed_share", num(d.observed_share)},
                            {"reference_share", num(d.reference_share)},
                            {"delta", num(d.delta)}});
  }
  json chi = nullptr;
  if (a.chi_square) {
    json cells = json::array();
    for (const auto& c : a.chi_square->cells) {
      cells.push_back({{"category", c.label}, {"observed", num(c.observed)}, {"expected", num(c.expected)}});
    }
    chi = {{"statistic", num(a.chi_square->statistic)},
           {"df", a.chi_square->df},
           {"p_value", num(a.chi_square->p_value)},
           {"cells", cells}};
  }
  json reference = json::object();
  for (const auto& [c, p] : a.reference.categories) reference[c] = num(p);
  return {{"field", std::string(to_string(a.field))},
          {"reference_name", a.reference.name},
          {"reference", reference},
          {"observed", to_json(a.observed)},
          {"tv", num(a.tv)},
          {"chi_square", chi},
          {"per_category", per_category},
          {"notes", a.notes}};
}

json to_json(const RankSizeFit& f) {
  return {{"slope", num(f.fit.slope)},
          {"intercept", num(f.fit.intercept)},
          {"r_squared", num(f.fit.r_squared)},
          {"n", f.fit.n},
          {"zipf_exponent", num(f.zipf_exponent())},
          {"zipf_deviation", num(f.zipf_deviation)},
          {"budget", f.budget},
          {"violation_rank", f.violation_rank ? json(*f.violation_rank) : json(nullptr)},
          {"cumulative", f.cumulative}};
}

json to_json(const NationRun& run) {
  json cities = json::array();
  for (const auto& c : run.cities) cities.push_back({{"rank", c.rank}, {"name", c.name}, {"population", c.population}});
  json failures = json::array();
  for (const auto& f : run.parse_report.failures) {
    failures.push_back({{"line", f.line}, {"text", f.text}, {"reason", f.reason}});
  }
  return {{"run", run.run},
          {"mentions_rank_size", run.mentions_rank_size},
          {"excluded", run.excluded},
          {"error", run.error.empty() ? json(nullptr) : json(run.error)},
          {"cities", cities},
          {"raw_order", run.parse_report.raw_order},
          {"parse_failures", failures},
          {"fit", run.fit ? to_json(*run.fit) : json(nullptr)},
          {"warnings", run.warnings}};
}

json to_json(const ReferenceComparison& c) {
  return {{"reference_fit", to_json(c.reference)},
          {"slope_delta", num(c.slope_delta)},
          {"r2_delta", num(c.r2_delta)},
          {"deviation_delta", num(c.deviation_delta)}};
}

std::string distribution_csv(const DistributionTable& dists) {
  std::string out = "key,label,count,share\n";
  for (const auto& [key, dist] : dists) {
    std::vector<std::pair<std::string, std::int64_t>> rows(dist.entries().begin(), dist.entries().end());
    if (dist.unresolved() > 0) rows.emplace_back(std::string(kUnresolvedLabel), dist.unresolved());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    for (const auto& [label, count] : rows) {
      const double share = dist.total() > 0 ? static_cast<double>(count) / static_cast<double>(dist.total()) : 0.0;
      out += csv_escape(key) + "," + csv_escape(label) + "," + std::to_string(count) + "," + format_fixed(share, 6) + "\n";
    }
  }
  return out;
}

void emit_distribution_csv(const DistributionTable& dists, const std::filesystem::path& path) {
  write_text_file(path, distribution_csv(dists));
}

BarChart bar_chart(const CategoricalDist& dist, std::string title) {
  BarChart chart;
  chart.title = std::move(title);
  chart.series = {"count"};
  for (const auto& [label, n] : dist.entries()) chart.bars.push_back({label, {static_cast<double>(n)}});
  if (dist.unresolved() > 0) {
    chart.bars.push_back({std::string(kUnresolvedLabel), {static_cast<double>(dist.unresolved())}});
  }
  return chart;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string value_label(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return format_fixed(v, 0);
  auto s = format_fixed(v, 4);
  while (s.ends_with('0')) s.pop_back();
  if (s.ends_with('.')) s.pop_back();
  return s;
}

std::string truncate_label(const std::string& s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return s;
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut) + "...";
}

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948"};

}  // namespace

std::string render_bar_chart_svg(const BarChart& chart) {
  if (chart.bars.empty()) throw Error(ErrorKind::InvalidChart, "chart '" + chart.title + "' has no bars");
  const std::size_t series = std::max<std::size_t>(1, chart.series.size());
  for (const auto& b : chart.bars) {
    if (b.values.size() != series) throw Error(ErrorKind::InvalidChart, "bar '" + b.label + "' has wrong series count");
    for (const double v : b.values) {
      if (!std::isfinite(v) || v < 0.0) throw Error(ErrorKind::InvalidChart, "bar '" + b.label + "' has invalid value");
    }
  }

  auto bars = chart.bars;
  std::stable_sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) {
    return a.values[0] != b.values[0] ? a.values[0] > b.values[0] : a.label < b.label;
  });
  double max_value = 0.0;
  for (const auto& b : bars) {
    for (const double v : b.values) max_value = std::max(max_value, v);
  }

  constexpr double width = 800, height = 400;
  constexpr double left = 60, right = 20, top = 50, bottom = 90;
  constexpr double plot_w = width - left - right;
  constexpr double plot_h = height - top - bottom;
  const double group_w = plot_w / static_cast<double>(bars.size());
  const double bar_w = group_w * 0.8 / static_cast<double>(series);
  const bool rotate = bars.size() > 8;

  auto f2 = [](double v) { return format_fixed(v, 2); };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 400\" width=\"800\" height=\"400\" "
         "font-family=\"sans-serif\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"400\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(chart.title) << "</text>\n";
  svg << "<line x1=\"" << f2(left) << "\" y1=\"" << f2(top + plot_h) << "\" x2=\"" << f2(left + plot_w) << "\" y2=\""
      << f2(top + plot_h) << "\" stroke=\"#333333\"/>\n";
  svg << "<line x1=\"" << f2(left) << "\" y1=\"" << f2(top) << "\" x2=\"" << f2(left) << "\" y2=\"" << f2(top + plot_h)
      << "\" stroke=\"#333333\"/>\n";

  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double group_x = left + group_w * static_cast<double>(i) + group_w * 0.1;
    for (std::size_t s = 0; s < series; ++s) {
      const double v = bars[i].values[s];
      const double h = max_value > 0.0 ? v / max_value * plot_h : 0.0;
      const double x = group_x + bar_w * static_cast<double>(s);
      const double y = top + plot_h - h;
      svg << "<rect x=\"" << f2(x) << "\" y=\"" << f2(y) << "\" width=\"" << f2(bar_w) << "\" height=\"" << f2(h)
          << "\" fill=\"" << kPalette[s % std::size(kPalette)] << "\"/>\n";
      svg << "<text x=\"" << f2(x + bar_w / 2) << "\" y=\"" << f2(y - 4) << "\" text-anchor=\"middle\" font-size=\"10\">"
          << value_label(v) << "</text>\n";
    }
    const double cx = left + group_w * (static_cast<double>(i) + 0.5);
    const double ly = top + plot_h + 16;
    svg << "<text x=\"" << f2(cx) << "\" y=\"" << f2(ly) << "\" font-size=\"11\" ";
    if (rotate) {
      svg << "text-anchor=\"end\" transform=\"rotate(-45 " << f2(cx) << " " << f2(ly) << ")\"";
    } else {
      svg << "text-anchor=\"middle\"";
    }
    svg << ">" << xml_escape(truncate_label(bars[i].label, 24)) << "</text>\n";
  }

  if (chart.series.size() > 1) {
    for (std::size_t s = 0; s < chart.series.size(); ++s) {
      const double lx = left + 10 + 180 * static_cast<double>(s);
      svg << "<rect x=\"" << f2(lx) << "\" y=\"34\" width=\"10\" height=\"10\" fill=\"" << kPalette[s % std::size(kPalette)]
          << "\"/>\n";
      svg << "<text x=\"" << f2(lx + 14) << "\" y=\"43\" font-size=\"11\">" << xml_escape(truncate_label(chart.series[s], 28))
          << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_bar_chart_svg(const BarChart& chart, const std::filesystem::path& path) {
  write_text_file(path, render_bar_chart_svg(chart));
}

namespace {

std::string temperature_key(double t) { return "T=" + short_number(t); }

BarChart grouped_share_chart(const json& audit, const std::string& title, const std::string& observed_name) {
  BarChart chart;
  chart.title = title;
  chart.series = {observed_name, "reference: " + audit.at("reference_name").get<std::string>()};
  for (const auto& row : audit.at("per_category")) {
    chart.bars.push_back({row.at("category").get<std::string>(),
                          {row.at("observed_share").get<double>(), row.at("reference_share").get<double>()}});
  }
  return chart;
}

std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

}  // namespace

DistributionTable distributions_from_report(const json& report) {
  DistributionTable out;
  const auto& probe = report.at("probe").get_ref<const std::string&>();
  const auto& result = report.at("result");
  if (probe == "defaults") {
    for (const auto& p : result.at("per_temperature")) {
      out.emplace(temperature_key(p.at("temperature").get<double>()), dist_from_json(p.at("distribution")));
    }
  } else if (probe == "brittleness") {
    int i = 1;
    for (const auto& p : result.at("per_prompt")) {
      out.emplace("prompt-" + std::to_string(i++) + ": " + p.at("prompt").get<std::string>(),
                  dist_from_json(p.at("distribution")));
    }
  } else if (probe == "personas") {
    const auto& a = result.at("stage_one_audit");
    out.emplace("stage1:" + a.at("field").get<std::string>(), dist_from_json(a.at("observed")));
    const auto& two = result.at("stage_two");
    if (two.is_object() && two.contains("audit") && two["audit"].is_object()) {
      out.emplace("stage2:" + two["audit"].at("field").get<std::string>(), dist_from_json(two["audit"].at("observed")));
    }
  } else if (probe == "ranksize") {
    for (const auto& run : result.at("per_run")) {
      CategoricalDist d;
      for (const auto& c : run.at("cities")) d.add(c.at("name").get<std::string>(), c.at("population").get<std::int64_t>());
      if (d.total() > 0) out.emplace("run-" + two_digits(run.at("run").get<int>() + 1), std::move(d));
    }
  } else {
    throw Error(ErrorKind::ParseError, "unknown probe '" + probe + "' in report");
  }
  return out;
}

std::vector<std::pair<std::string, BarChart>> charts_from_report(const json& report) {
  std::vector<std::pair<std::string, BarChart>> out;
  const auto& probe = report.at("probe").get_ref<const std::string&>();
  const auto& result = report.at("result");
  if (probe == "defaults") {
    for (const auto& p : result.at("per_temperature")) {
      const double t = p.at("temperature").get<double>();
      out.emplace_back("chart-defaults-T" + short_number(t) + ".svg",
                       bar_chart(dist_from_json(p.at("distribution")),
                                 result.at("concept").get<std::string>() + " replies at T=" + short_number(t)));
    }
  } else if (probe == "brittleness") {
    BarChart chart;
    chart.title = "Replies per paraphrase at T=" + short_number(result.at("temperature").get<double>());
    std::map<std::string, std::vector<double>> counts;
    const auto& prompts = result.at("per_prompt");
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      chart.series.push_back(prompts[i].at("prompt").get<std::string>());
      const auto d = dist_from_json(prompts[i].at("distribution"));
      for (const auto& [label, n] : d.shares()) {
        auto& v = counts[label];
        v.resize(prompts.size(), 0.0);
        v[i] = n;
      }
    }
    for (auto& [label, v] : counts) {
      v.resize(prompts.size(), 0.0);
      chart.bars.push_back({label, v});
    }
    out.emplace_back("chart-brittleness.svg", std::move(chart));
  } else if (probe == "personas") {
    out.emplace_back("chart-personas-stage1.svg",
                     grouped_share_chart(result.at("stage_one_audit"), "Generated population vs reference", "generated"));
    const auto& two = result.at("stage_two");
    if (two.is_object() && two.contains("audit") && two["audit"].is_object()) {
      out.emplace_back("chart-personas-stage2.svg",
                       grouped_share_chart(two["audit"], "Flagged subset vs reference", "flagged"));
    }
  } else if (probe == "ranksize") {
    for (const auto& run : result.at("per_run")) {
      if (run.at("cities").empty()) continue;
      BarChart chart;
      chart.title = "Generated city populations, run " + std::to_string(run.at("run").get<int>() + 1);
      chart.series = {"population"};
      for (const auto& c : run.at("cities")) {
        chart.bars.push_back({c.at("name").get<std::string>(), {static_cast<double>(c.at("population").get<std::int64_t>())}});
      }
      out.emplace_back("chart-ranksize-run-" + two_digits(run.at("run").get<int>() + 1) + ".svg", std::move(chart));
    }
  } else {
    throw Error(ErrorKind::ParseError, "unknown probe '" + probe + "' in report");
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "write to '" + path.string() + "' failed");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace geoprobe
