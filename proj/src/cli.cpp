#include "geoprobe/cli.hpp"

#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "geoprobe/backend.hpp"
#include "geoprobe/defaults.hpp"
#include "geoprobe/error.hpp"
#include "geoprobe/format.hpp"
#include "geoprobe/http_backend.hpp"
#include "geoprobe/normalize.hpp"
#include "geoprobe/personas.hpp"
#include "geoprobe/ranksize.hpp"
#include "geoprobe/report.hpp"
#include "geoprobe/response_cache.hpp"
#include "geoprobe/sampler.hpp"

#ifndef GEOPROBE_VERSION
#define GEOPROBE_VERSION "0.0.0"
#endif

namespace geoprobe {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kPersonaDisclaimer =
    "This audit reports distances between categorical distributions. A difference between the generated or "
    "flagged population and a reference distribution does not imply any racial bias.";

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception& ex) {
    config_error(std::string("config field '") + key + "': " + ex.what());
  }
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) config_error(where + ": missing field '" + key + "'");
  try {
    return j[key].get<T>();
  } catch (const json::exception& ex) {
    config_error(where + ": field '" + key + "': " + ex.what());
  }
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) config_error(what + " '" + p.string() + "' does not exist");
}

}  // namespace

fs::path RunConfig::resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }

RunConfig RunConfig::from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) config_error("config must be a JSON object");
  RunConfig cfg;
  cfg.raw = doc;
  cfg.base_dir = base_dir;

  const auto& backend = doc.contains("backend") ? doc["backend"] : json();
  if (!backend.is_object()) config_error("config: missing 'backend' object");
  cfg.backend.type = require<std::string>(backend, "type", "backend");
  if (cfg.backend.type == "sim") {
    cfg.backend.sim_config = cfg.resolve(require<std::string>(backend, "sim_config", "backend"));
    require_file(cfg.backend.sim_config, "sim config");
  } else if (cfg.backend.type == "replay") {
    cfg.backend.fixtures = cfg.resolve(require<std::string>(backend, "fixtures", "backend"));
    require_file(cfg.backend.fixtures, "replay fixtures");
  } else if (cfg.backend.type == "http") {
    cfg.backend.endpoint = require<std::string>(backend, "endpoint", "backend");
    cfg.backend.timeout_seconds = get_or<int>(backend, "timeout_seconds", 120);
  } else {
    config_error("backend.type must be one of sim, http, replay");
  }

  cfg.model = get_or<std::string>(doc, "model", cfg.backend.type == "http" ? "" : cfg.backend.type);
  if (cfg.backend.type == "http" && cfg.model.empty()) config_error("http backend requires 'model'");
  cfg.max_tokens = get_or<int>(doc, "max_tokens", 64);
  if (cfg.max_tokens < 1) config_error("max_tokens must be >= 1");
  cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
  cfg.parallelism = get_or<int>(doc, "parallelism", 4);
  if (cfg.parallelism < 1) config_error("parallelism must be >= 1");
  if (doc.contains("cache_dir")) cfg.cache_dir = cfg.resolve(require<std::string>(doc, "cache_dir", "config"));
  if (doc.contains("out_dir")) cfg.out_dir = cfg.resolve(require<std::string>(doc, "out_dir", "config"));
  if (doc.contains("gazetteer")) {
    cfg.gazetteer = cfg.resolve(require<std::string>(doc, "gazetteer", "config"));
    require_file(*cfg.gazetteer, "gazetteer");
  }

  int blocks = 0;
  for (const auto& name : kProbeNames) {
    if (doc.contains(name)) {
      ++blocks;
      cfg.probe = name;
      cfg.probe_block = doc[name];
    }
  }
  if (blocks != 1) config_error("config must contain exactly one probe block (defaults, brittleness, personas, ranksize)");
  if (!cfg.probe_block.is_object()) config_error("probe block '" + cfg.probe + "' must be an object");
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error&) {
    config_error("cannot read config '" + path.string() + "'");
  }
  auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) config_error("config '" + path.string() + "' is not valid JSON");
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return from_json(doc, base);
}

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::string cache;
  std::string report;
  bool svg = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallel;
};

struct ProbeContext {
  const RunConfig& cfg;
  Sampler& sampler;
  const Backend& backend;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
};

std::unique_ptr<Backend> make_backend(const RunConfig& cfg) {
  if (cfg.backend.type == "sim") return std::make_unique<SimBackend>(SimConfig::load(cfg.backend.sim_config));
  if (cfg.backend.type == "replay") return std::make_unique<ReplayBackend>(ReplayBackend::load(cfg.backend.fixtures));
  HttpEndpoint endpoint{cfg.backend.endpoint, std::chrono::seconds(cfg.backend.timeout_seconds)};
  return std::make_unique<HttpBackend>(endpoint);
}

Gazetteer require_gazetteer(const RunConfig& cfg) {
  if (!cfg.gazetteer) config_error("probe '" + cfg.probe + "' needs a 'gazetteer' path");
  return Gazetteer::load(*cfg.gazetteer);
}

json run_defaults(ProbeContext& ctx, std::ostream& out) {
  const auto& b = ctx.cfg.probe_block;
  ProbeSpec spec;
  spec.concept_name = get_or<std::string>(b, "concept", "");
  spec.prompt = require<std::string>(b, "prompt", "defaults");
  spec.delta = get_or<double>(b, "delta", 0.05);
  spec.t_min = get_or<double>(b, "t_min", 0.0);
  spec.t_max = get_or<double>(b, "t_max", 2.0);
  spec.t_step = get_or<double>(b, "t_step", 0.05);
  spec.samples_per_temperature = get_or<int>(b, "samples_per_temperature", 200);
  spec.z = get_or<double>(b, "z", kDefaultWilsonZ);
  try {
    spec.validate();
  } catch (const Error& ex) {
    config_error(ex.what());
  }
  const auto gazetteer = require_gazetteer(ctx.cfg);

  const auto result = break_temperature(ctx.sampler, spec, gazetteer);
  ctx.warnings.insert(ctx.warnings.end(), result.warnings.begin(), result.warnings.end());
  auto j = to_json(result);

  if (const auto* sim = dynamic_cast<const SimBackend*>(&ctx.backend)) {
    if (sim->config().prompts.contains(spec.prompt)) {
      const auto grid = spec.grid();
      const auto analytic = analytic_break_temperature(sim->config(), spec.prompt, spec.delta, grid);
      j["analytic_break_temperature"] = analytic ? num(*analytic) : json(nullptr);
    }
  }

  const auto& first = result.per_temperature.front();
  out << "default: " << result.default_label << " (share " << format_fixed(first.dist.probability(result.default_label), 4)
      << " at T=" << format_fixed(first.temperature, 2) << ")\n";
  if (result.wilson_break) {
    out << "break temperature: " << format_fixed(result.wilson_break->temperature, 2)
        << " (challenger: " << result.wilson_break->challenger << ")\n";
  } else {
    out << "break temperature: none up to T=" << format_fixed(spec.t_max, 2) << "\n";
  }
  return j;
}

json run_brittleness(ProbeContext& ctx, std::ostream& out) {
  const auto& b = ctx.cfg.probe_block;
  const auto paraphrases = require<std::vector<std::string>>(b, "paraphrases", "brittleness");
  const double temperature = get_or<double>(b, "temperature", 0.3);
  const int samples = get_or<int>(b, "samples", 200);
  if (paraphrases.size() < 2) config_error("brittleness needs at least 2 paraphrases");
  if (samples < 1) config_error("brittleness samples must be >= 1");
  const auto gazetteer = require_gazetteer(ctx.cfg);

  const auto result = brittleness(ctx.sampler, paraphrases, temperature, samples, gazetteer);
  ctx.warnings.insert(ctx.warnings.end(), result.warnings.begin(), result.warnings.end());
  for (const auto& p : result.per_prompt) {
    out << "prompt: " << p.prompt << " -> ";
    try {
      const auto mode = identify_default(p.dist);
      out << mode << " (" << p.dist.count(mode) << "/" << p.dist.total() << ")\n";
    } catch (const Error&) {
      out << "no resolved replies\n";
    }
  }
  out << "max JSD: " << format_fixed(result.max_jsd, 6) << " nats, max TV: " << format_fixed(result.max_tv, 6) << "\n";
  return to_json(result);
}

std::string fill_region(std::string tmpl, const std::string& region) {
  constexpr std::string_view placeholder = "{region}";
  for (auto pos = tmpl.find(placeholder); pos != std::string::npos; pos = tmpl.find(placeholder, pos + region.size())) {
    tmpl.replace(pos, placeholder.size(), region);
  }
  return tmpl;
}

json run_personas(ProbeContext& ctx, std::ostream& out) {
  const auto& b = ctx.cfg.probe_block;
  const int count = get_or<int>(b, "count", 50);
  const auto region = require<std::string>(b, "region", "personas");
  const int runs = get_or<int>(b, "runs", 8);
  const double temperature = get_or<double>(b, "temperature", 1.0);
  if (count < 1 || runs < 1) config_error("personas count and runs must be >= 1");
  const auto vocab_path = ctx.cfg.resolve(require<std::string>(b, "vocabulary", "personas"));
  const auto ref_path = ctx.cfg.resolve(require<std::string>(b, "reference", "personas"));
  require_file(vocab_path, "vocabulary");
  require_file(ref_path, "reference");
  AuditField field;
  try {
    field = parse_audit_field(get_or<std::string>(b, "field", "ethnicity"));
  } catch (const Error& ex) {
    config_error(ex.what());
  }
  const auto vocabulary = Gazetteer::load(vocab_path);
  const auto reference = ReferenceDistribution::load_csv(ref_path);

  const auto prompt = build_persona_prompt(count, region);
  const auto replies = ctx.sampler.generate_batch(prompt, temperature, runs);

  std::vector<std::vector<PersonaRecord>> per_run;
  std::vector<PersonaRecord> population;
  json rejected = json::array();
  int next_id = 1;
  for (int r = 0; r < runs; ++r) {
    std::vector<PersonaRecord> valid;
    try {
      auto parsed = parse_personas(replies[static_cast<std::size_t>(r)], vocabulary, next_id);
      next_id += static_cast<int>(parsed.valid.size());
      for (const auto& f : parsed.rejected) rejected.push_back({{"run", r}, {"fragment", f.fragment}, {"reason", f.reason}});
      valid = std::move(parsed.valid);
    } catch (const Error& ex) {
      if (ex.kind() != ErrorKind::NoJsonArrayFound) throw;
      ctx.warnings.push_back("run " + std::to_string(r) + ": " + ex.what());
    }
    population.insert(population.end(), valid.begin(), valid.end());
    per_run.push_back(std::move(valid));
  }

  const auto audit = audit_population(population, field, reference);
  json personas_json = json::array();
  for (const auto& p : population) personas_json.push_back(to_json(p));

  json result = {{"region", region},
                 {"runs", runs},
                 {"requested_per_run", count},
                 {"prompt", prompt},
                 {"valid_count", population.size()},
                 {"rejected_count", rejected.size()},
                 {"rejected", rejected},
                 {"population", personas_json},
                 {"stage_one_audit", to_json(audit)},
                 {"stage_two", nullptr}};
  out << "personas: " << population.size() << " valid, " << rejected.size() << " rejected\n";
  out << "stage one TV vs " << reference.name << ": " << format_fixed(audit.tv, 6) << "\n";

  if (b.contains("stage_two") && b["stage_two"].is_object()) {
    const auto& s2 = b["stage_two"];
    const auto tmpl = fill_region(get_or<std::string>(s2, "template", std::string(kDefaultLabelTemplate)), region);
    if (tmpl.find(kRosterPlaceholder) == std::string::npos) config_error("stage_two.template lacks {roster}");
    const double t2 = get_or<double>(s2, "temperature", temperature);
    const auto ref2_path = ctx.cfg.resolve(require<std::string>(s2, "reference", "personas.stage_two"));
    require_file(ref2_path, "stage-two reference");
    const auto reference2 = ReferenceDistribution::load_csv(ref2_path);
    AuditField field2;
    try {
      field2 = parse_audit_field(get_or<std::string>(s2, "field", std::string(to_string(field))));
    } catch (const Error& ex) {
      config_error(ex.what());
    }

    std::map<int, bool> flags;
    json stage_warnings = json::array();
    for (int r = 0; r < runs; ++r) {
      const auto& roster = per_run[static_cast<std::size_t>(r)];
      if (roster.empty()) continue;
      try {
        const auto labels = stage_two_label(ctx.sampler, roster, tmpl, t2, r);
        flags.insert(labels.flags.begin(), labels.flags.end());
        for (const auto& w : labels.warnings) stage_warnings.push_back("run " + std::to_string(r) + ": " + w);
      } catch (const Error& ex) {
        if (ex.kind() != ErrorKind::NoJsonArrayFound) throw;
        stage_warnings.push_back("run " + std::to_string(r) + ": " + ex.what());
        for (const auto& p : roster) flags.emplace(p.id, false);
      }
    }
    json flagged = json::array();
    for (const auto& [id, flag] : flags) {
      if (flag) flagged.push_back(id);
    }
    json stage = {{"template", tmpl},   {"temperature", num(t2)},        {"flagged_ids", flagged},
                  {"flagged_count", flagged.size()}, {"warnings", stage_warnings}, {"audit", nullptr}};
    try {
      const auto shift = composite_shift(population, flags, field2, reference2);
      stage["audit"] = to_json(shift);
      out << "stage two: " << flagged.size() << " flagged, TV vs " << reference2.name << ": "
          << format_fixed(shift.tv, 6) << "\n";
    } catch (const Error& ex) {
      if (ex.kind() != ErrorKind::NoFlaggedPersonas) throw;
      ctx.warnings.push_back(std::string("stage two: ") + ex.what());
      out << "stage two: no persona flagged\n";
    }
    result["stage_two"] = std::move(stage);
  }
  ctx.notes.push_back("Persona and labelling prompt wordings are reconstructions, not recorded originals.");
  ctx.notes.push_back("Occupation audits are free-text tallies of normalized occupation strings.");
  return result;
}

json run_ranksize(ProbeContext& ctx, std::ostream& out) {
  const auto& b = ctx.cfg.probe_block;
  const auto nation = get_or<std::string>(b, "nation", "Novaterra");
  const auto budget = get_or<std::int64_t>(b, "budget", 60'000'000);
  const int expected = get_or<int>(b, "expected_count", 30);
  const int runs = get_or<int>(b, "runs", 5);
  const double temperature = get_or<double>(b, "temperature", 1.0);
  if (budget <= 0 || runs < 1) config_error("ranksize budget must be > 0 and runs >= 1");
  const auto prompt = get_or<std::string>(b, "prompt", build_nation_prompt(nation, budget, expected));
  std::optional<std::vector<CityEntry>> reference;
  std::string reference_name;
  if (b.contains("reference_csv")) {
    const auto path = ctx.cfg.resolve(require<std::string>(b, "reference_csv", "ranksize"));
    require_file(path, "reference cities");
    reference = load_reference_cities(path);
    reference_name = path.filename().string();
  }

  const auto results = nation_probe(ctx.sampler, prompt, runs, temperature, budget, expected);
  json per_run = json::array();
  int included = 0;
  int mentions = 0;
  int violations = 0;
  double slope_sum = 0.0;
  double r2_sum = 0.0;
  json comparisons = json::array();
  for (const auto& run : results) {
    auto j = to_json(run);
    if (run.mentions_rank_size) ++mentions;
    if (!run.excluded && run.fit) {
      ++included;
      slope_sum += run.fit->fit.slope;
      r2_sum += run.fit->fit.r_squared;
      if (run.fit->violation_rank) ++violations;
      if (reference) {
        auto c = to_json(compare_reference(*run.fit, *reference));
        c["run"] = run.run;
        comparisons.push_back(std::move(c));
      }
    }
    per_run.push_back(std::move(j));
  }
  if (included == 0) throw Error(ErrorKind::NoCitiesFound, "no run produced a usable city list");

  json result = {{"nation", nation},
                 {"prompt", prompt},
                 {"runs", runs},
                 {"budget", budget},
                 {"expected_count", expected},
                 {"included_runs", included},
                 {"mentions_rank_size_count", mentions},
                 {"budget_violations", violations},
                 {"mean_slope", num(slope_sum / included)},
                 {"mean_r_squared", num(r2_sum / included)},
                 {"per_run", per_run},
                 {"reference", nullptr}};
  if (reference) {
    result["reference"] = {{"name", reference_name},
                           {"fit", to_json(fit_rank_size(*reference))},
                           {"per_run_deltas", comparisons}};
  }
  out << "runs: " << included << "/" << runs << " usable, " << mentions << " mention the rank-size rule, " << violations
      << " exceed the budget\n";
  out << "mean slope: " << format_fixed(slope_sum / included, 4) << "\n";
  ctx.notes.push_back("The default nation prompt is a reconstruction, not a recorded original.");
  ctx.notes.push_back("Zipf exponent estimated by OLS on log-log rank/population; deviation anchored at the largest city.");
  return result;
}

void write_outputs(const json& report, const fs::path& out_dir, bool svg) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create output directory '" + out_dir.string() + "'");
  const auto dists = distributions_from_report(report);
  std::vector<std::pair<std::string, BarChart>> charts;
  if (svg) charts = charts_from_report(report);
  std::vector<std::pair<std::string, std::string>> rendered;
  for (const auto& [name, chart] : charts) rendered.emplace_back(name, render_bar_chart_svg(chart));

  write_text_file(out_dir / "report.json", report.dump(2, ' ', false, json::error_handler_t::replace) + "\n");
  if (!dists.empty()) emit_distribution_csv(dists, out_dir / "distributions.csv");
  for (const auto& [name, content] : rendered) write_text_file(out_dir / name, content);
}

int run_probe(const std::string& probe, const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  auto cfg = RunConfig::load(opts.config);
  if (cfg.probe != probe) {
    config_error("config holds a '" + cfg.probe + "' block but subcommand '" + probe + "' was invoked");
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.parallel) {
    if (*opts.parallel < 1) config_error("--parallel must be >= 1");
    cfg.parallelism = *opts.parallel;
  }
  const fs::path out_dir = !opts.out.empty() ? fs::path(opts.out) : cfg.out_dir.value_or("out");
  const fs::path cache_dir = !opts.cache.empty() ? fs::path(opts.cache) : cfg.cache_dir.value_or("cache");

  auto backend = make_backend(cfg);
  ResponseCache cache(cache_dir);
  GenerationParams base;
  base.model = cfg.model;
  base.max_tokens = cfg.max_tokens;
  base.run_seed = cfg.seed;
  Sampler sampler(*backend, &cache, base, cfg.parallelism);
  ProbeContext ctx{cfg, sampler, *backend, {}, {}};
  ctx.notes.push_back("Each sample is an independent single-turn request (one request per sample).");

  json result;
  if (probe == "defaults") {
    result = run_defaults(ctx, out);
  } else if (probe == "brittleness") {
    result = run_brittleness(ctx, out);
  } else if (probe == "personas") {
    result = run_personas(ctx, out);
  } else {
    result = run_ranksize(ctx, out);
  }
  if (probe == "defaults" || probe == "brittleness") {
    ctx.notes.push_back("Replies are mapped to entities by the longest alias match, earliest position on ties; "
                        "unmatched replies are kept in the __unresolved__ bucket.");
  }

  json report = {{"tool", "geoprobe"},
                 {"version", GEOPROBE_VERSION},
                 {"probe", probe},
                 {"config", cfg.raw},
                 {"effective", {{"seed", cfg.seed}, {"backend", cfg.backend.type}, {"model", cfg.model}}},
                 {"timestamps",
                  {{"first_response_at", sampler.earliest_response_at()},
                   {"last_response_at", sampler.latest_response_at()}}},
                 {"result", result},
                 {"warnings", ctx.warnings},
                 {"notes", ctx.notes}};
  if (probe == "personas") report["disclaimer"] = kPersonaDisclaimer;

  write_outputs(report, out_dir, opts.svg);
  for (const auto& w : ctx.warnings) err << "geoprobe:warning: " << w << "\n";
  out << "backend calls: " << sampler.backend_calls() << ", cache hits: " << sampler.cache_hits() << "\n";
  out << "wrote " << (out_dir / "report.json").string() << "\n";
  return kExitOk;
}

int run_report(const CommonOptions& opts, std::ostream& out) {
  const fs::path out_dir = opts.out.empty() ? fs::path("out") : fs::path(opts.out);
  const fs::path report_path = opts.report.empty() ? out_dir / "report.json" : fs::path(opts.report);
  const auto text = read_text_file(report_path);
  auto report = json::parse(text, nullptr, false);
  if (report.is_discarded() || !report.is_object()) {
    throw Error(ErrorKind::ParseError, "'" + report_path.string() + "' is not a report");
  }
  try {
    write_outputs(report, out_dir, true);
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::ParseError, "'" + report_path.string() + "' does not match the report schema: " + ex.what());
  }
  out << "re-rendered charts into " << out_dir.string() << "\n";
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (classify(kind)) {
    case ErrorClass::Config: return kExitConfig;
    case ErrorClass::Backend: return kExitBackend;
    case ErrorClass::Probe: return kExitProbe;
  }
  return kExitProbe;
}

std::string_view class_name(ErrorKind kind) {
  switch (classify(kind)) {
    case ErrorClass::Config: return "config";
    case ErrorClass::Backend: return "backend";
    case ErrorClass::Probe: return "probe";
  }
  return "probe";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"geoprobe: probes how generative models represent geography"};
  app.require_subcommand(1);
  CommonOptions opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Run configuration (JSON)")->required();
    sub->add_option("--out", opts.out, "Output directory (default ./out)");
    sub->add_option("--cache", opts.cache, "Response cache directory (default ./cache)");
    sub->add_flag("--svg", opts.svg, "Emit SVG charts");
    sub->add_option("--seed", opts.seed, "Run seed (simulated sampling)");
    sub->add_option("--parallel", opts.parallel, "Concurrent requests");
  };
  std::vector<CLI::App*> probes;
  probes.push_back(app.add_subcommand("defaults", "Default instance and break temperature"));
  probes.push_back(app.add_subcommand("brittleness", "Distribution shift across paraphrases"));
  probes.push_back(app.add_subcommand("personas", "Two-stage persona audit"));
  probes.push_back(app.add_subcommand("ranksize", "Rank-size and population-budget check"));
  for (auto* sub : probes) add_common(sub);
  auto* report = app.add_subcommand("report", "Re-render charts and CSV from an existing report.json");
  report->add_option("--report", opts.report, "Report file (default <out>/report.json)");
  report->add_option("--out", opts.out, "Output directory (default ./out)");
  report->add_option("--config", opts.config, "Ignored; accepted for symmetry");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "geoprobe:error:config: Usage: " << ex.what() << "\n";
    return kExitConfig;
  }

  try {
    if (report->parsed()) return run_report(opts, out);
    for (auto* sub : probes) {
      if (sub->parsed()) return run_probe(sub->get_name(), opts, out, err);
    }
    return kExitConfig;
  } catch (const Error& ex) {
    err << "geoprobe:error:" << class_name(ex.kind()) << ": " << to_string(ex.kind()) << ": " << ex.what() << "\n";
    return exit_code_for(ex.kind());
  } catch (const json::exception& ex) {
    err << "geoprobe:error:config: ParseError: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& ex) {
    err << "geoprobe:error:probe: Internal: " << ex.what() << "\n";
    return kExitProbe;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace geoprobe
