#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "geoprobe/cli.hpp"
#include "geoprobe/report.hpp"
#include "test_util.hpp"

using namespace geoprobe;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& rel) { return (testutil::data_dir() / rel).string(); }

json sim_defaults_config() {
  return {{"backend", {{"type", "sim"}, {"sim_config", data("sim/countries.json")}}},
          {"seed", 42},
          {"gazetteer", data("gazetteer/countries.json")},
          {"defaults",
           {{"concept", "country"},
            {"prompt", "Name a country."},
            {"t_min", 0.0},
            {"t_max", 1.0},
            {"t_step", 0.1},
            {"samples_per_temperature", 300}}}};
}

fs::path write_config(const testutil::TempDir& dir, const json& cfg, const std::string& name = "config.json") {
  const auto path = dir / name;
  write_text_file(path, cfg.dump(2));
  return path;
}

std::vector<std::string> probe_args(const std::string& probe, const testutil::TempDir& dir, const fs::path& cfg,
                                    const std::string& out = "out") {
  return {probe, "--config", cfg.string(), "--out", (dir / out).string(), "--cache", (dir / "cache").string(), "--svg"};
}

}  // namespace

TEST(Cli, SimDefaultsWritesArtifacts) {
  testutil::TempDir dir;
  const auto r = invoke(probe_args("defaults", dir, write_config(dir, sim_defaults_config())));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto report = json::parse(read_text_file(dir / "out" / "report.json"));
  EXPECT_EQ(report["probe"], "defaults");
  EXPECT_EQ(report["result"]["default_label"], "Japan");
  EXPECT_EQ(report["effective"]["seed"], 42);
  EXPECT_TRUE(report["result"].contains("analytic_break_temperature"));
  EXPECT_TRUE(fs::exists(dir / "out" / "distributions.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "chart-defaults-T0.3.svg"));
}

TEST(Cli, WarmCacheIsByteIdentical) {
  testutil::TempDir dir;
  const auto cfg = write_config(dir, sim_defaults_config());
  const auto first = invoke(probe_args("defaults", dir, cfg, "a"));
  ASSERT_EQ(first.code, kExitOk) << first.err;
  const auto second = invoke(probe_args("defaults", dir, cfg, "b"));
  ASSERT_EQ(second.code, kExitOk) << second.err;
  EXPECT_NE(second.out.find("backend calls: 0,"), std::string::npos) << second.out;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto name = entry.path().filename().string();
    EXPECT_EQ(read_text_file(entry.path()), read_text_file(dir / "b" / name)) << name;
  }
}

TEST(Cli, SeedOverrideChangesCacheKeys) {
  testutil::TempDir dir;
  const auto cfg = write_config(dir, sim_defaults_config());
  ASSERT_EQ(invoke(probe_args("defaults", dir, cfg, "a")).code, kExitOk);
  auto args = probe_args("defaults", dir, cfg, "b");
  args.insert(args.end(), {"--seed", "7"});
  const auto r = invoke(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.find("backend calls: 0,"), std::string::npos);
  EXPECT_EQ(json::parse(read_text_file(dir / "b" / "report.json"))["effective"]["seed"], 7);
}

TEST(Cli, MissingGazetteerIsConfigError) {
  testutil::TempDir dir;
  auto cfg = sim_defaults_config();
  cfg["gazetteer"] = (dir / "nope.json").string();
  const auto r = invoke(probe_args("defaults", dir, write_config(dir, cfg)));
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_EQ(r.err.rfind("geoprobe:error:config: ", 0), 0u) << r.err;
}

TEST(Cli, BadArgumentsAreConfigErrors) {
  EXPECT_EQ(invoke({}).code, kExitConfig);
  EXPECT_EQ(invoke({"defaults"}).code, kExitConfig);
  EXPECT_EQ(invoke({"weather", "--config", "x"}).code, kExitConfig);
  EXPECT_EQ(invoke({"defaults", "--config", "/nonexistent/config.json"}).code, kExitConfig);
  testutil::TempDir dir;
  auto cfg = sim_defaults_config();
  cfg["defaults"]["t_step"] = 0.0;
  EXPECT_EQ(invoke(probe_args("defaults", dir, write_config(dir, cfg))).code, kExitConfig);
  cfg = sim_defaults_config();
  cfg["brittleness"] = {{"paraphrases", {"a", "b"}}};
  EXPECT_EQ(invoke(probe_args("defaults", dir, write_config(dir, cfg))).code, kExitConfig);
}

TEST(Cli, ReplayMissIsBackendError) {
  testutil::TempDir dir;
  json cfg = {{"backend", {{"type", "replay"}, {"fixtures", data("fixtures/country_replay.jsonl")}}},
              {"gazetteer", data("gazetteer/countries.json")},
              {"defaults",
               {{"concept", "country"},
                {"prompt", "Name a country, please."},
                {"t_min", 0.3},
                {"t_max", 0.3},
                {"t_step", 0.05},
                {"samples_per_temperature", 201}}}};
  const auto r = invoke(probe_args("defaults", dir, write_config(dir, cfg)));
  EXPECT_EQ(r.code, kExitBackend);
  EXPECT_EQ(r.err.rfind("geoprobe:error:backend: BackendUnavailable", 0), 0u) << r.err;
}

TEST(Cli, NoDefaultIsProbeError) {
  testutil::TempDir dir;
  // Every reply is unresolved against an empty-match gazetteer.
  write_text_file(dir / "tiny.json", R"([{"canonical": "Atlantis", "aliases": []}])");
  auto cfg = sim_defaults_config();
  cfg["gazetteer"] = (dir / "tiny.json").string();
  const auto r = invoke(probe_args("defaults", dir, write_config(dir, cfg)));
  EXPECT_EQ(r.code, kExitProbe) << r.err;
  EXPECT_NE(r.err.find("geoprobe:error:probe: NoDefault"), std::string::npos) << r.err;
}

TEST(Cli, BundledReplayConfigs) {
  const fs::path configs = testutil::data_dir().parent_path() / "configs";
  for (const auto* probe : {"defaults", "brittleness", "personas", "ranksize"}) {
    testutil::TempDir dir;
    const auto r = invoke(probe_args(probe, dir, configs / (std::string(probe) + "_replay.json")));
    ASSERT_EQ(r.code, kExitOk) << probe << ": " << r.err;
    const auto report = json::parse(read_text_file(dir / "out" / "report.json"));
    EXPECT_EQ(report["probe"], probe);
    EXPECT_TRUE(report["warnings"].is_array());
  }
}

TEST(Cli, PersonasReportCarriesDisclaimer) {
  testutil::TempDir dir;
  const fs::path cfg = testutil::data_dir().parent_path() / "configs" / "personas_replay.json";
  ASSERT_EQ(invoke(probe_args("personas", dir, cfg)).code, kExitOk);
  const auto report = json::parse(read_text_file(dir / "out" / "report.json"));
  EXPECT_NE(report["disclaimer"].get<std::string>().find("does not imply any racial bias"), std::string::npos);
  EXPECT_EQ(report["result"]["valid_count"], 381);
  EXPECT_EQ(report["result"]["rejected_count"], 19);
}

TEST(Cli, ReportSubcommandRerenders) {
  testutil::TempDir dir;
  const auto cfg = write_config(dir, sim_defaults_config());
  ASSERT_EQ(invoke(probe_args("defaults", dir, cfg)).code, kExitOk);
  const auto csv = read_text_file(dir / "out" / "distributions.csv");
  const auto svg = read_text_file(dir / "out" / "chart-defaults-T0.3.svg");
  fs::remove(dir / "out" / "distributions.csv");
  fs::remove(dir / "out" / "chart-defaults-T0.3.svg");
  const auto r = invoke({"report", "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(read_text_file(dir / "out" / "distributions.csv"), csv);
  EXPECT_EQ(read_text_file(dir / "out" / "chart-defaults-T0.3.svg"), svg);

  write_text_file(dir / "bad.json", "{\"probe\": \"defaults\"}");
  EXPECT_EQ(invoke({"report", "--report", (dir / "bad.json").string(), "--out", (dir / "x").string()}).code,
            kExitConfig);
}
