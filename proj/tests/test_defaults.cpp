#include <cmath>

#include <gtest/gtest.h>

#include "geoprobe/backend.hpp"
#include "geoprobe/defaults.hpp"
#include "geoprobe/error.hpp"
#include "test_util.hpp"

using namespace geoprobe;

namespace {

SimConfig country_sim() {
  return SimConfig::from_json_text(R"({
    "prompts": {
      "Name a country.": {"candidates": ["Japan", "Canada", "Brazil"], "base_logits": [2, 1, 0]},
      "Please name a country.": {"candidates": ["Japan", "Canada", "Brazil"], "base_logits": [2, 1, 0],
                                 "offsets": [-1, 1, 0]},
      "Only Japan.": {"candidates": ["Japan"], "base_logits": [0]},
      "Nonsense.": {"candidates": ["Atlantis", "Lemuria"], "base_logits": [1, 0]}
    }
  })");
}

Gazetteer countries() {
  return Gazetteer::from_entries({{"Japan", {}}, {"Canada", {}}, {"Brazil", {}}});
}

GenerationParams base(std::uint64_t seed) {
  GenerationParams p;
  p.model = "sim";
  p.run_seed = seed;
  return p;
}

// Threshold temperature from the quadratic in x = exp(-1/T): with logits
// [2, 1, 0] the second candidate has probability x / (1 + x + x^2), which
// equals delta where delta x^2 + (delta - 1) x + delta = 0.
double analytic_threshold(double delta) {
  const double b = (delta - 1.0) / delta;
  const double x = (-b - std::sqrt(b * b - 4.0)) / 2.0;
  return -1.0 / std::log(x);
}

}  // namespace

TEST(TemperatureGrid, StepsAndRounding) {
  const auto g = temperature_grid(0.0, 2.0, 0.05);
  ASSERT_EQ(g.size(), 41u);
  EXPECT_EQ(g[7], 0.35);
  EXPECT_EQ(g.back(), 2.0);
  EXPECT_EQ(temperature_grid(0.3, 0.3, 0.05), std::vector<double>{0.3});
  const auto fine = temperature_grid(0.0, 1.0, 0.01);
  EXPECT_EQ(fine.size(), 101u);
  EXPECT_EQ(fine[34], 0.34);
}

TEST(ProbeSpec, Validation) {
  ProbeSpec spec;
  spec.prompt = "p";
  EXPECT_NO_THROW(spec.validate());
  auto bad = spec;
  bad.delta = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = spec;
  bad.t_max = 2.5;
  EXPECT_THROW(bad.validate(), Error);
  bad = spec;
  bad.t_min = 1.0;
  bad.t_max = 0.5;
  EXPECT_THROW(bad.validate(), Error);
  bad = spec;
  bad.samples_per_temperature = 0;
  EXPECT_THROW(bad.validate(), Error);
  bad = spec;
  bad.prompt.clear();
  EXPECT_THROW(bad.validate(), Error);
}

TEST(IdentifyDefault, ModeAndTies) {
  EXPECT_EQ(identify_default(CategoricalDist{{"Japan", 168}, {"Canada", 20}, {"Brazil", 12}}), "Japan");
  EXPECT_EQ(identify_default(CategoricalDist{{"Peru", 5}, {"Chile", 5}}), "Chile");
  EXPECT_EQ(identify_default(CategoricalDist{{{"Peru", 5}}, 50}), "Peru");
  try {
    identify_default(CategoricalDist{{}, 10});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoDefault);
  }
}

TEST(DetectBreak, WilsonAgainstRawRule) {
  // 12 / 200 = 0.06 exceeds 0.05 but its Wilson lower bound (~0.038) does not.
  const std::vector<TemperaturePoint> points{{0.1, CategoricalDist{{"Japan", 188}, {"Canada", 12}}},
                                             {0.2, CategoricalDist{{"Japan", 170}, {"Canada", 30}}}};
  const auto raw = detect_break(points, "Japan", 0.05, 0.0);
  ASSERT_TRUE(raw);
  EXPECT_EQ(raw->temperature, 0.1);
  const auto wilson = detect_break(points, "Japan", 0.05, kDefaultWilsonZ);
  ASSERT_TRUE(wilson);
  EXPECT_EQ(wilson->temperature, 0.2);
  EXPECT_EQ(wilson->challenger, "Canada");
  EXPECT_DOUBLE_EQ(wilson->challenger_share, 0.15);
  EXPECT_FALSE(detect_break(std::span(points).first(1), "Japan", 0.05, kDefaultWilsonZ));
}

TEST(DetectBreak, UnresolvedNeverChallenges) {
  const std::vector<TemperaturePoint> points{{0.5, CategoricalDist{{{"Japan", 100}}, 100}}};
  EXPECT_FALSE(detect_break(points, "Japan", 0.05, kDefaultWilsonZ));
}

TEST(AnalyticBreak, MatchesClosedForm) {
  const auto cfg = country_sim();
  const double t_star = analytic_threshold(0.05);
  EXPECT_NEAR(t_star, 0.3399444235, 1e-9);
  const auto fine = temperature_grid(0.0, 2.0, 0.01);
  const auto t = analytic_break_temperature(cfg, "Name a country.", 0.05, fine);
  ASSERT_TRUE(t);
  EXPECT_DOUBLE_EQ(*t, std::ceil(t_star * 100) / 100);
  const auto coarse = temperature_grid(0.0, 2.0, 0.05);
  EXPECT_EQ(analytic_break_temperature(cfg, "Name a country.", 0.05, coarse), 0.35);
  EXPECT_FALSE(analytic_break_temperature(cfg, "Only Japan.", 0.05, coarse));
  EXPECT_FALSE(analytic_break_temperature(cfg, "Name a country.", 0.05, temperature_grid(0.0, 0.3, 0.05)));
}

TEST(SoftmaxProperty, GapDecreasesWithTemperature) {
  const auto cfg = country_sim();
  double prev = 2.0;
  for (const double t : temperature_grid(0.05, 2.0, 0.05)) {
    const auto p = sim_probabilities(cfg, "Name a country.", t);
    ASSERT_LT(p[0] - p[1], prev) << t;
    prev = p[0] - p[1];
  }
}

TEST(SampleDistribution, SingleCandidate) {
  SimBackend sim(country_sim());
  Sampler sampler(sim, nullptr, base(1));
  const auto s = sample_distribution(sampler, "Only Japan.", 1.0, 50, countries());
  EXPECT_EQ(s.dist, (CategoricalDist{{"Japan", 50}}));
  EXPECT_FALSE(s.all_unresolved);
}

TEST(BreakTemperature, SimulatedSweep) {
  SimBackend sim(country_sim());
  Sampler sampler(sim, nullptr, base(42));
  ProbeSpec spec;
  spec.concept_name = "country";
  spec.prompt = "Name a country.";
  spec.samples_per_temperature = 1000;
  const auto r = break_temperature(sampler, spec, countries());
  EXPECT_EQ(r.default_label, "Japan");
  ASSERT_TRUE(r.break_temperature());
  EXPECT_GE(*r.break_temperature(), 0.35);
  EXPECT_LE(*r.break_temperature(), 0.45);
  EXPECT_EQ(r.wilson_break->challenger, "Canada");
  // The sweep stops at the break.
  EXPECT_EQ(r.per_temperature.back().temperature, *r.break_temperature());
  ASSERT_TRUE(r.raw_break);
  EXPECT_LE(r.raw_break->temperature, r.wilson_break->temperature);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(BreakTemperatureProperty, SeedsAgreeWithAnalyticThreshold) {
  SimBackend sim(country_sim());
  ProbeSpec spec;
  spec.prompt = "Name a country.";
  spec.samples_per_temperature = 1000;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Sampler sampler(sim, nullptr, base(seed));
    const auto r = break_temperature(sampler, spec, countries());
    ASSERT_TRUE(r.break_temperature());
    // Wilson margin puts detection at or after the exact crossing.
    EXPECT_GE(*r.break_temperature(), 0.35) << seed;
    EXPECT_LE(*r.break_temperature(), 0.5) << seed;
  }
}

TEST(BreakTemperature, NoBreakWhenDefaultDominates) {
  SimBackend sim(country_sim());
  Sampler sampler(sim, nullptr, base(3));
  ProbeSpec spec;
  spec.prompt = "Name a country.";
  spec.t_max = 0.25;
  spec.samples_per_temperature = 300;
  const auto r = break_temperature(sampler, spec, countries());
  EXPECT_FALSE(r.break_temperature());
  EXPECT_EQ(r.per_temperature.size(), 6u);
}

TEST(BreakTemperature, AllUnresolvedFirstPointIsNoDefault) {
  SimBackend sim(country_sim());
  Sampler sampler(sim, nullptr, base(3));
  ProbeSpec spec;
  spec.prompt = "Nonsense.";
  spec.samples_per_temperature = 20;
  try {
    break_temperature(sampler, spec, countries());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoDefault);
  }
}

TEST(Brittleness, IdenticalPromptsHaveZeroDivergence) {
  SimBackend sim(country_sim());
  Sampler sampler(sim, nullptr, base(9));
  const std::vector<std::string> prompts{"Name a country.", "Name a country."};
  const auto r = brittleness(sampler, prompts, 0.7, 300, countries());
  EXPECT_EQ(r.max_jsd, 0.0);
  EXPECT_EQ(r.max_tv, 0.0);
}

TEST(Brittleness, ShiftedParaphraseMatchesExactDivergence) {
  const auto cfg = country_sim();
  SimBackend sim(cfg);
  Sampler sampler(sim, nullptr, base(11));
  const std::vector<std::string> prompts{"Name a country.", "Please name a country."};
  const auto r = brittleness(sampler, prompts, 1.0, 20000, countries());
  const double exact = jensen_shannon(sim_exact_distribution(cfg, prompts[0], 1.0),
                                      sim_exact_distribution(cfg, prompts[1], 1.0));
  EXPECT_NEAR(r.max_jsd, exact, 0.01);
  EXPECT_EQ(identify_default(r.per_prompt[0].dist), "Japan");
  EXPECT_EQ(identify_default(r.per_prompt[1].dist), "Canada");
  EXPECT_EQ(r.pairwise_jsd[0][1], r.pairwise_jsd[1][0]);
  EXPECT_THROW(brittleness(sampler, std::span(prompts).first(1), 1.0, 10, countries()), Error);
}
