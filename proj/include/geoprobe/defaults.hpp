#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoprobe/backend.hpp"
#include "geoprobe/normalize.hpp"
#include "geoprobe/sampler.hpp"
#include "geoprobe/stats.hpp"

namespace geoprobe {

// A concept, its prompt, and the decision rule for "some other instance
// appears with frequency above delta".
struct ProbeSpec {
  std::string concept_name;
  std::string prompt;
  double delta = 0.05;
  double t_min = 0.0;
  double t_max = 2.0;
  double t_step = 0.05;
  int samples_per_temperature = 200;
  double z = kDefaultWilsonZ;

  // Throws InvalidArgument.
  void validate() const;

  // t_min, t_min + t_step, ... up to t_max, each rounded to 6 decimals.
  std::vector<double> grid() const;
};

std::vector<double> temperature_grid(double t_min, double t_max, double t_step);

struct SampledDistribution {
  CategoricalDist dist;
  bool all_unresolved = false;
};

SampledDistribution sample_distribution(Sampler& sampler, std::string_view prompt, double temperature, int n,
                                        const Gazetteer& gazetteer);

// Mode over resolved labels; ties go to the lexicographically smallest label.
// Throws NoDefault when no resolved label has a positive count.
std::string identify_default(const CategoricalDist& dist);

struct TemperaturePoint {
  double temperature = 0.0;
  CategoricalDist dist;
};

struct BreakPoint {
  double temperature = 0.0;
  std::string challenger;
  double challenger_share = 0.0;
  double challenger_lower_bound = 0.0;
};

// First point where a resolved label other than default_label has Wilson
// lower bound > delta (z = 0 gives the raw-frequency rule). Challenger ties
// resolve lexicographically.
std::optional<BreakPoint> detect_break(std::span<const TemperaturePoint> points, const std::string& default_label,
                                       double delta, double z);

struct DecisionRule {
  double delta = 0.0;
  double z = 0.0;
  int samples_per_temperature = 0;
};

struct DefaultStrengthResult {
  std::string concept_name;
  std::string prompt;
  std::string default_label;
  std::optional<BreakPoint> wilson_break;  // the reported break temperature
  std::optional<BreakPoint> raw_break;     // same samples, raw frequency > delta
  std::vector<TemperaturePoint> per_temperature;
  DecisionRule rule;
  std::vector<std::string> warnings;

  std::optional<double> break_temperature() const {
    return wilson_break ? std::optional<double>(wilson_break->temperature) : std::nullopt;
  }
};

// Ascending sweep with early stop at the first break. The default is frozen
// at the lowest grid temperature.
DefaultStrengthResult break_temperature(Sampler& sampler, const ProbeSpec& spec, const Gazetteer& gazetteer);

// Exact counterpart on the simulated model: first grid temperature at which
// a non-modal candidate has probability > delta. nullopt means no break.
std::optional<double> analytic_break_temperature(const SimConfig& cfg, std::string_view prompt_key, double delta,
                                                 std::span<const double> grid);

struct PromptDistribution {
  std::string prompt;
  CategoricalDist dist;
  bool all_unresolved = false;
};

struct BrittlenessResult {
  double temperature = 0.0;
  int samples = 0;
  std::vector<PromptDistribution> per_prompt;
  std::vector<std::vector<double>> pairwise_jsd;
  std::vector<std::vector<double>> pairwise_tv;
  double max_jsd = 0.0;
  double max_tv = 0.0;
  std::vector<std::string> warnings;
};

BrittlenessResult brittleness(Sampler& sampler, std::span<const std::string> paraphrases, double temperature, int n,
                              const Gazetteer& gazetteer);

}  // namespace geoprobe
