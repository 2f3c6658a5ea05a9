#include "geoprobe/defaults.hpp"

#include <algorithm>
#include <cmath>

#include "geoprobe/error.hpp"
#include "geoprobe/format.hpp"

namespace geoprobe {

void ProbeSpec::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, "probe spec: " + what); };
  if (prompt.empty()) bad("prompt must not be empty");
  if (!(delta > 0.0 && delta < 1.0)) bad("delta must lie in (0, 1)");
  if (!(t_min >= 0.0 && t_min <= t_max && t_max <= kMaxTemperature)) bad("require 0 <= t_min <= t_max <= 2");
  if (!(t_step > 0.0)) bad("t_step must be > 0");
  if (samples_per_temperature < 1) bad("samples_per_temperature must be >= 1");
  if (!(z >= 0.0)) bad("z must be >= 0");
}

std::vector<double> temperature_grid(double t_min, double t_max, double t_step) {
  std::vector<double> grid;
  for (int k = 0;; ++k) {
    const double t = std::round((t_min + k * t_step) * 1e6) / 1e6;
    if (t > t_max + 1e-9) break;
    if (grid.empty() || t > grid.back()) grid.push_back(t);
  }
  return grid;
}

std::vector<double> ProbeSpec::grid() const { return temperature_grid(t_min, t_max, t_step); }

SampledDistribution sample_distribution(Sampler& sampler, std::string_view prompt, double temperature, int n,
                                        const Gazetteer& gazetteer) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "sample count must be >= 1");
  SampledDistribution out;
  for (const auto& text : sampler.generate_batch(prompt, temperature, n)) {
    if (auto label = gazetteer.extract(text)) {
      out.dist.add(*label);
    } else {
      out.dist.add_unresolved();
    }
  }
  out.all_unresolved = out.dist.unresolved() == out.dist.total();
  return out;
}

std::string identify_default(const CategoricalDist& dist) {
  const std::string* best = nullptr;
  std::int64_t best_count = 0;
  for (const auto& [label, count] : dist.entries()) {
    if (count > best_count) {
      best = &label;
      best_count = count;
    }
  }
  if (best == nullptr) throw Error(ErrorKind::NoDefault, "no resolved label to act as default");
  return *best;
}

std::optional<BreakPoint> detect_break(std::span<const TemperaturePoint> points, const std::string& default_label,
                                       double delta, double z) {
  for (const auto& point : points) {
    const auto total = point.dist.total();
    if (total <= 0) continue;
    std::optional<BreakPoint> best;
    for (const auto& [label, count] : point.dist.entries()) {
      if (label == default_label || count == 0) continue;
      const double lb = wilson_lower_bound(count, total, z);
      if (lb > delta && (!best || lb > best->challenger_lower_bound)) {
        best = BreakPoint{point.temperature, label, point.dist.probability(label), lb};
      }
    }
    if (best) return best;
  }
  return std::nullopt;
}

DefaultStrengthResult break_temperature(Sampler& sampler, const ProbeSpec& spec, const Gazetteer& gazetteer) {
  spec.validate();
  DefaultStrengthResult result;
  result.concept_name = spec.concept_name;
  result.prompt = spec.prompt;
  result.rule = {spec.delta, spec.z, spec.samples_per_temperature};

  for (const double t : spec.grid()) {
    auto sampled = sample_distribution(sampler, spec.prompt, t, spec.samples_per_temperature, gazetteer);
    if (sampled.all_unresolved) {
      result.warnings.push_back("AllUnresolved: no reply resolved to a known entity at T=" + format_fixed(t, 2));
    }
    result.per_temperature.push_back({t, std::move(sampled.dist)});
    if (result.per_temperature.size() == 1) result.default_label = identify_default(result.per_temperature[0].dist);

    const auto latest = std::span<const TemperaturePoint>(result.per_temperature).last(1);
    if (!result.raw_break) result.raw_break = detect_break(latest, result.default_label, spec.delta, 0.0);
    result.wilson_break = detect_break(latest, result.default_label, spec.delta, spec.z);
    if (result.wilson_break) break;
  }
  return result;
}

std::optional<double> analytic_break_temperature(const SimConfig& cfg, std::string_view prompt_key, double delta,
                                                 std::span<const double> grid) {
  const auto& prompt = cfg.at(prompt_key);
  if (grid.empty() || prompt.candidates.size() < 2) return std::nullopt;

  const auto first = sim_exact_distribution(cfg, prompt_key, grid.front());
  std::string mode;
  double mode_p = -1.0;
  for (const auto& [label, p] : first) {
    if (p > mode_p) {
      mode = label;
      mode_p = p;
    }
  }
  for (const double t : grid) {
    for (const auto& [label, p] : sim_exact_distribution(cfg, prompt_key, t)) {
      if (label != mode && p > delta) return t;
    }
  }
  return std::nullopt;
}

BrittlenessResult brittleness(Sampler& sampler, std::span<const std::string> paraphrases, double temperature, int n,
                              const Gazetteer& gazetteer) {
  if (paraphrases.size() < 2) throw Error(ErrorKind::InvalidArgument, "brittleness needs at least 2 paraphrases");
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "sample count must be >= 1");

  BrittlenessResult result;
  result.temperature = temperature;
  result.samples = n;
  for (const auto& prompt : paraphrases) {
    auto sampled = sample_distribution(sampler, prompt, temperature, n, gazetteer);
    if (sampled.all_unresolved) result.warnings.push_back("AllUnresolved: no reply resolved for prompt '" + prompt + "'");
    result.per_prompt.push_back({prompt, std::move(sampled.dist), sampled.all_unresolved});
  }

  const auto k = result.per_prompt.size();
  result.pairwise_jsd.assign(k, std::vector<double>(k, 0.0));
  result.pairwise_tv.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double jsd = jensen_shannon(result.per_prompt[i].dist, result.per_prompt[j].dist);
      const double tv = total_variation(result.per_prompt[i].dist, result.per_prompt[j].dist);
      result.pairwise_jsd[i][j] = result.pairwise_jsd[j][i] = jsd;
      result.pairwise_tv[i][j] = result.pairwise_tv[j][i] = tv;
      result.max_jsd = std::max(result.max_jsd, jsd);
      result.max_tv = std::max(result.max_tv, tv);
    }
  }
  return result;
}

}  // namespace geoprobe
