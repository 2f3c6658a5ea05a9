#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geoprobe {

// Label used for responses that matched no known entity. It participates in
// every metric as an ordinary category.
inline constexpr std::string_view kUnresolvedLabel = "__unresolved__";

using ShareMap = std::map<std::string, double, std::less<>>;

// Counts of canonical labels plus an unresolved bucket.
//
// total() = sum of label counts + unresolved(). Probabilities are count/total.
class CategoricalDist {
 public:
  using Counts = std::map<std::string, std::int64_t, std::less<>>;

  CategoricalDist() = default;
  CategoricalDist(std::initializer_list<std::pair<const std::string, std::int64_t>> counts,
                  std::int64_t unresolved = 0);

  void add(std::string_view label, std::int64_t n = 1);
  void add_unresolved(std::int64_t n = 1);

  std::int64_t count(std::string_view label) const;
  std::int64_t unresolved() const { return unresolved_; }
  std::int64_t total() const { return total_; }
  bool empty() const { return total_ == 0; }

  double probability(std::string_view label) const;
  double unresolved_probability() const;

  const Counts& entries() const { return entries_; }

  // Normalized shares over labels; the unresolved bucket appears under
  // kUnresolvedLabel when non-zero.
  ShareMap shares() const;

  bool operator==(const CategoricalDist&) const = default;

 private:
  Counts entries_;
  std::int64_t unresolved_ = 0;
  std::int64_t total_ = 0;
};

// ½ Σ |p(i) − q(i)| over the union of labels.
double total_variation(const CategoricalDist& p, const CategoricalDist& q);
double total_variation(const ShareMap& p, const ShareMap& q);

// Jensen-Shannon divergence in nats, bounded by ln 2.
double jensen_shannon(const CategoricalDist& p, const CategoricalDist& q);
double jensen_shannon(const ShareMap& p, const ShareMap& q);

// Lower limit of the Wilson score interval for a binomial proportion.
double wilson_lower_bound(std::int64_t successes, std::int64_t n, double z);

inline constexpr double kDefaultWilsonZ = 1.6449;  // one-sided 95%

// Q(s, x) = Γ(s, x) / Γ(s). Series for x < s + 1, Lentz continued fraction
// otherwise.
double regularized_upper_gamma(double s, double x);

struct ChiSquareCell {
  std::string label;
  double observed = 0.0;
  double expected = 0.0;
};

struct ChiSquareResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  // Categories after small-count merging, in label order.
  std::vector<ChiSquareCell> cells;
};

// Pearson goodness-of-fit test against reference proportions.
//
// Observed labels missing from the reference are pooled under other_label.
// Categories with expected count below 5 are merged into other_label in
// ascending order of expected count (ties lexicographic) until every cell
// reaches 5.
ChiSquareResult chi_square_gof(const CategoricalDist& observed, const ShareMap& expected_proportions,
                               std::string_view other_label = "Other");

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n = 0;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Least squares fit of ln y on ln x.
OlsFit ols_loglog(std::span<const Point> points);

}  // namespace geoprobe
