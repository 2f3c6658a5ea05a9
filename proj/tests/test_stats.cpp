#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "geoprobe/error.hpp"
#include "geoprobe/stats.hpp"

using namespace geoprobe;

namespace {

constexpr double kLn2 = std::numbers::ln2;

CategoricalDist random_dist(std::mt19937_64& rng, const std::vector<std::string>& labels) {
  CategoricalDist d;
  std::uniform_int_distribution<int> count(0, 40);
  for (const auto& l : labels) {
    // Sparse supports exercise the zero-probability terms.
    if (rng() % 4 == 0) continue;
    d.add(l, count(rng));
  }
  if (rng() % 5 == 0) d.add_unresolved(count(rng));
  if (d.total() == 0) d.add(labels.front(), 1);
  return d;
}

// Mid-p exact lower confidence bound: the p at which
// P(X > k) + P(X = k) / 2 = alpha for X ~ Binomial(n, p).
double midp_lower_bound(int k, int n, double alpha) {
  if (k == 0) return 0.0;
  auto tail = [&](double p) {
    double upper = 0.0;
    double at_k = 0.0;
    for (int j = k; j <= n; ++j) {
      const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) +
                             j * std::log(p) + (n - j) * std::log1p(-p);
      const double pmf = std::exp(log_pmf);
      if (j == k) {
        at_k = pmf;
      } else {
        upper += pmf;
      }
    }
    return upper + 0.5 * at_k;
  };
  double lo = 1e-12;
  double hi = 1.0 - 1e-12;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) < alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Adaptive Simpson quadrature.
template <typename F>
double simpson(F f, double a, double b, double fa, double fm, double fb, double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

template <typename F>
double integrate(F f, double a, double b, double eps = 1e-13) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), eps, 60);
}

// Q(s, x) by direct quadrature of the integrand t^(s-1) e^-t / Gamma(s).
double upper_gamma_quadrature(double s, double x) {
  auto f = [s](double t) { return std::exp((s - 1.0) * std::log(t) - t - std::lgamma(s)); };
  const double end = x + 60.0 + 4.0 * s;
  double total = 0.0;
  // Split into unit panels so the peak near t = s - 1 is resolved.
  for (double a = x; a < end; a += 1.0) total += integrate(f, a, std::min(a + 1.0, end));
  return total;
}

}  // namespace

TEST(CategoricalDist, CountsAndShares) {
  CategoricalDist d{{"Japan", 168}, {"Canada", 20}, {"Brazil", 12}};
  EXPECT_EQ(d.total(), 200);
  EXPECT_DOUBLE_EQ(d.probability("Japan"), 0.84);
  EXPECT_EQ(d.count("Peru"), 0);
  d.add(kUnresolvedLabel, 4);
  EXPECT_EQ(d.unresolved(), 4);
  EXPECT_EQ(d.total(), 204);
  const auto s = d.shares();
  EXPECT_DOUBLE_EQ(s.at(std::string(kUnresolvedLabel)), 4.0 / 204.0);
}

TEST(CategoricalDist, RejectsNegativeCounts) {
  CategoricalDist d;
  EXPECT_THROW(d.add("x", -1), Error);
}

TEST(Metrics, WorkedExamples) {
  const CategoricalDist p{{"A", 1}, {"B", 1}};
  const CategoricalDist q{{"A", 1}, {"B", 3}};
  EXPECT_NEAR(total_variation(p, q), 0.25, 1e-15);
  // Closed form: 0.5 [0.5 ln(0.5/0.375) + 0.5 ln(0.5/0.625)] + 0.5 [0.25 ln(0.25/0.375) + 0.75 ln(0.75/0.625)]
  const double m1 = 0.375;
  const double m2 = 0.625;
  const double expected = 0.5 * (0.5 * std::log(0.5 / m1) + 0.5 * std::log(0.5 / m2)) +
                          0.5 * (0.25 * std::log(0.25 / m1) + 0.75 * std::log(0.75 / m2));
  EXPECT_NEAR(jensen_shannon(p, q), expected, 1e-15);
  EXPECT_NEAR(jensen_shannon(p, q), 0.033822075568605, 1e-12);

  const CategoricalDist a{{"A", 5}};
  const CategoricalDist b{{"B", 7}};
  EXPECT_DOUBLE_EQ(total_variation(a, b), 1.0);
  EXPECT_NEAR(jensen_shannon(a, b), kLn2, 1e-15);
}

TEST(Metrics, EmptyDistributionThrows) {
  const CategoricalDist empty;
  const CategoricalDist one{{"A", 1}};
  try {
    total_variation(empty, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDistribution);
  }
  EXPECT_THROW(jensen_shannon(one, empty), Error);
}

TEST(Metrics, UnnormalizedSharesThrow) {
  ShareMap p{{"A", 0.5}, {"B", 0.6}};
  ShareMap q{{"A", 1.0}};
  EXPECT_THROW(total_variation(p, q), Error);
  EXPECT_THROW(jensen_shannon(q, p), Error);
}

TEST(MetricsProperty, SymmetryBoundsIdentity) {
  std::mt19937_64 rng(20240601);
  const std::vector<std::string> labels{"a", "b", "c", "d", "e", "f", "g"};
  for (int i = 0; i < 2000; ++i) {
    const auto p = random_dist(rng, labels);
    const auto q = random_dist(rng, labels);
    const double tv = total_variation(p, q);
    const double js = jensen_shannon(p, q);
    ASSERT_DOUBLE_EQ(tv, total_variation(q, p));
    ASSERT_DOUBLE_EQ(js, jensen_shannon(q, p));
    ASSERT_GE(tv, 0.0);
    ASSERT_LE(tv, 1.0 + 1e-12);
    ASSERT_GE(js, 0.0);
    ASSERT_LE(js, kLn2);
    // JS is bounded by ln 2 times the total variation distance.
    ASSERT_LE(js, kLn2 * tv + 1e-12);
    ASSERT_EQ(total_variation(p, p), 0.0);
    ASSERT_NEAR(jensen_shannon(p, p), 0.0, 1e-15);
  }
}

TEST(MetricsProperty, RelabelingInvariance) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> labels{"a", "b", "c", "d", "e"};
  const std::vector<std::string> renamed{"zz", "yy", "xx", "ww", "vv"};
  for (int i = 0; i < 300; ++i) {
    const auto p = random_dist(rng, labels);
    const auto q = random_dist(rng, labels);
    auto rename = [&](const CategoricalDist& d) {
      CategoricalDist out;
      for (const auto& [l, c] : d.entries()) out.add(renamed[static_cast<std::size_t>(l[0] - 'a')], c);
      out.add_unresolved(d.unresolved());
      return out;
    };
    ASSERT_NEAR(total_variation(p, q), total_variation(rename(p), rename(q)), 1e-15);
    ASSERT_NEAR(jensen_shannon(p, q), jensen_shannon(rename(p), rename(q)), 1e-15);
  }
}

TEST(MetricsProperty, UnresolvedMassCounts) {
  const CategoricalDist p{{{"A", 10}}};
  const CategoricalDist q{{{"A", 10}}, 10};
  EXPECT_DOUBLE_EQ(total_variation(p, q), 0.5);
}

TEST(Wilson, ZeroSuccessesIsZero) {
  EXPECT_EQ(wilson_lower_bound(0, 50, kDefaultWilsonZ), 0.0);
  EXPECT_EQ(wilson_lower_bound(0, 1000, kDefaultWilsonZ), 0.0);
}

TEST(Wilson, WorkedExample) {
  // Score interval lower limit for 10 / 200 at z = 1.6449.
  const double n = 200;
  const double p = 0.05;
  const double z = 1.6449;
  const double expected =
      (p + z * z / (2 * n) - z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n))) / (1 + z * z / n);
  EXPECT_NEAR(wilson_lower_bound(10, 200, z), expected, 1e-15);
  EXPECT_NEAR(wilson_lower_bound(10, 200, z), 0.030120187005562, 1e-12);
}

TEST(Wilson, InvalidArguments) {
  EXPECT_THROW(wilson_lower_bound(1, 0, 1.0), Error);
  EXPECT_THROW(wilson_lower_bound(5, 4, 1.0), Error);
  EXPECT_THROW(wilson_lower_bound(-1, 4, 1.0), Error);
}

TEST(WilsonProperty, BoundedAndMonotone) {
  for (int n : {1, 7, 50, 200, 1000}) {
    double prev = -1.0;
    for (int k = 0; k <= n; ++k) {
      const double lb = wilson_lower_bound(k, n, kDefaultWilsonZ);
      ASSERT_GE(lb, 0.0);
      ASSERT_LE(lb, static_cast<double>(k) / n);
      ASSERT_GT(lb, prev - 1e-15) << "n=" << n << " k=" << k;
      prev = lb;
    }
  }
  // Wider z gives a lower bound.
  EXPECT_LT(wilson_lower_bound(30, 100, 2.5), wilson_lower_bound(30, 100, 1.0));
  EXPECT_DOUBLE_EQ(wilson_lower_bound(30, 100, 0.0), 0.3);
}

TEST(WilsonOracle, MatchesExactBinomialQuantiles) {
  for (int n : {50, 200, 1000}) {
    double worst = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double exact = midp_lower_bound(k, n, 0.05);
      worst = std::max(worst, std::abs(wilson_lower_bound(k, n, kDefaultWilsonZ) - exact));
    }
    EXPECT_LT(worst, 0.01) << "n=" << n;
  }
}

TEST(Gamma, KnownValues) {
  EXPECT_NEAR(regularized_upper_gamma(0.5, 8.0), std::erfc(std::sqrt(8.0)), 1e-15);
  EXPECT_NEAR(regularized_upper_gamma(1.0, 2.5), std::exp(-2.5), 1e-15);
  EXPECT_NEAR(regularized_upper_gamma(2.0, 3.0), 4.0 * std::exp(-3.0), 1e-15);
  EXPECT_EQ(regularized_upper_gamma(3.0, 0.0), 1.0);
  EXPECT_THROW(regularized_upper_gamma(0.0, 1.0), Error);
  EXPECT_THROW(regularized_upper_gamma(1.0, -1.0), Error);
}

TEST(GammaOracle, AgreesWithQuadrature) {
  for (double s : {0.5, 1.0, 1.5, 2.0, 3.5, 7.0, 12.0}) {
    for (double x : {0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 15.0, 25.0}) {
      const double q = regularized_upper_gamma(s, x);
      const double oracle = upper_gamma_quadrature(s, x);
      EXPECT_NEAR(q, oracle, 1e-9 * std::max(1.0, oracle)) << "s=" << s << " x=" << x;
    }
  }
}

TEST(GammaProperty, DecreasingInX) {
  for (double s : {0.5, 2.0, 10.0}) {
    double prev = 1.0;
    for (double x = 0.0; x < 40.0; x += 0.25) {
      const double q = regularized_upper_gamma(s, x);
      ASSERT_LE(q, prev + 1e-15);
      ASSERT_GE(q, 0.0);
      prev = q;
    }
  }
}

TEST(ChiSquare, ThirtySeventyAgainstUniform) {
  const CategoricalDist obs{{"A", 30}, {"B", 70}};
  const auto r = chi_square_gof(obs, ShareMap{{"A", 0.5}, {"B", 0.5}});
  EXPECT_NEAR(r.statistic, 16.0, 1e-12);
  EXPECT_EQ(r.df, 1);
  EXPECT_NEAR(r.p_value, 6.334248366623977e-05, 1e-12);
}

TEST(ChiSquare, MergesSmallExpectedCells) {
  // Expected counts: A 60, B 30, C 6, D 3, E 1; D and E pool, then the pooled
  // cell (4) absorbs C.
  const CategoricalDist obs{{"A", 55}, {"B", 33}, {"C", 7}, {"D", 4}, {"E", 1}};
  const auto r = chi_square_gof(obs, ShareMap{{"A", 0.6}, {"B", 0.3}, {"C", 0.06}, {"D", 0.03}, {"E", 0.01}});
  ASSERT_EQ(r.cells.size(), 3u);
  EXPECT_EQ(r.cells[2].label, "Other");
  EXPECT_NEAR(r.cells[2].expected, 10.0, 1e-12);
  EXPECT_NEAR(r.cells[2].observed, 12.0, 1e-12);
  EXPECT_EQ(r.df, 2);
  const double stat = 25.0 / 60.0 + 9.0 / 30.0 + 4.0 / 10.0;
  EXPECT_NEAR(r.statistic, stat, 1e-12);
}

TEST(ChiSquare, UnknownObservedLabelsPoolIntoOther) {
  const CategoricalDist obs{{"A", 40}, {"B", 50}, {"Z", 10}};
  const auto r = chi_square_gof(obs, ShareMap{{"A", 0.5}, {"B", 0.5}});
  ASSERT_EQ(r.cells.size(), 2u);  // "Other" has expected 0 and merges with the smaller cell
  double observed = 0.0;
  for (const auto& c : r.cells) observed += c.observed;
  EXPECT_DOUBLE_EQ(observed, 100.0);
}

TEST(ChiSquare, Errors) {
  const CategoricalDist obs{{"A", 3}, {"B", 2}};
  try {
    chi_square_gof(obs, ShareMap{{"A", 0.5}, {"B", 0.5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientCategories);
  }
  try {
    chi_square_gof(CategoricalDist{{"A", 30}, {"B", 70}}, ShareMap{{"A", 0.5}, {"B", 0.4}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidReference);
  }
}

TEST(Ols, ExactPowerLaw) {
  std::vector<Point> pts;
  for (int r = 1; r <= 30; ++r) pts.push_back({static_cast<double>(r), 1e7 / r});
  const auto fit = ols_loglog(pts);
  EXPECT_NEAR(fit.slope, -1.0, 1e-12);
  EXPECT_NEAR(fit.intercept, std::log(1e7), 1e-9);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_EQ(fit.n, 30);
}

TEST(Ols, ConstantResponse) {
  const std::vector<Point> pts{{1, 5}, {2, 5}, {3, 5}};
  const auto fit = ols_loglog(pts);
  EXPECT_EQ(fit.slope, 0.0);
  EXPECT_EQ(fit.r_squared, 1.0);
}

TEST(Ols, DegenerateAbscissa) {
  const std::vector<Point> pts{{2, 5}, {2, 6}, {2, 7}};
  try {
    ols_loglog(pts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateAbscissa);
  }
}

TEST(OlsProperty, ScaleInvariantSlope) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> noise(0.7, 1.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point> pts;
    std::vector<Point> scaled;
    for (int r = 1; r <= 20; ++r) {
      const double y = 1e6 * std::pow(r, -0.8) * noise(rng);
      pts.push_back({static_cast<double>(r), y});
      scaled.push_back({static_cast<double>(r), y * 37.0});
    }
    const auto a = ols_loglog(pts);
    const auto b = ols_loglog(scaled);
    ASSERT_NEAR(a.slope, b.slope, 1e-9);
    ASSERT_NEAR(a.r_squared, b.r_squared, 1e-9);
    ASSERT_GE(a.r_squared, 0.0);
    ASSERT_LE(a.r_squared, 1.0);
  }
}
