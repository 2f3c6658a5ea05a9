#include "geoprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "geoprobe/error.hpp"

namespace geoprobe {

CategoricalDist::CategoricalDist(
    std::initializer_list<std::pair<const std::string, std::int64_t>> counts,
    std::int64_t unresolved) {
  for (const auto& [label, n] : counts) add(label, n);
  add_unresolved(unresolved);
}

void CategoricalDist::add(std::string_view label, std::int64_t n) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "negative count for label '" + std::string(label) + "'");
  if (label == kUnresolvedLabel) {
    add_unresolved(n);
    return;
  }
  auto it = entries_.find(label);
  if (it == entries_.end()) it = entries_.emplace(std::string(label), 0).first;
  it->second += n;
  total_ += n;
}

void CategoricalDist::add_unresolved(std::int64_t n) {
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "negative unresolved count");
  unresolved_ += n;
  total_ += n;
}

std::int64_t CategoricalDist::count(std::string_view label) const {
  if (label == kUnresolvedLabel) return unresolved_;
  auto it = entries_.find(label);
  return it == entries_.end() ? 0 : it->second;
}

double CategoricalDist::probability(std::string_view label) const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(count(label)) / static_cast<double>(total_);
}

double CategoricalDist::unresolved_probability() const {
  if (total_ == 0) return 0.0;
  return static_cast<double>(unresolved_) / static_cast<double>(total_);
}

ShareMap CategoricalDist::shares() const {
  ShareMap out;
  if (total_ == 0) return out;
  const auto denom = static_cast<double>(total_);
  for (const auto& [label, n] : entries_) out.emplace(label, static_cast<double>(n) / denom);
  if (unresolved_ > 0) out.emplace(std::string(kUnresolvedLabel), static_cast<double>(unresolved_) / denom);
  return out;
}

namespace {

void require_nonempty(const CategoricalDist& d) {
  if (d.total() <= 0) throw Error(ErrorKind::InvalidDistribution, "distribution is empty");
}

void require_normalized(const ShareMap& s) {
  if (s.empty()) throw Error(ErrorKind::InvalidDistribution, "distribution is empty");
  double sum = 0.0;
  for (const auto& [label, p] : s) {
    if (!(p >= 0.0)) throw Error(ErrorKind::InvalidDistribution, "negative share for '" + label + "'");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::InvalidDistribution, "shares do not sum to 1");
}

// Visits every label of the union of two share maps, in label order.
template <typename Fn>
void for_each_union(const ShareMap& p, const ShareMap& q, Fn&& fn) {
  auto a = p.begin();
  auto b = q.begin();
  while (a != p.end() || b != q.end()) {
    if (b == q.end() || (a != p.end() && a->first < b->first)) {
      fn(a->second, 0.0);
      ++a;
    } else if (a == p.end() || b->first < a->first) {
      fn(0.0, b->second);
      ++b;
    } else {
      fn(a->second, b->second);
      ++a;
      ++b;
    }
  }
}

}  // namespace

double total_variation(const ShareMap& p, const ShareMap& q) {
  require_normalized(p);
  require_normalized(q);
  double sum = 0.0;
  for_each_union(p, q, [&](double pi, double qi) { sum += std::abs(pi - qi); });
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

double total_variation(const CategoricalDist& p, const CategoricalDist& q) {
  require_nonempty(p);
  require_nonempty(q);
  return total_variation(p.shares(), q.shares());
}

double jensen_shannon(const ShareMap& p, const ShareMap& q) {
  require_normalized(p);
  require_normalized(q);
  double kl_p = 0.0;
  double kl_q = 0.0;
  for_each_union(p, q, [&](double pi, double qi) {
    const double m = 0.5 * (pi + qi);
    if (pi > 0.0) kl_p += pi * std::log(pi / m);
    if (qi > 0.0) kl_q += qi * std::log(qi / m);
  });
  return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, std::numbers::ln2);
}

double jensen_shannon(const CategoricalDist& p, const CategoricalDist& q) {
  require_nonempty(p);
  require_nonempty(q);
  return jensen_shannon(p.shares(), q.shares());
}

double wilson_lower_bound(std::int64_t successes, std::int64_t n, double z) {
  if (n <= 0) throw Error(ErrorKind::InvalidArgument, "wilson_lower_bound: n must be >= 1");
  if (successes < 0 || successes > n)
    throw Error(ErrorKind::InvalidArgument, "wilson_lower_bound: successes outside [0, n]");
  if (!(z >= 0.0)) throw Error(ErrorKind::InvalidArgument, "wilson_lower_bound: z must be >= 0");
  if (successes == 0) return 0.0;

  const double nn = static_cast<double>(n);
  const double p_hat = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double centre = p_hat + z2 / (2.0 * nn);
  const double margin = z * std::sqrt(p_hat * (1.0 - p_hat) / nn + z2 / (4.0 * nn * nn));
  const double bound = (centre - margin) / (1.0 + z2 / nn);
  return std::clamp(bound, 0.0, p_hat);
}

namespace {

constexpr int kMaxGammaIterations = 100000;
constexpr double kGammaEps = 1e-16;

// P(s, x) by the power series; converges quickly for x < s + 1.
double lower_gamma_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  double ap = s;
  for (int i = 0; i < kMaxGammaIterations; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kGammaEps) break;
  }
  return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Q(s, x) by the modified Lentz continued fraction; used for x >= s + 1.
double upper_gamma_fraction(double s, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kGammaEps;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxGammaIterations; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kGammaEps) break;
  }
  return std::exp(-x + s * std::log(x) - std::lgamma(s)) * h;
}

}  // namespace

double regularized_upper_gamma(double s, double x) {
  if (!(s > 0.0)) throw Error(ErrorKind::InvalidArgument, "regularized_upper_gamma: s must be > 0");
  if (!(x >= 0.0)) throw Error(ErrorKind::InvalidArgument, "regularized_upper_gamma: x must be >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double q = x < s + 1.0 ? 1.0 - lower_gamma_series(s, x) : upper_gamma_fraction(s, x);
  return std::clamp(q, 0.0, 1.0);
}

constexpr double kMinExpected = 5.0;

ChiSquareResult chi_square_gof(const CategoricalDist& observed, const ShareMap& expected_proportions,
                               std::string_view other_label) {
  if (observed.total() <= 0) throw Error(ErrorKind::InvalidDistribution, "observed distribution is empty");
  double sum = 0.0;
  for (const auto& [label, p] : expected_proportions) {
    if (!(p >= 0.0)) throw Error(ErrorKind::InvalidReference, "negative reference proportion for '" + label + "'");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::InvalidReference, "reference proportions do not sum to 1");

  const double n = static_cast<double>(observed.total());
  std::map<std::string, ChiSquareCell, std::less<>> cells;
  for (const auto& [label, p] : expected_proportions) {
    cells.emplace(label, ChiSquareCell{label, static_cast<double>(observed.count(label)), n * p});
  }
  auto pool_into_other = [&](double o, double e) {
    auto it = cells.find(other_label);
    if (it == cells.end()) {
      it = cells.emplace(std::string(other_label), ChiSquareCell{std::string(other_label), 0.0, 0.0}).first;
    }
    it->second.observed += o;
    it->second.expected += e;
  };
  for (const auto& [label, count] : observed.entries()) {
    if (!expected_proportions.contains(label)) pool_into_other(static_cast<double>(count), 0.0);
  }
  if (observed.unresolved() > 0 && !expected_proportions.contains(kUnresolvedLabel)) {
    pool_into_other(static_cast<double>(observed.unresolved()), 0.0);
  }

  while (cells.size() >= 2) {
    const bool deficient = std::any_of(cells.begin(), cells.end(),
                                       [](const auto& kv) { return kv.second.expected < kMinExpected; });
    if (!deficient) break;
    auto victim = cells.end();
    for (auto it = cells.begin(); it != cells.end(); ++it) {
      if (it->first == other_label) continue;
      // Map iteration is lexicographic, so strict < keeps the first label on ties.
      if (victim == cells.end() || it->second.expected < victim->second.expected) victim = it;
    }
    if (victim == cells.end()) break;
    const ChiSquareCell merged = victim->second;
    cells.erase(victim);
    pool_into_other(merged.observed, merged.expected);
  }
  if (cells.size() < 2) {
    throw Error(ErrorKind::InsufficientCategories, "fewer than 2 categories after merging small expected counts");
  }

  ChiSquareResult result;
  for (auto& [label, cell] : cells) {
    const double diff = cell.observed - cell.expected;
    result.statistic += diff * diff / cell.expected;
    result.cells.push_back(cell);
  }
  result.df = static_cast<int>(cells.size()) - 1;
  result.p_value = regularized_upper_gamma(0.5 * result.df, 0.5 * result.statistic);
  return result;
}

OlsFit ols_loglog(std::span<const Point> points) {
  if (points.size() < 2) throw Error(ErrorKind::InvalidArgument, "ols_loglog needs at least 2 points");
  std::vector<double> u;
  std::vector<double> v;
  u.reserve(points.size());
  v.reserve(points.size());
  for (const auto& pt : points) {
    if (!(pt.x > 0.0) || !(pt.y > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "ols_loglog requires strictly positive coordinates");
    }
    u.push_back(std::log(pt.x));
    v.push_back(std::log(pt.y));
  }
  OlsFit fit;
  fit.n = static_cast<int>(points.size());

  if (std::all_of(u.begin(), u.end(), [&](double a) { return a == u.front(); })) {
    throw Error(ErrorKind::DegenerateAbscissa, "all x values are equal");
  }
  // Constant response: perfectly fit by a flat line.
  if (std::all_of(v.begin(), v.end(), [&](double b) { return b == v.front(); })) {
    fit.slope = 0.0;
    fit.intercept = v.front();
    fit.r_squared = 1.0;
    return fit;
  }

  const double count = static_cast<double>(u.size());
  double u_mean = 0.0;
  double v_mean = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    u_mean += u[i];
    v_mean += v[i];
  }
  u_mean /= count;
  v_mean /= count;

  double sxx = 0.0;
  double sxy = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - u_mean;
    const double dv = v[i] - v_mean;
    sxx += du * du;
    sxy += du * dv;
    ss_tot += dv * dv;
  }
  fit.slope = sxy / sxx;
  fit.intercept = v_mean - fit.slope * u_mean;

  double ss_res = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = v[i] - (fit.intercept + fit.slope * u[i]);
    ss_res += r * r;
  }
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

}  // namespace geoprobe
