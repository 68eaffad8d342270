#include "misinfo/heavytail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "misinfo/error.hpp"
#include "misinfo/zeta.hpp"

namespace misinfo::heavytail {
namespace {

struct TailStats {
  std::uint64_t n = 0;
  long double sum_log = 0.0L;
  std::size_t distinct = 0;
};

TailStats tail_stats(std::span<const std::uint64_t> values, std::uint64_t x_min) {
  TailStats stats;
  std::uint64_t first = 0;
  bool seen_two = false;
  for (auto v : values) {
    if (v < x_min) continue;
    if (stats.n == 0) {
      first = v;
    } else if (v != first) {
      seen_two = true;
    }
    ++stats.n;
    stats.sum_log += std::log(static_cast<long double>(v));
  }
  stats.distinct = stats.n == 0 ? 0 : (seen_two ? 2 : 1);
  return stats;
}

// Brent's root finder on the score, which is strictly decreasing in alpha.
double find_root(double lo, double hi, double f_lo, double f_hi, std::uint64_t x_min, std::uint64_t n,
                 long double sum_log, double tolerance) {
  double a = lo, b = hi, fa = f_lo, fb = f_hi;
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < 200; ++iter) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double x_tol = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b);
    const double m = 0.5 * (c - b);
    if (std::fabs(fb) < tolerance || std::fabs(m) <= x_tol) return b;
    if (std::fabs(e) >= x_tol && std::fabs(fa) > std::fabs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) {
        q = -q;
      } else {
        p = -p;
      }
      if (2.0 * p < std::min(3.0 * m * q - std::fabs(x_tol * q), std::fabs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::fabs(d) > x_tol ? d : (m > 0 ? x_tol : -x_tol);
    fb = score(b, x_min, n, sum_log);
  }
  return b;
}

PowerLawFit fit_fixed(std::span<const std::uint64_t> values, std::uint64_t x_min, const FitOptions& options) {
  if (x_min < 1) throw UsageError("x_min must be a positive integer");
  const TailStats stats = tail_stats(values, x_min);
  if (stats.distinct < 2) {
    throw EstimationError("power-law fit needs at least two distinct values >= x_min = " +
                          std::to_string(x_min) + " (got " + std::to_string(stats.n) + " values)");
  }
  PowerLawFit fit;
  fit.x_min = x_min;
  fit.n_tail = stats.n;

  const double lo = options.alpha_lo;
  const double hi = options.alpha_hi;
  const double f_lo = score(lo, x_min, stats.n, stats.sum_log);
  const double f_hi = score(hi, x_min, stats.n, stats.sum_log);
  if (f_lo <= 0.0) {
    fit.alpha_hat = lo;
    fit.at_bound = true;
    fit.warning = "likelihood maximum at the lower alpha bound";
  } else if (f_hi >= 0.0) {
    fit.alpha_hat = hi;
    fit.at_bound = true;
    fit.warning = "likelihood maximum at the upper alpha bound";
  } else {
    fit.alpha_hat = find_root(lo, hi, f_lo, f_hi, x_min, stats.n, stats.sum_log, options.score_tolerance);
  }

  // Observed information from a central second difference of the likelihood.
  const double h = std::min(options.fisher_step, 0.5 * (fit.alpha_hat - 1.0));
  const long double l0 = log_likelihood(fit.alpha_hat, x_min, stats.n, stats.sum_log);
  const long double lp = log_likelihood(fit.alpha_hat + h, x_min, stats.n, stats.sum_log);
  const long double lm = log_likelihood(fit.alpha_hat - h, x_min, stats.n, stats.sum_log);
  const double curvature = static_cast<double>((lp - 2.0L * l0 + lm) / (static_cast<long double>(h) * h));
  fit.loglik = static_cast<double>(l0);
  if (curvature < 0.0) {
    fit.se_alpha = 1.0 / std::sqrt(-curvature);
  } else {
    fit.se_alpha = std::numeric_limits<double>::quiet_NaN();
    fit.warning += fit.warning.empty() ? "" : "; ";
    fit.warning += "non-negative curvature at the estimate; standard error undefined";
  }
  return fit;
}

}  // namespace

EngagementKind parse_engagement_kind(std::string_view text) {
  if (text == "likes") return EngagementKind::likes;
  if (text == "reshares" || text == "reblogs" || text == "retweets") return EngagementKind::reshares;
  if (text == "replies") return EngagementKind::replies;
  throw UsageError("unknown engagement kind '" + std::string(text) + "' (expected likes|reshares|replies)");
}

Unit parse_unit(std::string_view text) {
  if (text == "post") return Unit::post;
  if (text == "user") return Unit::user;
  throw UsageError("unknown unit '" + std::string(text) + "' (expected post|user)");
}

std::string_view to_string(EngagementKind kind) {
  switch (kind) {
    case EngagementKind::likes: return "likes";
    case EngagementKind::reshares: return "reshares";
    case EngagementKind::replies: return "replies";
  }
  return "likes";
}

std::string_view to_string(Unit unit) { return unit == Unit::post ? "post" : "user"; }

EngagementSample engagement_sample(const corpus::Corpus& corpus, const PostLabels* labels, EngagementKind kind,
                                   Unit unit, std::optional<Label> group) {
  EngagementSample sample;
  sample.kind = kind;
  sample.unit = unit;
  sample.label = group ? std::string(misinfo::to_string(*group)) : "Overall";

  auto value_of = [kind](const corpus::Post& post) -> std::optional<std::uint64_t> {
    switch (kind) {
      case EngagementKind::likes: return post.likes;
      case EngagementKind::reshares: return post.reshares;
      case EngagementKind::replies: return post.replies;
    }
    return std::nullopt;
  };
  auto selected = [&](const corpus::Post& post) {
    if (!group) return true;
    if (labels == nullptr) return false;
    auto it = labels->find(post.post_id);
    return it != labels->end() && it->second == *group;
  };

  auto push = [&](std::optional<std::uint64_t> value) {
    if (!value) {
      ++sample.absent;
    } else if (*value == 0) {
      ++sample.zeros_excluded;
    } else {
      sample.values.push_back(*value);
    }
  };

  if (unit == Unit::post) {
    for (const auto& post : corpus.posts()) {
      if (selected(post)) push(value_of(post));
    }
  } else {
    // Users in first-appearance order; a user whose every post lacks the
    // count is absent.
    std::vector<std::string> order;
    std::unordered_map<std::string, std::optional<std::uint64_t>> totals;
    for (const auto& post : corpus.posts()) {
      if (!selected(post)) continue;
      auto [it, inserted] = totals.try_emplace(post.author_id);
      if (inserted) order.push_back(post.author_id);
      if (auto v = value_of(post)) {
        const std::uint64_t current = it->second.value_or(0);
        it->second = *v > std::numeric_limits<std::uint64_t>::max() - current
                         ? std::numeric_limits<std::uint64_t>::max()
                         : current + *v;
      }
    }
    for (const auto& id : order) push(totals[id]);
  }
  return sample;
}

double PowerLawFit::se_continuous() const {
  return (alpha_hat - 1.0) / std::sqrt(static_cast<double>(n_tail));
}

double log_likelihood(double alpha, std::uint64_t x_min, std::uint64_t n, long double sum_log) {
  const long double nn = static_cast<long double>(n);
  return static_cast<double>(-nn * std::log(static_cast<long double>(hurwitz_zeta(alpha, static_cast<double>(x_min)))) -
                             static_cast<long double>(alpha) * sum_log);
}

double score(double alpha, std::uint64_t x_min, std::uint64_t n, long double sum_log) {
  const auto z = hurwitz_zeta_with_ds(alpha, static_cast<double>(x_min));
  return static_cast<double>(-static_cast<long double>(n) * z.ds / z.value - sum_log);
}

PowerLawFit fit_discrete_powerlaw(std::span<const std::uint64_t> values, const FitOptions& options) {
  if (!(options.alpha_lo > 1.0) || !(options.alpha_hi > options.alpha_lo)) {
    throw UsageError("alpha search interval must satisfy 1 < lo < hi");
  }
  if (options.x_min) return fit_fixed(values, *options.x_min, options);

  std::vector<std::uint64_t> distinct(values.begin(), values.end());
  distinct.erase(std::remove(distinct.begin(), distinct.end(), std::uint64_t{0}), distinct.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw EstimationError("power-law fit needs at least two distinct positive values");

  std::optional<PowerLawFit> best;
  const std::size_t candidates = std::min(options.max_xmin_candidates, distinct.size() - 1);
  for (std::size_t i = 0; i < candidates; ++i) {
    const std::uint64_t x_min = distinct[i];
    if (tail_stats(values, x_min).n < options.min_tail && best) break;
    PowerLawFit fit = fit_fixed(values, x_min, options);
    fit.ks_distance = ks_distance(values, fit.alpha_hat, x_min);
    if (!best || *fit.ks_distance < *best->ks_distance) best = std::move(fit);
  }
  return *best;
}

double ks_distance(std::span<const std::uint64_t> values, double alpha, std::uint64_t x_min) {
  std::map<std::uint64_t, std::uint64_t> counts;
  std::uint64_t n = 0;
  for (auto v : values) {
    if (v < x_min) continue;
    ++counts[v];
    ++n;
  }
  if (n == 0) return 0.0;
  const double zeta_min = hurwitz_zeta(alpha, static_cast<double>(x_min));
  auto fitted_cdf = [&](std::uint64_t x) {  // P(X <= x | X >= x_min)
    return 1.0 - hurwitz_zeta(alpha, static_cast<double>(x) + 1.0) / zeta_min;
  };
  double d = 0.0;
  std::uint64_t cumulative = 0;
  double previous_empirical = 0.0;
  for (const auto& [value, count] : counts) {
    // Just below a data value the empirical CDF still holds its previous level.
    if (value > x_min) d = std::max(d, std::fabs(previous_empirical - fitted_cdf(value - 1)));
    cumulative += count;
    const double empirical = static_cast<double>(cumulative) / static_cast<double>(n);
    d = std::max(d, std::fabs(empirical - fitted_cdf(value)));
    previous_empirical = empirical;
  }
  return d;
}

PowerLawSampler::PowerLawSampler(double alpha, std::uint64_t x_min, std::size_t max_table)
    : alpha_(alpha), x_min_(x_min), zeta_min_(hurwitz_zeta(alpha, static_cast<double>(x_min))) {
  if (x_min < 1) throw UsageError("x_min must be a positive integer");
  if (max_table < 1) max_table = 1;
  // Tabulate until the remaining tail is negligible or the table is full.
  long double cumulative = 0.0L;
  const long double norm = zeta_min_;
  for (std::uint64_t x = x_min; cdf_.size() < max_table; ++x) {
    cumulative += std::pow(static_cast<double>(x), -alpha) / norm;
    cdf_.push_back(static_cast<double>(std::min(cumulative, 1.0L)));
    if (cumulative >= 1.0L - 1e-15L) break;
  }
}

double PowerLawSampler::tail(std::uint64_t x) const {
  if (x <= x_min_) return 1.0;
  return hurwitz_zeta(alpha_, static_cast<double>(x)) / zeta_min_;
}

double PowerLawSampler::pmf(std::uint64_t x) const {
  if (x < x_min_) return 0.0;
  return std::pow(static_cast<double>(x), -alpha_) / zeta_min_;
}

std::uint64_t PowerLawSampler::invert_tail(double v) const {
  // Smallest x beyond the table with P(X >= x + 1) < v.
  std::uint64_t lo = x_min_ + cdf_.size();  // P(X >= lo + 1) >= v is not yet known
  if (tail(lo + 1) < v) return lo;
  std::uint64_t hi = lo;
  do {
    lo = hi;
    if (hi >= kMaxValue / 2) return kMaxValue;
    hi *= 2;
  } while (tail(hi + 1) >= v);
  // Invariant: tail(lo + 1) >= v > tail(hi + 1).
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (tail(mid + 1) < v) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::uint64_t PowerLawSampler::operator()(Rng& rng) const {
  const double u = rng.uniform();
  if (u < cdf_.back()) {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return x_min_ + static_cast<std::uint64_t>(it - cdf_.begin());
  }
  return invert_tail(1.0 - u);
}

std::vector<std::uint64_t> PowerLawSampler::draw(std::size_t n, Rng& rng) const {
  std::vector<std::uint64_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back((*this)(rng));
  return out;
}

std::vector<std::uint64_t> sample_powerlaw(double alpha, std::uint64_t x_min, std::size_t n, std::uint64_t seed) {
  if (!(alpha > 1.0)) throw DomainError("power-law sampling requires alpha > 1");
  const PowerLawSampler sampler(alpha, x_min);
  Rng rng(seed);
  return sampler.draw(n, rng);
}

double chi2_1_upper_tail(double w) {
  if (!(w > 0.0)) return 1.0;
  return std::erfc(std::sqrt(0.5 * w));
}

WaldResult wald_compare(const PowerLawFit& a, const PowerLawFit& b) {
  const double diff = a.alpha_hat - b.alpha_hat;
  const double variance = a.se_alpha * a.se_alpha + b.se_alpha * b.se_alpha;
  WaldResult result;
  result.statistic = diff == 0.0 ? 0.0 : diff * diff / variance;
  result.p_value = chi2_1_upper_tail(result.statistic);
  return result;
}

std::vector<CcdfPoint> ccdf(std::span<const std::uint64_t> values) {
  std::vector<std::uint64_t> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<CcdfPoint> out;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;
    out.push_back({sorted[i], static_cast<double>(sorted.size() - i) / n});
  }
  return out;
}

}  // namespace misinfo::heavytail
