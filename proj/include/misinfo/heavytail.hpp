#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "misinfo/corpus.hpp"
#include "misinfo/label.hpp"
#include "misinfo/random.hpp"

namespace misinfo::heavytail {

enum class EngagementKind { likes, reshares, replies };
enum class Unit { post, user };

EngagementKind parse_engagement_kind(std::string_view text);  // throws UsageError
Unit parse_unit(std::string_view text);
std::string_view to_string(EngagementKind kind);
std::string_view to_string(Unit unit);

// Positive engagement counts of one kind, per post or summed per user, for one
// label group (or "Overall"). Zeros cannot belong to a power law on {1,2,...}
// and are only counted; absent reply counts are tallied separately.
struct EngagementSample {
  std::vector<std::uint64_t> values;
  EngagementKind kind = EngagementKind::likes;
  Unit unit = Unit::post;
  std::string label = "Overall";
  std::uint64_t zeros_excluded = 0;
  std::uint64_t absent = 0;
};

// `group` nullopt selects every post (Overall); otherwise posts whose label
// equals *group.
EngagementSample engagement_sample(const corpus::Corpus& corpus, const PostLabels* labels, EngagementKind kind,
                                   Unit unit, std::optional<Label> group);

struct FitOptions {
  std::optional<std::uint64_t> x_min = 1;  // nullopt: choose by KS distance
  double alpha_lo = 1.0001;
  double alpha_hi = 20.0;
  double score_tolerance = 1e-9;  // |dl/dalpha| at the optimum
  double fisher_step = 1e-4;      // central-difference step for d2l/dalpha2
  std::size_t max_xmin_candidates = 100;
  std::uint64_t min_tail = 10;  // smallest tail considered by auto x_min
};

struct PowerLawFit {
  double alpha_hat = 0.0;
  std::uint64_t x_min = 1;
  double se_alpha = 0.0;  // observed Fisher information
  std::uint64_t n_tail = 0;
  double loglik = 0.0;
  std::optional<double> ks_distance;  // set when x_min was selected
  bool at_bound = false;
  std::string warning;

  // (alpha - 1) / sqrt(n), the continuous-data approximation, for comparison.
  double se_continuous() const;
};

// Discrete power-law log-likelihood  -n ln zeta(alpha, x_min) - alpha sum ln x
// and its alpha-derivative, from sufficient statistics.
double log_likelihood(double alpha, std::uint64_t x_min, std::uint64_t n, long double sum_log);
double score(double alpha, std::uint64_t x_min, std::uint64_t n, long double sum_log);

// Maximum-likelihood fit on values >= x_min. Throws EstimationError if the
// tail has fewer than two distinct values. A maximum on the search bound
// returns a fit flagged `at_bound` with a warning.
PowerLawFit fit_discrete_powerlaw(std::span<const std::uint64_t> values, const FitOptions& options = {});

// Kolmogorov-Smirnov distance between the empirical tail and the fitted
// discrete law, both conditioned on X >= x_min.
double ks_distance(std::span<const std::uint64_t> values, double alpha, std::uint64_t x_min);

// Exact inverse-transform sampler. P(X <= x) is tabulated for the head of the
// support; draws beyond the table invert P(X >= x) = zeta(alpha, x) /
// zeta(alpha, x_min) by bisection.
class PowerLawSampler {
 public:
  static constexpr std::uint64_t kMaxValue = std::uint64_t{1} << 62;

  PowerLawSampler(double alpha, std::uint64_t x_min, std::size_t max_table = std::size_t{1} << 20);

  std::uint64_t operator()(Rng& rng) const;
  std::vector<std::uint64_t> draw(std::size_t n, Rng& rng) const;

  // P(X >= x)
  double tail(std::uint64_t x) const;
  double pmf(std::uint64_t x) const;
  double alpha() const { return alpha_; }
  std::uint64_t x_min() const { return x_min_; }

 private:
  std::uint64_t invert_tail(double v) const;

  double alpha_;
  std::uint64_t x_min_;
  double zeta_min_;
  std::vector<double> cdf_;  // cdf_[i] = P(X <= x_min + i)
};

std::vector<std::uint64_t> sample_powerlaw(double alpha, std::uint64_t x_min, std::size_t n, std::uint64_t seed);

struct WaldResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// (alpha_a - alpha_b)^2 / (se_a^2 + se_b^2) against chi-squared(1).
WaldResult wald_compare(const PowerLawFit& a, const PowerLawFit& b);

// Upper tail of chi-squared with one degree of freedom, erfc(sqrt(w / 2)).
double chi2_1_upper_tail(double w);

struct CcdfPoint {
  std::uint64_t value;
  double p;  // P(X >= value)

  bool operator==(const CcdfPoint&) const = default;
};

std::vector<CcdfPoint> ccdf(std::span<const std::uint64_t> values);

}  // namespace misinfo::heavytail
