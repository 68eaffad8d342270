#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "misinfo/error.hpp"
#include "misinfo/heavytail.hpp"
#include "misinfo/zeta.hpp"

using namespace misinfo;
using namespace misinfo::heavytail;

namespace {

long double sum_log(const std::vector<std::uint64_t>& v, std::uint64_t x_min) {
  long double s = 0;
  for (auto x : v) {
    if (x >= x_min) s += std::log(static_cast<long double>(x));
  }
  return s;
}

std::uint64_t n_at_least(const std::vector<std::uint64_t>& v, std::uint64_t x_min) {
  return static_cast<std::uint64_t>(std::count_if(v.begin(), v.end(), [&](auto x) { return x >= x_min; }));
}

PowerLawFit fit_with(double alpha, double se) {
  PowerLawFit f;
  f.alpha_hat = alpha;
  f.se_alpha = se;
  return f;
}

corpus::Post post(const std::string& id, const std::string& author, std::uint64_t likes,
                  std::optional<std::uint64_t> replies) {
  corpus::Post p;
  p.post_id = id;
  p.author_id = author;
  p.created_at = *parse_timestamp("2020-02-01");
  p.likes = likes;
  p.replies = replies;
  return p;
}

}  // namespace

TEST_SUITE("heavytail") {

TEST_CASE("kind and unit names") {
  CHECK(parse_engagement_kind("likes") == EngagementKind::likes);
  CHECK(parse_engagement_kind("reblogs") == EngagementKind::reshares);
  CHECK(parse_engagement_kind("retweets") == EngagementKind::reshares);
  CHECK(parse_engagement_kind("replies") == EngagementKind::replies);
  CHECK_THROWS_AS(parse_engagement_kind("views"), UsageError);
  CHECK(parse_unit("user") == Unit::user);
  CHECK_THROWS_AS(parse_unit("group"), UsageError);
  CHECK(to_string(EngagementKind::reshares) == "reshares");
}

TEST_CASE("engagement samples exclude zeros and tally absent counts") {
  corpus::Corpus c(parse_window("2020-01-01..2020-09-30"), "t");
  c.add_post(post("p0", "a", 3, std::nullopt));
  c.add_post(post("p1", "a", 0, 2));
  c.add_post(post("p2", "b", 5, std::nullopt));
  c.add_post(post("p3", "c", 0, 0));
  PostLabels labels{{"p0", Label::Questionable}, {"p1", Label::Questionable}, {"p2", Label::Reliable}};

  auto likes = engagement_sample(c, &labels, EngagementKind::likes, Unit::post, std::nullopt);
  CHECK(likes.values == std::vector<std::uint64_t>{3, 5});
  CHECK(likes.zeros_excluded == 2);
  CHECK(likes.label == "Overall");

  auto replies = engagement_sample(c, &labels, EngagementKind::replies, Unit::post, std::nullopt);
  CHECK(replies.values == std::vector<std::uint64_t>{2});
  CHECK(replies.zeros_excluded == 1);
  CHECK(replies.absent == 2);

  auto q_users = engagement_sample(c, &labels, EngagementKind::likes, Unit::user, Label::Questionable);
  CHECK(q_users.values == std::vector<std::uint64_t>{3});
  CHECK(q_users.label == "Questionable");

  auto user_replies = engagement_sample(c, &labels, EngagementKind::replies, Unit::user, std::nullopt);
  CHECK(user_replies.values == std::vector<std::uint64_t>{2});  // a
  CHECK(user_replies.absent == 1);                               // b
  CHECK(user_replies.zeros_excluded == 1);                       // c
}

TEST_CASE("ccdf examples") {
  std::vector<std::uint64_t> v = {1, 2, 3};
  CHECK(ccdf(v) == std::vector<CcdfPoint>{{1, 1.0}, {2, 2.0 / 3.0}, {3, 1.0 / 3.0}});
  std::vector<std::uint64_t> single = {5};
  CHECK(ccdf(single) == std::vector<CcdfPoint>{{5, 1.0}});
}

TEST_CASE("ccdf against a counting loop") {
  for (int seed = 0; seed < 20; ++seed) {
    auto v = sample_powerlaw(1.6, 1, 500 + static_cast<std::size_t>(seed) * 37, static_cast<std::uint64_t>(seed));
    auto points = ccdf(v);
    std::map<std::uint64_t, int> distinct;
    for (auto x : v) ++distinct[x];
    REQUIRE(points.size() == distinct.size());
    CHECK(points.front().p == 1.0);
    std::size_t i = 0;
    for (const auto& [value, count] : distinct) {
      std::size_t at_least = 0;
      for (auto x : v) at_least += x >= value ? 1 : 0;
      CHECK(points[i].value == value);
      CHECK(points[i].p == static_cast<double>(at_least) / static_cast<double>(v.size()));
      if (i > 0) CHECK(points[i].p < points[i - 1].p);
      ++i;
    }
  }
}

TEST_CASE("degenerate samples cannot be fit") {
  std::vector<std::uint64_t> ones = {1, 1, 1, 1};
  CHECK_THROWS_AS(fit_discrete_powerlaw(ones), EstimationError);
  std::vector<std::uint64_t> empty;
  CHECK_THROWS_AS(fit_discrete_powerlaw(empty), EstimationError);
  std::vector<std::uint64_t> below = {1, 2, 3, 7};
  FitOptions o;
  o.x_min = 5;
  CHECK_THROWS_AS(fit_discrete_powerlaw(below, o), EstimationError);
}

TEST_CASE("recovers alpha 1.5 from 100000 draws") {
  auto v = sample_powerlaw(1.5, 1, 100000, 2020);
  auto fit = fit_discrete_powerlaw(v);
  CHECK(fit.x_min == 1);
  CHECK(fit.alpha_hat >= 1.45);
  CHECK(fit.alpha_hat <= 1.55);
  CHECK(fit.n_tail == 100000);
  CHECK(fit.se_alpha > 0);
  CHECK_FALSE(fit.at_bound);
  CHECK_FALSE(fit.ks_distance.has_value());
  CHECK(std::abs(score(fit.alpha_hat, 1, fit.n_tail, sum_log(v, 1))) < 1e-6 * static_cast<double>(fit.n_tail));
  CHECK(fit.loglik == doctest::Approx(log_likelihood(fit.alpha_hat, 1, fit.n_tail, sum_log(v, 1))));
}

TEST_CASE("fit invariants on random samples") {
  std::mt19937 gen(3);
  for (int i = 0; i < 20; ++i) {
    const double alpha = std::uniform_real_distribution<double>(1.2, 3.5)(gen);
    const std::uint64_t x_min = 1 + gen() % 4;
    auto v = sample_powerlaw(alpha, x_min, 2000, gen());
    FitOptions o;
    o.x_min = x_min;
    auto fit = fit_discrete_powerlaw(v, o);
    CHECK(fit.alpha_hat > 1.0);
    CHECK(fit.n_tail >= 2);
    CHECK(fit.se_alpha > 0);
    CHECK(std::abs(score(fit.alpha_hat, x_min, fit.n_tail, sum_log(v, x_min))) <
          1e-6 * static_cast<double>(fit.n_tail));
    // The likelihood is concave; the estimate beats its neighbours.
    const auto sl = sum_log(v, x_min);
    CHECK(fit.loglik >= log_likelihood(fit.alpha_hat + 1e-3, x_min, fit.n_tail, sl));
    CHECK(fit.loglik >= log_likelihood(fit.alpha_hat - 1e-3, x_min, fit.n_tail, sl));
  }
}

TEST_CASE("score is the derivative of the log-likelihood") {
  auto v = sample_powerlaw(2.0, 2, 3000, 8);
  const auto n = n_at_least(v, 2);
  const auto sl = sum_log(v, 2);
  for (double a : {1.3, 1.9, 2.5, 4.0}) {
    const double h = 1e-5;
    const double fd = (log_likelihood(a + h, 2, n, sl) - log_likelihood(a - h, 2, n, sl)) / (2 * h);
    CHECK(score(a, 2, n, sl) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("values below x_min do not move the estimate") {
  std::mt19937 gen(11);
  for (int i = 0; i < 10; ++i) {
    auto v = sample_powerlaw(1.8, 4, 3000, gen());
    FitOptions o;
    o.x_min = 4;
    const auto before = fit_discrete_powerlaw(v, o);
    for (int k = 0; k < 500; ++k) v.push_back(1 + gen() % 3);
    std::shuffle(v.begin(), v.end(), gen);
    const auto after = fit_discrete_powerlaw(v, o);
    CHECK(after.alpha_hat == doctest::Approx(before.alpha_hat).epsilon(1e-12));
    CHECK(after.n_tail == before.n_tail);
  }
}

TEST_CASE("standard error shrinks like one over root n") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto small = fit_discrete_powerlaw(sample_powerlaw(1.7, 1, 20000, seed));
    const auto large = fit_discrete_powerlaw(sample_powerlaw(1.7, 1, 40000, seed + 1000));
    const double ratio = large.se_alpha / small.se_alpha;
    CHECK(ratio >= 0.6);
    CHECK(ratio <= 0.82);
  }
}

TEST_CASE("observed information differs from the continuous approximation") {
  const auto fit = fit_discrete_powerlaw(sample_powerlaw(2.2, 1, 50000, 4));
  CHECK(fit.se_continuous() == doctest::Approx((fit.alpha_hat - 1) / std::sqrt(50000.0)));
  CHECK(fit.se_alpha != fit.se_continuous());
}

TEST_CASE("a maximum on the search bound is flagged") {
  FitOptions o;
  o.alpha_hi = 1.5;
  const auto fit = fit_discrete_powerlaw(sample_powerlaw(3.0, 1, 5000, 1), o);
  CHECK(fit.at_bound);
  CHECK_FALSE(fit.warning.empty());
  CHECK(fit.alpha_hat == 1.5);
}

TEST_CASE("automatic x_min finds the start of the power law") {
  std::mt19937 gen(21);
  auto v = sample_powerlaw(2.0, 6, 20000, 5);
  for (int k = 0; k < 4000; ++k) v.push_back(1 + gen() % 5);
  FitOptions o;
  o.x_min = std::nullopt;
  const auto fit = fit_discrete_powerlaw(v, o);
  REQUIRE(fit.ks_distance.has_value());
  CHECK(fit.x_min >= 5);
  CHECK(fit.x_min <= 8);
  CHECK(fit.alpha_hat == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("ks distance against an explicit cdf loop") {
  const auto v = sample_powerlaw(1.9, 2, 400, 77);
  const double alpha = 1.85;
  std::vector<std::uint64_t> tail;
  for (auto x : v) {
    if (x >= 2) tail.push_back(x);
  }
  std::sort(tail.begin(), tail.end());
  const double z = hurwitz_zeta(alpha, 2);
  double worst = 0;
  double model_cdf = 0;
  std::size_t idx = 0;
  for (std::uint64_t x = 2; x <= tail.back(); ++x) {
    model_cdf += std::pow(static_cast<double>(x), -alpha) / z;
    while (idx < tail.size() && tail[idx] <= x) ++idx;
    worst = std::max(worst, std::abs(static_cast<double>(idx) / static_cast<double>(tail.size()) - model_cdf));
  }
  CHECK(ks_distance(v, alpha, 2) == doctest::Approx(worst).epsilon(1e-9));
}

TEST_CASE("sampler support, determinism and pmf") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) CHECK(sample_powerlaw(2.5, 7, 1, seed)[0] >= 7);
  CHECK(sample_powerlaw(1.4, 1, 5000, 9) == sample_powerlaw(1.4, 1, 5000, 9));
  CHECK(sample_powerlaw(1.4, 1, 5000, 9) != sample_powerlaw(1.4, 1, 5000, 10));

  PowerLawSampler s(2.0, 1);
  CHECK(s.tail(1) == 1.0);
  CHECK(s.pmf(1) == doctest::Approx(6 / (M_PI * M_PI)).epsilon(1e-12));
  CHECK(s.tail(3) == doctest::Approx(1.0 - s.pmf(1) - s.pmf(2)).epsilon(1e-12));
  CHECK(s.pmf(0) == 0.0);
}

TEST_CASE("P(X = 1) at alpha 3") {
  const auto v = sample_powerlaw(3.0, 1, 1000000, 31);
  const double ones = static_cast<double>(std::count(v.begin(), v.end(), 1u)) / 1e6;
  CHECK(std::abs(ones - 1.0 / hurwitz_zeta(3.0, 1)) < 0.005);
  CHECK(1.0 / hurwitz_zeta(3.0, 1) == doctest::Approx(0.832).epsilon(0.001));
}

TEST_CASE("draws past the table follow the exact tail") {
  PowerLawSampler small_table(1.5, 1, 8);
  PowerLawSampler full(1.5, 1);
  Rng a(5), b(5);
  const auto x = small_table.draw(200000, a);
  const auto y = full.draw(200000, b);
  for (std::uint64_t t : {2u, 9u, 50u, 1000u}) {
    const double expected = full.tail(t);
    const double got = static_cast<double>(std::count_if(x.begin(), x.end(), [&](auto v) { return v >= t; })) / 2e5;
    CHECK(std::abs(got - expected) < 4 * std::sqrt(expected * (1 - expected) / 2e5) + 1e-4);
    CHECK(small_table.tail(t) == doctest::Approx(expected).epsilon(1e-10));
  }
  // Both inversions of the same uniforms agree almost everywhere.
  std::size_t same = 0;
  for (std::size_t i = 0; i < x.size(); ++i) same += x[i] == y[i] ? 1 : 0;
  CHECK(static_cast<double>(same) / static_cast<double>(x.size()) > 0.999);
}

TEST_CASE("wald statistic") {
  const auto a = fit_discrete_powerlaw(sample_powerlaw(1.6, 1, 5000, 1));
  const auto b = fit_discrete_powerlaw(sample_powerlaw(1.6, 1, 5000, 2));
  const auto self = wald_compare(a, a);
  CHECK(self.statistic == 0.0);
  CHECK(self.p_value == 1.0);
  CHECK(wald_compare(a, b).statistic == wald_compare(b, a).statistic);
  CHECK(wald_compare(a, b).p_value == wald_compare(b, a).p_value);
  const double diff = a.alpha_hat - b.alpha_hat;
  CHECK(wald_compare(a, b).statistic ==
        doctest::Approx(diff * diff / (a.se_alpha * a.se_alpha + b.se_alpha * b.se_alpha)));
}

TEST_CASE("wald row in the published shape") {
  // 1.32 vs 1.37 with W = 0.22 fixes se_a^2 + se_b^2 = 0.0025 / 0.22.
  const double se = std::sqrt(0.0025 / 0.22 / 2);
  const auto w = wald_compare(fit_with(1.32, se), fit_with(1.37, se));
  CHECK(w.statistic == doctest::Approx(0.22).epsilon(1e-9));
  CHECK(std::round(w.p_value * 100) / 100 == 0.64);
}

TEST_CASE("chi-squared upper tail") {
  CHECK(chi2_1_upper_tail(0.0) == 1.0);
  CHECK(chi2_1_upper_tail(-1.0) == 1.0);
  CHECK(std::abs(chi2_1_upper_tail(3.841458820694124) - 0.05) < 1e-12);
  CHECK(std::abs(chi2_1_upper_tail(6.6348966010212145) - 0.01) < 1e-12);
  CHECK(std::abs(chi2_1_upper_tail(1.0) - 0.31731050786291410) < 1e-12);
  double previous = 1.0;
  for (double w = 0.01; w < 60; w *= 1.3) {
    const double p = chi2_1_upper_tail(w);
    CHECK(p < previous);
    CHECK(p >= 0.0);
    previous = p;
  }
}

}  // TEST_SUITE
