// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "leaning_oracle.hpp"
#include "misinfo/heavytail.hpp"
#include "misinfo/leaning.hpp"
#include "misinfo/report.hpp"
#include "misinfo/sources.hpp"
#include "misinfo/survival.hpp"
#include "misinfo/synth.hpp"
#include "misinfo/zeta.hpp"
#include "support.hpp"

using namespace misinfo;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

Outcome power_law_recovery() {
  Outcome o;
  const auto start = Clock::now();
  std::ostringstream counts;
  for (double alpha : {1.3, 1.5, 1.8, 2.2, 3.3}) {
    int covered = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const auto xs = heavytail::sample_powerlaw(alpha, 1, 100000, seed * 7919 + static_cast<std::uint64_t>(alpha * 10));
      const auto fit = heavytail::fit_discrete_powerlaw(xs);
      if (std::abs(fit.alpha_hat - alpha) < 3.0 * fit.se_alpha) ++covered;
    }
    counts << " a=" << alpha << ":" << covered << "/100";
    o.require(covered >= 95, "alpha " + std::to_string(alpha) + " covered " + std::to_string(covered) + "/100");
  }
  const double t = seconds_since(start);
  o.require(t < 60.0, "runtime " + std::to_string(t) + " s");
  if (o.pass) o.detail = counts.str() + ", " + std::to_string(t) + " s";
  return o;
}

Outcome zeta_values() {
  Outcome o;
  const double pi2_6 = std::numbers::pi * std::numbers::pi / 6.0;
  o.require(std::abs(hurwitz_zeta(2.0, 1.0) - pi2_6) <= 1e-12, "zeta(2,1)");
  o.require(std::abs(hurwitz_zeta(2.0, 2.0) - (pi2_6 - 1.0)) <= 1e-12, "zeta(2,2)");

  // Partial sum of 1e8 terms, smallest first, in compensated long double. The
  // remainder lies between the integrals of x^-1.5 from N+1 and from N.
  const std::uint64_t n = 100000000;
  long double sum = 0.0L, comp = 0.0L;
  for (std::uint64_t k = n; k >= 1; --k) {
    const long double kk = static_cast<long double>(k);
    const long double term = 1.0L / (kk * std::sqrt(kk)) - comp;
    const long double next = sum + term;
    comp = (next - sum) - term;
    sum = next;
  }
  const long double lo = sum + 2.0L / std::sqrt(static_cast<long double>(n + 1));
  const long double hi = sum + 2.0L / std::sqrt(static_cast<long double>(n));
  const long double z = hurwitz_zeta(1.5, 1.0);
  o.require(z >= lo - 1e-10L && z <= hi + 1e-10L, "zeta(1.5,1) outside the brute-force bracket");
  o.require(std::abs(z - (lo + hi) / 2) <= 1e-10L, "zeta(1.5,1) off the brute-force midpoint");
  char buf[96];
  std::snprintf(buf, sizeof buf, " zeta(1.5,1) - midpoint = %.3Le, bracket width %.3Le", z - (lo + hi) / 2, hi - lo);
  if (o.pass) o.detail = buf;
  return o;
}

Outcome wald_calibration() {
  Outcome o;
  const double alphas[] = {1.3, 1.5, 1.8, 2.2, 3.3};
  int accepted = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const double alpha = alphas[seed % 5];
    const auto a = heavytail::fit_discrete_powerlaw(heavytail::sample_powerlaw(alpha, 1, 20000, 2 * seed + 101));
    const auto b = heavytail::fit_discrete_powerlaw(heavytail::sample_powerlaw(alpha, 1, 20000, 2 * seed + 102));
    const auto ab = heavytail::wald_compare(a, b);
    const auto ba = heavytail::wald_compare(b, a);
    if (ab.p_value > 0.05) ++accepted;
    o.require(ab.statistic == ba.statistic && ab.p_value == ba.p_value, "asymmetric at seed " + std::to_string(seed));
    const auto self = heavytail::wald_compare(a, a);
    o.require(self.statistic == 0.0 && self.p_value == 1.0, "W(fit, fit) != 0 at seed " + std::to_string(seed));
  }
  o.require(accepted >= 90, "p > 0.05 in only " + std::to_string(accepted) + "/100");
  if (o.pass) o.detail = " p > 0.05 in " + std::to_string(accepted) + "/100";
  return o;
}

Outcome kaplan_meier_oracle() {
  Outcome o;
  using survival::LifetimeRecord;
  std::mt19937 gen(42);
  for (int round = 0; round < 200; ++round) {
    std::vector<LifetimeRecord> rs;
    const int n = 1 + static_cast<int>(gen() % 500);
    for (int i = 0; i < n; ++i) rs.push_back({"s", static_cast<std::int64_t>(gen() % 60), true, Label::Reliable});
    const auto km = survival::kaplan_meier(rs);
    for (std::size_t i = 0; i < km.times.size(); ++i) {
      std::int64_t greater = 0;
      for (const auto& r : rs) greater += r.duration_days > km.times[i];
      o.require(km.survival[i] == static_cast<double>(greater) / n, "ECDF mismatch in round " + std::to_string(round));
    }
  }

  const std::vector<LifetimeRecord> all = {{"a", 1, true, Label::Reliable},
                                           {"b", 2, true, Label::Reliable},
                                           {"c", 3, true, Label::Reliable}};
  const auto k1 = survival::kaplan_meier(all);
  o.require(k1.survival == std::vector<double>{2.0 / 3.0, 1.0 / 3.0, 0.0}, "all-observed hand case");

  const std::vector<LifetimeRecord> mixed = {{"a", 1, true, Label::Reliable},
                                             {"b", 2, false, Label::Reliable},
                                             {"c", 3, true, Label::Reliable}};
  const auto k2 = survival::kaplan_meier(mixed);
  o.require(k2.times == std::vector<std::int64_t>{1, 3}, "censored hand case event times");
  o.require(k2.survival == std::vector<double>{2.0 / 3.0, 0.0}, "censored hand case survival");
  o.require(k2.at(2.0) == 2.0 / 3.0, "censored hand case S(2)");
  return o;
}

Outcome peto_peto_power_and_null() {
  Outcome o;
  int detected = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = synth::sample_lifetimes(0.1, 500, Label::Questionable, 3 * seed + 1);
    const auto b = synth::sample_lifetimes(0.2, 500, Label::Reliable, 3 * seed + 2);
    if (survival::peto_peto(a, b).p_value < 0.01) ++detected;
    const auto same = survival::peto_peto(a, a);
    o.require(same.statistic == 0.0 && same.p_value == 1.0, "identical groups at seed " + std::to_string(seed));
  }
  o.require(detected >= 95, "hazard ratio 2 detected in only " + std::to_string(detected) + "/100");
  if (o.pass) o.detail = " p < 0.01 in " + std::to_string(detected) + "/100";
  return o;
}

Outcome echo_chamber_detection() {
  Outcome o;
  double r_min = 1.0, null_max = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937 gen(static_cast<std::uint32_t>(seed + 1000));
    std::vector<std::string> ids;
    std::vector<double> q;
    leaning::LeaningVector lv;
    // The rewired r has sd about 1/sqrt(n); n = 2000 puts 0.1 at ~4.5 sd.
    for (int i = 0; i < 2000; ++i) {
      const double centre = i % 2 ? 0.85 : 0.15;
      const std::uint64_t k = 20;
      const std::uint64_t questionable = std::binomial_distribution<std::uint64_t>(k, centre)(gen);
      const std::string id = "u" + std::to_string(i);
      ids.push_back(id);
      lv[id] = {static_cast<double>(questionable) / k, k, questionable};
      q.push_back(lv[id].q);
    }
    const auto edges = synth::generate_follow_graph(ids, q, 0.9, 10.0, seed);
    const auto r = leaning::leaning_correlation(lv, leaning::neighborhood_leaning(leaning::FollowGraph(edges), lv));
    const auto rewired = synth::rewire_degree_preserving(edges, 10, seed + 500);
    const auto null = leaning::leaning_correlation(lv, leaning::neighborhood_leaning(leaning::FollowGraph(rewired), lv));
    r_min = std::min(r_min, r.r);
    null_max = std::max(null_max, std::abs(null.r));
    o.require(r.r > 0.8, "planted r " + std::to_string(r.r) + " at seed " + std::to_string(seed));
    o.require(std::abs(null.r) < 0.1, "rewired |r| " + std::to_string(null.r) + " at seed " + std::to_string(seed));
  }
  if (o.pass) o.detail = " min planted r " + std::to_string(r_min) + ", max rewired |r| " + std::to_string(null_max);
  return o;
}

Outcome leaning_exactness() {
  Outcome o;
  for (std::uint32_t seed = 0; seed < 50; ++seed) {
    const auto inst = test::random_instance(seed + 7000);
    const auto q = test::brute_user_leaning(inst);
    const auto qn = test::brute_neighborhood(inst, q);
    const leaning::FollowGraph graph(inst.edges);
    const auto lv = leaning::user_leaning(inst.posts);
    const auto nv = leaning::neighborhood_leaning(graph, lv);
    for (std::size_t i = 0; i < inst.ids.size(); ++i) {
      const auto it = lv.find(inst.ids[i]);
      const auto jt = nv.find(inst.ids[i]);
      o.require((it != lv.end()) == (q[i] >= 0) && (jt != nv.end()) == (qn[i] >= 0), "definedness differs");
      if (it != lv.end()) o.require(std::abs(it->second.q - q[i]) <= 1e-12, "user leaning differs");
      if (jt != nv.end()) o.require(std::abs(jt->second.qn - qn[i]) <= 1e-12, "neighborhood leaning differs");
    }

    // Swapping Questionable and Reliable maps every count a/k to (k-a)/k.
    auto swapped = inst.posts;
    for (auto& p : swapped) p.questionable = !p.questionable;
    const auto lf = leaning::user_leaning(swapped);
    const auto nf = leaning::neighborhood_leaning(graph, lf);
    o.require(lf.size() == lv.size() && nf.size() == nv.size(), "relabel changes the defined users");
    for (const auto& [id, u] : lv) {
      const auto& f = lf.at(id);
      o.require(f.k == u.k && f.questionable == u.k - u.questionable, "relabel counts");
      o.require(std::abs(f.q - (1.0 - u.q)) <= 2e-16, "relabel q");
    }
    for (const auto& [id, n] : nv) {
      o.require(nf.at(id).followees == n.followees, "relabel followees");
      o.require(std::abs(nf.at(id).qn - (1.0 - n.qn)) <= 1e-14, "relabel qn");
    }
  }
  return o;
}

Outcome classification() {
  Outcome o;
  const auto fixture = test::source_dir() / "data/registry/fixture.csv";
  const auto strict = sources::OutletRegistry::load(fixture);
  const auto& c = strict.counts();
  o.require(c.total == 17 && c.mbfc == 11 && c.ng == 6, "fixture provider counts");
  o.require(c.questionable == 7 && c.reliable == 8 && c.unknown == 2, "fixture label counts");
  o.require(c.duplicates == 2, "fixture duplicates");
  o.require(strict.rejections().size() == 1 && strict.rejections()[0].row == 20, "fixture rejections");
  const auto inclusive = sources::OutletRegistry::load(fixture, {.ng_reliable_strict = false});
  o.require(inclusive.counts().questionable == 6 && inclusive.counts().reliable == 9, "inclusive threshold counts");

  sources::OutletRecord ng;
  ng.domain = "x.com";
  ng.provider = sources::Provider::NG;
  ng.ng_score = 60.0;
  o.require(sources::classify_outlet(ng) == Label::Questionable, "NG 60 is not Questionable");
  ng.ng_score = 60.5;
  o.require(sources::classify_outlet(ng) == Label::Reliable, "NG 60.5 is not Reliable");
  sources::OutletRecord cp;
  cp.domain = "y.com";
  cp.mbfc_bias = sources::MbfcBias::ConspiracyPseudoscience;
  o.require(sources::classify_outlet(cp) == Label::Questionable, "Conspiracy-Pseudoscience is not Questionable");

  // A registry of the published composition gives the published label totals.
  std::string rows = "domain,provider,mbfc_bias,mbfc_bias_score,ng_score,ng_special\n";
  for (int i = 0; i < 2701; ++i) {
    rows += "m" + std::to_string(i) + ".com,MBFC," + (i < 790 ? "Questionable" : "Right") + ",,,\n";
  }
  for (int i = 0; i < 37; ++i) rows += "n" + std::to_string(i) + ".org,NG,,," + (i < 24 ? "55" : "80") + ",\n";
  std::istringstream in(rows);
  const auto published = sources::OutletRegistry::parse(in);
  o.require(published.counts().total == 2738 && published.counts().questionable == 814 &&
                published.counts().reliable == 1924,
            "published-size registry totals");
  return o;
}

Outcome end_to_end() {
  Outcome o;
  const auto start = Clock::now();
  const auto config = report::RunConfig::load(test::source_dir() / "data/run/bundled.toml", false);
  std::ostringstream log;
  report::Logger logger(log, false, true);
  const auto bundle = report::run_pipeline(config, logger);
  test::TempDir out("acceptance");
  report::write_bundle(bundle, out.path());
  const double t = seconds_since(start);
  o.require(bundle.ok(), "a stage failed");
  o.require(t < 120.0, "runtime " + std::to_string(t) + " s");

  const auto golden = test::source_dir() / "tests/golden";
  std::set<std::string> produced, expected;
  for (const auto& e : std::filesystem::directory_iterator(out.path())) produced.insert(e.path().filename().string());
  for (const auto& e : std::filesystem::directory_iterator(golden)) expected.insert(e.path().filename().string());
  o.require(!expected.empty() && produced == expected, "file sets differ");
  for (const auto& name : expected) {
    o.require(test::slurp(out.path() / name) == test::slurp(golden / name), name + " differs");
  }
  if (o.pass) o.detail = " " + std::to_string(expected.size()) + " files identical, " + std::to_string(t) + " s";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"power-law recovery", power_law_recovery},
      {"hurwitz zeta", zeta_values},
      {"wald calibration", wald_calibration},
      {"kaplan-meier oracle", kaplan_meier_oracle},
      {"peto-peto power and null", peto_peto_power_and_null},
      {"echo-chamber detection", echo_chamber_detection},
      {"leaning exactness and relabel symmetry", leaning_exactness},
      {"classification heuristic", classification},
      {"end-to-end determinism", end_to_end},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::printf("%s %s%s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.pass ? "" : ": ", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
