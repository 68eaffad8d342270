#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "misinfo/error.hpp"
#include "misinfo/heavytail.hpp"
#include "misinfo/leaning.hpp"
#include "misinfo/sources.hpp"
#include "misinfo/survival.hpp"
#include "misinfo/synth.hpp"
#include "support.hpp"

using namespace misinfo;
using namespace misinfo::synth;
using nlohmann::json;

namespace {

struct Ingested {
  corpus::Corpus corpus;
  corpus::IngestReport posts, comments, edges;
};

Ingested ingest_output(const SynthConfig& config, const SynthOutput& out, bool links_only) {
  Ingested r{corpus::Corpus(config.window, config.platform), {}, {}, {}};
  const auto map = corpus::FieldMap::parse(out.fieldmap);
  const auto filter = manifest_filter(config, links_only);
  auto run = [&](const std::string& text, corpus::RecordKind kind, corpus::IngestReport& report) {
    std::istringstream in(text);
    auto result = corpus::ingest(in, kind, map, filter);
    corpus::merge(r.corpus, std::move(result.delta), result.report);
    report = result.report;
  };
  run(out.posts, corpus::RecordKind::posts, r.posts);
  run(out.comments, corpus::RecordKind::comments, r.comments);
  run(out.edges, corpus::RecordKind::edges, r.edges);
  return r;
}

json lifetimes_json(const std::vector<survival::LifetimeRecord>& records) {
  json out = json::array();
  for (const auto& r : records) {
    out.push_back({{"subject_id", r.subject_id}, {"duration_days", r.duration_days},
                   {"event_observed", r.event_observed}, {"group", to_string(r.group)}});
  }
  return out;
}

SynthConfig defects_config() {
  SynthConfig c;
  c.n_posts = 3000;
  c.malformed_rate = 0.01;
  c.duplicate_rate = 0.01;
  c.offtopic_rate = 0.02;
  c.out_of_window_rate = 0.01;
  c.quarantine_rate = 0.02;
  c.clusters = {{0.2, 0.5}, {0.8, 0.5}};
  return c;
}

// Mean |q_i - qN_i| when every followee is drawn uniformly, by direct simulation.
double uniform_null_gap(const std::vector<double>& q, double mean_degree, int seeds) {
  double total = 0;
  for (int s = 0; s < seeds; ++s) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(s) * 7919 + 1);
    std::poisson_distribution<int> degree(mean_degree);
    double sum = 0;
    int users = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const int d = std::min<int>(degree(gen), static_cast<int>(q.size()) - 1);
      std::set<std::size_t> picked;
      while (static_cast<int>(picked.size()) < d) {
        const auto j = std::uniform_int_distribution<std::size_t>(0, q.size() - 1)(gen);
        if (j != i) picked.insert(j);
      }
      if (picked.empty()) continue;
      double qn = 0;
      for (auto j : picked) qn += q[j];
      qn /= static_cast<double>(picked.size());
      sum += std::abs(q[i] - qn);
      ++users;
    }
    total += sum / users;
  }
  return total / seeds;
}

double generated_gap(const std::vector<std::string>& ids, const std::vector<double>& q,
                     const std::vector<corpus::FollowEdge>& edges) {
  leaning::LeaningVector lv;
  for (std::size_t i = 0; i < ids.size(); ++i) lv[ids[i]] = leaning::UserLeaning{q[i], 1, 0};
  const auto nv = leaning::neighborhood_leaning(leaning::FollowGraph(edges), lv);
  double sum = 0;
  for (const auto& [id, n] : nv) sum += std::abs(lv.at(id).q - n.qn);
  return sum / static_cast<double>(nv.size());
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("generation is deterministic") {
  const auto c = defects_config();
  const auto a = generate(c);
  const auto b = generate(c);
  CHECK(a.posts == b.posts);
  CHECK(a.comments == b.comments);
  CHECK(a.edges == b.edges);
  CHECK(a.registry == b.registry);
  CHECK(a.manifest.dump() == b.manifest.dump());
  auto other = c;
  other.seed = 2;
  CHECK(generate(other).posts != a.posts);
}

TEST_CASE("zero questionable share labels every post Reliable") {
  SynthConfig c;
  c.questionable_share = 0.0;
  const auto out = generate(c);
  const auto& labels = out.manifest["expected"]["labels"];
  REQUIRE(!labels.empty());
  for (const auto& [id, label] : labels.items()) CHECK(label.get<std::string>() != "Questionable");
  int reliable = 0;
  for (const auto& [id, label] : labels.items()) reliable += label == "Reliable" ? 1 : 0;
  CHECK(reliable > 0);
}

TEST_CASE("infeasible configs are usage errors") {
  SynthConfig c;
  c.n_users = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
  CHECK_THROWS_AS(generate(c), UsageError);
  c = SynthConfig{};
  c.clusters = {{0.2, 0.5}, {0.8, 0.6}};
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = SynthConfig{};
  c.link_rate = 1.2;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = SynthConfig{};
  c.alpha_likes = 1.0;
  CHECK_THROWS_AS(c.validate(), UsageError);
  CHECK_THROWS_AS(SynthConfig::from_config(KeyValueConfig::parse("n_userz = 3\n")), UsageError);
}

TEST_CASE("config file round trip") {
  const auto c = SynthConfig::load(test::source_dir() / "data/synth/bundled.toml");
  CHECK(c.seed == 20200930);
  CHECK(c.n_users == 300);
  CHECK(c.mean_degree == 8.0);
  REQUIRE(c.clusters.size() == 2);
  CHECK(c.clusters[1].center == 0.85);
  CHECK(c.clusters[1].weight == 0.4);
  CHECK(c.to_json()["leaning"]["clusters"].size() == 2);
  SynthConfig plain;
  REQUIRE(plain.effective_clusters().size() == 1);
  CHECK(plain.effective_clusters()[0].center == plain.questionable_share);
}

TEST_CASE("ingest of the export reproduces the manifest") {
  const auto c = defects_config();
  const auto out = generate(c);
  const auto& expected = out.manifest["expected"];
  {
    auto all = ingest_output(c, out, false);
    CHECK(all.posts.to_json() == expected["ingest"]["posts"]);
    CHECK(all.corpus.resolve_comments().quarantined() == expected["comments_quarantined"].get<std::uint64_t>());
  }
  auto lo = ingest_output(c, out, true);
  CHECK(lo.posts.to_json() == expected["ingest"]["posts_links_only"]);
  CHECK(lo.comments.to_json() == expected["ingest"]["comments"]);
  CHECK(lo.edges.to_json() == expected["ingest"]["edges"]);
  CHECK(lo.corpus.resolve_comments().quarantined() ==
        expected["comments_quarantined_links_only"].get<std::uint64_t>());
  CHECK(out.manifest["planted"]["malformed_lines"] == 30);
  CHECK(out.manifest["planted"]["duplicate_lines"] == 30);

  std::istringstream reg(out.registry);
  const auto registry = sources::OutletRegistry::parse(reg);
  const auto& rc = registry.counts();
  CHECK(json{{"total", rc.total}, {"mbfc", rc.mbfc}, {"ng", rc.ng}, {"questionable", rc.questionable},
             {"reliable", rc.reliable}, {"unknown", rc.unknown}, {"duplicates", rc.duplicates}} ==
        expected["registry"]);

  const auto labeling = sources::label_posts(lo.corpus, registry);
  json labels = json::object();
  for (const auto& [id, label] : labeling.labels) labels[id] = to_string(label);
  CHECK(labels == expected["labels"]);

  const auto table = corpus::corpus_stats(lo.corpus, &labeling.labels);
  for (const auto& [name, col] : table.columns) {
    const auto& e = expected["breakdown"][name];
    CHECK(col.posts == e["posts"].get<std::uint64_t>());
    CHECK(col.users == e["users"].get<std::uint64_t>());
    CHECK(col.likes == e["likes"].get<std::uint64_t>());
    CHECK(col.reshares == e["reshares"].get<std::uint64_t>());
    CHECK(col.comments == e["comments"].get<std::uint64_t>());
    CHECK(col.replies == e["replies"].get<std::uint64_t>());
  }

  const auto lv = leaning::user_leaning(lo.corpus, labeling.labels);
  REQUIRE(lv.size() == expected["user_leaning"].size());
  for (const auto& [id, u] : lv) {
    CHECK(u.q == expected["user_leaning"][id]["q"].get<double>());
    CHECK(u.k == expected["user_leaning"][id]["k"].get<std::uint64_t>());
  }

  CHECK(lifetimes_json(survival::post_lifetimes(lo.corpus, labeling.labels)) == expected["post_lifetimes"]);
  CHECK(lifetimes_json(survival::user_lifetimes(lo.corpus, labeling.labels)) == expected["user_lifetimes"]);
}

TEST_CASE("generated comment streams are censored at the window end") {
  SynthConfig c;
  c.comment_rate = 2.0;
  c.hazard_questionable = 0.02;
  c.hazard_reliable = 0.02;
  const auto out = generate(c);
  int censored = 0;
  for (const auto& r : out.manifest["expected"]["post_lifetimes"]) censored += r["event_observed"] ? 0 : 1;
  CHECK(censored > 0);
}

TEST_CASE("follow graph with no homophily looks like the uniform null") {
  std::mt19937 gen(9);
  std::vector<std::string> ids;
  std::vector<double> q;
  for (int i = 0; i < 300; ++i) {
    ids.push_back("u" + std::to_string(i));
    q.push_back(i % 3 == 0 ? std::uniform_real_distribution<double>(0.0, 0.3)(gen)
                           : std::uniform_real_distribution<double>(0.6, 1.0)(gen));
  }
  const double expected = uniform_null_gap(q, 10.0, 200);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto edges = generate_follow_graph(ids, q, 0.0, 10.0, seed);
    CHECK(std::abs(generated_gap(ids, q, edges) - expected) < 0.05);
  }
  // The homophilous graph is clearly not the null.
  const auto homophilous = generate_follow_graph(ids, q, 0.9, 10.0, 1);
  CHECK(generated_gap(ids, q, homophilous) < expected - 0.1);
}

TEST_CASE("full homophily keeps every edge inside its cluster") {
  std::mt19937 gen(10);
  std::vector<std::string> ids;
  std::vector<double> q;
  for (int i = 0; i < 400; ++i) {
    ids.push_back("u" + std::to_string(i));
    q.push_back((i % 2 ? 0.85 : 0.15) + std::uniform_real_distribution<double>(-0.05, 0.05)(gen));
  }
  std::map<std::string, double> leaning;
  for (std::size_t i = 0; i < ids.size(); ++i) leaning[ids[i]] = q[i];
  const auto edges = generate_follow_graph(ids, q, 1.0, 10.0, 3);
  CHECK(edges.size() > 3000);
  for (const auto& e : edges) CHECK((leaning[e.follower_id] < 0.5) == (leaning[e.followee_id] < 0.5));
}

TEST_CASE("two nodes give at most two edges and never a self loop") {
  std::vector<std::string> ids = {"a", "b"};
  std::vector<double> q = {0.1, 0.9};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto edges = generate_follow_graph(ids, q, 0.5, 10.0, seed);
    CHECK(edges.size() <= 2);
    for (const auto& e : edges) CHECK(e.follower_id != e.followee_id);
  }
}

TEST_CASE("follow graphs are simple and deterministic") {
  std::vector<std::string> ids;
  std::vector<double> q;
  for (int i = 0; i < 100; ++i) {
    ids.push_back("u" + std::to_string(i));
    q.push_back(i / 100.0);
  }
  const auto a = generate_follow_graph(ids, q, 0.7, 15.0, 4);
  CHECK(a == generate_follow_graph(ids, q, 0.7, 15.0, 4));
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : a) {
    CHECK(e.follower_id != e.followee_id);
    CHECK(seen.emplace(e.follower_id, e.followee_id).second);
  }
}

TEST_CASE("rewiring preserves every degree") {
  std::vector<std::string> ids;
  std::vector<double> q;
  for (int i = 0; i < 200; ++i) {
    ids.push_back("u" + std::to_string(i));
    q.push_back(i < 100 ? 0.15 : 0.85);
  }
  const auto edges = generate_follow_graph(ids, q, 0.9, 8.0, 5);
  const auto rewired = rewire_degree_preserving(edges, 10, 6);
  REQUIRE(rewired.size() == edges.size());
  std::map<std::string, int> out_a, in_a, out_b, in_b;
  for (const auto& e : edges) {
    ++out_a[e.follower_id];
    ++in_a[e.followee_id];
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : rewired) {
    ++out_b[e.follower_id];
    ++in_b[e.followee_id];
    CHECK(e.follower_id != e.followee_id);
    CHECK(seen.emplace(e.follower_id, e.followee_id).second);
  }
  CHECK(out_a == out_b);
  CHECK(in_a == in_b);
  CHECK(rewired != edges);
  CHECK(rewired == rewire_degree_preserving(edges, 10, 6));
}

TEST_CASE("sampled lifetimes") {
  const auto a = sample_lifetimes(0.5, 2000, Label::Reliable, 3);
  CHECK(a.size() == 2000);
  double mean = 0;
  for (const auto& r : a) {
    CHECK(r.duration_days >= 0);
    CHECK(r.event_observed);
    CHECK(r.group == Label::Reliable);
    mean += static_cast<double>(r.duration_days);
  }
  // E[floor(Exp(rate))] = 1 / (e^rate - 1)
  CHECK(mean / 2000 == doctest::Approx(1.0 / (std::exp(0.5) - 1)).epsilon(0.1));
  const auto censored = sample_lifetimes(0.05, 500, Label::Questionable, 3, 10);
  for (const auto& r : censored) {
    CHECK(r.duration_days <= 10);
    if (!r.event_observed) CHECK(r.duration_days == 10);
  }
  CHECK_THROWS_AS(sample_lifetimes(0.0, 5, Label::Reliable, 1), UsageError);
}

TEST_CASE("alpha 1.5 over 100000 posts is recovered downstream") {
  SynthConfig c;
  c.n_posts = 100000;
  c.n_users = 2000;
  c.alpha_likes = 1.5;
  c.comment_rate = 0.0;
  c.mean_degree = 2.0;
  const auto out = generate(c);
  const auto ingested = ingest_output(c, out, false);
  const auto sample = heavytail::engagement_sample(ingested.corpus, nullptr, heavytail::EngagementKind::likes,
                                                   heavytail::Unit::post, std::nullopt);
  const auto fit = heavytail::fit_discrete_powerlaw(sample.values);
  CHECK(fit.alpha_hat >= 1.45);
  CHECK(fit.alpha_hat <= 1.55);
  CHECK(sample.zeros_excluded > 0);
}

TEST_CASE("planted clusters contain the modal joint cell") {
  const auto c = SynthConfig::load(test::source_dir() / "data/synth/bundled.toml");
  const auto out = generate(c);
  const auto lo = ingest_output(c, out, true);
  std::istringstream reg(out.registry);
  const auto labels = sources::label_posts(lo.corpus, sources::OutletRegistry::parse(reg)).labels;
  const auto lv = leaning::user_leaning(lo.corpus, labels);
  const auto nv = leaning::neighborhood_leaning(leaning::FollowGraph(lo.corpus.edges()), lv);
  const auto d = leaning::joint_density(lv, nv, leaning::JointConfig{3, 50, std::nullopt});
  const auto [qi, qni] = d.mode();
  const double width = 1.0 / 50;
  bool inside = false;
  for (const auto& cluster : c.effective_clusters()) {
    const double box = c.homophily_window;
    inside = inside || (std::abs((static_cast<double>(qi) + 0.5) * width - cluster.center) <= box &&
                        std::abs((static_cast<double>(qni) + 0.5) * width - cluster.center) <= box);
  }
  CHECK(inside);
}

}  // TEST_SUITE
