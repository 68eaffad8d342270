#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "misinfo/config.hpp"
#include "misinfo/corpus.hpp"
#include "misinfo/survival.hpp"
#include "misinfo/time.hpp"

namespace misinfo::synth {

inline constexpr int kManifestSchemaVersion = 1;

struct Cluster {
  double center = 0.5;
  double weight = 1.0;
};

struct SynthConfig {
  std::string platform = "gab";
  std::uint64_t seed = 1;
  Window window = parse_window("2020-01-01..2020-09-30");
  std::vector<std::string> hashtags = {"covid", "covid19", "corona", "coronavirus"};
  std::uint64_t n_users = 200;
  std::uint64_t n_posts = 2000;  // lines in the posts export, planted defects included

  // registry
  std::uint64_t n_outlets = 60;
  double questionable_share = 0.3;  // fraction of registry outlets that are Questionable
  double ng_share = 0.1;            // fraction of outlets described by NewsGuard fields

  // engagement
  double alpha_likes = 1.6;
  double alpha_reshares = 2.0;
  double alpha_replies = 2.2;
  double zero_rate = 0.2;  // chance that any single engagement count is zero
  bool replies = true;     // false: the export carries no reply counts

  // lifetimes: a post stays active for Exp(hazard) days, receiving comments at
  // comment_rate per day until it goes quiet or the window ends
  double hazard_questionable = 0.1;
  double hazard_reliable = 0.15;
  double comment_rate = 0.5;

  // follow graph
  double homophily = 0.9;
  double mean_degree = 10.0;
  double homophily_window = 0.2;

  // planted per-user leaning mixture; empty means one cluster at questionable_share
  std::vector<Cluster> clusters;
  double cluster_spread = 0.05;

  // per-post rates, drawn independently
  double link_rate = 0.8;
  double categorized_rate = 0.9;  // of linked posts, those pointing at a registered outlet
  double multi_link_rate = 0.1;   // of categorized posts, those carrying a second outlet link
  double bad_url_rate = 0.05;     // of unlinked posts, those carrying an unparseable URL

  // planted defects, exact counts of round(rate * n_posts) or round(rate * comments)
  double offtopic_rate = 0.0;
  double out_of_window_rate = 0.0;
  double malformed_rate = 0.0;
  double duplicate_rate = 0.0;
  double quarantine_rate = 0.0;

  static SynthConfig from_config(const KeyValueConfig& config);
  static SynthConfig load(const std::filesystem::path& path);
  void validate() const;  // throws UsageError
  std::vector<Cluster> effective_clusters() const;
  nlohmann::json to_json() const;
};

// Export files as written to disk, plus the manifest of planted truth.
struct SynthOutput {
  std::string posts;     // posts.ndjson, platform field names
  std::string comments;  // comments.ndjson
  std::string edges;     // edges.ndjson
  std::string registry;  // registry.csv
  std::string fieldmap;  // fieldmap.toml
  nlohmann::json manifest;
};

SynthOutput generate(const SynthConfig& config);
void write_output(const SynthOutput& output, const std::filesystem::path& dir);

// The filter the manifest's expectations assume.
corpus::IngestFilter manifest_filter(const SynthConfig& config, bool links_only);

// Each user draws Poisson(mean_degree) followees: with probability h from
// users whose leaning lies within `window` of their own, otherwise uniformly.
// No self-loops or duplicate edges.
std::vector<corpus::FollowEdge> generate_follow_graph(std::span<const std::string> ids, std::span<const double> q,
                                                      double h, double mean_degree, std::uint64_t seed,
                                                      double window = 0.2);

// Directed double-edge swaps (a->b, c->d) => (a->d, c->b), rejecting swaps that
// would create self-loops or duplicates. Preserves every in- and out-degree.
std::vector<corpus::FollowEdge> rewire_degree_preserving(std::span<const corpus::FollowEdge> edges,
                                                         std::uint64_t swaps_per_edge, std::uint64_t seed);

// Exponential lifetimes floored to whole days, all observed unless a
// censoring horizon is given.
std::vector<survival::LifetimeRecord> sample_lifetimes(double hazard, std::size_t n, Label group,
                                                       std::uint64_t seed,
                                                       std::optional<std::int64_t> horizon_days = std::nullopt);

}  // namespace misinfo::synth
