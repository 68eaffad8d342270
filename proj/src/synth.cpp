#include "misinfo/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "misinfo/error.hpp"
#include "misinfo/hash.hpp"
#include "misinfo/heavytail.hpp"
#include "misinfo/random.hpp"

namespace misinfo::synth {
namespace {

using nlohmann::json;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t exact_count(double rate, std::uint64_t n) {
  return static_cast<std::uint64_t>(std::llround(rate * static_cast<double>(n)));
}

std::string padded(std::string_view prefix, std::uint64_t n, int width) {
  std::string digits = std::to_string(n);
  if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits;
}

std::string iso_millis(Timestamp t) {
  std::string s = format_timestamp(t);  // ...Z
  s.insert(s.size() - 1, ".000");
  return s;
}

std::int64_t seconds_between(Timestamp a, Timestamp b) { return (b - a).count(); }

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "platform", "seed", "window", "hashtags", "n_users", "n_posts",
      "registry.outlets", "registry.questionable_share", "registry.ng_share",
      "engagement.alpha_likes", "engagement.alpha_reshares", "engagement.alpha_replies",
      "engagement.zero_rate", "engagement.replies",
      "lifetimes.hazard_questionable", "lifetimes.hazard_reliable", "lifetimes.comment_rate",
      "graph.homophily", "graph.mean_degree", "graph.window",
      "leaning.centers", "leaning.weights", "leaning.spread",
      "rates.link", "rates.categorized", "rates.multi_link", "rates.bad_url", "rates.offtopic",
      "rates.out_of_window", "rates.malformed", "rates.duplicate", "rates.quarantine"};
  return keys;
}

std::uint64_t non_negative(const KeyValueConfig& config, std::string_view key, std::uint64_t fallback) {
  const auto value = config.get_int(key, static_cast<std::int64_t>(fallback));
  if (value < 0) throw UsageError("synth config: '" + std::string(key) + "' must be non-negative");
  return static_cast<std::uint64_t>(value);
}

struct Outlet {
  std::string domain;
  Label label;
};

struct PlannedPost {
  std::string id;
  std::uint64_t author = 0;
  Timestamp created_at{};
  bool offtopic = false;
  bool out_of_window = false;
  bool linked = false;  // carries at least one extractable domain
  std::vector<std::string> urls;
  std::uint64_t bad_urls = 0;
  Label label = Label::Unknown;
  std::uint64_t likes = 0;
  std::uint64_t reshares = 0;
  std::uint64_t replies = 0;

  bool eligible() const { return !offtopic && !out_of_window; }
  bool analyzed() const { return eligible() && linked; }
};

struct PlannedComment {
  std::string id;
  std::string parent;
  std::uint64_t author = 0;
  Timestamp created_at{};
  bool regular = true;  // false: planted quarantine case
};

std::string make_url(const std::string& domain, Rng& rng, std::uint64_t n) {
  switch (rng.below(4)) {
    case 0: return "https://www." + domain + "/news/" + std::to_string(n);
    case 1: return "http://" + domain + "/" + std::to_string(n) + "?ref=share";
    case 2: return "https://amp." + domain + "/story-" + std::to_string(n);
    default: {
      std::string upper = domain;
      std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
      return "HTTPS://WWW." + upper + ":443/a/" + std::to_string(n);
    }
  }
}

std::string styled_tag(const std::string& tag, Rng& rng) {
  std::string out = tag;
  switch (rng.below(3)) {
    case 0: break;
    case 1: out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0]))); break;
    default:
      std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  }
  return out;
}

Label majority(const std::vector<Label>& votes) {
  std::size_t q = 0, r = 0;
  for (auto v : votes) {
    if (v == Label::Questionable) ++q;
    if (v == Label::Reliable) ++r;
  }
  if (q > r) return Label::Questionable;
  if (r > q) return Label::Reliable;
  return Label::Unknown;
}

// Inserts extra lines at chosen positions among the base lines; position p
// means "before base line p". Ties keep insertion order.
std::string interleave(const std::vector<std::string>& base,
                       std::vector<std::pair<std::uint64_t, std::string>> extra) {
  std::stable_sort(extra.begin(), extra.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  std::size_t e = 0;
  for (std::size_t i = 0; i <= base.size(); ++i) {
    while (e < extra.size() && extra[e].first == i) out += extra[e++].second + '\n';
    if (i < base.size()) out += base[i] + '\n';
  }
  return out;
}

json report_json(std::uint64_t lines, std::uint64_t accepted, std::uint64_t malformed, std::uint64_t duplicates,
                 const std::map<std::string, std::uint64_t>& dropped,
                 const std::map<std::string, std::uint64_t>& malformed_reasons, std::uint64_t url_failures) {
  corpus::IngestReport report;
  report.lines_read = lines;
  report.accepted = accepted;
  report.malformed = malformed;
  report.duplicates = duplicates;
  for (const auto& [k, v] : dropped) {
    if (v != 0) report.dropped[k] = v;
  }
  for (const auto& [k, v] : malformed_reasons) {
    if (v != 0) report.malformed_reasons[k] = v;
  }
  report.url_failures = url_failures;
  return report.to_json();
}

const char* const kFieldMap = R"(# Gab-style export as written by the synthetic generator
platform = "gab"

[posts]
post_id = "id"
author_id = "account.id"
created_at = "created_at"
text = "content"
hashtags = "tags[].name"
urls = "links[].url"
likes = "favourites_count"
reshares = "reblogs_count"
replies = "replies_count"

[comments]
comment_id = "id"
parent_post_id = "in_reply_to_id"
author_id = "account.id"
created_at = "created_at"

[edges]
follower_id = "follower"
followee_id = "followee"
)";

}  // namespace

SynthConfig SynthConfig::from_config(const KeyValueConfig& config) {
  for (const auto& [key, value] : config.entries()) {
    if (known_keys().count(key) == 0) throw UsageError(config.origin() + ": unknown synth config key '" + key + "'");
  }
  SynthConfig c;
  c.platform = config.get_string("platform", c.platform);
  c.seed = non_negative(config, "seed", c.seed);
  if (auto window = config.get("window")) c.window = parse_window(*window);
  if (config.contains("hashtags")) c.hashtags = config.get_list("hashtags");
  c.n_users = non_negative(config, "n_users", c.n_users);
  c.n_posts = non_negative(config, "n_posts", c.n_posts);

  c.n_outlets = non_negative(config, "registry.outlets", c.n_outlets);
  c.questionable_share = config.get_double("registry.questionable_share", c.questionable_share);
  c.ng_share = config.get_double("registry.ng_share", c.ng_share);

  c.alpha_likes = config.get_double("engagement.alpha_likes", c.alpha_likes);
  c.alpha_reshares = config.get_double("engagement.alpha_reshares", c.alpha_reshares);
  c.alpha_replies = config.get_double("engagement.alpha_replies", c.alpha_replies);
  c.zero_rate = config.get_double("engagement.zero_rate", c.zero_rate);
  c.replies = config.get_bool("engagement.replies", c.replies);

  c.hazard_questionable = config.get_double("lifetimes.hazard_questionable", c.hazard_questionable);
  c.hazard_reliable = config.get_double("lifetimes.hazard_reliable", c.hazard_reliable);
  c.comment_rate = config.get_double("lifetimes.comment_rate", c.comment_rate);

  c.homophily = config.get_double("graph.homophily", c.homophily);
  c.mean_degree = config.get_double("graph.mean_degree", c.mean_degree);
  c.homophily_window = config.get_double("graph.window", c.homophily_window);

  const auto centers = config.get_double_list("leaning.centers");
  auto weights = config.get_double_list("leaning.weights");
  if (weights.empty() && !centers.empty()) weights.assign(centers.size(), 1.0 / static_cast<double>(centers.size()));
  if (centers.size() != weights.size()) throw UsageError("synth config: leaning.centers and leaning.weights differ in length");
  for (std::size_t i = 0; i < centers.size(); ++i) c.clusters.push_back({centers[i], weights[i]});
  c.cluster_spread = config.get_double("leaning.spread", c.cluster_spread);

  c.link_rate = config.get_double("rates.link", c.link_rate);
  c.categorized_rate = config.get_double("rates.categorized", c.categorized_rate);
  c.multi_link_rate = config.get_double("rates.multi_link", c.multi_link_rate);
  c.bad_url_rate = config.get_double("rates.bad_url", c.bad_url_rate);
  c.offtopic_rate = config.get_double("rates.offtopic", c.offtopic_rate);
  c.out_of_window_rate = config.get_double("rates.out_of_window", c.out_of_window_rate);
  c.malformed_rate = config.get_double("rates.malformed", c.malformed_rate);
  c.duplicate_rate = config.get_double("rates.duplicate", c.duplicate_rate);
  c.quarantine_rate = config.get_double("rates.quarantine", c.quarantine_rate);
  c.validate();
  return c;
}

SynthConfig SynthConfig::load(const std::filesystem::path& path) { return from_config(KeyValueConfig::load(path)); }

void SynthConfig::validate() const {
  auto fail = [](const std::string& why) { throw UsageError("infeasible synth config: " + why); };
  if (n_users == 0) fail("n_users must be positive");
  if (n_outlets == 0) fail("registry.outlets must be positive");
  if (!(window.start < window.end)) fail("window start must precede its end");
  if (hashtags.empty()) fail("at least one hashtag is required");
  const std::pair<const char*, double> rates[] = {
      {"questionable_share", questionable_share}, {"ng_share", ng_share}, {"zero_rate", zero_rate},
      {"homophily", homophily}, {"link", link_rate}, {"categorized", categorized_rate},
      {"multi_link", multi_link_rate}, {"bad_url", bad_url_rate}, {"offtopic", offtopic_rate},
      {"out_of_window", out_of_window_rate}, {"malformed", malformed_rate}, {"duplicate", duplicate_rate},
      {"quarantine", quarantine_rate}, {"cluster_spread", cluster_spread}};
  for (const auto& [name, value] : rates) {
    if (!(value >= 0.0 && value <= 1.0)) fail(std::string(name) + " must lie in [0, 1]");
  }
  for (double a : {alpha_likes, alpha_reshares, alpha_replies}) {
    if (!(a > 1.0)) fail("engagement exponents must exceed 1");
  }
  if (!(hazard_questionable > 0.0) || !(hazard_reliable > 0.0)) fail("lifetime hazards must be positive");
  if (!(comment_rate >= 0.0)) fail("comment_rate must be non-negative");
  if (!(mean_degree >= 0.0)) fail("mean_degree must be non-negative");
  if (!(homophily_window > 0.0)) fail("graph.window must be positive");
  double total = 0.0;
  for (const auto& c : clusters) {
    if (!(c.center >= 0.0 && c.center <= 1.0)) fail("cluster centers must lie in [0, 1]");
    if (!(c.weight >= 0.0)) fail("cluster weights must be non-negative");
    total += c.weight;
  }
  if (!clusters.empty() && std::fabs(total - 1.0) > 1e-9) fail("cluster weights must sum to 1");
  const auto defects = exact_count(malformed_rate, n_posts) + exact_count(duplicate_rate, n_posts) +
                       exact_count(offtopic_rate, n_posts) + exact_count(out_of_window_rate, n_posts);
  if (defects > n_posts) fail("planted defects exceed n_posts");
}

std::vector<Cluster> SynthConfig::effective_clusters() const {
  if (!clusters.empty()) return clusters;
  return {Cluster{questionable_share, 1.0}};
}

nlohmann::json SynthConfig::to_json() const {
  json clusters_json = json::array();
  for (const auto& c : effective_clusters()) clusters_json.push_back({{"center", c.center}, {"weight", c.weight}});
  return json{{"platform", platform},
              {"seed", seed},
              {"window", format_window(window)},
              {"hashtags", hashtags},
              {"n_users", n_users},
              {"n_posts", n_posts},
              {"registry", {{"outlets", n_outlets}, {"questionable_share", questionable_share}, {"ng_share", ng_share}}},
              {"engagement",
               {{"alpha_likes", alpha_likes},
                {"alpha_reshares", alpha_reshares},
                {"alpha_replies", alpha_replies},
                {"zero_rate", zero_rate},
                {"replies", replies}}},
              {"lifetimes",
               {{"hazard_questionable", hazard_questionable},
                {"hazard_reliable", hazard_reliable},
                {"comment_rate", comment_rate}}},
              {"graph", {{"homophily", homophily}, {"mean_degree", mean_degree}, {"window", homophily_window}}},
              {"leaning", {{"clusters", clusters_json}, {"spread", cluster_spread}}},
              {"rates",
               {{"link", link_rate},
                {"categorized", categorized_rate},
                {"multi_link", multi_link_rate},
                {"bad_url", bad_url_rate},
                {"offtopic", offtopic_rate},
                {"out_of_window", out_of_window_rate},
                {"malformed", malformed_rate},
                {"duplicate", duplicate_rate},
                {"quarantine", quarantine_rate}}}};
}

corpus::IngestFilter manifest_filter(const SynthConfig& config, bool links_only) {
  corpus::IngestFilter filter;
  filter.hashtags.insert(config.hashtags.begin(), config.hashtags.end());
  filter.window = config.window;
  filter.links_only = links_only;
  return filter;
}

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  const Window& window = config.window;
  const std::int64_t span = seconds_between(window.start, window.end);

  // Users and their planted leanings.
  Rng user_rng(stream_seed(config.seed, 1));
  const auto clusters = config.effective_clusters();
  std::vector<std::string> user_ids;
  std::vector<double> planted_q;
  for (std::uint64_t i = 0; i < config.n_users; ++i) {
    user_ids.push_back(padded("u", i, 5));
    double pick = user_rng.uniform();
    std::size_t c = 0;
    while (c + 1 < clusters.size() && pick >= clusters[c].weight) pick -= clusters[c++].weight;
    const double q = clusters[c].center + config.cluster_spread * user_rng.normal();
    planted_q.push_back(std::clamp(q, 0.0, 1.0));
  }

  // Registry.
  Rng registry_rng(stream_seed(config.seed, 2));
  static constexpr std::array<std::string_view, 5> kSuffixes = {".com", ".net", ".org", ".co.uk", ".com.au"};
  static constexpr std::array<std::string_view, 6> kReliableBias = {"Right", "Right-Center", "Least-Biased",
                                                                    "Left-Center", "Left", "Pro-Science"};
  const std::uint64_t n_questionable = exact_count(config.questionable_share, config.n_outlets);
  std::vector<Outlet> outlets;
  std::vector<std::size_t> questionable_outlets, reliable_outlets;
  std::ostringstream registry;
  registry << "domain,provider,mbfc_bias,mbfc_bias_score,ng_score,ng_special\n";
  std::uint64_t expected_mbfc = 0, expected_ng = 0;
  std::optional<std::string> first_mbfc;
  for (std::uint64_t j = 0; j < config.n_outlets; ++j) {
    const Label label = j < n_questionable ? Label::Questionable : Label::Reliable;
    const std::string domain = padded("outlet", j, 3) + std::string(kSuffixes[j % kSuffixes.size()]);
    const bool ng = registry_rng.bernoulli(config.ng_share);
    const std::string written = j % 3 == 0 ? "www." + domain : j % 3 == 1 ? domain : "https://" + domain + "/";
    if (ng) {
      const auto score = label == Label::Questionable ? registry_rng.below(61) : 61 + registry_rng.below(40);
      registry << written << ",NG,,," << score << ",\n";
      ++expected_ng;
    } else {
      const std::string bias = label == Label::Questionable
                                   ? (j % 2 == 0 ? "Questionable" : "Conspiracy-Pseudoscience")
                                   : std::string(kReliableBias[registry_rng.below(kReliableBias.size())]);
      const double bias_score = static_cast<double>(registry_rng.below(101)) / 10.0;
      std::ostringstream score;
      score << bias_score;
      registry << written << ",MBFC," << bias << "," << score.str() << ",,\n";
      ++expected_mbfc;
      if (!first_mbfc) first_mbfc = domain;
    }
    (label == Label::Questionable ? questionable_outlets : reliable_outlets).push_back(outlets.size());
    outlets.push_back({domain, label});
  }
  const std::string humor_domain = "satire-daily.com";
  registry << humor_domain << ",NG,,,,humor\n";
  ++expected_ng;
  std::uint64_t expected_duplicates = 0;
  if (first_mbfc) {
    // Same outlet described by NewsGuard too; the MBFC row must win.
    registry << *first_mbfc << ",NG,,,100,\n";
    ++expected_duplicates;
  }

  // Posts.
  Rng post_rng(stream_seed(config.seed, 3));
  Rng engagement_rng(stream_seed(config.seed, 4));
  const std::uint64_t n_malformed = exact_count(config.malformed_rate, config.n_posts);
  const std::uint64_t n_duplicates = exact_count(config.duplicate_rate, config.n_posts);
  const std::uint64_t n_offtopic = exact_count(config.offtopic_rate, config.n_posts);
  const std::uint64_t n_out_of_window = exact_count(config.out_of_window_rate, config.n_posts);
  const std::uint64_t n_valid = config.n_posts - n_malformed - n_duplicates;
  if (n_offtopic + n_out_of_window > n_valid) throw UsageError("infeasible synth config: too many planted drops");

  std::vector<std::uint64_t> defect_order(n_valid);
  for (std::uint64_t i = 0; i < n_valid; ++i) defect_order[i] = i;
  for (std::uint64_t i = n_valid; i > 1; --i) std::swap(defect_order[i - 1], defect_order[post_rng.below(i)]);

  const heavytail::PowerLawSampler likes_sampler(config.alpha_likes, 1, std::size_t{1} << 16);
  const heavytail::PowerLawSampler reshares_sampler(config.alpha_reshares, 1, std::size_t{1} << 16);
  const heavytail::PowerLawSampler replies_sampler(config.alpha_replies, 1, std::size_t{1} << 16);
  auto engagement = [&](const heavytail::PowerLawSampler& sampler) -> std::uint64_t {
    return engagement_rng.bernoulli(config.zero_rate) ? 0 : sampler(engagement_rng);
  };

  std::vector<PlannedPost> posts(n_valid);
  for (std::uint64_t k = 0; k < n_offtopic; ++k) posts[defect_order[k]].offtopic = true;
  for (std::uint64_t k = 0; k < n_out_of_window; ++k) posts[defect_order[n_offtopic + k]].out_of_window = true;

  std::uint64_t url_serial = 0;
  for (std::uint64_t i = 0; i < n_valid; ++i) {
    auto& post = posts[i];
    post.id = padded("p", i, 6);
    post.author = post_rng.below(config.n_users);
    if (post.out_of_window) {
      post.created_at = window.start - std::chrono::seconds(1 + static_cast<std::int64_t>(post_rng.below(30 * kSecondsPerDay)));
    } else {
      post.created_at = window.start + std::chrono::seconds(static_cast<std::int64_t>(post_rng.below(span)));
    }
    if (post_rng.bernoulli(config.link_rate)) {
      post.linked = true;
      const bool any_outlet = !outlets.empty();
      if (any_outlet && post_rng.bernoulli(config.categorized_rate)) {
        Label intended = post_rng.bernoulli(planted_q[post.author]) ? Label::Questionable : Label::Reliable;
        if (intended == Label::Questionable && questionable_outlets.empty()) intended = Label::Reliable;
        if (intended == Label::Reliable && reliable_outlets.empty()) intended = Label::Questionable;
        const auto& pool = intended == Label::Questionable ? questionable_outlets : reliable_outlets;
        const std::size_t first = pool[post_rng.below(pool.size())];
        std::vector<Label> votes = {outlets[first].label};
        post.urls.push_back(make_url(outlets[first].domain, post_rng, ++url_serial));
        if (post_rng.bernoulli(config.multi_link_rate)) {
          const bool conflicting = post_rng.bernoulli(0.5);
          const auto& other = intended == Label::Questionable ? reliable_outlets : questionable_outlets;
          const auto& second_pool = conflicting && !other.empty() ? other : pool;
          const std::size_t second = second_pool[post_rng.below(second_pool.size())];
          // A repeated outlet is one domain and votes once.
          if (second != first) votes.push_back(outlets[second].label);
          post.urls.push_back(make_url(outlets[second].domain, post_rng, ++url_serial));
        }
        post.label = majority(votes);
      } else if (post_rng.bernoulli(0.3)) {
        post.urls.push_back(make_url(humor_domain, post_rng, ++url_serial));
      } else {
        post.urls.push_back("https://blog" + std::to_string(post_rng.below(50)) + ".example.org/p/" +
                            std::to_string(++url_serial));
      }
    } else if (post_rng.bernoulli(config.bad_url_rate)) {
      post.urls.push_back(post_rng.bernoulli(0.5) ? "not a url" : "https://localhost/item");
      post.bad_urls = 1;
    }
    post.likes = engagement(likes_sampler);
    post.reshares = engagement(reshares_sampler);
    post.replies = engagement(replies_sampler);
  }

  auto post_line = [&](const PlannedPost& post) {
    json tags = json::array();
    std::string text = "Update " + post.id;
    if (post.offtopic) {
      tags.push_back({{"name", "weather"}});
      text += " #weather";
    } else {
      const auto n_tags = 1 + post_rng.below(2);
      for (std::uint64_t t = 0; t < n_tags; ++t) {
        const std::string tag = styled_tag(config.hashtags[post_rng.below(config.hashtags.size())], post_rng);
        tags.push_back({{"name", tag}});
        text += " #" + tag;
      }
    }
    json links = json::array();
    for (const auto& url : post.urls) links.push_back({{"url", url}});
    json j{{"id", post.id},
           {"created_at", iso_millis(post.created_at)},
           {"account", {{"id", user_ids[post.author]}, {"username", "user_" + user_ids[post.author]}}},
           {"content", text},
           {"tags", tags},
           {"links", links},
           {"favourites_count", post.likes},
           {"reblogs_count", post.reshares}};
    if (config.replies) j["replies_count"] = post.replies;
    return j.dump();
  };

  std::vector<std::string> post_lines;
  post_lines.reserve(n_valid);
  for (const auto& post : posts) post_lines.push_back(post_line(post));

  std::vector<std::uint64_t> duplicable;
  for (std::uint64_t i = 0; i < n_valid; ++i) {
    if (posts[i].analyzed()) duplicable.push_back(i);
  }
  if (n_duplicates > 0 && duplicable.empty()) {
    throw UsageError("infeasible synth config: duplicates requested but no retained linked post to copy");
  }
  std::vector<std::pair<std::uint64_t, std::string>> extra_post_lines;
  std::uint64_t duplicate_url_failures = 0;
  for (std::uint64_t k = 0; k < n_duplicates; ++k) {
    const auto source = duplicable[post_rng.below(duplicable.size())];
    const auto position = source + 1 + post_rng.below(n_valid - source);
    extra_post_lines.emplace_back(position, post_lines[source]);
    duplicate_url_failures += posts[source].bad_urls;
  }
  static constexpr std::array<const char*, 5> kMalformedReasons = {
      "invalid_json", "not_object", "missing_field:author_id", "negative_count", "bad_timestamp"};
  std::map<std::string, std::uint64_t> malformed_reasons;
  for (std::uint64_t k = 0; k < n_malformed; ++k) {
    const std::string id = padded("bad", k, 4);
    const std::string when = iso_millis(window.start + std::chrono::seconds(static_cast<std::int64_t>(post_rng.below(span))));
    std::string line;
    switch (k % kMalformedReasons.size()) {
      case 0: line = R"({"id": ")" + id + R"(", "account": {"id")"; break;
      case 1: line = R"(["not", "an", "object"])"; break;
      case 2:
        line = json{{"id", id}, {"created_at", when}, {"favourites_count", 1}, {"reblogs_count", 0}}.dump();
        break;
      case 3:
        line = json{{"id", id}, {"created_at", when}, {"account", {{"id", user_ids[0]}}},
                    {"tags", {{{"name", config.hashtags[0]}}}}, {"favourites_count", -3}, {"reblogs_count", 0}}
                   .dump();
        break;
      default:
        line = json{{"id", id}, {"created_at", "yesterday"}, {"account", {{"id", user_ids[0]}}},
                    {"favourites_count", 2}, {"reblogs_count", 1}}
                   .dump();
    }
    ++malformed_reasons[kMalformedReasons[k % kMalformedReasons.size()]];
    extra_post_lines.emplace_back(post_rng.below(n_valid + 1), line);
  }

  // Comments: while a post is active it receives a Poisson stream of
  // comments; activity ends after Exp(hazard) days or at the window end.
  Rng comment_rng(stream_seed(config.seed, 5));
  std::vector<PlannedComment> comments;
  std::uint64_t comment_serial = 0;
  for (const auto& post : posts) {
    if (!post.eligible() || config.comment_rate <= 0.0) continue;
    const double hazard = post.label == Label::Questionable ? config.hazard_questionable : config.hazard_reliable;
    const double active_days = comment_rng.exponential(hazard);
    const double stop = std::min(static_cast<double>(seconds_between(window.start, post.created_at)) +
                                     active_days * kSecondsPerDay,
                                 static_cast<double>(span));
    double at = static_cast<double>(seconds_between(window.start, post.created_at));
    while (true) {
      at += comment_rng.exponential(config.comment_rate) * kSecondsPerDay;
      if (at >= stop) break;
      comments.push_back({padded("c", comment_serial++, 7), post.id, comment_rng.below(config.n_users),
                          window.start + std::chrono::seconds(static_cast<std::int64_t>(at)), true});
    }
  }
  const std::uint64_t n_regular_comments = comments.size();
  const std::uint64_t n_quarantine = exact_count(config.quarantine_rate, n_regular_comments);
  std::vector<std::uint64_t> late_posts;  // eligible posts leaving room for an earlier comment
  for (std::uint64_t i = 0; i < n_valid; ++i) {
    if (posts[i].eligible() && posts[i].created_at >= window.start + std::chrono::seconds(7200)) late_posts.push_back(i);
  }
  std::uint64_t planted_orphans = 0, planted_before_parent = 0;
  std::vector<std::pair<std::uint64_t, std::string>> extra_comment_lines;
  auto comment_json = [&](const PlannedComment& c) {
    return json{{"id", c.id},
                {"in_reply_to_id", c.parent},
                {"account", {{"id", user_ids[c.author]}}},
                {"created_at", iso_millis(c.created_at)}}
        .dump();
  };
  for (std::uint64_t k = 0; k < n_quarantine; ++k) {
    PlannedComment c;
    c.id = padded("c", comment_serial++, 7);
    c.author = comment_rng.below(config.n_users);
    c.regular = false;
    if (k % 2 == 0 || late_posts.empty()) {
      c.parent = padded("p-deleted-", k, 5);
      c.created_at = window.start + std::chrono::seconds(static_cast<std::int64_t>(comment_rng.below(span)));
      ++planted_orphans;
    } else {
      const auto& parent = posts[late_posts[comment_rng.below(late_posts.size())]];
      c.parent = parent.id;
      c.created_at = parent.created_at - std::chrono::seconds(3600 + static_cast<std::int64_t>(comment_rng.below(3600)));
      ++planted_before_parent;
    }
    extra_comment_lines.emplace_back(comment_rng.below(n_regular_comments + 1), comment_json(c));
    comments.push_back(std::move(c));
  }
  std::vector<std::string> comment_lines;
  comment_lines.reserve(n_regular_comments);
  for (std::uint64_t i = 0; i < n_regular_comments; ++i) comment_lines.push_back(comment_json(comments[i]));

  // Follow graph over planted leanings.
  const auto edges = generate_follow_graph(user_ids, planted_q, config.homophily, config.mean_degree,
                                           stream_seed(config.seed, 7), config.homophily_window);
  std::string edge_text;
  for (const auto& e : edges) edge_text += json{{"follower", e.follower_id}, {"followee", e.followee_id}}.dump() + '\n';

  SynthOutput out;
  out.posts = interleave(post_lines, std::move(extra_post_lines));
  out.comments = interleave(comment_lines, std::move(extra_comment_lines));
  out.edges = std::move(edge_text);
  out.registry = registry.str();
  out.fieldmap = kFieldMap;

  // ---- Manifest: expectations computed from the plan, not by the analysis code.
  std::uint64_t eligible = 0, analyzed = 0, eligible_url_failures = 0;
  for (const auto& post : posts) {
    if (!post.eligible()) continue;
    ++eligible;
    eligible_url_failures += post.bad_urls;
    if (post.analyzed()) ++analyzed;
  }
  const std::uint64_t url_failures = eligible_url_failures + duplicate_url_failures;
  const std::map<std::string, std::uint64_t> base_drops = {{"hashtag", n_offtopic}, {"window", n_out_of_window}};
  auto links_drops = base_drops;
  links_drops["no_link"] = eligible - analyzed;

  std::map<std::string, const PlannedPost*> by_id;
  for (const auto& post : posts) by_id[post.id] = &post;
  auto analyzed_parent = [&](const PlannedComment& c) -> const PlannedPost* {
    if (!c.regular) return nullptr;
    auto it = by_id.find(c.parent);
    return it != by_id.end() && it->second->analyzed() ? it->second : nullptr;
  };

  std::uint64_t comments_on_unlinked = 0;
  for (const auto& c : comments) {
    if (c.regular && !by_id.at(c.parent)->linked) ++comments_on_unlinked;
  }

  // Per-post labels, breakdown and leanings over the links-only corpus.
  json labels = json::object();
  struct Column {
    std::uint64_t posts = 0, likes = 0, reshares = 0, replies = 0, comments = 0;
    std::set<std::uint64_t> users;
  };
  std::map<std::string, Column> columns;
  auto column_names = [](Label label) {
    std::vector<std::string> names = {"Overall"};
    if (label != Label::Unknown) {
      names.push_back("Categorized");
      names.push_back(std::string(to_string(label)));
    }
    return names;
  };
  std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> counts_by_user;  // (questionable, k)
  for (const auto& post : posts) {
    if (!post.analyzed()) continue;
    labels[post.id] = to_string(post.label);
    for (const auto& name : column_names(post.label)) {
      auto& col = columns[name];
      ++col.posts;
      col.users.insert(post.author);
      col.likes += post.likes;
      col.reshares += post.reshares;
      col.replies += post.replies;
    }
    if (post.label != Label::Unknown) {
      auto& [q, k] = counts_by_user[post.author];
      q += post.label == Label::Questionable ? 1 : 0;
      ++k;
    }
  }
  for (const auto& c : comments) {
    if (const auto* parent = analyzed_parent(c)) {
      for (const auto& name : column_names(parent->label)) ++columns[name].comments;
    }
  }
  json breakdown = json::object();
  for (const char* name : {"Overall", "Categorized", "Questionable", "Reliable"}) {
    const auto& col = columns[name];
    breakdown[name] = {{"posts", col.posts},
                       {"users", col.users.size()},
                       {"likes", col.likes},
                       {"reshares", col.reshares},
                       {"comments", col.comments},
                       {"replies", config.replies && col.posts > 0 ? json(col.replies) : json(nullptr)}};
  }
  json leanings = json::object();
  for (const auto& [user, qk] : counts_by_user) {
    leanings[user_ids[user]] = {{"q", static_cast<double>(qk.first) / static_cast<double>(qk.second)},
                                {"k", qk.second}};
  }
  json planted = json::object();
  for (std::uint64_t i = 0; i < config.n_users; ++i) planted[user_ids[i]] = planted_q[i];

  // Lifetimes from first and last comment.
  const Timestamp last_day = window.end - std::chrono::seconds(kSecondsPerDay);
  auto lifetime = [&](const std::string& id, Timestamp first, Timestamp last, Label group) {
    return json{{"subject_id", id},
                {"duration_days", seconds_between(first, last) / kSecondsPerDay},
                {"event_observed", last < last_day},
                {"group", to_string(group)}};
  };
  std::map<std::string, std::pair<Timestamp, Timestamp>> post_span;
  std::map<std::pair<std::uint64_t, Label>, std::pair<Timestamp, Timestamp>> user_span;
  for (const auto& c : comments) {
    const auto* parent = analyzed_parent(c);
    if (parent == nullptr || parent->label == Label::Unknown) continue;
    auto widen = [&](auto& spans, const auto& key) {
      auto [it, inserted] = spans.try_emplace(key, c.created_at, c.created_at);
      if (!inserted) {
        it->second.first = std::min(it->second.first, c.created_at);
        it->second.second = std::max(it->second.second, c.created_at);
      }
    };
    widen(post_span, parent->id);
    widen(user_span, std::make_pair(c.author, parent->label));
  }
  json post_lifetimes = json::array();
  for (const auto& post : posts) {
    auto it = post_span.find(post.id);
    if (it != post_span.end()) post_lifetimes.push_back(lifetime(post.id, it->second.first, it->second.second, post.label));
  }
  // user ids sort like their indices, so map order matches id order
  json user_lifetimes = json::array();
  for (const auto& [key, s] : user_span) user_lifetimes.push_back(lifetime(user_ids[key.first], s.first, s.second, key.second));

  // Daily series of new posts and first-time posting users.
  const auto days = static_cast<std::size_t>(window.num_days());
  json series = json::object();
  for (const char* group : {"Overall", "Questionable", "Reliable"}) {
    std::vector<std::uint64_t> new_posts(days, 0), new_users(days, 0);
    std::map<std::uint64_t, Timestamp> first_post;
    for (const auto& post : posts) {
      if (!post.analyzed()) continue;
      if (std::string_view(group) != "Overall" && to_string(post.label) != group) continue;
      ++new_posts[static_cast<std::size_t>(seconds_between(window.start, post.created_at) / kSecondsPerDay)];
      auto [it, inserted] = first_post.try_emplace(post.author, post.created_at);
      if (!inserted) it->second = std::min(it->second, post.created_at);
    }
    for (const auto& [user, t] : first_post) {
      ++new_users[static_cast<std::size_t>(seconds_between(window.start, t) / kSecondsPerDay)];
    }
    series[group] = {{"posts", new_posts}, {"users", new_users}};
  }

  json registry_counts{{"total", config.n_outlets + 1},
                       {"mbfc", expected_mbfc},
                       {"ng", expected_ng},
                       {"questionable", n_questionable},
                       {"reliable", config.n_outlets - n_questionable},
                       {"unknown", 1},
                       {"duplicates", expected_duplicates}};

  const json config_json = config.to_json();
  out.manifest = json{
      {"schema_version", kManifestSchemaVersion},
      {"generator", "misinfo-synth"},
      {"config", config_json},
      {"config_hash", sha256_hex(config_json.dump())},
      {"files",
       {{"posts", "posts.ndjson"},
        {"comments", "comments.ndjson"},
        {"edges", "edges.ndjson"},
        {"registry", "registry.csv"},
        {"fieldmap", "fieldmap.toml"}}},
      {"planted",
       {{"user_leaning", planted},
        {"clusters", config_json["leaning"]["clusters"]},
        {"malformed_lines", n_malformed},
        {"duplicate_lines", n_duplicates},
        {"offtopic_posts", n_offtopic},
        {"out_of_window_posts", n_out_of_window},
        {"orphan_comments", planted_orphans},
        {"early_comments", planted_before_parent}}},
      {"expected",
       {{"ingest",
         {{"posts", report_json(config.n_posts, n_valid - n_offtopic - n_out_of_window, n_malformed, n_duplicates,
                                base_drops, malformed_reasons, url_failures)},
          {"posts_links_only", report_json(config.n_posts, analyzed, n_malformed, n_duplicates, links_drops,
                                           malformed_reasons, url_failures)},
          {"comments", report_json(comments.size(), comments.size(), 0, 0, {}, {}, 0)},
          {"edges", report_json(edges.size(), edges.size(), 0, 0, {}, {}, 0)}}},
        {"links_only", {{"posts_in", eligible}, {"posts_retained", analyzed}}},
        {"comments_quarantined", n_quarantine},
        {"comments_quarantined_links_only", n_quarantine + comments_on_unlinked},
        {"registry", registry_counts},
        {"labels", labels},
        {"breakdown", breakdown},
        {"user_leaning", leanings},
        {"post_lifetimes", post_lifetimes},
        {"user_lifetimes", user_lifetimes},
        {"timeseries", series}}}};
  return out;
}

void write_output(const SynthOutput& output, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw IoError("cannot write " + (dir / name).string());
  };
  write("posts.ndjson", output.posts);
  write("comments.ndjson", output.comments);
  write("edges.ndjson", output.edges);
  write("registry.csv", output.registry);
  write("fieldmap.toml", output.fieldmap);
  write("manifest.json", output.manifest.dump(2) + "\n");
}

std::vector<corpus::FollowEdge> generate_follow_graph(std::span<const std::string> ids, std::span<const double> q,
                                                      double h, double mean_degree, std::uint64_t seed,
                                                      double window) {
  if (ids.size() != q.size()) throw UsageError("follow graph: ids and leanings differ in length");
  const std::size_t n = ids.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q[a] < q[b]; });
  std::vector<double> sorted_q(n);
  for (std::size_t i = 0; i < n; ++i) sorted_q[i] = q[order[i]];

  Rng rng(seed);
  std::vector<corpus::FollowEdge> edges;
  if (n < 2) return edges;
  for (std::size_t i = 0; i < n; ++i) {
    const auto degree = std::min<std::uint64_t>(rng.poisson(mean_degree), n - 1);
    // |q_i - q_j| < window, self included
    const auto lo = static_cast<std::size_t>(
        std::upper_bound(sorted_q.begin(), sorted_q.end(), q[i] - window) - sorted_q.begin());
    const auto hi = static_cast<std::size_t>(
        std::lower_bound(sorted_q.begin(), sorted_q.end(), q[i] + window) - sorted_q.begin());
    const bool has_similar = hi > lo + 1;
    std::vector<std::size_t> chosen;
    std::uint64_t attempts = 0;
    while (chosen.size() < degree && attempts < 100 * degree + 100) {
      ++attempts;
      const std::size_t j = has_similar && rng.bernoulli(h) ? order[lo + rng.below(hi - lo)] : rng.below(n);
      if (j == i || std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
      chosen.push_back(j);
    }
    for (auto j : chosen) edges.push_back({ids[i], ids[j]});
  }
  return edges;
}

std::vector<corpus::FollowEdge> rewire_degree_preserving(std::span<const corpus::FollowEdge> edges,
                                                         std::uint64_t swaps_per_edge, std::uint64_t seed) {
  std::map<std::string, std::uint64_t> index;
  std::vector<std::string> names;
  auto id_of = [&](const std::string& s) {
    auto [it, inserted] = index.try_emplace(s, names.size());
    if (inserted) names.push_back(s);
    return it->second;
  };
  std::vector<std::pair<std::uint64_t, std::uint64_t>> e;
  e.reserve(edges.size());
  for (const auto& edge : edges) e.emplace_back(id_of(edge.follower_id), id_of(edge.followee_id));
  auto key = [](std::uint64_t a, std::uint64_t b) { return (a << 32) | b; };
  std::unordered_set<std::uint64_t> present;
  for (const auto& [a, b] : e) present.insert(key(a, b));

  Rng rng(seed);
  const std::uint64_t m = e.size();
  if (m >= 2) {
    for (std::uint64_t t = 0; t < swaps_per_edge * m; ++t) {
      const auto x = rng.below(m);
      const auto y = rng.below(m);
      if (x == y) continue;
      const auto [a, b] = e[x];
      const auto [c, d] = e[y];
      if (a == d || c == b || present.count(key(a, d)) || present.count(key(c, b))) continue;
      present.erase(key(a, b));
      present.erase(key(c, d));
      present.insert(key(a, d));
      present.insert(key(c, b));
      e[x] = {a, d};
      e[y] = {c, b};
    }
  }
  std::vector<corpus::FollowEdge> out;
  out.reserve(m);
  for (const auto& [a, b] : e) out.push_back({names[a], names[b]});
  return out;
}

std::vector<survival::LifetimeRecord> sample_lifetimes(double hazard, std::size_t n, Label group,
                                                       std::uint64_t seed, std::optional<std::int64_t> horizon_days) {
  if (!(hazard > 0.0)) throw UsageError("lifetime hazard must be positive");
  Rng rng(seed);
  std::vector<survival::LifetimeRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    survival::LifetimeRecord r;
    r.subject_id = padded("s", i, 5);
    r.group = group;
    r.duration_days = static_cast<std::int64_t>(std::floor(rng.exponential(hazard)));
    if (horizon_days && r.duration_days >= *horizon_days) {
      r.duration_days = *horizon_days;
      r.event_observed = false;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace misinfo::synth
