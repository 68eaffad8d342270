#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "misinfo/domain.hpp"
#include "misinfo/label.hpp"
#include "misinfo/time.hpp"

namespace misinfo::corpus {

inline constexpr int kCorpusSchemaVersion = 1;

struct Post {
  std::string post_id;
  std::string author_id;
  Timestamp created_at{};
  std::string text;
  std::set<std::string> hashtags;  // lowercase, without '#'
  std::vector<std::string> urls;
  std::uint64_t likes = 0;
  std::uint64_t reshares = 0;
  std::optional<std::uint64_t> replies;  // absent is not zero
};

struct Comment {
  std::string comment_id;
  std::string parent_post_id;
  std::string author_id;
  Timestamp created_at{};
};

struct FollowEdge {
  std::string follower_id;
  std::string followee_id;

  auto operator<=>(const FollowEdge&) const = default;
};

enum class RecordKind { posts, comments, edges };

RecordKind parse_kind(std::string_view text);  // throws UsageError
std::string_view to_string(RecordKind kind);

// Canonical field name -> source path in the platform export. Paths are
// dot-separated; a segment ending in "[]" iterates an array, e.g.
// "entities.urls[].expanded_url".
struct FieldMap {
  std::string platform = "generic";
  std::map<std::string, std::string> posts;
  std::map<std::string, std::string> comments;
  std::map<std::string, std::string> edges;

  // Identity mapping of the canonical schema written by save_corpus.
  static FieldMap canonical();
  // Sections [posts], [comments], [edges] plus a top-level `platform` key.
  static FieldMap load(const std::filesystem::path& path);
  static FieldMap parse(std::string_view text);

  const std::map<std::string, std::string>& for_kind(RecordKind kind) const;
};

struct IngestFilter {
  std::set<std::string> hashtags;  // empty: no hashtag filtering
  std::optional<Window> window;
  bool links_only = false;
  bool substring_hashtags = false;

  std::string describe() const;
};

// Tallies for one ingest call. Invariant:
// accepted + dropped_total() + malformed + duplicates == lines_read.
struct IngestReport {
  std::uint64_t lines_read = 0;
  std::uint64_t accepted = 0;
  std::uint64_t malformed = 0;
  std::uint64_t duplicates = 0;
  std::map<std::string, std::uint64_t> dropped;            // by reason
  std::map<std::string, std::uint64_t> malformed_reasons;  // by reason
  std::uint64_t url_failures = 0;  // URLs that did not yield a domain

  std::uint64_t dropped_total() const;
  bool balanced() const;
  void merge(const IngestReport& other);
  nlohmann::json to_json() const;
  static IngestReport from_json(const nlohmann::json& j);
};

struct CorpusDelta {
  std::vector<Post> posts;
  std::vector<Comment> comments;
  std::vector<FollowEdge> edges;
};

// Comments that reference a known post and do not predate it; the rest are
// quarantined (counted, not analyzed).
struct CommentResolution {
  std::vector<const Comment*> attached;
  std::uint64_t orphaned = 0;
  std::uint64_t before_parent = 0;

  std::uint64_t quarantined() const { return orphaned + before_parent; }
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(Window window, std::string platform_tag);

  const Window& window() const { return window_; }
  const std::string& platform_tag() const { return platform_tag_; }

  // Each returns false when the id (or edge) is already present.
  bool add_post(Post post);
  bool add_comment(Comment comment);
  bool add_edge(FollowEdge edge);

  std::span<const Post> posts() const { return posts_; }
  std::span<const Comment> comments() const { return comments_; }
  std::span<const FollowEdge> edges() const { return edges_; }
  const Post* find_post(std::string_view post_id) const;

  CommentResolution resolve_comments() const;

 private:
  Window window_{};
  std::string platform_tag_;
  std::vector<Post> posts_;
  std::unordered_map<std::string, std::size_t> post_index_;
  std::vector<Comment> comments_;
  std::unordered_set<std::string> comment_ids_;
  std::vector<FollowEdge> edges_;
  std::set<std::pair<std::string, std::string>> edge_keys_;
};

struct IngestResult {
  CorpusDelta delta;
  IngestReport report;
};

// Parses one newline-delimited JSON stream. Bad lines are counted, never
// fatal. Duplicates within the stream are collapsed here; duplicates against
// an existing corpus are counted by merge().
IngestResult ingest(std::istream& in, RecordKind kind, const FieldMap& map, const IngestFilter& filter,
                    const PublicSuffixList& psl = PublicSuffixList::bundled());

// Adds a delta to the corpus, moving already-present records from
// `report.accepted` to `report.duplicates`.
void merge(Corpus& corpus, CorpusDelta&& delta, IngestReport& report);

// Ingests independent shards concurrently and merges them in path order.
IngestReport ingest_files(Corpus& corpus, std::span<const std::filesystem::path> paths, RecordKind kind,
                          const FieldMap& map, const IngestFilter& filter,
                          const PublicSuffixList& psl = PublicSuffixList::bundled());

struct LinksOnlyResult {
  Corpus corpus;
  std::uint64_t posts_in = 0;
  std::uint64_t posts_retained = 0;
  std::uint64_t comments_in = 0;
  std::uint64_t comments_retained = 0;
  std::optional<std::string> warning;
};

// Posts with at least one extractable domain, plus comments whose parent
// survived. Orphan comments are kept (and stay quarantined).
LinksOnlyResult links_only(const Corpus& corpus, const PublicSuffixList& psl = PublicSuffixList::bundled());

struct BreakdownColumn {
  std::uint64_t posts = 0;
  std::uint64_t users = 0;
  std::uint64_t likes = 0;
  std::uint64_t reshares = 0;
  std::uint64_t comments = 0;
  std::optional<std::uint64_t> replies;  // nullopt when no post carries a replies count

  bool operator==(const BreakdownColumn&) const = default;
};

// Columns in emission order: Overall, and with labels Categorized,
// Questionable, Reliable.
struct BreakdownTable {
  std::vector<std::pair<std::string, BreakdownColumn>> columns;

  const BreakdownColumn* column(std::string_view name) const;
};

BreakdownTable corpus_stats(const Corpus& corpus, const PostLabels* labels = nullptr);

// On-disk corpus: posts.ndjson, comments.ndjson, edges.ndjson in canonical
// schema and manifest.json with counts, window and accumulated ingest reports.
struct CorpusManifest {
  std::map<std::string, IngestReport> ingest_reports;  // by kind
  std::vector<std::string> config_hashes;
};

void save_corpus(const Corpus& corpus, const CorpusManifest& manifest, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir, CorpusManifest* manifest = nullptr);
bool corpus_exists(const std::filesystem::path& dir);
std::filesystem::path manifest_path(const std::filesystem::path& dir);

nlohmann::json post_to_json(const Post& post);
nlohmann::json comment_to_json(const Comment& comment);
nlohmann::json edge_to_json(const FollowEdge& edge);

}  // namespace misinfo::corpus
