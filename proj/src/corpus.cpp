#include "misinfo/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <sstream>

#include "misinfo/config.hpp"
#include "misinfo/error.hpp"

namespace misinfo::corpus {
namespace {

using nlohmann::json;

// A record that cannot be mapped onto the canonical schema.
struct Malformed {
  std::string reason;
};

// Values at `path` inside `record`; "[]" segments fan out over arrays.
void resolve_path(const json& node, std::span<const std::string> segments, std::vector<const json*>& out) {
  if (segments.empty()) {
    if (!node.is_null()) out.push_back(&node);
    return;
  }
  std::string_view segment = segments.front();
  const bool fan_out = segment.ends_with("[]");
  if (fan_out) segment.remove_suffix(2);
  const json* child = &node;
  if (!segment.empty()) {
    if (!node.is_object()) return;
    auto it = node.find(segment);
    if (it == node.end()) return;
    child = &*it;
  }
  if (fan_out) {
    if (!child->is_array()) return;
    for (const auto& item : *child) resolve_path(item, segments.subspan(1), out);
  } else {
    resolve_path(*child, segments.subspan(1), out);
  }
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> segments;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    segments.emplace_back(path.substr(start, dot == std::string_view::npos ? path.npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return segments;
}

// Pre-split field paths for one record kind.
class CompiledMap {
 public:
  explicit CompiledMap(const std::map<std::string, std::string>& fields) {
    for (const auto& [name, path] : fields) paths_[name] = split_path(path);
  }

  bool mapped(const std::string& field) const { return paths_.count(field) != 0; }

  std::vector<const json*> values(const json& record, const std::string& field) const {
    std::vector<const json*> out;
    auto it = paths_.find(field);
    if (it != paths_.end()) resolve_path(record, it->second, out);
    return out;
  }

  const json* single(const json& record, const std::string& field) const {
    auto found = values(record, field);
    return found.empty() ? nullptr : found.front();
  }

 private:
  std::map<std::string, std::vector<std::string>> paths_;
};

std::string require_id(const CompiledMap& map, const json& record, const std::string& field) {
  const json* value = map.single(record, field);
  if (value == nullptr) throw Malformed{"missing_field:" + field};
  if (value->is_string()) {
    if (value->get_ref<const std::string&>().empty()) throw Malformed{"missing_field:" + field};
    return value->get<std::string>();
  }
  if (value->is_number_integer()) return value->dump();
  throw Malformed{"bad_type:" + field};
}

Timestamp require_time(const CompiledMap& map, const json& record, const std::string& field) {
  const json* value = map.single(record, field);
  if (value == nullptr) throw Malformed{"missing_field:" + field};
  std::optional<Timestamp> parsed;
  if (value->is_number_integer()) {
    parsed = Timestamp{std::chrono::seconds{value->get<std::int64_t>()}};
  } else if (value->is_string()) {
    parsed = parse_timestamp(value->get_ref<const std::string&>());
  }
  if (!parsed) throw Malformed{"bad_timestamp"};
  return *parsed;
}

std::optional<std::uint64_t> read_count(const CompiledMap& map, const json& record, const std::string& field,
                                        bool required) {
  const json* value = map.single(record, field);
  if (value == nullptr) {
    if (required) throw Malformed{"missing_field:" + field};
    return std::nullopt;
  }
  if (value->is_number_unsigned()) return value->get<std::uint64_t>();
  if (value->is_number_integer()) throw Malformed{"negative_count"};
  if (value->is_string()) {
    const auto& s = value->get_ref<const std::string&>();
    if (!s.empty() && s.front() == '-') throw Malformed{"negative_count"};
    if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::stoull(s);
    }
  }
  throw Malformed{"bad_type:" + field};
}

std::string normalize_tag(std::string_view tag) {
  while (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
  std::string out(tag);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
  });
  return out;
}

std::set<std::string> hashtags_from_text(std::string_view text) {
  std::set<std::string> tags;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '#') continue;
    if (i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '_')) continue;
    std::size_t j = i + 1;
    while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
    if (j > i + 1) tags.insert(normalize_tag(text.substr(i + 1, j - i - 1)));
    i = j - 1;
  }
  return tags;
}

Post map_post(const CompiledMap& map, const json& record) {
  Post post;
  post.post_id = require_id(map, record, "post_id");
  post.author_id = require_id(map, record, "author_id");
  post.created_at = require_time(map, record, "created_at");
  if (const json* text = map.single(record, "text")) {
    if (!text->is_string()) throw Malformed{"bad_type:text"};
    post.text = text->get<std::string>();
  }
  if (map.mapped("hashtags")) {
    for (const json* tag : map.values(record, "hashtags")) {
      if (!tag->is_string()) throw Malformed{"bad_type:hashtags"};
      auto normalized = normalize_tag(tag->get_ref<const std::string&>());
      if (!normalized.empty()) post.hashtags.insert(std::move(normalized));
    }
  } else {
    post.hashtags = hashtags_from_text(post.text);
  }
  for (const json* url : map.values(record, "urls")) {
    if (!url->is_string()) throw Malformed{"bad_type:urls"};
    post.urls.push_back(url->get<std::string>());
  }
  post.likes = *read_count(map, record, "likes", true);
  post.reshares = *read_count(map, record, "reshares", true);
  if (map.mapped("replies")) post.replies = read_count(map, record, "replies", false);
  return post;
}

Comment map_comment(const CompiledMap& map, const json& record) {
  Comment comment;
  comment.comment_id = require_id(map, record, "comment_id");
  comment.parent_post_id = require_id(map, record, "parent_post_id");
  comment.author_id = require_id(map, record, "author_id");
  comment.created_at = require_time(map, record, "created_at");
  return comment;
}

FollowEdge map_edge(const CompiledMap& map, const json& record) {
  return FollowEdge{require_id(map, record, "follower_id"), require_id(map, record, "followee_id")};
}

bool hashtag_match(const Post& post, const IngestFilter& filter) {
  if (filter.hashtags.empty()) return true;
  for (const auto& tag : post.hashtags) {
    if (filter.hashtags.count(tag) != 0) return true;
    if (filter.substring_hashtags) {
      for (const auto& term : filter.hashtags) {
        if (tag.find(term) != std::string::npos) return true;
      }
    }
  }
  return false;
}

void validate_map(const std::map<std::string, std::string>& fields, RecordKind kind) {
  static const std::map<RecordKind, std::vector<std::string>> required = {
      {RecordKind::posts, {"post_id", "author_id", "created_at", "likes", "reshares"}},
      {RecordKind::comments, {"comment_id", "parent_post_id", "author_id", "created_at"}},
      {RecordKind::edges, {"follower_id", "followee_id"}},
  };
  for (const auto& field : required.at(kind)) {
    if (fields.count(field) == 0) {
      throw UsageError("field map has no '" + field + "' entry for " + std::string(to_string(kind)));
    }
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

RecordKind parse_kind(std::string_view text) {
  if (text == "posts") return RecordKind::posts;
  if (text == "comments") return RecordKind::comments;
  if (text == "edges") return RecordKind::edges;
  throw UsageError("unknown record kind '" + std::string(text) + "' (expected posts|comments|edges)");
}

std::string_view to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::posts: return "posts";
    case RecordKind::comments: return "comments";
    case RecordKind::edges: return "edges";
  }
  return "posts";
}

FieldMap FieldMap::canonical() {
  FieldMap map;
  map.platform = "canonical";
  for (const char* f : {"post_id", "author_id", "created_at", "text", "hashtags[]", "urls[]", "likes", "reshares",
                        "replies"}) {
    std::string name(f);
    std::string key = name.ends_with("[]") ? name.substr(0, name.size() - 2) : name;
    map.posts[key] = name;
  }
  for (const char* f : {"comment_id", "parent_post_id", "author_id", "created_at"}) map.comments[f] = f;
  for (const char* f : {"follower_id", "followee_id"}) map.edges[f] = f;
  return map;
}

FieldMap FieldMap::parse(std::string_view text) {
  const auto config = KeyValueConfig::parse(text, "<field map>");
  FieldMap map;
  map.platform = config.get_string("platform", "generic");
  for (const auto& [key, value] : config.entries()) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) continue;
    const std::string section = key.substr(0, dot);
    const std::string field = key.substr(dot + 1);
    if (section == "posts") {
      map.posts[field] = value;
    } else if (section == "comments") {
      map.comments[field] = value;
    } else if (section == "edges") {
      map.edges[field] = value;
    } else {
      throw UsageError("field map: unknown section '" + section + "'");
    }
  }
  return map;
}

FieldMap FieldMap::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const std::map<std::string, std::string>& FieldMap::for_kind(RecordKind kind) const {
  switch (kind) {
    case RecordKind::posts: return posts;
    case RecordKind::comments: return comments;
    case RecordKind::edges: return edges;
  }
  return posts;
}

std::string IngestFilter::describe() const {
  std::string out = "hashtags=";
  bool first = true;
  for (const auto& tag : hashtags) {
    if (!first) out += ",";
    out += tag;
    first = false;
  }
  out += ";window=" + (window ? format_window(*window) : std::string("none"));
  out += ";links_only=" + std::string(links_only ? "true" : "false");
  out += ";substring=" + std::string(substring_hashtags ? "true" : "false");
  return out;
}

std::uint64_t IngestReport::dropped_total() const {
  std::uint64_t total = 0;
  for (const auto& [reason, count] : dropped) total += count;
  return total;
}

bool IngestReport::balanced() const { return accepted + dropped_total() + malformed + duplicates == lines_read; }

void IngestReport::merge(const IngestReport& other) {
  lines_read += other.lines_read;
  accepted += other.accepted;
  malformed += other.malformed;
  duplicates += other.duplicates;
  url_failures += other.url_failures;
  for (const auto& [reason, count] : other.dropped) dropped[reason] += count;
  for (const auto& [reason, count] : other.malformed_reasons) malformed_reasons[reason] += count;
}

nlohmann::json IngestReport::to_json() const {
  return json{{"lines_read", lines_read}, {"accepted", accepted},
              {"malformed", malformed},   {"duplicates", duplicates},
              {"dropped", dropped},       {"malformed_reasons", malformed_reasons},
              {"url_failures", url_failures}};
}

IngestReport IngestReport::from_json(const nlohmann::json& j) {
  IngestReport report;
  report.lines_read = j.at("lines_read").get<std::uint64_t>();
  report.accepted = j.at("accepted").get<std::uint64_t>();
  report.malformed = j.at("malformed").get<std::uint64_t>();
  report.duplicates = j.at("duplicates").get<std::uint64_t>();
  report.dropped = j.at("dropped").get<std::map<std::string, std::uint64_t>>();
  report.malformed_reasons = j.at("malformed_reasons").get<std::map<std::string, std::uint64_t>>();
  report.url_failures = j.value("url_failures", std::uint64_t{0});
  return report;
}

Corpus::Corpus(Window window, std::string platform_tag) : window_(window), platform_tag_(std::move(platform_tag)) {
  if (!(window_.start < window_.end)) throw UsageError("corpus window start must precede its end");
}

bool Corpus::add_post(Post post) {
  if (post_index_.count(post.post_id) != 0) return false;
  post_index_.emplace(post.post_id, posts_.size());
  posts_.push_back(std::move(post));
  return true;
}

bool Corpus::add_comment(Comment comment) {
  if (!comment_ids_.insert(comment.comment_id).second) return false;
  comments_.push_back(std::move(comment));
  return true;
}

bool Corpus::add_edge(FollowEdge edge) {
  if (edge.follower_id == edge.followee_id) return false;
  if (!edge_keys_.emplace(edge.follower_id, edge.followee_id).second) return false;
  edges_.push_back(std::move(edge));
  return true;
}

const Post* Corpus::find_post(std::string_view post_id) const {
  auto it = post_index_.find(std::string(post_id));
  return it == post_index_.end() ? nullptr : &posts_[it->second];
}

CommentResolution Corpus::resolve_comments() const {
  CommentResolution resolution;
  for (const auto& comment : comments_) {
    const Post* parent = find_post(comment.parent_post_id);
    if (parent == nullptr) {
      ++resolution.orphaned;
    } else if (comment.created_at < parent->created_at) {
      ++resolution.before_parent;
    } else {
      resolution.attached.push_back(&comment);
    }
  }
  return resolution;
}

IngestResult ingest(std::istream& in, RecordKind kind, const FieldMap& map, const IngestFilter& filter,
                    const PublicSuffixList& psl) {
  const auto& fields = map.for_kind(kind);
  validate_map(fields, kind);
  const CompiledMap compiled(fields);
  IngestResult result;
  auto& report = result.report;
  std::unordered_set<std::string> seen;
  std::set<std::pair<std::string, std::string>> seen_edges;

  std::string line;
  while (std::getline(in, line)) {
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    ++report.lines_read;
    json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
    try {
      if (record.is_discarded()) throw Malformed{"invalid_json"};
      if (!record.is_object()) throw Malformed{"not_object"};
      switch (kind) {
        case RecordKind::posts: {
          Post post = map_post(compiled, record);
          if (!hashtag_match(post, filter)) {
            ++report.dropped["hashtag"];
            continue;
          }
          if (filter.window && !filter.window->contains(post.created_at)) {
            ++report.dropped["window"];
            continue;
          }
          bool has_domain = false;
          for (const auto& url : post.urls) {
            if (extract_domain(url, psl)) {
              has_domain = true;
            } else {
              ++report.url_failures;
            }
          }
          if (filter.links_only && !has_domain) {
            ++report.dropped["no_link"];
            continue;
          }
          if (!seen.insert(post.post_id).second) {
            ++report.duplicates;
            continue;
          }
          result.delta.posts.push_back(std::move(post));
          break;
        }
        case RecordKind::comments: {
          Comment comment = map_comment(compiled, record);
          if (filter.window && !filter.window->contains(comment.created_at)) {
            ++report.dropped["window"];
            continue;
          }
          if (!seen.insert(comment.comment_id).second) {
            ++report.duplicates;
            continue;
          }
          result.delta.comments.push_back(std::move(comment));
          break;
        }
        case RecordKind::edges: {
          FollowEdge edge = map_edge(compiled, record);
          if (edge.follower_id == edge.followee_id) {
            ++report.dropped["self_loop"];
            continue;
          }
          if (!seen_edges.emplace(edge.follower_id, edge.followee_id).second) {
            ++report.duplicates;
            continue;
          }
          result.delta.edges.push_back(std::move(edge));
          break;
        }
      }
      ++report.accepted;
    } catch (const Malformed& bad) {
      ++report.malformed;
      ++report.malformed_reasons[bad.reason];
    }
  }
  if (in.bad()) throw IoError("read error while ingesting " + std::string(to_string(kind)));
  return result;
}

void merge(Corpus& corpus, CorpusDelta&& delta, IngestReport& report) {
  std::uint64_t duplicates = 0;
  for (auto& post : delta.posts) duplicates += corpus.add_post(std::move(post)) ? 0 : 1;
  for (auto& comment : delta.comments) duplicates += corpus.add_comment(std::move(comment)) ? 0 : 1;
  for (auto& edge : delta.edges) duplicates += corpus.add_edge(std::move(edge)) ? 0 : 1;
  report.accepted -= duplicates;
  report.duplicates += duplicates;
}

IngestReport ingest_files(Corpus& corpus, std::span<const std::filesystem::path> paths, RecordKind kind,
                          const FieldMap& map, const IngestFilter& filter, const PublicSuffixList& psl) {
  std::vector<std::future<IngestResult>> shards;
  shards.reserve(paths.size());
  for (const auto& path : paths) {
    std::ifstream probe(path);
    if (!probe) throw IoError("cannot read " + path.string());
    shards.push_back(std::async(std::launch::async, [&, path] {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw IoError("cannot read " + path.string());
      return ingest(in, kind, map, filter, psl);
    }));
  }
  IngestReport total;
  for (auto& shard : shards) {
    IngestResult result = shard.get();
    merge(corpus, std::move(result.delta), result.report);
    total.merge(result.report);
  }
  return total;
}

LinksOnlyResult links_only(const Corpus& corpus, const PublicSuffixList& psl) {
  LinksOnlyResult result;
  result.corpus = Corpus(corpus.window(), corpus.platform_tag());
  std::unordered_set<std::string> removed;
  for (const auto& post : corpus.posts()) {
    ++result.posts_in;
    const bool linked =
        std::any_of(post.urls.begin(), post.urls.end(), [&](const auto& url) { return extract_domain(url, psl); });
    if (linked) {
      result.corpus.add_post(post);
      ++result.posts_retained;
    } else {
      removed.insert(post.post_id);
    }
  }
  for (const auto& comment : corpus.comments()) {
    ++result.comments_in;
    if (removed.count(comment.parent_post_id) == 0) {
      result.corpus.add_comment(comment);
      ++result.comments_retained;
    }
  }
  for (const auto& edge : corpus.edges()) result.corpus.add_edge(edge);
  if (result.posts_retained == 0) {
    result.warning = "no post carries an extractable link; links-only corpus is empty";
  }
  return result;
}

const BreakdownColumn* BreakdownTable::column(std::string_view name) const {
  for (const auto& [key, value] : columns) {
    if (key == name) return &value;
  }
  return nullptr;
}

BreakdownTable corpus_stats(const Corpus& corpus, const PostLabels* labels) {
  struct Accumulator {
    BreakdownColumn column;
    std::unordered_set<std::string> users;

    void add(const Post& post) {
      ++column.posts;
      users.insert(post.author_id);
      column.likes += post.likes;
      column.reshares += post.reshares;
      if (post.replies) column.replies = column.replies.value_or(0) + *post.replies;
    }
  };

  std::vector<std::string> names = {"Overall"};
  if (labels != nullptr) names.insert(names.end(), {"Categorized", "Questionable", "Reliable"});
  std::vector<Accumulator> acc(names.size());

  auto columns_of = [&](const std::string& post_id) {
    std::vector<std::size_t> idx = {0};
    if (labels == nullptr) return idx;
    auto it = labels->find(post_id);
    if (it == labels->end() || it->second == Label::Unknown) return idx;
    idx.push_back(1);
    idx.push_back(it->second == Label::Questionable ? 2 : 3);
    return idx;
  };

  for (const auto& post : corpus.posts()) {
    for (auto i : columns_of(post.post_id)) acc[i].add(post);
  }
  for (const Comment* comment : corpus.resolve_comments().attached) {
    for (auto i : columns_of(comment->parent_post_id)) ++acc[i].column.comments;
  }

  BreakdownTable table;
  for (std::size_t i = 0; i < names.size(); ++i) {
    acc[i].column.users = acc[i].users.size();
    table.columns.emplace_back(names[i], acc[i].column);
  }
  return table;
}

nlohmann::json post_to_json(const Post& post) {
  json j;
  j["post_id"] = post.post_id;
  j["author_id"] = post.author_id;
  j["created_at"] = format_timestamp(post.created_at);
  j["text"] = post.text;
  j["hashtags"] = post.hashtags;
  j["urls"] = post.urls;
  j["likes"] = post.likes;
  j["reshares"] = post.reshares;
  j["replies"] = post.replies ? json(*post.replies) : json(nullptr);
  return j;
}

nlohmann::json comment_to_json(const Comment& comment) {
  return json{{"comment_id", comment.comment_id},
              {"parent_post_id", comment.parent_post_id},
              {"author_id", comment.author_id},
              {"created_at", format_timestamp(comment.created_at)}};
}

nlohmann::json edge_to_json(const FollowEdge& edge) {
  return json{{"follower_id", edge.follower_id}, {"followee_id", edge.followee_id}};
}

std::filesystem::path manifest_path(const std::filesystem::path& dir) { return dir / "manifest.json"; }

bool corpus_exists(const std::filesystem::path& dir) { return std::filesystem::exists(manifest_path(dir)); }

void save_corpus(const Corpus& corpus, const CorpusManifest& manifest, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create corpus directory " + dir.string() + ": " + ec.message());

  auto write_lines = [&](const std::string& name, auto records, auto to_json) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    for (const auto& record : records) out << to_json(record).dump() << '\n';
  };
  write_lines("posts.ndjson", corpus.posts(), post_to_json);
  write_lines("comments.ndjson", corpus.comments(), comment_to_json);
  write_lines("edges.ndjson", corpus.edges(), edge_to_json);

  json reports = json::object();
  for (const auto& [kind, report] : manifest.ingest_reports) reports[kind] = report.to_json();
  const auto resolution = corpus.resolve_comments();
  json j{{"schema_version", kCorpusSchemaVersion},
         {"platform", corpus.platform_tag()},
         {"window", {{"start", format_timestamp(corpus.window().start)}, {"end", format_timestamp(corpus.window().end)}}},
         {"counts",
          {{"posts", corpus.posts().size()},
           {"comments", corpus.comments().size()},
           {"comments_quarantined", resolution.quarantined()},
           {"edges", corpus.edges().size()}}},
         {"ingest", reports},
         {"config_hashes", manifest.config_hashes}};
  std::ofstream out(manifest_path(dir), std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + manifest_path(dir).string());
  out << j.dump(2) << '\n';
}

Corpus load_corpus(const std::filesystem::path& dir, CorpusManifest* manifest) {
  const json j = json::parse(read_file(manifest_path(dir)), nullptr, false);
  if (j.is_discarded()) throw IoError("corrupt corpus manifest in " + dir.string());
  if (j.value("schema_version", 0) != kCorpusSchemaVersion) {
    throw UsageError("unsupported corpus schema version in " + dir.string());
  }
  auto start = parse_timestamp(j.at("window").at("start").get<std::string>());
  auto end = parse_timestamp(j.at("window").at("end").get<std::string>());
  if (!start || !end) throw IoError("corrupt window in " + manifest_path(dir).string());
  Corpus corpus(Window{*start, *end}, j.value("platform", std::string("generic")));

  if (manifest != nullptr) {
    manifest->ingest_reports.clear();
    for (const auto& [kind, report] : j.at("ingest").items()) {
      manifest->ingest_reports[kind] = IngestReport::from_json(report);
    }
    manifest->config_hashes = j.value("config_hashes", std::vector<std::string>{});
  }

  const FieldMap canonical = FieldMap::canonical();
  const IngestFilter none;
  for (auto kind : {RecordKind::posts, RecordKind::comments, RecordKind::edges}) {
    const auto path = dir / (std::string(to_string(kind)) + ".ndjson");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    auto result = ingest(in, kind, canonical, none);
    if (result.report.malformed != 0) {
      throw IoError(path.string() + ": " + std::to_string(result.report.malformed) + " corrupt records");
    }
    merge(corpus, std::move(result.delta), result.report);
  }
  return corpus;
}

}  // namespace misinfo::corpus
