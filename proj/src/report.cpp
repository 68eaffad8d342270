#include "misinfo/report.hpp"

#include <fstream>
#include <future>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "misinfo/error.hpp"
#include "misinfo/hash.hpp"

namespace misinfo::report {
namespace {

using nlohmann::json;
using heavytail::EngagementKind;
using heavytail::Unit;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

json optional_number(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); }

// NaN and infinities have no JSON spelling.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fit_row(const heavytail::EngagementSample& sample) {
  json row{{"label", sample.label},
           {"n_values", sample.values.size()},
           {"zeros_excluded", sample.zeros_excluded},
           {"absent", sample.absent}};
  return row;
}

void add_fit(json& row, const heavytail::PowerLawFit& fit) {
  row["alpha_hat"] = number_or_null(fit.alpha_hat);
  row["x_min"] = fit.x_min;
  row["se_alpha"] = number_or_null(fit.se_alpha);
  row["se_continuous"] = number_or_null(fit.se_continuous());
  row["n_tail"] = fit.n_tail;
  row["loglik"] = number_or_null(fit.loglik);
  row["ks_distance"] = fit.ks_distance ? json(*fit.ks_distance) : json(nullptr);
  row["at_bound"] = fit.at_bound;
  row["warning"] = fit.warning.empty() ? json(nullptr) : json(fit.warning);
}

void null_fit(json& row, const std::string& error) {
  for (const char* key : {"alpha_hat", "x_min", "se_alpha", "se_continuous", "n_tail", "loglik", "ks_distance"}) {
    row[key] = nullptr;
  }
  row["at_bound"] = false;
  row["warning"] = error;
}

json ccdf_json(std::span<const std::uint64_t> values) {
  json points = json::array();
  for (const auto& p : heavytail::ccdf(values)) points.push_back(json::array({p.value, p.p}));
  return points;
}

std::string csv_field(const json& value) {
  if (value.is_null()) return "";
  if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    return quoted + "\"";
  }
  return value.dump();
}

std::string csv_row(std::initializer_list<json> fields) {
  std::string line;
  bool first = true;
  for (const auto& f : fields) {
    if (!first) line += ',';
    line += csv_field(f);
    first = false;
  }
  return line + '\n';
}

std::optional<double> parse_smoothing(const KeyValueConfig& config) {
  auto value = config.get("echo_chamber.smoothing");
  if (!value || value->empty() || *value == "off" || *value == "false" || *value == "none") return std::nullopt;
  if (*value == "on" || *value == "true") return leaning::kDefaultBandwidth;
  const double bandwidth = config.get_double("echo_chamber.smoothing", 0.0);
  if (bandwidth == 0.0) return std::nullopt;
  return bandwidth;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> all = {
      "corpus", "registry", "edges", "out", "seed",
      "classify.enabled", "classify.ng_reliable_strict",
      "engagement.enabled", "engagement.kinds", "engagement.units", "engagement.x_min",
      "engagement.max_candidates",
      "survival.enabled", "survival.censoring",
      "echo_chamber.enabled", "echo_chamber.min_posts", "echo_chamber.bins", "echo_chamber.smoothing",
      "time_series.enabled"};
  return all;
}

RunConfig RunConfig::from_config(const KeyValueConfig& config, const std::filesystem::path& base_dir) {
  const std::set<std::string> known(keys().begin(), keys().end());
  for (const auto& [key, value] : config.entries()) {
    if (known.count(key) == 0) throw UsageError(config.origin() + ": unknown run config key '" + key + "'");
  }
  RunConfig c;
  c.classify = config.get_bool("classify.enabled", c.classify);
  c.engagement = config.get_bool("engagement.enabled", c.engagement);
  c.survival = config.get_bool("survival.enabled", c.survival);
  c.echo_chamber = config.get_bool("echo_chamber.enabled", c.echo_chamber);
  c.time_series = config.get_bool("time_series.enabled", c.time_series);

  c.corpus = resolve(base_dir, config.require_string("corpus"));
  if (c.classify) c.registry = resolve(base_dir, config.require_string("registry"));
  if (auto edges = config.get("edges"); edges && !edges->empty()) c.edges = resolve(base_dir, *edges);
  c.out = resolve(base_dir, config.get_string("out", "report"));
  const auto seed = config.get_int("seed", 0);
  if (seed < 0) throw UsageError(config.origin() + ": 'seed' must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);

  c.classifier.ng_reliable_strict = config.get_bool("classify.ng_reliable_strict", true);

  if (config.contains("engagement.kinds")) {
    c.kinds.clear();
    for (const auto& k : config.get_list("engagement.kinds")) c.kinds.push_back(heavytail::parse_engagement_kind(k));
  }
  if (config.contains("engagement.units")) {
    c.units.clear();
    for (const auto& u : config.get_list("engagement.units")) c.units.push_back(heavytail::parse_unit(u));
  }
  if (auto x_min = config.get("engagement.x_min"); x_min && *x_min == "auto") {
    c.fit.x_min = std::nullopt;
  } else {
    const auto value = config.get_int("engagement.x_min", 1);
    if (value < 1) throw UsageError(config.origin() + ": 'engagement.x_min' must be a positive integer or \"auto\"");
    c.fit.x_min = static_cast<std::uint64_t>(value);
  }
  const auto candidates = config.get_int("engagement.max_candidates", static_cast<std::int64_t>(c.fit.max_xmin_candidates));
  if (candidates < 1) throw UsageError(config.origin() + ": 'engagement.max_candidates' must be positive");
  c.fit.max_xmin_candidates = static_cast<std::size_t>(candidates);

  c.lifetimes.censoring = config.get_bool("survival.censoring", true);

  const auto min_posts = config.get_int("echo_chamber.min_posts", 3);
  const auto bins = config.get_int("echo_chamber.bins", 50);
  if (min_posts < 1) throw UsageError(config.origin() + ": 'echo_chamber.min_posts' must be at least 1");
  if (bins < 2) throw UsageError(config.origin() + ": 'echo_chamber.bins' must be at least 2");
  c.joint.min_posts = static_cast<std::uint64_t>(min_posts);
  c.joint.bins = static_cast<std::size_t>(bins);
  c.joint.smoothing = parse_smoothing(config);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path, bool env_overrides,
                          std::vector<std::string>* overridden) {
  auto config = KeyValueConfig::load(path);
  if (env_overrides) {
    auto applied = config.apply_env_overrides(kEnvPrefix, keys());
    if (overridden != nullptr) *overridden = std::move(applied);
  }
  return from_config(config, path.parent_path());
}

void RunConfig::validate() const {
  namespace fs = std::filesystem;
  if (!corpus::corpus_exists(corpus)) {
    throw UsageError("config field 'corpus': no corpus manifest under " + corpus.string());
  }
  if (classify && !fs::exists(registry)) {
    throw UsageError("config field 'registry': file not found: " + registry.string());
  }
  if (edges && !fs::exists(*edges)) throw UsageError("config field 'edges': file not found: " + edges->string());
  for (const auto& [enabled, name] : {std::pair{engagement, "engagement"}, std::pair{survival, "survival"},
                                      std::pair{echo_chamber, "echo_chamber"}}) {
    if (enabled && !classify) {
      throw UsageError(std::string("config field '") + name + ".enabled': stage needs classify.enabled = true");
    }
  }
}

nlohmann::json RunConfig::parameters() const {
  json kinds_json = json::array();
  for (auto k : kinds) kinds_json.push_back(heavytail::to_string(k));
  json units_json = json::array();
  for (auto u : units) units_json.push_back(heavytail::to_string(u));
  return json{{"seed", seed},
              {"classify", {{"enabled", classify}, {"ng_reliable_strict", classifier.ng_reliable_strict}}},
              {"engagement",
               {{"enabled", engagement},
                {"kinds", kinds_json},
                {"units", units_json},
                {"x_min", fit.x_min ? json(*fit.x_min) : json("auto")},
                {"max_candidates", fit.max_xmin_candidates},
                {"alpha_bounds", {fit.alpha_lo, fit.alpha_hi}},
                {"score_tolerance", fit.score_tolerance},
                {"fisher_step", fit.fisher_step}}},
              {"survival", {{"enabled", survival}, {"censoring", lifetimes.censoring}}},
              {"echo_chamber",
               {{"enabled", echo_chamber},
                {"min_posts", joint.min_posts},
                {"bins", joint.bins},
                {"smoothing", joint.smoothing ? json(*joint.smoothing) : json(nullptr)},
                {"external_edges", edges.has_value()}}},
              {"time_series", {{"enabled", time_series}}}};
}

std::string RunConfig::hash() const { return sha256_hex(parameters().dump()); }

void Logger::log(std::string_view level, std::string_view stage, std::string_view message, const json& fields) {
  if (quiet_ && level == "info") return;
  std::lock_guard lock(mutex_);
  if (json_) {
    json line = fields.is_object() ? fields : json::object();
    line["level"] = level;
    line["stage"] = stage;
    line["message"] = message;
    out_ << line.dump() << '\n';
  } else {
    out_ << '[' << level << "] " << stage << ": " << message;
    if (fields.is_object()) {
      for (const auto& [k, v] : fields.items()) out_ << ' ' << k << '=' << (v.is_string() ? v.get<std::string>() : v.dump());
    }
    out_ << '\n';
  }
  out_.flush();
}

nlohmann::json with_header(std::string_view artifact, const Provenance& provenance, nlohmann::json body) {
  body["schema_version"] = kArtifactSchemaVersion;
  body["artifact"] = artifact;
  body["config_hash"] = provenance.config_hash;
  body["corpus_manifest_hash"] = provenance.corpus_manifest_hash;
  return body;
}

const DailySeries* TimeSeries::group(std::string_view name) const {
  for (const auto& [key, series] : groups) {
    if (key == name) return &series;
  }
  return nullptr;
}

TimeSeries time_series(const corpus::Corpus& corpus, const PostLabels* labels) {
  const Window& window = corpus.window();
  const auto days = static_cast<std::size_t>(std::max<std::int64_t>(window.num_days(), 0));
  TimeSeries out;
  for (std::size_t d = 0; d < days; ++d) {
    out.days.push_back(format_date(window.start + std::chrono::seconds(static_cast<std::int64_t>(d) * kSecondsPerDay)));
  }
  std::vector<std::string> names = {"Overall"};
  if (labels != nullptr) names.insert(names.end(), {"Questionable", "Reliable"});

  for (const auto& name : names) {
    DailySeries s;
    s.posts.assign(days, 0);
    s.users.assign(days, 0);
    std::unordered_map<std::string, std::int64_t> first_day;
    for (const auto& post : corpus.posts()) {
      if (name != "Overall") {
        auto it = labels->find(post.post_id);
        if (it == labels->end() || to_string(it->second) != name) continue;
      }
      if (!window.contains(post.created_at)) {
        if (name == "Overall") ++out.outside_window;
        continue;
      }
      const auto day = window.day_index(post.created_at);
      ++s.posts[static_cast<std::size_t>(day)];
      auto [it, inserted] = first_day.try_emplace(post.author_id, day);
      if (!inserted) it->second = std::min(it->second, day);
    }
    for (const auto& [user, day] : first_day) ++s.users[static_cast<std::size_t>(day)];
    std::uint64_t running_posts = 0, running_users = 0;
    for (std::size_t d = 0; d < days; ++d) {
      running_posts += s.posts[d];
      running_users += s.users[d];
      s.cumulative_posts.push_back(running_posts);
      s.cumulative_users.push_back(running_users);
    }
    out.groups.emplace_back(name, std::move(s));
  }
  return out;
}

nlohmann::json breakdown_json(const corpus::BreakdownTable& table) {
  json rows = json::array();
  for (const auto& [name, col] : table.columns) {
    rows.push_back({{"column", name},
                    {"posts", col.posts},
                    {"users", col.users},
                    {"likes", col.likes},
                    {"reshares", col.reshares},
                    {"comments", col.comments},
                    {"replies", optional_number(col.replies)}});
  }
  return json{{"columns", rows}};
}

nlohmann::json labels_json(const sources::LabelingResult& labeling, const sources::OutletRegistry& registry) {
  const auto& c = registry.counts();
  json rejections = json::array();
  for (const auto& r : registry.rejections()) rejections.push_back({{"row", r.row}, {"reason", r.reason}});
  const auto& cov = labeling.coverage;
  json labels = json::object();
  for (const auto& [id, label] : labeling.labels) labels[id] = to_string(label);
  return json{{"registry",
               {{"total", c.total},
                {"mbfc", c.mbfc},
                {"ng", c.ng},
                {"questionable", c.questionable},
                {"reliable", c.reliable},
                {"unknown", c.unknown},
                {"duplicates", c.duplicates},
                {"rejected_rows", rejections}}},
              {"coverage",
               {{"posts", cov.posts},
                {"with_domain", cov.with_domain},
                {"registered", cov.registered},
                {"categorized", cov.categorized},
                {"questionable", cov.questionable},
                {"reliable", cov.reliable},
                {"uncategorized", cov.uncategorized},
                {"ties", cov.ties}}},
              {"labels", labels}};
}

nlohmann::json engagement_json(const corpus::Corpus& corpus, const PostLabels& labels,
                               std::span<const EngagementKind> kinds, std::span<const Unit> units,
                               const heavytail::FitOptions& options) {
  json tables = json::array();
  for (auto unit : units) {
    for (auto kind : kinds) {
      json table{{"unit", heavytail::to_string(unit)}, {"kind", heavytail::to_string(kind)}};
      json rows = json::array();
      json ccdfs = json::object();
      std::map<Label, heavytail::PowerLawFit> fits;
      const std::pair<const char*, std::optional<Label>> groups[] = {
          {"Questionable", Label::Questionable}, {"Reliable", Label::Reliable}, {"Overall", std::nullopt}};
      for (const auto& [name, group] : groups) {
        const auto sample = heavytail::engagement_sample(corpus, &labels, kind, unit, group);
        json row = fit_row(sample);
        try {
          const auto fit = heavytail::fit_discrete_powerlaw(sample.values, options);
          add_fit(row, fit);
          if (group) fits.emplace(*group, fit);
        } catch (const EstimationError& e) {
          null_fit(row, e.what());
        }
        rows.push_back(row);
        ccdfs[name] = ccdf_json(sample.values);
      }
      table["rows"] = rows;
      if (fits.size() == 2) {
        const auto wald = heavytail::wald_compare(fits.at(Label::Questionable), fits.at(Label::Reliable));
        table["wald"] = {{"statistic", number_or_null(wald.statistic)}, {"p_value", number_or_null(wald.p_value)}};
      } else {
        table["wald"] = nullptr;
      }
      table["ccdf"] = ccdfs;
      tables.push_back(table);
    }
  }
  return json{{"x_min_mode", options.x_min ? "fixed" : "auto"}, {"tables", tables}};
}

nlohmann::json curve_json(const survival::SurvivalCurve& curve) {
  return json{{"n_subjects", curve.n_subjects},
              {"n_censored", curve.n_censored},
              {"times", curve.times},
              {"at_risk", curve.at_risk},
              {"events", curve.events},
              {"survival", curve.survival},
              {"censor_times", curve.censor_times}};
}

nlohmann::json survival_json(const corpus::Corpus& corpus, const PostLabels& labels, Unit unit,
                             const survival::LifetimeOptions& options) {
  const auto records = unit == Unit::post ? survival::post_lifetimes(corpus, labels, options)
                                          : survival::user_lifetimes(corpus, labels, options);
  const auto questionable = survival::select_group(records, Label::Questionable);
  const auto reliable = survival::select_group(records, Label::Reliable);
  json groups = json::object();
  groups["Questionable"] = questionable.empty() ? json(nullptr) : curve_json(survival::kaplan_meier(questionable));
  groups["Reliable"] = reliable.empty() ? json(nullptr) : curve_json(survival::kaplan_meier(reliable));
  json peto = nullptr;
  if (!questionable.empty() && !reliable.empty()) {
    const auto r = survival::peto_peto(questionable, reliable);
    peto = {{"statistic", r.statistic},
            {"p_value", r.p_value},
            {"n_questionable", r.n_a},
            {"n_reliable", r.n_b},
            {"events_questionable", r.events_a},
            {"events_reliable", r.events_b},
            {"warning", r.warning.empty() ? json(nullptr) : json(r.warning)}};
  }
  return json{{"unit", heavytail::to_string(unit)},
              {"censoring", options.censoring},
              {"records", records.size()},
              {"groups", groups},
              {"peto_peto", peto}};
}

nlohmann::json joint_json(const corpus::Corpus& corpus, const PostLabels& labels,
                          std::span<const corpus::FollowEdge> edges, const leaning::JointConfig& config) {
  const auto leanings = leaning::user_leaning(corpus, labels);
  const leaning::FollowGraph graph(edges);
  const auto neighborhood = leaning::neighborhood_leaning(graph, leanings);
  const auto density = leaning::joint_density(leanings, neighborhood, config);
  json grid = json::array();
  for (std::size_t i = 0; i < density.bins; ++i) {
    grid.push_back(std::vector<double>(density.grid.begin() + static_cast<std::ptrdiff_t>(i * density.bins),
                                       density.grid.begin() + static_cast<std::ptrdiff_t>((i + 1) * density.bins)));
  }
  json correlation = nullptr;
  json warning = nullptr;
  try {
    const auto r = leaning::leaning_correlation(leanings, neighborhood, config.min_posts);
    correlation = {{"r", r.r}, {"n", r.n}};
  } catch (const EstimationError& e) {
    warning = e.what();
  }
  const auto [mode_q, mode_qn] = density.mode();
  return json{{"config",
               {{"min_posts", config.min_posts},
                {"bins", config.bins},
                {"smoothing", config.smoothing ? json(*config.smoothing) : json(nullptr)}}},
              {"axes", {{"rows", "q"}, {"columns", "q_neighborhood"}}},
              {"bins", density.bins},
              {"n_users", density.n_users},
              {"users_with_leaning", leanings.size()},
              {"users_with_neighborhood", neighborhood.size()},
              {"edges", graph.edge_count()},
              {"grid", grid},
              {"marginal_q", density.marginal_q},
              {"marginal_qn", density.marginal_qn},
              {"mode", {mode_q, mode_qn}},
              {"correlation", correlation},
              {"warning", warning}};
}

nlohmann::json timeseries_json(const TimeSeries& series) {
  json groups = json::object();
  for (const auto& [name, s] : series.groups) {
    groups[name] = {{"posts", s.posts},
                    {"users", s.users},
                    {"cumulative_posts", s.cumulative_posts},
                    {"cumulative_users", s.cumulative_users}};
  }
  return json{{"days", series.days}, {"groups", groups}, {"outside_window", series.outside_window}};
}

std::string breakdown_csv(const nlohmann::json& artifact) {
  std::string out = "column,posts,users,likes,reshares,comments,replies\n";
  for (const auto& row : artifact.at("columns")) {
    out += csv_row({row["column"], row["posts"], row["users"], row["likes"], row["reshares"], row["comments"],
                    row["replies"]});
  }
  return out;
}

std::string engagement_csv(const nlohmann::json& artifact) {
  std::string out =
      "unit,kind,label,alpha_hat,x_min,se_alpha,n_tail,loglik,zeros_excluded,absent,statistic,p_value\n";
  for (const auto& table : artifact.at("tables")) {
    for (const auto& row : table.at("rows")) {
      out += csv_row({table["unit"], table["kind"], row["label"], row["alpha_hat"], row["x_min"], row["se_alpha"],
                      row["n_tail"], row["loglik"], row["zeros_excluded"], row["absent"], nullptr, nullptr});
    }
    const auto& wald = table.at("wald");
    out += csv_row({table["unit"], table["kind"], "Wald", nullptr, nullptr, nullptr, nullptr, nullptr, nullptr,
                    nullptr, wald.is_null() ? json(nullptr) : wald["statistic"],
                    wald.is_null() ? json(nullptr) : wald["p_value"]});
  }
  return out;
}

std::string timeseries_csv(const nlohmann::json& artifact) {
  std::string out = "date,group,posts,users,cumulative_posts,cumulative_users\n";
  const auto& days = artifact.at("days");
  for (const auto& [name, s] : artifact.at("groups").items()) {
    for (std::size_t d = 0; d < days.size(); ++d) {
      out += csv_row({days[d], name, s["posts"][d], s["users"][d], s["cumulative_posts"][d], s["cumulative_users"][d]});
    }
  }
  return out;
}

PostLabels load_labels(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw UsageError(path.string() + ": not a JSON object");
  const json& map = j.contains("labels") ? j.at("labels") : j;
  if (!map.is_object()) throw UsageError(path.string() + ": 'labels' is not an object");
  PostLabels labels;
  for (const auto& [id, value] : map.items()) {
    auto label = value.is_string() ? parse_label(value.get<std::string>()) : std::nullopt;
    if (!label) throw UsageError(path.string() + ": post " + id + " has an invalid label");
    labels.emplace(id, *label);
  }
  return labels;
}

std::vector<corpus::FollowEdge> load_edges(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  auto result = corpus::ingest(in, corpus::RecordKind::edges, corpus::FieldMap::canonical(), {});
  return std::move(result.delta.edges);
}

std::string corpus_manifest_hash(const std::filesystem::path& corpus_dir) {
  return sha256_file(corpus::manifest_path(corpus_dir));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  write_text(path, value.dump(2) + "\n");
}

bool ReportBundle::ok() const {
  return std::none_of(stages.begin(), stages.end(), [](const auto& s) { return s.state == "failed"; });
}

const StageStatus* ReportBundle::stage(std::string_view name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ReportBundle run_pipeline(const RunConfig& config, Logger& logger) {
  config.validate();
  ReportBundle bundle;
  bundle.provenance = {config.hash(), corpus_manifest_hash(config.corpus)};
  const Provenance& prov = bundle.provenance;

  logger.info("load", "reading corpus", {{"path", config.corpus.string()}});
  const corpus::Corpus corpus = corpus::load_corpus(config.corpus);
  logger.info("load", "corpus ready",
              {{"posts", corpus.posts().size()}, {"comments", corpus.comments().size()}, {"edges", corpus.edges().size()}});

  struct StageResult {
    StageStatus status;
    std::map<std::string, std::string> files;
  };
  auto emit = [&](StageResult& r, const std::string& name, const std::string& text) {
    r.files[name] = text;
    r.status.artifacts.push_back(name);
  };
  auto run_stage = [&](const std::string& name, auto&& body) {
    StageResult result;
    result.status.name = name;
    try {
      body(result);
      result.status.state = "ok";
      logger.info(name, "done", {{"artifacts", result.status.artifacts}});
    } catch (const std::exception& e) {
      result.status.state = "failed";
      result.status.message = e.what();
      logger.error(name, e.what());
    }
    return result;
  };
  auto absorb = [&](StageResult&& r) {
    for (auto& [file, text] : r.files) bundle.files[file] = std::move(text);
    bundle.stages.push_back(std::move(r.status));
  };
  auto not_run = [](const std::string& name, const std::string& state, const std::string& message) {
    StageResult r;
    r.status = {name, state, message, {}};
    return r;
  };

  std::optional<PostLabels> labels;
  if (config.classify) {
    absorb(run_stage("classify", [&](StageResult& r) {
      const auto registry = sources::OutletRegistry::load(config.registry, config.classifier);
      if (!registry.rejections().empty()) {
        logger.warn("classify", "registry rows rejected", {{"count", registry.rejections().size()}});
      }
      auto labeling = sources::label_posts(corpus, registry);
      emit(r, "labels.json", with_header("labels", prov, labels_json(labeling, registry)).dump(2) + "\n");
      labels = std::move(labeling.labels);
    }));
  } else {
    absorb(not_run("classify", "disabled", ""));
  }

  absorb(run_stage("breakdown", [&](StageResult& r) {
    const auto body = breakdown_json(corpus::corpus_stats(corpus, labels ? &*labels : nullptr));
    emit(r, "breakdown.json", with_header("breakdown", prov, body).dump(2) + "\n");
    emit(r, "breakdown.csv", breakdown_csv(body));
  }));

  // Stages after classification are independent of each other.
  const std::string classify_missing = "skipped: classify did not produce labels";
  auto labelled_stage = [&](bool enabled, const std::string& name, auto body) {
    if (!enabled) return std::async(std::launch::deferred, [=] { return not_run(name, "disabled", ""); });
    if (!labels) {
      return std::async(std::launch::deferred, [=] { return not_run(name, "skipped", classify_missing); });
    }
    return std::async(std::launch::async, [&, name, body] { return run_stage(name, body); });
  };

  auto engagement = labelled_stage(config.engagement, "engagement", [&](StageResult& r) {
    const auto body = engagement_json(corpus, *labels, config.kinds, config.units, config.fit);
    emit(r, "engagement.json", with_header("engagement", prov, body).dump(2) + "\n");
    emit(r, "engagement.csv", engagement_csv(body));
  });
  auto survival = labelled_stage(config.survival, "survival", [&](StageResult& r) {
    emit(r, "km_post.json",
         with_header("km", prov, survival_json(corpus, *labels, Unit::post, config.lifetimes)).dump(2) + "\n");
    emit(r, "km_user.json",
         with_header("km", prov, survival_json(corpus, *labels, Unit::user, config.lifetimes)).dump(2) + "\n");
  });
  auto echo = labelled_stage(config.echo_chamber, "echo_chamber", [&](StageResult& r) {
    std::vector<corpus::FollowEdge> external;
    if (config.edges) external = load_edges(*config.edges);
    const auto edges = config.edges ? std::span<const corpus::FollowEdge>(external) : corpus.edges();
    emit(r, "joint.json", with_header("joint", prov, joint_json(corpus, *labels, edges, config.joint)).dump(2) + "\n");
  });
  std::future<StageResult> series;
  if (config.time_series) {
    series = std::async(std::launch::async, [&] {
      return run_stage("time_series", [&](StageResult& r) {
        const auto body = timeseries_json(time_series(corpus, labels ? &*labels : nullptr));
        emit(r, "timeseries.json", with_header("timeseries", prov, body).dump(2) + "\n");
        emit(r, "timeseries.csv", timeseries_csv(body));
      });
    });
  } else {
    series = std::async(std::launch::deferred, [&] { return not_run("time_series", "disabled", ""); });
  }
  absorb(engagement.get());
  absorb(survival.get());
  absorb(echo.get());
  absorb(series.get());
  return bundle;
}

void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : bundle.files) write_text(dir / name, text);
  json stages = json::array();
  for (const auto& s : bundle.stages) {
    stages.push_back({{"name", s.name}, {"state", s.state}, {"message", s.message}, {"artifacts", s.artifacts}});
  }
  json files = json::array();
  for (const auto& [name, text] : bundle.files) files.push_back({{"name", name}, {"sha256", sha256_hex(text)}});
  write_json(dir / "bundle.json",
             with_header("bundle", bundle.provenance, json{{"ok", bundle.ok()}, {"stages", stages}, {"files", files}}));
}

}  // namespace misinfo::report
