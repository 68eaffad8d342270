#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "misinfo/config.hpp"
#include "misinfo/corpus.hpp"
#include "misinfo/heavytail.hpp"
#include "misinfo/label.hpp"
#include "misinfo/leaning.hpp"
#include "misinfo/sources.hpp"
#include "misinfo/survival.hpp"

namespace misinfo::report {

inline constexpr int kArtifactSchemaVersion = 1;
inline constexpr std::string_view kEnvPrefix = "MISINFO_";

struct RunConfig {
  // Paths are resolved against the config file's directory.
  std::filesystem::path corpus;
  std::filesystem::path registry;  // required when classify is enabled
  std::optional<std::filesystem::path> edges;  // canonical edge file; default: corpus edges
  std::filesystem::path out = "report";
  std::uint64_t seed = 0;

  bool classify = true;
  bool engagement = true;
  bool survival = true;
  bool echo_chamber = true;
  bool time_series = true;

  sources::ClassifierConfig classifier;
  std::vector<heavytail::EngagementKind> kinds = {heavytail::EngagementKind::likes,
                                                  heavytail::EngagementKind::reshares,
                                                  heavytail::EngagementKind::replies};
  std::vector<heavytail::Unit> units = {heavytail::Unit::post, heavytail::Unit::user};
  heavytail::FitOptions fit;
  survival::LifetimeOptions lifetimes;
  leaning::JointConfig joint;

  // Every key the config file and MISINFO_* environment variables may set.
  static const std::vector<std::string>& keys();
  static RunConfig from_config(const KeyValueConfig& config, const std::filesystem::path& base_dir);
  // Reads the file, applies environment overrides, resolves paths.
  static RunConfig load(const std::filesystem::path& path, bool env_overrides = true,
                        std::vector<std::string>* overridden = nullptr);

  // Throws UsageError naming the offending field.
  void validate() const;
  // Analysis parameters only; paths are left out so hashes are portable.
  nlohmann::json parameters() const;
  std::string hash() const;
};

// Progress lines on a stream, human-readable or one JSON object per line.
class Logger {
 public:
  Logger(std::ostream& out, bool json, bool quiet = false) : out_(out), json_(json), quiet_(quiet) {}
  void log(std::string_view level, std::string_view stage, std::string_view message,
           const nlohmann::json& fields = nlohmann::json::object());
  void info(std::string_view stage, std::string_view message, const nlohmann::json& fields = nlohmann::json::object()) {
    log("info", stage, message, fields);
  }
  void warn(std::string_view stage, std::string_view message, const nlohmann::json& fields = nlohmann::json::object()) {
    log("warn", stage, message, fields);
  }
  void error(std::string_view stage, std::string_view message, const nlohmann::json& fields = nlohmann::json::object()) {
    log("error", stage, message, fields);
  }

 private:
  std::ostream& out_;
  bool json_;
  bool quiet_;
  std::mutex mutex_;
};

// Embedded in every artifact.
struct Provenance {
  std::string config_hash;
  std::string corpus_manifest_hash;
};

nlohmann::json with_header(std::string_view artifact, const Provenance& provenance, nlohmann::json body);

// Daily counts in UTC days over the corpus window, with running sums.
struct DailySeries {
  std::vector<std::uint64_t> posts;
  std::vector<std::uint64_t> users;  // users counted on the day of their first post
  std::vector<std::uint64_t> cumulative_posts;
  std::vector<std::uint64_t> cumulative_users;
};

struct TimeSeries {
  std::vector<std::string> days;  // YYYY-MM-DD
  std::vector<std::pair<std::string, DailySeries>> groups;  // Overall, then Questionable/Reliable with labels
  std::uint64_t outside_window = 0;  // posts not inside the corpus window

  const DailySeries* group(std::string_view name) const;
};

TimeSeries time_series(const corpus::Corpus& corpus, const PostLabels* labels = nullptr);

// Artifact bodies. Each is deterministic in its inputs.
nlohmann::json breakdown_json(const corpus::BreakdownTable& table);
nlohmann::json labels_json(const sources::LabelingResult& labeling, const sources::OutletRegistry& registry);
nlohmann::json engagement_json(const corpus::Corpus& corpus, const PostLabels& labels,
                               std::span<const heavytail::EngagementKind> kinds,
                               std::span<const heavytail::Unit> units, const heavytail::FitOptions& options);
nlohmann::json survival_json(const corpus::Corpus& corpus, const PostLabels& labels, heavytail::Unit unit,
                             const survival::LifetimeOptions& options);
nlohmann::json joint_json(const corpus::Corpus& corpus, const PostLabels& labels,
                          std::span<const corpus::FollowEdge> edges, const leaning::JointConfig& config);
nlohmann::json timeseries_json(const TimeSeries& series);
nlohmann::json curve_json(const survival::SurvivalCurve& curve);

// CSV mirrors of the table-shaped artifacts.
std::string breakdown_csv(const nlohmann::json& artifact);
std::string engagement_csv(const nlohmann::json& artifact);
std::string timeseries_csv(const nlohmann::json& artifact);

PostLabels load_labels(const std::filesystem::path& path);
std::vector<corpus::FollowEdge> load_edges(const std::filesystem::path& path);
std::string corpus_manifest_hash(const std::filesystem::path& corpus_dir);

// Writes JSON as pretty-printed text with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& value);
void write_text(const std::filesystem::path& path, const std::string& text);

struct StageStatus {
  std::string name;
  std::string state;  // ok | failed | skipped | disabled
  std::string message;
  std::vector<std::string> artifacts;
};

struct ReportBundle {
  Provenance provenance;
  std::vector<StageStatus> stages;
  std::map<std::string, std::string> files;  // file name -> contents

  bool ok() const;
  const StageStatus* stage(std::string_view name) const;
};

// classify -> (engagement | survival | echo_chamber | time_series), the four
// running concurrently. A failed stage skips its dependents; completed
// artifacts are kept. Only loading the corpus is fatal.
ReportBundle run_pipeline(const RunConfig& config, Logger& logger);

// Writes every file of the bundle plus bundle.json into `dir`.
void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir);

}  // namespace misinfo::report
