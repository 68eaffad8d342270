// Command-line front end: one subcommand per pipeline stage plus `report`,
// which runs them all from a config file.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "misinfo/corpus.hpp"
#include "misinfo/domain.hpp"
#include "misinfo/error.hpp"
#include "misinfo/hash.hpp"
#include "misinfo/report.hpp"
#include "misinfo/sources.hpp"
#include "misinfo/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace misinfo;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3, kEstimation = 4 };

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::set<std::string> split_csv(const std::string& text) {
  std::set<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    while (!item.empty() && item.front() == '#') item.erase(item.begin());
    std::transform(item.begin(), item.end(), item.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!item.empty()) out.insert(item);
  }
  return out;
}

PublicSuffixList suffix_list(const std::string& path) {
  return path.empty() ? PublicSuffixList::bundled() : PublicSuffixList::parse(read_text(path));
}

report::Provenance provenance(const json& parameters, const fs::path& corpus_dir) {
  return {sha256_hex(parameters.dump()), report::corpus_manifest_hash(corpus_dir)};
}

fs::path csv_beside(const fs::path& json_path) {
  fs::path p = json_path;
  return p.replace_extension(".csv");
}

struct IngestArgs {
  std::string kind;
  std::string map;
  std::string hashtags;
  std::string window;
  std::string platform;
  bool links_only = false;
  bool substring = false;
  std::string out = "corpus";
  std::string psl;
  std::vector<std::string> paths;
};

int run_ingest(const IngestArgs& a) {
  const auto kind = corpus::parse_kind(a.kind);
  const auto map = a.map.empty() ? corpus::FieldMap::canonical() : corpus::FieldMap::load(a.map);
  corpus::IngestFilter filter;
  filter.hashtags = split_csv(a.hashtags);
  filter.links_only = a.links_only;
  filter.substring_hashtags = a.substring;
  if (!a.window.empty()) filter.window = parse_window(a.window);
  const auto psl = suffix_list(a.psl);

  corpus::CorpusManifest manifest;
  corpus::Corpus store;
  if (corpus::corpus_exists(a.out)) {
    store = corpus::load_corpus(a.out, &manifest);
    if (filter.window && !(filter.window->start == store.window().start && filter.window->end == store.window().end)) {
      throw UsageError("--window differs from the existing corpus window " + format_window(store.window()));
    }
  } else {
    if (!filter.window) throw UsageError("--window is required when creating a corpus");
    store = corpus::Corpus(*filter.window, a.platform.empty() ? map.platform : a.platform);
  }

  std::vector<fs::path> paths(a.paths.begin(), a.paths.end());
  const auto report = corpus::ingest_files(store, paths, kind, map, filter, psl);
  manifest.ingest_reports[std::string(corpus::to_string(kind))].merge(report);
  const json setup{{"kind", corpus::to_string(kind)}, {"map", map.platform}, {"filter", filter.describe()}};
  manifest.config_hashes.push_back(sha256_hex(setup.dump()));

  if (filter.links_only && kind == corpus::RecordKind::posts && report.accepted == 0) {
    std::cerr << "warning: no post carries an extractable link\n";
  }
  corpus::save_corpus(store, manifest, a.out);
  std::cout << json{{"kind", corpus::to_string(kind)}, {"report", report.to_json()}}.dump(2) << '\n';
  return kOk;
}

struct ClassifyArgs {
  std::string registry;
  std::string corpus;
  std::string out = "labels.json";
  std::string psl;
  bool ng_inclusive = false;
};

int run_classify(const ClassifyArgs& a) {
  sources::ClassifierConfig config;
  config.ng_reliable_strict = !a.ng_inclusive;
  const auto registry = sources::OutletRegistry::load(a.registry, config);
  for (const auto& r : registry.rejections()) std::cerr << "registry row " << r.row << " rejected: " << r.reason << '\n';
  const auto store = corpus::load_corpus(a.corpus);
  const auto labeling = sources::label_posts(store, registry, suffix_list(a.psl));
  const json params{{"stage", "classify"}, {"ng_reliable_strict", config.ng_reliable_strict}};
  report::write_json(a.out, report::with_header("labels", provenance(params, a.corpus),
                                                report::labels_json(labeling, registry)));
  const auto& c = labeling.coverage;
  std::cout << "posts " << c.posts << ", questionable " << c.questionable << ", reliable " << c.reliable
            << ", unknown " << c.uncategorized << '\n';
  return kOk;
}

struct EngagementArgs {
  std::string corpus;
  std::string labels;
  std::vector<std::string> kinds = {"likes"};
  std::vector<std::string> units = {"post"};
  std::string x_min = "1";
  std::string out = "fits.json";
};

int run_engagement(const EngagementArgs& a) {
  heavytail::FitOptions options;
  if (a.x_min == "auto") {
    options.x_min = std::nullopt;
  } else {
    const auto v = std::stoll(a.x_min);
    if (v < 1) throw UsageError("--x-min must be a positive integer or 'auto'");
    options.x_min = static_cast<std::uint64_t>(v);
  }
  std::vector<heavytail::EngagementKind> kinds;
  for (const auto& k : a.kinds) kinds.push_back(heavytail::parse_engagement_kind(k));
  std::vector<heavytail::Unit> units;
  for (const auto& u : a.units) units.push_back(heavytail::parse_unit(u));
  const auto store = corpus::load_corpus(a.corpus);
  const auto labels = report::load_labels(a.labels);
  const auto body = report::engagement_json(store, labels, kinds, units, options);
  const json params{{"stage", "engagement"}, {"kinds", a.kinds}, {"units", a.units}, {"x_min", a.x_min}};
  report::write_json(a.out, report::with_header("engagement", provenance(params, a.corpus), body));
  report::write_text(csv_beside(a.out), report::engagement_csv(body));
  std::cout << report::engagement_csv(body);
  return kOk;
}

struct SurvivalArgs {
  std::string corpus;
  std::string labels;
  std::string unit = "post";
  bool no_censoring = false;
  std::string out = "km.json";
};

int run_survival(const SurvivalArgs& a) {
  survival::LifetimeOptions options;
  options.censoring = !a.no_censoring;
  const auto unit = heavytail::parse_unit(a.unit);
  const auto store = corpus::load_corpus(a.corpus);
  const auto labels = report::load_labels(a.labels);
  const auto body = report::survival_json(store, labels, unit, options);
  const json params{{"stage", "survival"}, {"unit", a.unit}, {"censoring", options.censoring}};
  report::write_json(a.out, report::with_header("km", provenance(params, a.corpus), body));
  std::cout << "peto_peto " << body["peto_peto"].dump() << '\n';
  return kOk;
}

struct EchoArgs {
  std::string corpus;
  std::string labels;
  std::string edges;
  std::uint64_t min_posts = 3;
  std::size_t bins = 50;
  double smoothing = 0.0;
  std::string out = "joint.json";
};

int run_echo(const EchoArgs& a) {
  leaning::JointConfig config;
  if (a.min_posts < 1) throw UsageError("--min-posts must be at least 1");
  if (a.bins < 2) throw UsageError("--bins must be at least 2");
  config.min_posts = a.min_posts;
  config.bins = a.bins;
  if (a.smoothing > 0.0) config.smoothing = a.smoothing;
  const auto store = corpus::load_corpus(a.corpus);
  const auto labels = report::load_labels(a.labels);
  std::vector<corpus::FollowEdge> external;
  if (!a.edges.empty()) external = report::load_edges(a.edges);
  const auto edges = a.edges.empty() ? store.edges() : std::span<const corpus::FollowEdge>(external);
  const auto body = report::joint_json(store, labels, edges, config);
  const json params{{"stage", "echo_chamber"}, {"min_posts", a.min_posts}, {"bins", a.bins},
                    {"smoothing", a.smoothing}, {"external_edges", !a.edges.empty()}};
  report::write_json(a.out, report::with_header("joint", provenance(params, a.corpus), body));
  std::cout << "users " << body["n_users"] << ", correlation " << body["correlation"].dump() << '\n';
  return kOk;
}

int run_synth(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed) {
  auto config = synth::SynthConfig::load(config_path);
  if (seed) config.seed = *seed;
  const auto output = synth::generate(config);
  synth::write_output(output, out);
  std::cout << "wrote " << out << " (config " << output.manifest["config_hash"].get<std::string>().substr(0, 12)
            << ")\n";
  return kOk;
}

int run_report(const std::string& config_path, const std::string& out, bool json_logs, bool quiet) {
  report::Logger logger(std::cerr, json_logs, quiet);
  std::vector<std::string> overridden;
  auto config = report::RunConfig::load(config_path, true, &overridden);
  for (const auto& key : overridden) {
    logger.info("config", "environment override", {{"key", key}, {"variable", env_var_name(report::kEnvPrefix, key)}});
  }
  if (!out.empty()) config.out = out;
  const auto bundle = report::run_pipeline(config, logger);
  report::write_bundle(bundle, config.out);
  logger.info("report", bundle.ok() ? "complete" : "completed with failures",
              {{"out", config.out.string()}, {"config_hash", bundle.provenance.config_hash}});
  return bundle.ok() ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Misinformation-consumption analyses over social-media corpora"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "misinfo 1.0.0");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Ingest newline-delimited records into a corpus directory");
  ingest_cmd->add_option("--kind", ingest.kind, "posts|comments|edges")->required();
  ingest_cmd->add_option("--map", ingest.map, "Field-map config translating export keys");
  ingest_cmd->add_option("--hashtags", ingest.hashtags, "Comma-separated hashtags a post must carry");
  ingest_cmd->add_option("--window", ingest.window, "Analysis window YYYY-MM-DD..YYYY-MM-DD (end inclusive)");
  ingest_cmd->add_option("--platform", ingest.platform, "Platform tag for a new corpus");
  ingest_cmd->add_flag("--links-only", ingest.links_only, "Keep only posts with an extractable link");
  ingest_cmd->add_flag("--substring-hashtags", ingest.substring, "Match hashtags by substring");
  ingest_cmd->add_option("--out,--corpus", ingest.out, "Corpus directory (created or extended)");
  ingest_cmd->add_option("--psl", ingest.psl, "Public-suffix list file replacing the bundled snapshot");
  ingest_cmd->add_option("paths", ingest.paths, "Input shards")->required()->check(CLI::ExistingFile);

  ClassifyArgs classify;
  auto* classify_cmd = app.add_subcommand("classify", "Label posts Questionable/Reliable from an outlet registry");
  classify_cmd->add_option("--registry", classify.registry)->required();
  classify_cmd->add_option("--corpus", classify.corpus)->required();
  classify_cmd->add_option("--out", classify.out);
  classify_cmd->add_option("--psl", classify.psl);
  classify_cmd->add_flag("--ng-inclusive", classify.ng_inclusive, "Treat NewsGuard score 60 as Reliable");

  EngagementArgs engagement;
  auto* engagement_cmd = app.add_subcommand("engagement", "Fit discrete power laws to engagement counts");
  engagement_cmd->add_option("--corpus", engagement.corpus)->required();
  engagement_cmd->add_option("--labels", engagement.labels)->required();
  engagement_cmd->add_option("--kind", engagement.kinds, "likes|reshares|replies (repeatable)");
  engagement_cmd->add_option("--unit", engagement.units, "post|user (repeatable)");
  engagement_cmd->add_option("--x-min", engagement.x_min, "Positive integer or 'auto'");
  engagement_cmd->add_option("--out", engagement.out);

  SurvivalArgs surv;
  auto* survival_cmd = app.add_subcommand("survival", "Kaplan-Meier curves and the Peto-Peto test");
  survival_cmd->add_option("--corpus", surv.corpus)->required();
  survival_cmd->add_option("--labels", surv.labels)->required();
  survival_cmd->add_option("--unit", surv.unit, "post|user");
  survival_cmd->add_flag("--no-censoring", surv.no_censoring, "Treat every lifetime as observed");
  survival_cmd->add_option("--out", surv.out);

  EchoArgs echo;
  auto* echo_cmd = app.add_subcommand("echo-chamber", "Joint distribution of user and neighborhood leaning");
  echo_cmd->add_option("--corpus", echo.corpus)->required();
  echo_cmd->add_option("--labels", echo.labels)->required();
  echo_cmd->add_option("--edges", echo.edges, "Canonical edge file; default: the corpus edges");
  echo_cmd->add_option("--min-posts", echo.min_posts);
  echo_cmd->add_option("--bins", echo.bins);
  echo_cmd->add_option("--smoothing", echo.smoothing, "Gaussian bandwidth; 0 disables");
  echo_cmd->add_option("--out", echo.out);

  std::string synth_config, synth_out = "synth";
  std::optional<std::uint64_t> synth_seed;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic export with a ground-truth manifest");
  synth_cmd->add_option("--config", synth_config)->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth_out);
  synth_cmd->add_option("--seed", synth_seed, "Override the configured seed");

  std::string report_config, report_out;
  bool json_logs = false, quiet = false;
  auto* report_cmd = app.add_subcommand("report", "Run the whole pipeline from a run config");
  report_cmd->add_option("--config", report_config)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report_out, "Output directory, overriding the config");
  report_cmd->add_flag("--json-logs", json_logs, "Machine-readable progress on stderr");
  report_cmd->add_flag("--quiet", quiet, "Only warnings and errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest_cmd) return run_ingest(ingest);
    if (*classify_cmd) return run_classify(classify);
    if (*engagement_cmd) return run_engagement(engagement);
    if (*survival_cmd) return run_survival(surv);
    if (*echo_cmd) return run_echo(echo);
    if (*synth_cmd) return run_synth(synth_config, synth_out, synth_seed);
    if (*report_cmd) return run_report(report_config, report_out, json_logs, quiet);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEstimation;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEstimation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
