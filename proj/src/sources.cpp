#include "misinfo/sources.hpp"

#include <boost/tokenizer.hpp>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>

#include "misinfo/domain.hpp"
#include "misinfo/error.hpp"

namespace misinfo::sources {
namespace {

constexpr std::array<std::pair<std::string_view, MbfcBias>, 8> kBiasNames = {{
    {"Right", MbfcBias::Right},
    {"Right-Center", MbfcBias::RightCenter},
    {"Least-Biased", MbfcBias::LeastBiased},
    {"Left-Center", MbfcBias::LeftCenter},
    {"Left", MbfcBias::Left},
    {"Questionable", MbfcBias::Questionable},
    {"Conspiracy-Pseudoscience", MbfcBias::ConspiracyPseudoscience},
    {"Pro-Science", MbfcBias::ProScience},
}};

const std::vector<std::string> kHeader = {"domain", "provider", "mbfc_bias", "mbfc_bias_score", "ng_score",
                                          "ng_special"};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_row(const std::string& line, char delimiter) {
  using Separator = boost::escaped_list_separator<char>;
  boost::tokenizer<Separator> tokens(line, Separator('\\', delimiter, '"'));
  std::vector<std::string> fields;
  for (const auto& token : tokens) fields.push_back(trim(token));
  return fields;
}

std::optional<double> parse_number(const std::string& text, const char* field) {
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) throw std::invalid_argument(std::string(field) + " is not a number");
  return value;
}

}  // namespace

std::optional<MbfcBias> parse_mbfc_bias(std::string_view text) {
  for (const auto& [name, bias] : kBiasNames) {
    if (name.size() == text.size() &&
        std::equal(name.begin(), name.end(), text.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
        })) {
      return bias;
    }
  }
  return std::nullopt;
}

std::string_view to_string(MbfcBias bias) {
  for (const auto& [name, value] : kBiasNames) {
    if (value == bias) return name;
  }
  return "";
}

std::string_view to_string(Provider provider) { return provider == Provider::MBFC ? "MBFC" : "NG"; }

Label classify_outlet(const OutletRecord& record, const ClassifierConfig& config) {
  if (record.provider == Provider::MBFC) {
    const bool questionable = record.mbfc_bias == MbfcBias::Questionable ||
                              record.mbfc_bias == MbfcBias::ConspiracyPseudoscience;
    return questionable ? Label::Questionable : Label::Reliable;
  }
  if (record.ng_special) return Label::Unknown;
  const double score = record.ng_score.value_or(0.0);
  const bool reliable = config.ng_reliable_strict ? score > kNgThreshold : score >= kNgThreshold;
  return reliable ? Label::Reliable : Label::Questionable;
}

OutletRegistry OutletRegistry::load(const std::filesystem::path& path, const ClassifierConfig& config) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read registry " + path.string());
  return parse(in, config);
}

OutletRegistry OutletRegistry::parse(std::istream& in, const ClassifierConfig& config) {
  std::string line;
  std::string header_line;
  while (std::getline(in, header_line) && trim(header_line).empty()) {
  }
  if (trim(header_line).empty()) throw UsageError("registry file is empty");
  const char delimiter = header_line.find('\t') != std::string::npos ? '\t'
                         : header_line.find(';') != std::string::npos ? ';'
                                                                      : ',';
  const auto header = split_row(header_line, delimiter);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  for (const auto& name : {"domain", "provider"}) {
    if (column.count(name) == 0) throw UsageError(std::string("registry header lacks '") + name + "'");
  }

  OutletRegistry registry;
  std::size_t row = 0;
  std::size_t data_rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    ++data_rows;
    try {
      const auto fields = split_row(line, delimiter);
      auto field = [&](const char* name) -> std::string {
        auto it = column.find(name);
        return it == column.end() || it->second >= fields.size() ? std::string() : fields[it->second];
      };
      OutletRecord record;
      const std::string raw_domain = field("domain");
      auto domain = extract_domain(raw_domain);
      if (!domain) throw std::invalid_argument("unparseable domain '" + raw_domain + "'");
      record.domain = *domain;

      const std::string bias = field("mbfc_bias");
      if (!bias.empty()) {
        record.mbfc_bias = parse_mbfc_bias(bias);
        if (!record.mbfc_bias) throw std::invalid_argument("unknown mbfc_bias '" + bias + "'");
      }
      record.mbfc_bias_score = parse_number(field("mbfc_bias_score"), "mbfc_bias_score");
      record.ng_score = parse_number(field("ng_score"), "ng_score");
      const std::string special = field("ng_special");
      if (special == "humor") {
        record.ng_special = NgSpecial::humor;
      } else if (special == "platform") {
        record.ng_special = NgSpecial::platform;
      } else if (!special.empty()) {
        throw std::invalid_argument("unknown ng_special '" + special + "'");
      }

      const bool has_mbfc = record.mbfc_bias || record.mbfc_bias_score;
      const bool has_ng = record.ng_score || record.ng_special;
      const std::string provider = field("provider");
      if (provider == "MBFC") {
        record.provider = Provider::MBFC;
      } else if (provider == "NG") {
        record.provider = Provider::NG;
      } else if (provider.empty() && has_mbfc != has_ng) {
        record.provider = has_mbfc ? Provider::MBFC : Provider::NG;
      } else {
        throw std::invalid_argument("unknown provider '" + provider + "'");
      }
      if (!has_mbfc && !has_ng) throw std::invalid_argument("neither MBFC nor NG fields populated");
      if (has_mbfc && has_ng) throw std::invalid_argument("both MBFC and NG fields populated");
      if ((record.provider == Provider::MBFC) != has_mbfc) {
        throw std::invalid_argument("provider does not match populated fields");
      }
      if (record.provider == Provider::MBFC && !record.mbfc_bias) {
        throw std::invalid_argument("MBFC record without mbfc_bias");
      }
      if (record.mbfc_bias_score && (*record.mbfc_bias_score < 0.0 || *record.mbfc_bias_score > 10.0)) {
        throw std::invalid_argument("mbfc_bias_score outside [0, 10]");
      }
      if (record.ng_score && (*record.ng_score < 0.0 || *record.ng_score > 100.0)) {
        throw std::invalid_argument("ng_score outside [0, 100]");
      }
      registry.add(std::move(record), config);
    } catch (const std::invalid_argument& e) {
      registry.rejections_.push_back({row, e.what()});
    }
  }
  if (data_rows == 0) throw UsageError("registry file has a header but no rows");
  registry.recount();
  return registry;
}

void OutletRegistry::add(OutletRecord record, const ClassifierConfig& config) {
  auto it = records_.find(record.domain);
  if (it != records_.end()) {
    ++counts_.duplicates;
    // MBFC supersedes NG; within one provider the first row stands.
    if (!(it->second.provider == Provider::NG && record.provider == Provider::MBFC)) return;
  }
  labels_[record.domain] = classify_outlet(record, config);
  records_[record.domain] = std::move(record);
}

void OutletRegistry::recount() {
  const auto duplicates = counts_.duplicates;
  counts_ = RegistryCounts{};
  counts_.duplicates = duplicates;
  for (const auto& [domain, record] : records_) {
    ++counts_.total;
    ++(record.provider == Provider::MBFC ? counts_.mbfc : counts_.ng);
    switch (labels_.at(domain)) {
      case Label::Questionable: ++counts_.questionable; break;
      case Label::Reliable: ++counts_.reliable; break;
      case Label::Unknown: ++counts_.unknown; break;
    }
  }
}

const OutletRecord* OutletRegistry::find(std::string_view domain) const {
  auto it = records_.find(domain);
  return it == records_.end() ? nullptr : &it->second;
}

std::optional<Label> OutletRegistry::label_of(std::string_view domain) const {
  auto it = labels_.find(domain);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

OutletRegistry OutletRegistry::with_swapped_labels() const {
  OutletRegistry copy = *this;
  for (auto& [domain, label] : copy.labels_) label = swapped(label);
  copy.recount();
  return copy;
}

LabelingResult label_posts(const corpus::Corpus& corpus, const OutletRegistry& registry,
                           const PublicSuffixList& psl) {
  LabelingResult result;
  auto& coverage = result.coverage;
  for (const auto& post : corpus.posts()) {
    ++coverage.posts;
    std::set<std::string> domains;
    for (const auto& url : post.urls) {
      if (auto domain = extract_domain(url, psl)) domains.insert(std::move(*domain));
    }
    if (!domains.empty()) ++coverage.with_domain;
    std::size_t questionable = 0;
    std::size_t reliable = 0;
    bool registered = false;
    for (const auto& domain : domains) {
      auto label = registry.label_of(domain);
      if (!label) continue;
      registered = true;
      if (*label == Label::Questionable) ++questionable;
      if (*label == Label::Reliable) ++reliable;
    }
    if (registered) ++coverage.registered;
    Label label = Label::Unknown;
    if (questionable > reliable) {
      label = Label::Questionable;
    } else if (reliable > questionable) {
      label = Label::Reliable;
    } else if (questionable > 0) {
      ++coverage.ties;
    }
    switch (label) {
      case Label::Questionable: ++coverage.questionable; break;
      case Label::Reliable: ++coverage.reliable; break;
      case Label::Unknown: ++coverage.uncategorized; break;
    }
    result.labels[post.post_id] = label;
  }
  coverage.categorized = coverage.questionable + coverage.reliable;
  return result;
}

}  // namespace misinfo::sources
