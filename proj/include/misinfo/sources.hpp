#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "misinfo/corpus.hpp"
#include "misinfo/label.hpp"

namespace misinfo::sources {

enum class Provider { MBFC, NG };

// MBFC political-bias and reliability categories.
enum class MbfcBias {
  Right,
  RightCenter,
  LeastBiased,
  LeftCenter,
  Left,
  Questionable,
  ConspiracyPseudoscience,
  ProScience,
};

// NewsGuard records that carry no credibility score.
enum class NgSpecial { humor, platform };

std::optional<MbfcBias> parse_mbfc_bias(std::string_view text);
std::string_view to_string(MbfcBias bias);
std::string_view to_string(Provider provider);

struct OutletRecord {
  std::string domain;
  Provider provider = Provider::MBFC;
  std::optional<MbfcBias> mbfc_bias;
  std::optional<double> mbfc_bias_score;  // [0, 10]; stored, never used for labeling
  std::optional<double> ng_score;         // [0, 100]
  std::optional<NgSpecial> ng_special;
};

struct ClassifierConfig {
  // true: NG score > 60 is Reliable and 60 itself is Questionable.
  // false: NG score >= 60 is Reliable.
  bool ng_reliable_strict = true;
};

inline constexpr double kNgThreshold = 60.0;

// MBFC: Questionable and Conspiracy-Pseudoscience are Questionable, every
// other category Reliable. NG: humor/platform sites are Unknown, otherwise the
// 60-point threshold decides.
Label classify_outlet(const OutletRecord& record, const ClassifierConfig& config = {});

struct RegistryRejection {
  std::size_t row;  // 1-based data row, header excluded
  std::string reason;
};

struct RegistryCounts {
  std::uint64_t total = 0;
  std::uint64_t mbfc = 0;
  std::uint64_t ng = 0;
  std::uint64_t questionable = 0;
  std::uint64_t reliable = 0;
  std::uint64_t unknown = 0;
  std::uint64_t duplicates = 0;  // rows whose domain was already registered
};

class OutletRegistry {
 public:
  // Delimiter-separated file with header
  // domain,provider,mbfc_bias,mbfc_bias_score,ng_score,ng_special.
  // Invalid rows are rejected individually; an empty file is a UsageError.
  static OutletRegistry load(const std::filesystem::path& path, const ClassifierConfig& config = {});
  static OutletRegistry parse(std::istream& in, const ClassifierConfig& config = {});

  const OutletRecord* find(std::string_view domain) const;
  // Label of a registered domain; nullopt when absent.
  std::optional<Label> label_of(std::string_view domain) const;

  const RegistryCounts& counts() const { return counts_; }
  const std::vector<RegistryRejection>& rejections() const { return rejections_; }
  std::size_t size() const { return records_.size(); }

  // Copy with every Questionable/Reliable label exchanged.
  OutletRegistry with_swapped_labels() const;

 private:
  void add(OutletRecord record, const ClassifierConfig& config);
  void recount();

  std::map<std::string, OutletRecord, std::less<>> records_;
  std::map<std::string, Label, std::less<>> labels_;
  RegistryCounts counts_;
  std::vector<RegistryRejection> rejections_;
};

struct LabelCoverage {
  std::uint64_t posts = 0;
  std::uint64_t with_domain = 0;   // at least one extractable URL domain
  std::uint64_t registered = 0;    // at least one domain found in the registry
  std::uint64_t categorized = 0;   // Questionable + Reliable
  std::uint64_t questionable = 0;
  std::uint64_t reliable = 0;
  std::uint64_t uncategorized = 0;  // Unknown
  std::uint64_t ties = 0;           // conflicting domains with no majority
};

struct LabelingResult {
  PostLabels labels;  // every post in the corpus
  LabelCoverage coverage;
};

// A post takes the label of its registered domains: a single label when they
// agree, the majority when they disagree, Unknown on a tie. Domains labeled
// Unknown in the registry do not vote.
LabelingResult label_posts(const corpus::Corpus& corpus, const OutletRegistry& registry,
                           const PublicSuffixList& psl = PublicSuffixList::bundled());

}  // namespace misinfo::sources
