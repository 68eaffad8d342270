#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace misinfo {

// Public-suffix rules in the publicsuffix.org list format: one rule per line,
// "//" comments, "*." wildcards and "!" exceptions.
class PublicSuffixList {
 public:
  static PublicSuffixList parse(std::string_view list_text);
  // Snapshot compiled into the library; covers the generic TLDs through the
  // implicit "*" rule plus common country-code second levels.
  static const PublicSuffixList& bundled();

  // Length in labels of the public suffix of `host` (lowercase, dot-separated).
  std::size_t suffix_labels(std::string_view host) const;
  // host reduced to public suffix + one label, or nullopt if host is itself a
  // public suffix.
  std::optional<std::string> registered_domain(std::string_view host) const;

  std::size_t size() const { return rules_.size() + exceptions_.size(); }

 private:
  std::vector<std::string> rules_;       // sorted, may start with "*."
  std::vector<std::string> exceptions_;  // sorted, without the leading '!'
};

// Lowercased host of `url` with scheme, userinfo, port, path, query, fragment
// and a leading "www." removed. No network resolution.
std::optional<std::string> normalize_host(std::string_view url);

// normalize_host followed by registered-domain reduction. IP literals are
// returned unchanged. nullopt marks an unparseable URL.
std::optional<std::string> extract_domain(std::string_view url, const PublicSuffixList& psl);
std::optional<std::string> extract_domain(std::string_view url);

}  // namespace misinfo
