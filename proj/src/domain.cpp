#include "misinfo/domain.hpp"

#include <algorithm>
#include <cctype>

namespace misinfo {

extern const char* const kPublicSuffixSnapshot;

namespace {

std::vector<std::string_view> split_labels(std::string_view host) {
  std::vector<std::string_view> labels;
  std::size_t start = 0;
  while (true) {
    const auto dot = host.find('.', start);
    labels.push_back(host.substr(start, dot == std::string_view::npos ? host.npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return labels;
}

std::string join_tail(const std::vector<std::string_view>& labels, std::size_t count) {
  std::string out;
  for (std::size_t i = labels.size() - count; i < labels.size(); ++i) {
    if (!out.empty()) out.push_back('.');
    out.append(labels[i]);
  }
  return out;
}

bool contains(const std::vector<std::string>& sorted, std::string_view key) {
  return std::binary_search(sorted.begin(), sorted.end(), key, std::less<>{});
}

bool is_ipv4(std::string_view host) {
  int labels = 0;
  for (auto label : split_labels(host)) {
    if (label.empty() || label.size() > 3) return false;
    if (!std::all_of(label.begin(), label.end(), [](char c) { return c >= '0' && c <= '9'; })) return false;
    if (std::stoi(std::string(label)) > 255) return false;
    ++labels;
  }
  return labels == 4;
}

bool valid_scheme(std::string_view scheme) {
  if (scheme.empty() || !std::isalpha(static_cast<unsigned char>(scheme[0]))) return false;
  return std::all_of(scheme.begin(), scheme.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
  });
}

bool valid_label_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || u >= 0x80;
}

}  // namespace

PublicSuffixList PublicSuffixList::parse(std::string_view list_text) {
  PublicSuffixList psl;
  std::size_t pos = 0;
  while (pos < list_text.size()) {
    auto end = list_text.find('\n', pos);
    if (end == std::string_view::npos) end = list_text.size();
    std::string_view line = list_text.substr(pos, end - pos);
    pos = end + 1;
    // A rule is the first whitespace-delimited token on the line.
    const auto ws = line.find_first_of(" \t\r");
    line = line.substr(0, ws);
    if (line.empty() || line.starts_with("//")) continue;
    std::string rule(line);
    std::transform(rule.begin(), rule.end(), rule.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (rule.front() == '!') {
      psl.exceptions_.push_back(rule.substr(1));
    } else {
      psl.rules_.push_back(std::move(rule));
    }
  }
  std::sort(psl.rules_.begin(), psl.rules_.end());
  std::sort(psl.exceptions_.begin(), psl.exceptions_.end());
  return psl;
}

const PublicSuffixList& PublicSuffixList::bundled() {
  static const PublicSuffixList psl = parse(kPublicSuffixSnapshot);
  return psl;
}

std::size_t PublicSuffixList::suffix_labels(std::string_view host) const {
  const auto labels = split_labels(host);
  // Exception rules win and shorten the match by one label.
  for (std::size_t count = labels.size(); count >= 1; --count) {
    if (contains(exceptions_, join_tail(labels, count))) return count - 1;
  }
  // Otherwise the longest matching rule; the implicit default is "*".
  std::size_t best = 1;
  for (std::size_t count = 1; count <= labels.size(); ++count) {
    const std::string tail = join_tail(labels, count);
    if (contains(rules_, tail)) best = std::max(best, count);
    if (count >= 2) {
      const std::string wildcard = "*." + join_tail(labels, count - 1);
      if (contains(rules_, wildcard)) best = std::max(best, count);
    }
  }
  return best;
}

std::optional<std::string> PublicSuffixList::registered_domain(std::string_view host) const {
  const auto labels = split_labels(host);
  const std::size_t suffix = suffix_labels(host);
  if (labels.size() <= suffix) return std::nullopt;
  return join_tail(labels, suffix + 1);
}

std::optional<std::string> normalize_host(std::string_view url) {
  while (!url.empty() && std::isspace(static_cast<unsigned char>(url.front()))) url.remove_prefix(1);
  while (!url.empty() && std::isspace(static_cast<unsigned char>(url.back()))) url.remove_suffix(1);
  if (url.empty()) return std::nullopt;
  if (std::any_of(url.begin(), url.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
    return std::nullopt;
  }
  if (const auto sep = url.find("://"); sep != std::string_view::npos) {
    if (!valid_scheme(url.substr(0, sep))) return std::nullopt;
    url.remove_prefix(sep + 3);
  } else if (url.starts_with("//")) {
    url.remove_prefix(2);
  }
  std::string_view authority = url.substr(0, url.find_first_of("/?#"));
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  if (authority.starts_with("[")) return std::nullopt;  // IPv6 literals are not news domains
  if (const auto colon = authority.find(':'); colon != std::string_view::npos) {
    const auto port = authority.substr(colon + 1);
    if (!std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::nullopt;
    }
    authority = authority.substr(0, colon);
  }
  std::string host(authority);
  std::transform(host.begin(), host.end(), host.begin(), [](unsigned char c) {
    return c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c);
  });
  if (!host.empty() && host.back() == '.') host.pop_back();
  const auto labels = split_labels(host);
  if (labels.size() < 2) return std::nullopt;
  for (auto label : labels) {
    if (label.empty() || !std::all_of(label.begin(), label.end(), valid_label_char)) return std::nullopt;
  }
  if (host.starts_with("www.") && labels.size() > 2) host.erase(0, 4);
  return host;
}

std::optional<std::string> extract_domain(std::string_view url, const PublicSuffixList& psl) {
  auto host = normalize_host(url);
  if (!host) return std::nullopt;
  if (is_ipv4(*host)) return host;
  return psl.registered_domain(*host);
}

std::optional<std::string> extract_domain(std::string_view url) {
  return extract_domain(url, PublicSuffixList::bundled());
}

}  // namespace misinfo
