#include "misinfo/survival.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <unordered_map>

#include "misinfo/error.hpp"
#include "misinfo/heavytail.hpp"

namespace misinfo::survival {
namespace {

struct Span {
  Timestamp first;
  Timestamp last;
};

LifetimeRecord make_record(std::string id, const Span& span, Label group, const Window& window,
                           const LifetimeOptions& options) {
  LifetimeRecord record;
  record.subject_id = std::move(id);
  record.duration_days = (span.last - span.first).count() / kSecondsPerDay;
  record.event_observed = !(options.censoring && span.last >= window.end - std::chrono::seconds(kSecondsPerDay));
  record.group = group;
  return record;
}

std::optional<Label> group_of(const PostLabels& labels, const std::string& post_id) {
  auto it = labels.find(post_id);
  if (it == labels.end() || !is_categorized(it->second)) return std::nullopt;
  return it->second;
}

void extend(Span& span, Timestamp t) {
  span.first = std::min(span.first, t);
  span.last = std::max(span.last, t);
}

// Distinct times with event and censoring counts.
struct TimeCounts {
  std::uint64_t events = 0;
  std::uint64_t censored = 0;
};

std::map<std::int64_t, TimeCounts> tally(std::span<const LifetimeRecord> records) {
  std::map<std::int64_t, TimeCounts> out;
  for (const auto& r : records) {
    auto& c = out[r.duration_days];
    (r.event_observed ? c.events : c.censored) += 1;
  }
  return out;
}

// Product-limit bookkeeping that stays exact between censorings: within a run
// of event times with no censoring in between, the product telescopes to
// carry * (n_i - d_i) / n_start.
class ProductLimit {
 public:
  double step(std::uint64_t at_risk, std::uint64_t events) {
    if (at_risk != expected_) {
      carry_ = value_;
      start_ = at_risk;
    }
    expected_ = at_risk - events;
    value_ = carry_ * static_cast<double>(at_risk - events) / static_cast<double>(start_);
    return value_;
  }
  double value() const { return value_; }

 private:
  double carry_ = 1.0;
  double value_ = 1.0;
  std::uint64_t start_ = 0;
  std::uint64_t expected_ = static_cast<std::uint64_t>(-1);
};

}  // namespace

std::vector<LifetimeRecord> post_lifetimes(const corpus::Corpus& corpus, const PostLabels& labels,
                                           const LifetimeOptions& options) {
  std::unordered_map<std::string, Span> spans;
  for (const auto* comment : corpus.resolve_comments().attached) {
    auto [it, inserted] = spans.try_emplace(comment->parent_post_id, Span{comment->created_at, comment->created_at});
    if (!inserted) extend(it->second, comment->created_at);
  }
  std::vector<LifetimeRecord> out;
  for (const auto& post : corpus.posts()) {
    auto group = group_of(labels, post.post_id);
    auto it = spans.find(post.post_id);
    if (!group || it == spans.end()) continue;
    out.push_back(make_record(post.post_id, it->second, *group, corpus.window(), options));
  }
  return out;
}

std::vector<LifetimeRecord> user_lifetimes(const corpus::Corpus& corpus, const PostLabels& labels,
                                           const LifetimeOptions& options) {
  std::map<std::pair<std::string, Label>, Span> spans;
  for (const auto* comment : corpus.resolve_comments().attached) {
    auto group = group_of(labels, comment->parent_post_id);
    if (!group) continue;
    auto [it, inserted] =
        spans.try_emplace({comment->author_id, *group}, Span{comment->created_at, comment->created_at});
    if (!inserted) extend(it->second, comment->created_at);
  }
  std::vector<LifetimeRecord> out;
  out.reserve(spans.size());
  for (const auto& [key, span] : spans) {
    out.push_back(make_record(key.first, span, key.second, corpus.window(), options));
  }
  return out;
}

std::vector<LifetimeRecord> select_group(std::span<const LifetimeRecord> records, Label group) {
  std::vector<LifetimeRecord> out;
  for (const auto& r : records) {
    if (r.group == group) out.push_back(r);
  }
  return out;
}

double SurvivalCurve::at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t,
                             [](double value, std::int64_t time) { return value < static_cast<double>(time); });
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

SurvivalCurve kaplan_meier(std::span<const LifetimeRecord> records) {
  if (records.empty()) throw UsageError("Kaplan-Meier estimate needs at least one lifetime record");
  SurvivalCurve curve;
  curve.n_subjects = records.size();
  std::uint64_t at_risk = records.size();
  ProductLimit product;
  for (const auto& [time, counts] : tally(records)) {
    if (time < 0) throw DomainError("negative lifetime duration");
    if (counts.events > 0) {
      curve.times.push_back(time);
      curve.at_risk.push_back(at_risk);
      curve.events.push_back(counts.events);
      curve.survival.push_back(product.step(at_risk, counts.events));
    }
    if (counts.censored > 0) {
      curve.censor_times.push_back(time);
      curve.n_censored += counts.censored;
    }
    at_risk -= counts.events + counts.censored;
  }
  return curve;
}

PetoPetoResult peto_peto(std::span<const LifetimeRecord> a, std::span<const LifetimeRecord> b) {
  if (a.empty() || b.empty()) throw UsageError("Peto-Peto test needs two non-empty groups");
  PetoPetoResult result;
  result.n_a = a.size();
  result.n_b = b.size();

  const auto ta = tally(a);
  const auto tb = tally(b);
  std::map<std::int64_t, std::pair<TimeCounts, TimeCounts>> merged;
  for (const auto& [t, c] : ta) merged[t].first = c;
  for (const auto& [t, c] : tb) merged[t].second = c;

  std::uint64_t risk_a = a.size();
  std::uint64_t risk_b = b.size();
  ProductLimit pooled;
  double u_a = 0.0, u_b = 0.0, variance = 0.0;
  for (const auto& [t, counts] : merged) {
    const auto& [ca, cb] = counts;
    const std::uint64_t d = ca.events + cb.events;
    if (d > 0) {
      const double n = static_cast<double>(risk_a + risk_b);
      const double w = pooled.value();  // S(t-)
      const double dd = static_cast<double>(d);
      u_a += w * (static_cast<double>(ca.events) - dd * static_cast<double>(risk_a) / n);
      u_b += w * (static_cast<double>(cb.events) - dd * static_cast<double>(risk_b) / n);
      if (n > 1.0) {
        const double risk_product = static_cast<double>(risk_a) * static_cast<double>(risk_b);
        variance += w * w * dd * risk_product * (n - dd) / (n * n * (n - 1.0));
      }
      pooled.step(risk_a + risk_b, d);
      result.events_a += ca.events;
      result.events_b += cb.events;
    }
    risk_a -= ca.events + ca.censored;
    risk_b -= cb.events + cb.censored;
  }

  if (result.events_a == 0 || result.events_b == 0) {
    result.warning = result.events_a == 0 && result.events_b == 0 ? "no observed events in either group"
                                                                  : "a group has no observed events";
  }
  // u_a = -u_b in exact arithmetic; averaging the two keeps the statistic
  // symmetric under swapping the groups.
  const double u = 0.5 * (u_a - u_b);
  if (variance > 0.0 && u != 0.0) {
    result.statistic = u * u / variance;
    result.p_value = heavytail::chi2_1_upper_tail(result.statistic);
  }
  return result;
}

}  // namespace misinfo::survival
