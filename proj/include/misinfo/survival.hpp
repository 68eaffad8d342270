#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "misinfo/corpus.hpp"
#include "misinfo/label.hpp"

namespace misinfo::survival {

struct LifetimeRecord {
  std::string subject_id;  // post id or user id
  std::int64_t duration_days = 0;
  bool event_observed = true;  // false: right-censored at window end
  Label group = Label::Unknown;

  bool operator==(const LifetimeRecord&) const = default;
};

struct LifetimeOptions {
  bool censoring = true;
};

// One record per Questionable/Reliable post with at least one attached
// comment. Duration is the floor, in days, of last minus first comment; the
// record is censored when the last comment falls within the window's final day.
std::vector<LifetimeRecord> post_lifetimes(const corpus::Corpus& corpus, const PostLabels& labels,
                                           const LifetimeOptions& options = {});

// One record per (commenting user, group of the commented posts).
std::vector<LifetimeRecord> user_lifetimes(const corpus::Corpus& corpus, const PostLabels& labels,
                                           const LifetimeOptions& options = {});

std::vector<LifetimeRecord> select_group(std::span<const LifetimeRecord> records, Label group);

struct SurvivalCurve {
  std::vector<std::int64_t> times;    // distinct observed event times, ascending
  std::vector<std::uint64_t> at_risk;  // n_i
  std::vector<std::uint64_t> events;   // d_i
  std::vector<double> survival;        // S(t_i)
  std::vector<std::int64_t> censor_times;  // distinct censoring times, for plotting
  std::uint64_t n_subjects = 0;
  std::uint64_t n_censored = 0;

  // Right-continuous step function; 1 before the first event time.
  double at(double t) const;
};

// Product-limit estimate. Events at a time are processed before censorings at
// the same time. Throws UsageError on empty input.
SurvivalCurve kaplan_meier(std::span<const LifetimeRecord> records);

struct PetoPetoResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::uint64_t n_a = 0;
  std::uint64_t n_b = 0;
  std::uint64_t events_a = 0;
  std::uint64_t events_b = 0;
  std::string warning;
};

// Weighted log-rank test with weights equal to the left-continuous pooled
// Kaplan-Meier estimate. Throws UsageError if either group is empty.
PetoPetoResult peto_peto(std::span<const LifetimeRecord> a, std::span<const LifetimeRecord> b);

}  // namespace misinfo::survival
