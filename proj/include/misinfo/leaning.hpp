#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "misinfo/corpus.hpp"
#include "misinfo/label.hpp"

// Notation: q is a user's leaning, q^N ("qn" in identifiers) the average
// leaning of the accounts they follow. Plots of the joint density often call
// these x and x^N.
namespace misinfo::leaning {

struct UserLeaning {
  double q = 0.0;              // questionable / k
  std::uint64_t k = 0;         // categorized posts
  std::uint64_t questionable = 0;
};

using LeaningVector = std::map<std::string, UserLeaning, std::less<>>;

// One categorized post: its author and whether it links a Questionable outlet.
struct AuthorLabel {
  std::string author_id;
  bool questionable = false;
};

LeaningVector user_leaning(std::span<const AuthorLabel> posts);
// Unknown-labeled and unlabeled posts are skipped.
LeaningVector user_leaning(const corpus::Corpus& corpus, const PostLabels& labels);

// Directed follow adjacency; node i follows node j iff j is in out(i).
class FollowGraph {
 public:
  FollowGraph() = default;
  explicit FollowGraph(std::span<const corpus::FollowEdge> edges);

  std::size_t size() const { return ids_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  const std::string& id(std::size_t node) const { return ids_[node]; }
  std::optional<std::size_t> node(std::string_view id) const;
  // Sorted, duplicate-free followees.
  std::span<const std::uint32_t> out(std::size_t node) const { return adjacency_[node]; }
  std::size_t out_degree(std::size_t node) const { return adjacency_[node].size(); }

  // Adds a node with no edges (no-op if present).
  std::size_t add_node(std::string_view id);

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::uint32_t>> adjacency_;
  std::size_t edge_count_ = 0;
};

struct NeighborhoodLeaning {
  double qn = 0.0;
  std::uint64_t followees = 0;  // followees that have a leaning
};

using NeighborhoodVector = std::map<std::string, NeighborhoodLeaning, std::less<>>;

// Mean leaning over followees that have a leaning; followees without one are
// left out of numerator and denominator. Users with no such followee are
// omitted.
NeighborhoodVector neighborhood_leaning(const FollowGraph& graph, const LeaningVector& leanings);

struct JointConfig {
  std::uint64_t min_posts = 3;
  std::size_t bins = 50;
  std::optional<double> smoothing;  // Gaussian bandwidth in leaning units
};

inline constexpr double kDefaultBandwidth = 0.05;

// B x B probability mass over [0,1]^2. Row index is the q bin, column index
// the q^N bin; bin(x) = min(floor(x * B), B - 1).
struct JointLeaningDensity {
  std::size_t bins = 0;
  std::vector<double> grid;  // row-major
  std::vector<double> marginal_q;
  std::vector<double> marginal_qn;
  std::uint64_t n_users = 0;

  double at(std::size_t q_bin, std::size_t qn_bin) const { return grid[q_bin * bins + qn_bin]; }
  // (q_bin, qn_bin) of the heaviest cell; first in row-major order on ties.
  std::pair<std::size_t, std::size_t> mode() const;
};

std::size_t bin_of(double x, std::size_t bins);

// Throws EstimationError when no user has k >= min_posts and a q^N.
JointLeaningDensity joint_density(const LeaningVector& leanings, const NeighborhoodVector& neighborhood,
                                  const JointConfig& config = {});

struct Correlation {
  double r = 0.0;
  std::uint64_t n = 0;
};

// Pearson r of (q, q^N) over users with both values and k >= min_posts.
// Throws EstimationError for fewer than two pairs or zero variance.
Correlation leaning_correlation(const LeaningVector& leanings, const NeighborhoodVector& neighborhood,
                                std::uint64_t min_posts = 1);

}  // namespace misinfo::leaning
