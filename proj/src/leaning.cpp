#include "misinfo/leaning.hpp"

#include <algorithm>
#include <cmath>

#include "misinfo/error.hpp"

namespace misinfo::leaning {

LeaningVector user_leaning(std::span<const AuthorLabel> posts) {
  LeaningVector out;
  for (const auto& post : posts) {
    auto& user = out[post.author_id];
    ++user.k;
    if (post.questionable) ++user.questionable;
  }
  for (auto& [id, user] : out) user.q = static_cast<double>(user.questionable) / static_cast<double>(user.k);
  return out;
}

LeaningVector user_leaning(const corpus::Corpus& corpus, const PostLabels& labels) {
  std::vector<AuthorLabel> categorized;
  for (const auto& post : corpus.posts()) {
    auto it = labels.find(post.post_id);
    if (it == labels.end() || !is_categorized(it->second)) continue;
    categorized.push_back({post.author_id, it->second == Label::Questionable});
  }
  return user_leaning(categorized);
}

FollowGraph::FollowGraph(std::span<const corpus::FollowEdge> edges) {
  for (const auto& edge : edges) {
    if (edge.follower_id == edge.followee_id) continue;
    const auto from = add_node(edge.follower_id);
    const auto to = add_node(edge.followee_id);
    adjacency_[from].push_back(static_cast<std::uint32_t>(to));
  }
  for (auto& row : adjacency_) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    edge_count_ += row.size();
  }
}

std::size_t FollowGraph::add_node(std::string_view id) {
  auto [it, inserted] = index_.emplace(std::string(id), ids_.size());
  if (inserted) {
    ids_.emplace_back(id);
    adjacency_.emplace_back();
  }
  return it->second;
}

std::optional<std::size_t> FollowGraph::node(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NeighborhoodVector neighborhood_leaning(const FollowGraph& graph, const LeaningVector& leanings) {
  // Resolve each node's leaning once.
  std::vector<const UserLeaning*> leaning_of(graph.size(), nullptr);
  for (std::size_t v = 0; v < graph.size(); ++v) {
    auto it = leanings.find(graph.id(v));
    if (it != leanings.end()) leaning_of[v] = &it->second;
  }
  NeighborhoodVector out;
  for (std::size_t v = 0; v < graph.size(); ++v) {
    double sum = 0.0;
    std::uint64_t count = 0;
    for (auto w : graph.out(v)) {
      if (leaning_of[w] == nullptr) continue;
      sum += leaning_of[w]->q;
      ++count;
    }
    if (count == 0) continue;
    out[graph.id(v)] = NeighborhoodLeaning{sum / static_cast<double>(count), count};
  }
  return out;
}

std::size_t bin_of(double x, std::size_t bins) {
  const double scaled = std::floor(x * static_cast<double>(bins));
  if (scaled <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(scaled), bins - 1);
}

std::pair<std::size_t, std::size_t> JointLeaningDensity::mode() const {
  const auto it = std::max_element(grid.begin(), grid.end());
  const auto index = static_cast<std::size_t>(it - grid.begin());
  return {index / bins, index % bins};
}

namespace {

// Normalized discrete Gaussian weights from each source bin to every target
// bin, truncated to [0,1]; rows sum to one so smoothing moves mass without
// creating or losing any.
std::vector<double> kernel_matrix(std::size_t bins, double bandwidth) {
  std::vector<double> kernel(bins * bins, 0.0);
  const double width = 1.0 / static_cast<double>(bins);
  for (std::size_t from = 0; from < bins; ++from) {
    const double center = (static_cast<double>(from) + 0.5) * width;
    double total = 0.0;
    for (std::size_t to = 0; to < bins; ++to) {
      const double z = ((static_cast<double>(to) + 0.5) * width - center) / bandwidth;
      kernel[from * bins + to] = std::exp(-0.5 * z * z);
      total += kernel[from * bins + to];
    }
    for (std::size_t to = 0; to < bins; ++to) kernel[from * bins + to] /= total;
  }
  return kernel;
}

}  // namespace

JointLeaningDensity joint_density(const LeaningVector& leanings, const NeighborhoodVector& neighborhood,
                                  const JointConfig& config) {
  if (config.min_posts < 1) throw UsageError("min_posts must be at least 1");
  if (config.bins < 2) throw UsageError("bins must be at least 2");
  if (config.smoothing && !(*config.smoothing > 0.0)) throw UsageError("smoothing bandwidth must be positive");

  const std::size_t b = config.bins;
  JointLeaningDensity density;
  density.bins = b;
  density.grid.assign(b * b, 0.0);
  for (const auto& [id, user] : leanings) {
    if (user.k < config.min_posts) continue;
    auto it = neighborhood.find(id);
    if (it == neighborhood.end()) continue;
    density.grid[bin_of(user.q, b) * b + bin_of(it->second.qn, b)] += 1.0;
    ++density.n_users;
  }
  if (density.n_users == 0) {
    throw EstimationError("no user has at least " + std::to_string(config.min_posts) +
                          " categorized posts and a neighborhood leaning");
  }

  if (config.smoothing) {
    const auto kernel = kernel_matrix(b, *config.smoothing);
    // Separable: smooth along q^N, then along q.
    std::vector<double> tmp(b * b, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        const double mass = density.grid[i * b + j];
        if (mass == 0.0) continue;
        for (std::size_t t = 0; t < b; ++t) tmp[i * b + t] += mass * kernel[j * b + t];
      }
    }
    std::fill(density.grid.begin(), density.grid.end(), 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t t = 0; t < b; ++t) {
        const double weight = kernel[i * b + t];
        for (std::size_t j = 0; j < b; ++j) density.grid[t * b + j] += weight * tmp[i * b + j];
      }
    }
  }

  double total = 0.0;
  for (double v : density.grid) total += v;
  for (double& v : density.grid) v /= total;

  density.marginal_q.assign(b, 0.0);
  density.marginal_qn.assign(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      density.marginal_q[i] += density.grid[i * b + j];
      density.marginal_qn[j] += density.grid[i * b + j];
    }
  }
  return density;
}

Correlation leaning_correlation(const LeaningVector& leanings, const NeighborhoodVector& neighborhood,
                                std::uint64_t min_posts) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [id, user] : leanings) {
    if (user.k < min_posts) continue;
    auto it = neighborhood.find(id);
    if (it == neighborhood.end()) continue;
    xs.push_back(user.q);
    ys.push_back(it->second.qn);
  }
  if (xs.size() < 2) throw EstimationError("correlation needs at least two (q, qN) pairs");
  const double n = static_cast<double>(xs.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw EstimationError("correlation undefined: zero variance");
  return Correlation{sxy / std::sqrt(sxx * syy), xs.size()};
}

}  // namespace misinfo::leaning
