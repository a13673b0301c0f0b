#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "index/embedding.hpp"

namespace consearch {

struct HdbscanParams {
  std::size_t min_cluster_size = 5;
  std::size_t min_samples = 3;
};

inline constexpr int kNoise = -1;

struct ClusterAssignment {
  std::vector<int> labels;  // parallel to the input; kNoise or 0..cluster_count-1
  std::size_t cluster_count = 0;
  HdbscanParams params;

  // Input positions of each cluster, in ascending position order.
  std::vector<std::vector<std::size_t>> members() const;
  std::vector<std::size_t> noise() const;
};

// Density clustering over Euclidean distance.
//
// Core distance is the distance to the min_samples-th nearest point counting
// the point itself. Edges of the mutual-reachability graph feed a Prim MST,
// the MST becomes a single-linkage hierarchy, the hierarchy is condensed with
// min_cluster_size, and clusters are picked by excess of mass. The root is
// only ever returned as a cluster when the condensed tree has no split at all;
// in that case points leaving the root before its final lambda are noise.
// Cluster labels are numbered by the smallest input position they contain.
ClusterAssignment hdbscan(std::span<const std::span<const float>> points,
                          const HdbscanParams& params);
ClusterAssignment hdbscan(std::span<const EmbeddingVector> vectors, const HdbscanParams& params);

struct ClusterItem {
  std::string id;
  std::span<const float> vector;
};

// The min(n, |members|) members with the smallest mean Euclidean distance to
// the other members, ascending, ties by id. Throws std::invalid_argument on an
// empty member list, n == 0, or a member id missing from `items`.
std::vector<std::string> central_members(std::span<const ClusterItem> items,
                                         std::span<const std::string> member_ids, std::size_t n);

}  // namespace consearch
