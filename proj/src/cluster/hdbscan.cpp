#include "cluster/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace consearch {

namespace {

double euclidean(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

// Zero distances would give infinite lambdas; they are floored instead so
// stability arithmetic stays finite.
constexpr double kMinDistance = 1e-12;

double to_lambda(double distance) { return 1.0 / std::max(distance, kMinDistance); }

struct MstEdge {
  std::size_t a;
  std::size_t b;
  double weight;
};

std::vector<MstEdge> mutual_reachability_mst(const std::vector<double>& dist, std::size_t n,
                                             std::size_t min_samples) {
  std::vector<double> core(n);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(dist.begin() + static_cast<std::ptrdiff_t>(i * n), n, row.begin());
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(min_samples - 1),
                     row.end());
    core[i] = row[min_samples - 1];
  }
  auto mreach = [&](std::size_t i, std::size_t j) {
    return std::max({core[i], core[j], dist[i * n + j]});
  };

  std::vector<MstEdge> edges;
  edges.reserve(n - 1);
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = mreach(current, j);
      if (w < best[j]) {
        best[j] = w;
        from[j] = current;
      }
      if (next == n || best[j] < best[next]) next = j;
    }
    in_tree[next] = true;
    edges.push_back({std::min(from[next], next), std::max(from[next], next), best[next]});
    current = next;
  }
  std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
    return std::tie(x.weight, x.a, x.b) < std::tie(y.weight, y.a, y.b);
  });
  return edges;
}

struct LinkageNode {
  std::size_t left;
  std::size_t right;
  double distance;
  std::size_t size;
};

// Nodes n .. 2n-2 of a single-linkage dendrogram; leaves are 0 .. n-1.
std::vector<LinkageNode> single_linkage(const std::vector<MstEdge>& edges, std::size_t n) {
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::size_t> size(2 * n - 1, 1);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<LinkageNode> nodes;
  nodes.reserve(n - 1);
  for (const auto& e : edges) {
    const std::size_t ra = find(e.a);
    const std::size_t rb = find(e.b);
    const std::size_t id = n + nodes.size();
    nodes.push_back({ra, rb, e.weight, size[ra] + size[rb]});
    parent[ra] = id;
    parent[rb] = id;
    size[id] = size[ra] + size[rb];
  }
  return nodes;
}

struct CondensedEntry {
  std::size_t parent;  // cluster label (>= n)
  std::size_t child;   // point index (< n) or cluster label (>= n)
  double lambda;
  std::size_t child_size;
};

std::vector<CondensedEntry> condense(const std::vector<LinkageNode>& nodes, std::size_t n,
                                     std::size_t min_cluster_size) {
  const std::size_t root = 2 * n - 2;
  auto node_size = [&](std::size_t x) { return x < n ? std::size_t{1} : nodes[x - n].size; };
  auto collect_leaves = [&](std::size_t x, std::vector<std::size_t>& out) {
    std::vector<std::size_t> stack{x};
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      if (cur < n) {
        out.push_back(cur);
      } else {
        stack.push_back(nodes[cur - n].right);
        stack.push_back(nodes[cur - n].left);
      }
    }
  };

  std::vector<CondensedEntry> tree;
  std::unordered_map<std::size_t, std::size_t> relabel{{root, n}};
  std::size_t next_label = n + 1;
  std::vector<std::size_t> queue{root};
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const std::size_t node = queue[qi];
    const auto& ln = nodes[node - n];
    const double lambda = to_lambda(ln.distance);
    const std::size_t label = relabel.at(node);
    const std::size_t ls = node_size(ln.left);
    const std::size_t rs = node_size(ln.right);
    auto fall_out = [&](std::size_t sub) {
      std::vector<std::size_t> leaves;
      collect_leaves(sub, leaves);
      for (auto leaf : leaves) tree.push_back({label, leaf, lambda, 1});
    };
    auto continue_as = [&](std::size_t sub, std::size_t sub_label) {
      if (sub < n) {  // a lone point that still meets min_cluster_size
        tree.push_back({label, sub, lambda, 1});
        return;
      }
      relabel[sub] = sub_label;
      queue.push_back(sub);
    };
    if (ls >= min_cluster_size && rs >= min_cluster_size) {
      for (std::size_t sub : {ln.left, ln.right}) {
        if (sub < n) {
          tree.push_back({label, sub, lambda, 1});
          continue;
        }
        const std::size_t new_label = next_label++;
        tree.push_back({label, new_label, lambda, node_size(sub)});
        continue_as(sub, new_label);
      }
    } else if (ls < min_cluster_size && rs < min_cluster_size) {
      fall_out(ln.left);
      fall_out(ln.right);
    } else if (ls < min_cluster_size) {
      fall_out(ln.left);
      continue_as(ln.right, label);
    } else {
      fall_out(ln.right);
      continue_as(ln.left, label);
    }
  }
  return tree;
}

}  // namespace

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
  std::vector<std::vector<std::size_t>> out(cluster_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kNoise) out[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return out;
}

std::vector<std::size_t> ClusterAssignment::noise() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoise) out.push_back(i);
  }
  return out;
}

ClusterAssignment hdbscan(std::span<const std::span<const float>> points,
                          const HdbscanParams& params) {
  if (params.min_cluster_size == 0 || params.min_samples == 0) {
    throw std::invalid_argument("hdbscan parameters must be positive");
  }
  const std::size_t n = points.size();
  if (n == 0) throw std::invalid_argument("hdbscan needs at least one point");
  for (const auto& p : points) {
    if (p.size() != points[0].size()) throw std::invalid_argument("hdbscan: mixed dimensions");
  }
  ClusterAssignment result;
  result.params = params;
  result.labels.assign(n, kNoise);
  if (n < params.min_cluster_size) return result;
  if (n == 1) {
    result.labels[0] = 0;
    result.cluster_count = 1;
    return result;
  }

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = euclidean(points[i], points[j]);
    }
  }
  const auto edges = mutual_reachability_mst(dist, n, std::min(params.min_samples, n));
  const auto nodes = single_linkage(edges, n);
  const auto tree = condense(nodes, n, params.min_cluster_size);

  const std::size_t root = n;
  std::size_t max_label = root;
  for (const auto& e : tree) max_label = std::max(max_label, e.parent);
  for (const auto& e : tree) {
    if (e.child >= n) max_label = std::max(max_label, e.child);
  }
  const std::size_t label_count = max_label - root + 1;
  auto slot = [root](std::size_t label) { return label - root; };

  std::vector<double> birth(label_count, 0.0);
  std::vector<std::size_t> parent_of(label_count, root);
  std::vector<std::vector<std::size_t>> children(label_count);
  std::vector<std::size_t> point_parent(n, root);
  std::vector<double> point_lambda(n, 0.0);
  for (const auto& e : tree) {
    if (e.child >= n) {
      birth[slot(e.child)] = e.lambda;
      parent_of[slot(e.child)] = e.parent;
      children[slot(e.parent)].push_back(e.child);
    } else {
      point_parent[e.child] = e.parent;
      point_lambda[e.child] = e.lambda;
    }
  }
  std::vector<double> stability(label_count, 0.0);
  for (const auto& e : tree) {
    stability[slot(e.parent)] +=
        (e.lambda - birth[slot(e.parent)]) * static_cast<double>(e.child_size);
  }

  std::vector<bool> selected(label_count, false);
  const bool has_split = label_count > 1;
  if (has_split) {
    for (std::size_t l = root + 1; l <= max_label; ++l) selected[slot(l)] = true;
    for (std::size_t l = max_label; l > root; --l) {
      double subtree = 0.0;
      for (auto c : children[slot(l)]) subtree += stability[slot(c)];
      if (subtree > stability[slot(l)]) {
        selected[slot(l)] = false;
        stability[slot(l)] = subtree;
      } else {
        std::vector<std::size_t> stack(children[slot(l)]);
        while (!stack.empty()) {
          const auto c = stack.back();
          stack.pop_back();
          selected[slot(c)] = false;
          for (auto g : children[slot(c)]) stack.push_back(g);
        }
      }
    }
  } else {
    selected[slot(root)] = true;
  }

  std::vector<long> raw(n, -1);
  if (has_split) {
    for (std::size_t p = 0; p < n; ++p) {
      std::size_t c = point_parent[p];
      while (c != root && !selected[slot(c)]) c = parent_of[slot(c)];
      if (c != root) raw[p] = static_cast<long>(c);
    }
  } else {
    double last = 0.0;
    for (std::size_t p = 0; p < n; ++p) last = std::max(last, point_lambda[p]);
    std::size_t kept = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (point_lambda[p] >= last) {
        raw[p] = static_cast<long>(root);
        ++kept;
      }
    }
    if (kept < params.min_cluster_size) std::fill(raw.begin(), raw.end(), -1);
  }

  std::unordered_map<long, int> dense;
  for (std::size_t p = 0; p < n; ++p) {
    if (raw[p] < 0) continue;
    auto [it, inserted] = dense.emplace(raw[p], static_cast<int>(dense.size()));
    result.labels[p] = it->second;
  }
  result.cluster_count = dense.size();
  return result;
}

ClusterAssignment hdbscan(std::span<const EmbeddingVector> vectors,
                          const HdbscanParams& params) {
  std::vector<std::span<const float>> points;
  points.reserve(vectors.size());
  for (const auto& v : vectors) points.push_back(v.values());
  return hdbscan(points, params);
}

std::vector<std::string> central_members(std::span<const ClusterItem> items,
                                         std::span<const std::string> member_ids,
                                         std::size_t n) {
  if (member_ids.empty()) throw std::invalid_argument("central_members: empty member set");
  if (n == 0) throw std::invalid_argument("central_members: n must be at least 1");
  std::unordered_map<std::string_view, const ClusterItem*> by_id;
  for (const auto& item : items) by_id.emplace(item.id, &item);
  std::vector<const ClusterItem*> members;
  members.reserve(member_ids.size());
  for (const auto& id : member_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw std::invalid_argument("central_members: unknown member " + id);
    }
    members.push_back(it->second);
  }
  const std::size_t m = members.size();
  std::vector<double> mean(m, 0.0);
  if (m > 1) {
    for (std::size_t i = 0; i < m; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (i != j) sum += euclidean(members[i]->vector, members[j]->vector);
      }
      mean[i] = sum / static_cast<double>(m - 1);
    }
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (mean[a] != mean[b]) return mean[a] < mean[b];
    return members[a]->id < members[b]->id;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(n, m); ++i) out.push_back(members[order[i]]->id);
  return out;
}

}  // namespace consearch
