#include "linesfm/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>

namespace linesfm {

int AssociationGraph::NodeIndex(const SegmentRef& ref) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), ref);
  if (it == nodes.end() || *it != ref) return -1;
  return static_cast<int>(it - nodes.begin());
}

int AssociationGraph::EdgeCount() const {
  const int n = static_cast<int>(nodes.size());
  int count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) count += adjacency(i, j) ? 1 : 0;
  }
  return count;
}

AssociationGraph BuildAssociationGraph(const std::vector<PairwiseMatch>& matches,
                                       const std::vector<SegmentRef>& extra_nodes) {
  std::set<SegmentRef> node_set(extra_nodes.begin(), extra_nodes.end());
  for (const auto& m : matches) {
    if (m.a.view == m.b.view) {
      Throw(ErrorCode::kSameViewEdge, "match links two segments of view " + std::to_string(m.a.view));
    }
    node_set.insert(m.a);
    node_set.insert(m.b);
  }
  AssociationGraph g;
  g.nodes.assign(node_set.begin(), node_set.end());
  const int n = static_cast<int>(g.nodes.size());
  g.adjacency.setConstant(n, n, false);
  for (int i = 0; i < n; ++i) g.adjacency(i, i) = true;
  for (const auto& m : matches) {
    const int a = g.NodeIndex(m.a);
    const int b = g.NodeIndex(m.b);
    g.adjacency(a, b) = g.adjacency(b, a) = true;
  }
  return g;
}

int PartitionDisagreement(const AssociationGraph& g, const std::vector<int>& labels) {
  const int n = static_cast<int>(g.nodes.size());
  int cost = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool same = labels[i] == labels[j];
      if (same != g.adjacency(i, j)) ++cost;
    }
  }
  return cost;
}

namespace {

std::vector<std::vector<int>> ConnectedComponents(const AssociationGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> members{s};
    comp[s] = static_cast<int>(out.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      for (int j = 0; j < n; ++j) {
        if (comp[j] < 0 && g.adjacency(members[k], j)) {
          comp[j] = comp[s];
          members.push_back(j);
        }
      }
    }
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  return out;
}

// Spectral clustering of one connected component; returns a cluster label per
// member (labels local to the component).
std::vector<int> SpectralAssign(const AssociationGraph& g, const std::vector<int>& members) {
  const int n = static_cast<int>(members.size());
  if (n == 1) return {0};

  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = g.adjacency(members[i], members[j]) ? 1.0 : 0.0;
  }
  const Eigen::VectorXd inv_sqrt_deg = A.rowwise().sum().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd L =
      Eigen::MatrixXd::Identity(n, n) - inv_sqrt_deg.asDiagonal() * A * inv_sqrt_deg.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  const Eigen::VectorXd& lambda = es.eigenvalues();

  std::map<int, int> per_view;
  for (int v : members) ++per_view[g.nodes[v].view];
  int min_clusters = 1;
  for (const auto& [view, count] : per_view) min_clusters = std::max(min_clusters, count);

  int m = n;
  if (min_clusters < n) {
    double best_gap = -1.0;
    for (int k = min_clusters; k < n; ++k) {
      const double gap = lambda(k) - lambda(k - 1);
      if (gap > best_gap + 1e-12) {
        best_gap = gap;
        m = k;
      }
    }
  }

  Eigen::MatrixXd embed = es.eigenvectors().leftCols(m);
  for (int i = 0; i < n; ++i) {
    const double norm = embed.row(i).norm();
    if (norm > 0) embed.row(i) /= norm;
  }

  // Farthest-point pivots, starting from the first node.
  std::vector<int> pivots{0};
  Eigen::VectorXd min_dist(n);
  for (int i = 0; i < n; ++i) min_dist(i) = (embed.row(i) - embed.row(0)).norm();
  while (static_cast<int>(pivots.size()) < m) {
    int next = -1;
    double far = -1.0;
    for (int i = 0; i < n; ++i) {
      if (std::find(pivots.begin(), pivots.end(), i) != pivots.end()) continue;
      if (min_dist(i) > far + 1e-12) {
        far = min_dist(i);
        next = i;
      }
    }
    if (next < 0) break;
    pivots.push_back(next);
    for (int i = 0; i < n; ++i) min_dist(i) = std::min(min_dist(i), (embed.row(i) - embed.row(next)).norm());
  }

  std::vector<int> label(n, -1);
  std::vector<std::set<int>> cluster_views;
  for (int p : pivots) {
    label[p] = static_cast<int>(cluster_views.size());
    cluster_views.push_back({g.nodes[members[p]].view});
  }

  struct Candidate {
    double dist;
    int node;
  };
  std::vector<Candidate> order;
  for (int i = 0; i < n; ++i) {
    if (label[i] >= 0) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (int p : pivots) nearest = std::min(nearest, (embed.row(i) - embed.row(p)).norm());
    order.push_back({nearest, i});
  }
  std::stable_sort(order.begin(), order.end(), [](const Candidate& a, const Candidate& b) { return a.dist < b.dist; });

  for (const auto& cand : order) {
    const int i = cand.node;
    const int view = g.nodes[members[i]].view;
    std::vector<std::pair<double, int>> ranked;
    for (std::size_t c = 0; c < pivots.size(); ++c) {
      ranked.emplace_back((embed.row(i) - embed.row(pivots[c])).norm(), static_cast<int>(c));
    }
    std::stable_sort(ranked.begin(), ranked.end());
    int chosen = -1;
    for (const auto& [d, c] : ranked) {
      if (!cluster_views[c].count(view)) {
        chosen = c;
        break;
      }
    }
    if (chosen < 0) {
      chosen = static_cast<int>(cluster_views.size());
      cluster_views.emplace_back();
    }
    label[i] = chosen;
    cluster_views[chosen].insert(view);
  }
  return label;
}

// Greedy single-node moves and pairwise cluster merges that lower the
// disagreement count without breaking distinctness.
void RefineLabels(const AssociationGraph& g, const std::vector<int>& members, std::vector<int>& label) {
  const int n = static_cast<int>(members.size());
  auto adj = [&](int i, int j) { return g.adjacency(members[i], members[j]); };
  auto view = [&](int i) { return g.nodes[members[i]].view; };

  for (int pass = 0; pass < 100; ++pass) {
    bool improved = false;
    for (int v = 0; v < n; ++v) {
      const int next_label = *std::max_element(label.begin(), label.end()) + 1;
      // score(c) = edges(v, c) - non_edges(v, c), excluding v itself.
      std::map<int, int> score;
      std::map<int, bool> blocked;
      for (int u = 0; u < n; ++u) {
        if (u == v) continue;
        score[label[u]] += adj(v, u) ? 1 : -1;
        if (view(u) == view(v)) blocked[label[u]] = true;
      }
      const int own = score.count(label[v]) ? score[label[v]] : 0;
      int best_label = label[v];
      int best_gain = 0;
      for (const auto& [c, s] : score) {
        if (c == label[v] || blocked[c]) continue;
        if (s - own > best_gain) {
          best_gain = s - own;
          best_label = c;
        }
      }
      if (-own > best_gain) {
        best_gain = -own;
        best_label = next_label;
      }
      if (best_label != label[v]) {
        label[v] = best_label;
        improved = true;
      }
    }

    std::map<int, std::vector<int>> clusters;
    for (int i = 0; i < n; ++i) clusters[label[i]].push_back(i);
    std::vector<int> ids;
    for (const auto& [c, m] : clusters) ids.push_back(c);
    for (std::size_t a = 0; a < ids.size(); ++a) {
      for (std::size_t b = a + 1; b < ids.size(); ++b) {
        const auto& ca = clusters[ids[a]];
        const auto& cb = clusters[ids[b]];
        if (ca.empty() || cb.empty()) continue;
        int gain = 0;
        bool feasible = true;
        for (int i : ca) {
          for (int j : cb) {
            gain += adj(i, j) ? 1 : -1;
            feasible = feasible && view(i) != view(j);
          }
        }
        if (feasible && gain > 0) {
          for (int j : cb) label[j] = ids[a];
          clusters[ids[a]].insert(clusters[ids[a]].end(), cb.begin(), cb.end());
          clusters[ids[b]].clear();
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
}

}  // namespace

std::vector<LineCluster> ClearCluster(const AssociationGraph& g, const ClusterOptions& options) {
  std::vector<std::vector<SegmentRef>> groups;
  for (const auto& members : ConnectedComponents(g)) {
    std::vector<int> label = SpectralAssign(g, members);
    if (options.local_refinement) RefineLabels(g, members, label);
    std::map<int, std::vector<SegmentRef>> by_label;
    for (std::size_t i = 0; i < members.size(); ++i) by_label[label[i]].push_back(g.nodes[members[i]]);
    for (auto& [l, refs] : by_label) {
      std::sort(refs.begin(), refs.end());
      groups.push_back(std::move(refs));
    }
  }
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  std::vector<LineCluster> clusters;
  clusters.reserve(groups.size());
  for (auto& refs : groups) {
    LineCluster c;
    c.id = static_cast<int>(clusters.size());
    c.observations = std::move(refs);
    clusters.push_back(std::move(c));
  }
  return clusters;
}

PluckerLine InitLandmarkLine(const LineCluster& cluster, const std::vector<std::vector<Segment3D>>& segments) {
  if (cluster.observations.empty()) Throw(ErrorCode::kDegenerateCluster, "cluster has no observations");
  std::vector<Vec3> pts;
  for (const auto& ref : cluster.observations) {
    const Segment3D& s = segments.at(ref.view).at(ref.index);
    pts.push_back(s.start);
    pts.push_back(s.end);
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : pts) scatter += (p - centroid) * (p - centroid).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  const double top = es.eigenvalues()(2);
  const double second = es.eigenvalues()(1);
  if (!(top > 0.0) || second * 2.0 > top) {
    Throw(ErrorCode::kDegenerateCluster, "cluster " + std::to_string(cluster.id) + " has no dominant direction");
  }
  Vec3 d = es.eigenvectors().col(2);
  const Segment3D& first = segments.at(cluster.observations.front().view).at(cluster.observations.front().index);
  if (d.dot(first.end - first.start) < 0) d = -d;
  return PluckerLine(d, centroid.cross(d));
}

}  // namespace linesfm
