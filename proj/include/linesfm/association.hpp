#pragma once

#include <optional>
#include <vector>

#include "linesfm/geometry.hpp"
#include "linesfm/matching.hpp"

namespace linesfm {

// Undirected match graph over segment observations. Nodes are kept sorted by
// (view, index); the adjacency has a true diagonal and never links two nodes
// of the same view.
struct AssociationGraph {
  std::vector<SegmentRef> nodes;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> adjacency;

  int NodeIndex(const SegmentRef& ref) const;  // -1 if absent
  int EdgeCount() const;
};

struct LineCluster {
  int id = -1;
  std::vector<SegmentRef> observations;  // sorted, at most one per view
  std::optional<PluckerLine> initial_line;
};

// `extra_nodes` lets callers include segments that received no match.
AssociationGraph BuildAssociationGraph(const std::vector<PairwiseMatch>& matches,
                                       const std::vector<SegmentRef>& extra_nodes = {});

struct ClusterOptions {
  // Single-node moves that reduce the number of violated pairwise relations.
  bool local_refinement = true;
};

std::vector<LineCluster> ClearCluster(const AssociationGraph& g, const ClusterOptions& options = {});

// Number of disagreements of a partition with the graph: edges cut between
// clusters plus non-adjacent pairs placed together.
int PartitionDisagreement(const AssociationGraph& g, const std::vector<int>& labels);

// segments[view][index] in the world frame.
PluckerLine InitLandmarkLine(const LineCluster& cluster, const std::vector<std::vector<Segment3D>>& segments);

}  // namespace linesfm
