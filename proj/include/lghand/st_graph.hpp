#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "lghand/common.hpp"
#include "lghand/topology.hpp"

namespace lghand {

/// Neighbor classes of the partitioned graph convolution.
enum NeighborClass {
  kCentral = 0,
  kTimeForward = 1,
  kTimeBackward = 2,
  kCloserToRoot = 3,
  kFurtherFromRoot = 4,
  kNumNeighborClasses = 5
};

/// Per-frame skeleton: undirected spatial edges plus the root node used to
/// rank neighbors as closer-to/further-from root.
struct FrameGraph {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;
  int root = 0;
};

/// The hand skeleton at one of the three scales: the 21-joint bone tree,
/// the 6-node palm-to-fingers star, or a single node.
FrameGraph frame_graph_at_level(const HandTopology& topo, int level);

/// Spatial-temporal graph over T frames. Node (t, i) lives at index
/// t * nodes_per_frame + i.
///
/// partitions sum to A + I exactly; normalized holds
/// D_k^{-1/2} A_k D_k^{-1/2} with zero-degree rows/columns mapped to zero.
struct STGraph {
  int num_frames = 0;
  int nodes_per_frame = 0;
  int level = 0;  // 21, 6 or 1 for the standard scales
  FrameGraph frame;
  SparseMatrix adjacency;
  std::array<SparseMatrix, kNumNeighborClasses> partitions;
  std::array<SparseMatrix, kNumNeighborClasses> normalized;

  int num_nodes() const { return num_frames * nodes_per_frame; }
  int node_index(int frame_idx, int joint) const {
    return frame_idx * nodes_per_frame + joint;
  }
};

/// Build the graph for T frames at the given level (21, 6 or 1). Spatial
/// edges follow the skeleton at level 21, the palm star at level 6, nothing
/// at level 1; temporal edges join same-index nodes of consecutive frames at
/// every level.
STGraph build_st_graph(const HandTopology& topo, int num_frames, int level);

/// Same construction over an arbitrary per-frame skeleton.
STGraph build_st_graph(const FrameGraph& frame, int num_frames);

/// Split A + I into the five neighbor-class matrices. Identity entries are
/// central; temporal entries split by frame direction; spatial entries by
/// hop distance to the frame root. A spatially disconnected node cannot be
/// ranked and is rejected.
std::array<SparseMatrix, kNumNeighborClasses> partition_neighbors(
    const STGraph& graph, const HandTopology& topo);
std::array<SparseMatrix, kNumNeighborClasses> partition_neighbors(
    const STGraph& graph);

/// D^{-1/2} A D^{-1/2} with D_ii = row sum of A; 0^{-1/2} * 0 := 0.
/// Rejects negative entries.
SparseMatrix normalize_partition(const SparseMatrix& a);

/// Per-frame pooling between two consecutive scales.
struct PoolingMap {
  int fine_nodes = 0;    // per frame
  int coarse_nodes = 0;  // per frame
  std::vector<int> group_of;              // fine node -> coarse node
  std::vector<std::vector<int>> members;  // coarse node -> fine nodes
};

/// (21,6) or (6,1) pooling, or the reversed pair for unpooling (the map is
/// the same object either way: group_of drives pooling, members unpooling).
PoolingMap pooling_maps(const HandTopology& topo, int from_level,
                        int to_level);

/// Write adjacency, partitions, and normalized partitions as plain-text
/// dense matrices under dir (A.txt, partition_k.txt, normalized_k.txt).
void export_graph_matrices(const STGraph& graph, const std::string& dir);

}  // namespace lghand
