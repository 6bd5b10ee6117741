#include "lghand/st_graph.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <queue>

namespace lghand {

namespace {

std::vector<int> hop_distances_to_root(const FrameGraph& frame) {
  std::vector<std::vector<int>> adj(frame.num_nodes);
  for (auto [a, b] : frame.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> dist(frame.num_nodes, -1);
  std::queue<int> q;
  dist[frame.root] = 0;
  q.push(frame.root);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
  }
  for (int v = 0; v < frame.num_nodes; ++v)
    if (dist[v] < 0)
      throw ValidationError(
          "st_graph: spatial node " + std::to_string(v) +
          " is disconnected from the root and cannot be ranked");
  return dist;
}

}  // namespace

FrameGraph frame_graph_at_level(const HandTopology& topo, int level) {
  FrameGraph f;
  switch (level) {
    case 21:
      f.num_nodes = HandTopology::kNumJoints;
      for (const Bone& b : topo.bones()) f.edges.emplace_back(b.parent, b.child);
      f.root = topo.root_joint();
      break;
    case 6:
      f.num_nodes = HandTopology::kNumGroups;
      for (int g = 1; g < HandTopology::kNumGroups; ++g)
        f.edges.emplace_back(0, g);
      f.root = 0;
      break;
    case 1:
      f.num_nodes = 1;
      f.root = 0;
      break;
    default:
      throw ValidationError("st_graph: level must be 21, 6 or 1, got " +
                            std::to_string(level));
  }
  return f;
}

STGraph build_st_graph(const HandTopology& topo, int num_frames, int level) {
  STGraph g = build_st_graph(frame_graph_at_level(topo, level), num_frames);
  g.level = level;
  return g;
}

STGraph build_st_graph(const FrameGraph& frame, int num_frames) {
  require(num_frames >= 1, "st_graph: need at least one frame");
  require(frame.num_nodes >= 1, "st_graph: need at least one node per frame");
  require(frame.root >= 0 && frame.root < frame.num_nodes,
          "st_graph: root out of range");

  STGraph g;
  g.num_frames = num_frames;
  g.nodes_per_frame = frame.num_nodes;
  g.level = frame.num_nodes;
  g.frame = frame;

  const int m = g.num_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  for (int t = 0; t < num_frames; ++t)
    for (auto [a, b] : frame.edges) {
      require(a != b, "st_graph: self-loop in spatial edges");
      trip.emplace_back(g.node_index(t, a), g.node_index(t, b), 1.0);
      trip.emplace_back(g.node_index(t, b), g.node_index(t, a), 1.0);
    }
  for (int t = 0; t + 1 < num_frames; ++t)
    for (int i = 0; i < frame.num_nodes; ++i) {
      trip.emplace_back(g.node_index(t, i), g.node_index(t + 1, i), 1.0);
      trip.emplace_back(g.node_index(t + 1, i), g.node_index(t, i), 1.0);
    }
  g.adjacency.resize(m, m);
  g.adjacency.setFromTriplets(
      trip.begin(), trip.end(),
      [](const double&, const double&) { return 1.0; });

  g.partitions = partition_neighbors(g);
  for (int k = 0; k < kNumNeighborClasses; ++k)
    g.normalized[k] = normalize_partition(g.partitions[k]);
  return g;
}

std::array<SparseMatrix, kNumNeighborClasses> partition_neighbors(
    const STGraph& graph, const HandTopology& topo) {
  FrameGraph expected = frame_graph_at_level(topo, graph.level);
  require(expected.num_nodes == graph.nodes_per_frame,
          "st_graph: graph does not match topology at this level");
  return partition_neighbors(graph);
}

std::array<SparseMatrix, kNumNeighborClasses> partition_neighbors(
    const STGraph& graph) {
  std::vector<int> dist = hop_distances_to_root(graph.frame);

  const int m = graph.num_nodes();
  const int n = graph.nodes_per_frame;
  std::array<std::vector<Eigen::Triplet<double>>, kNumNeighborClasses> trip;

  for (int i = 0; i < m; ++i) trip[kCentral].emplace_back(i, i, 1.0);

  for (int col = 0; col < graph.adjacency.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(graph.adjacency, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      if (r == c) continue;
      const int tr = r / n, jr = r % n;
      const int tc = c / n, jc = c % n;
      NeighborClass cls;
      if (tr != tc) {
        cls = tc > tr ? kTimeForward : kTimeBackward;
      } else {
        // Skeleton neighbors always differ by exactly one hop from the
        // root, so closer/further is never a tie.
        cls = dist[jc] < dist[jr] ? kCloserToRoot : kFurtherFromRoot;
      }
      trip[cls].emplace_back(r, c, 1.0);
    }

  std::array<SparseMatrix, kNumNeighborClasses> parts;
  for (int k = 0; k < kNumNeighborClasses; ++k) {
    parts[k].resize(m, m);
    parts[k].setFromTriplets(trip[k].begin(), trip[k].end());
  }
  return parts;
}

SparseMatrix normalize_partition(const SparseMatrix& a) {
  require(a.rows() == a.cols(), "normalize_partition: matrix must be square");
  const int m = static_cast<int>(a.rows());

  Vector degree = Vector::Zero(m);
  for (int col = 0; col < a.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
      require(it.value() >= 0.0,
              "normalize_partition: negative entry at (" +
                  std::to_string(it.row()) + "," + std::to_string(it.col()) +
                  ")");
      degree[it.row()] += it.value();
    }

  Vector inv_sqrt(m);
  for (int i = 0; i < m; ++i)
    inv_sqrt[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;

  SparseMatrix out = a;
  for (int col = 0; col < out.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(out, col); it; ++it)
      it.valueRef() *= inv_sqrt[it.row()] * inv_sqrt[it.col()];
  out.prune(0.0, 0.0);
  return out;
}

PoolingMap pooling_maps(const HandTopology& topo, int from_level,
                        int to_level) {
  const bool fine21 = (from_level == 21 && to_level == 6) ||
                      (from_level == 6 && to_level == 21);
  const bool fine6 = (from_level == 6 && to_level == 1) ||
                     (from_level == 1 && to_level == 6);
  require(fine21 != fine6,
          "pooling_maps: level pair must be (21,6), (6,1) or reversed");

  PoolingMap map;
  if (fine21) {
    map.fine_nodes = HandTopology::kNumJoints;
    map.coarse_nodes = HandTopology::kNumGroups;
    map.group_of = topo.pool_groups_21to6();
  } else {
    map.fine_nodes = HandTopology::kNumGroups;
    map.coarse_nodes = 1;
    map.group_of = topo.pool_groups_6to1();
  }
  map.members.resize(map.coarse_nodes);
  for (int i = 0; i < map.fine_nodes; ++i)
    map.members[map.group_of[i]].push_back(i);
  for (int g = 0; g < map.coarse_nodes; ++g)
    require(!map.members[g].empty(), "pooling_maps: empty group");
  return map;
}

void export_graph_matrices(const STGraph& graph, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("export_graph_matrices: cannot create " + dir);

  auto dump = [&](const SparseMatrix& m, const std::string& name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw IoError("export_graph_matrices: cannot write " + name);
    out << std::setprecision(17);
    Matrix dense = Matrix(m);
    for (int i = 0; i < dense.rows(); ++i) {
      for (int j = 0; j < dense.cols(); ++j)
        out << dense(i, j) << (j + 1 < dense.cols() ? " " : "");
      out << "\n";
    }
  };

  dump(graph.adjacency, "A.txt");
  for (int k = 0; k < kNumNeighborClasses; ++k) {
    dump(graph.partitions[k], "partition_" + std::to_string(k) + ".txt");
    dump(graph.normalized[k], "normalized_" + std::to_string(k) + ".txt");
  }
}

}  // namespace lghand
