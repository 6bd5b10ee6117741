#include "lghand/topology.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

namespace lghand {

namespace {

std::vector<std::string> canonical_joint_names() {
  const char* fingers[] = {"Thumb", "Index", "Middle", "Ring", "Pinky"};
  std::vector<std::string> names;
  names.emplace_back("Wrist");
  for (const char* f : fingers) names.push_back(std::string(f) + "MCP");
  for (const char* f : fingers) {
    names.push_back(std::string(f) + "PIP");
    names.push_back(std::string(f) + "DIP");
    names.push_back(std::string(f) + "TIP");
  }
  return names;
}

}  // namespace

HandTopology::HandTopology(std::vector<std::string> joint_names,
                           std::vector<Bone> bones,
                           std::vector<int> pool_groups_21to6)
    : joint_names_(std::move(joint_names)),
      bones_(std::move(bones)),
      pool_groups_21to6_(std::move(pool_groups_21to6)),
      pool_groups_6to1_(kNumGroups, 0) {
  require(static_cast<int>(joint_names_.size()) == kNumJoints,
          "topology: expected 21 joints");
  require(static_cast<int>(bones_.size()) == kNumBones,
          "topology: expected 20 bones");
  require(static_cast<int>(pool_groups_21to6_.size()) == kNumJoints,
          "topology: pooling map must cover all 21 joints");

  // Parent bone per joint; also catches multi-parent joints.
  std::vector<int> parent_bone(kNumJoints, -1);
  for (int b = 0; b < kNumBones; ++b) {
    const Bone& bone = bones_[b];
    require(bone.parent >= 0 && bone.parent < kNumJoints && bone.child >= 0 &&
                bone.child < kNumJoints && bone.parent != bone.child,
            "topology: bone endpoints out of range");
    require(bone.child != 0, "topology: wrist cannot be a bone child");
    require(parent_bone[bone.child] < 0,
            "topology: joint " + std::to_string(bone.child) +
                " has more than one parent bone");
    parent_bone[bone.child] = b;
  }
  for (int j = 1; j < kNumJoints; ++j)
    require(parent_bone[j] >= 0,
            "topology: joint " + std::to_string(j) + " unattached");

  // Chains: walk up from each leaf; exactly five leaves, four bones each.
  std::vector<int> child_count(kNumJoints, 0);
  for (const Bone& b : bones_) ++child_count[b.parent];
  std::vector<int> leaves;
  for (int j = 1; j < kNumJoints; ++j)
    if (child_count[j] == 0) leaves.push_back(j);
  require(static_cast<int>(leaves.size()) == kNumFingers,
          "topology: expected 5 fingertip leaves, found " +
              std::to_string(leaves.size()));

  joint_types_.assign(kNumJoints, 0);
  finger_of_joint_.assign(kNumJoints, -1);
  std::set<int> used_bones;
  for (int f = 0; f < kNumFingers; ++f) {
    std::vector<int> up;
    int j = leaves[f];
    while (j != 0) {
      int b = parent_bone[j];
      up.push_back(b);
      j = bones_[b].parent;
      require(static_cast<int>(up.size()) <= kBonesPerChain,
              "topology: finger chain longer than 4 bones");
    }
    require(static_cast<int>(up.size()) == kBonesPerChain,
            "topology: finger chain must have exactly 4 bones");
    std::reverse(up.begin(), up.end());
    for (int s = 0; s < kBonesPerChain; ++s) {
      finger_chains_[f][s] = up[s];
      used_bones.insert(up[s]);
      int child = bones_[up[s]].child;
      joint_types_[child] = s + 1;  // MCP, PIP, DIP, TIP
      finger_of_joint_[child] = f;
    }
  }
  require(static_cast<int>(used_bones.size()) == kNumBones,
          "topology: every bone must belong to exactly one chain");

  // Adjacent bones within a chain share a joint; 3 pairs per finger.
  for (int f = 0; f < kNumFingers; ++f)
    for (int s = 0; s + 1 < kBonesPerChain; ++s)
      consecutive_pairs_.emplace_back(finger_chains_[f][s],
                                      finger_chains_[f][s + 1]);

  validate();
}

void HandTopology::validate() const {
  require(static_cast<int>(consecutive_pairs_.size()) == 15,
          "topology: expected 15 consecutive bone pairs");

  // Pooling groups: palm = wrist + MCPs (6 joints), fingers 3 each, and the
  // palm group must carry index 0 so it can serve as the 6-node root.
  std::vector<int> group_size(kNumGroups, 0);
  for (int j = 0; j < kNumJoints; ++j) {
    int g = pool_groups_21to6_[j];
    require(g >= 0 && g < kNumGroups, "topology: group index out of range");
    ++group_size[g];
  }
  require(pool_groups_21to6_[0] == 0, "topology: wrist must be in group 0");
  require(group_size[0] == 6, "topology: palm group must have 6 joints");
  for (int g = 1; g < kNumGroups; ++g)
    require(group_size[g] == 3,
            "topology: finger group must have 3 joints, group " +
                std::to_string(g) + " has " + std::to_string(group_size[g]));
  for (int j = 0; j < kNumJoints; ++j) {
    bool palm = joint_types_[j] <= 1;  // wrist or MCP
    require(palm == (pool_groups_21to6_[j] == 0),
            "topology: joint " + joint_names_[j] + " assigned to wrong group");
  }
}

HandTopology build_topology() {
  std::vector<Bone> bones;
  std::vector<int> groups(HandTopology::kNumJoints, 0);
  for (int f = 0; f < HandTopology::kNumFingers; ++f) {
    int mcp = 1 + f;
    int pip = 6 + 3 * f;
    bones.push_back({0, mcp});
    bones.push_back({mcp, pip});
    bones.push_back({pip, pip + 1});
    bones.push_back({pip + 1, pip + 2});
    groups[pip] = groups[pip + 1] = groups[pip + 2] = 1 + f;
  }
  return HandTopology(canonical_joint_names(), std::move(bones),
                      std::move(groups));
}

HandTopology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("topology: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("topology: invalid JSON in " + path + ": " + e.what());
  }
  for (const auto& [key, _] : j.items())
    require(key == "joint_names" || key == "bones" ||
                key == "pool_groups_21to6",
            "topology: unknown key '" + key + "' in " + path);
  require(j.contains("joint_names") && j.contains("bones") &&
              j.contains("pool_groups_21to6"),
          "topology: file must define joint_names, bones, pool_groups_21to6");

  std::vector<std::string> names = j["joint_names"].get<std::vector<std::string>>();
  std::vector<Bone> bones;
  for (const auto& pair : j["bones"]) {
    require(pair.is_array() && pair.size() == 2,
            "topology: each bone must be a [parent, child] pair");
    bones.push_back({pair[0].get<int>(), pair[1].get<int>()});
  }
  std::vector<int> groups = j["pool_groups_21to6"].get<std::vector<int>>();
  return HandTopology(std::move(names), std::move(bones), std::move(groups));
}

Coords3 bone_vectors(const Coords3& pose, const HandTopology& topo) {
  require(pose.rows() == HandTopology::kNumJoints,
          "bone_vectors: pose must have 21 joints");
  require(pose.allFinite(), "bone_vectors: non-finite coordinates");
  Coords3 out(HandTopology::kNumBones, 3);
  const auto& bones = topo.bones();
  for (int b = 0; b < HandTopology::kNumBones; ++b)
    out.row(b) = pose.row(bones[b].child) - pose.row(bones[b].parent);
  return out;
}

Seq3 bone_vectors(const Seq3& pose, const HandTopology& topo) {
  Seq3 out;
  out.reserve(pose.size());
  for (const auto& frame : pose) out.push_back(bone_vectors(frame, topo));
  return out;
}

}  // namespace lghand
