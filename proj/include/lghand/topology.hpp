#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "lghand/common.hpp"

namespace lghand {

/// Directed bone segment, parent is the joint closer to the wrist.
struct Bone {
  int parent;
  int child;
};

/// The 21-joint hand skeleton: 20 bones arranged in 5 four-bone finger
/// chains rooted at the wrist, the 15 consecutive-bone pairs used by the
/// angle loss, and the 21->6->1 pooling group assignments.
///
/// Immutable after construction; safe to share across threads.
class HandTopology {
 public:
  static constexpr int kNumJoints = 21;
  static constexpr int kNumBones = 20;
  static constexpr int kNumFingers = 5;
  static constexpr int kBonesPerChain = 4;
  static constexpr int kNumGroups = 6;

  HandTopology(std::vector<std::string> joint_names, std::vector<Bone> bones,
               std::vector<int> pool_groups_21to6);

  const std::vector<std::string>& joint_names() const { return joint_names_; }
  const std::vector<Bone>& bones() const { return bones_; }

  /// Bone indices along each finger, wrist side first.
  const std::array<std::array<int, kBonesPerChain>, kNumFingers>&
  finger_chains() const {
    return finger_chains_;
  }

  /// Unordered pairs of adjacent bones on the same finger chain (15 total).
  const std::vector<std::pair<int, int>>& consecutive_pairs() const {
    return consecutive_pairs_;
  }

  /// Joint index -> group index for the 21-to-6 pooling (group 0 = palm).
  const std::vector<int>& pool_groups_21to6() const {
    return pool_groups_21to6_;
  }

  /// Group index -> 0 for the 6-to-1 pooling.
  const std::vector<int>& pool_groups_6to1() const { return pool_groups_6to1_; }

  int root_joint() const { return 0; }

  /// Joint type along a chain: 0=Wrist, 1=MCP, 2=PIP, 3=DIP, 4=TIP.
  int joint_type(int joint) const { return joint_types_[joint]; }

  /// Finger owning a non-wrist joint (0..4), -1 for the wrist.
  int finger_of_joint(int joint) const { return finger_of_joint_[joint]; }

 private:
  void validate() const;

  std::vector<std::string> joint_names_;
  std::vector<Bone> bones_;
  std::array<std::array<int, kBonesPerChain>, kNumFingers> finger_chains_;
  std::vector<std::pair<int, int>> consecutive_pairs_;
  std::vector<int> pool_groups_21to6_;
  std::vector<int> pool_groups_6to1_;
  std::vector<int> joint_types_;
  std::vector<int> finger_of_joint_;
};

/// Canonical topology in FPHAB joint order: wrist, the five MCPs
/// (thumb..pinky), then PIP/DIP/TIP triples per finger.
HandTopology build_topology();

/// Load an alternate ordering from a JSON override file; the structure must
/// still satisfy every hand-topology invariant. Schema: see README.
HandTopology load_topology(const std::string& path);

/// out[t].row(b) = pose[t].row(child(b)) - pose[t].row(parent(b)).
/// Rejects non-finite input.
Seq3 bone_vectors(const Seq3& pose, const HandTopology& topo);

/// Single-frame convenience overload.
Coords3 bone_vectors(const Coords3& pose, const HandTopology& topo);

}  // namespace lghand
