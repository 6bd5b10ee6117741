#pragma once

#include <Eigen/Core>

#include "lghand/common.hpp"
#include "lghand/topology.hpp"

namespace lghand {

/// Weights of the four objective terms.
struct LossWeights {
  double pose = 1.0;
  double finger = 0.1;
  double angle = 0.1;
  double direction = 0.01;

  void validate() const;
};

/// Per-term values (mm for pose/finger, radians for angle/direction) and the
/// weighted total. degenerate_bones counts near-zero-length bone vectors
/// whose angle contributions were skipped.
struct LossReport {
  double pose = 0.0;
  double finger = 0.0;
  double angle = 0.0;
  double direction = 0.0;
  double total = 0.0;
  long degenerate_bones = 0;
};

struct AngleResult {
  double radians = 0.0;
  bool degenerate = false;
};

/// Angle between two 3-vectors in [0, pi]. The cosine is clamped to
/// [-1+1e-7, 1-1e-7] before arccos; vectors with norm below 1e-8 yield 0
/// with the degenerate flag set. Rejects non-finite input.
AngleResult angle_between(const Eigen::Vector3d& v1, const Eigen::Vector3d& v2);

/// angle_between plus partial derivatives w.r.t. both vectors. Gradients are
/// zero in the degenerate and clamped regions.
struct AngleGradResult {
  double radians = 0.0;
  bool degenerate = false;
  Eigen::Vector3d d_v1 = Eigen::Vector3d::Zero();
  Eigen::Vector3d d_v2 = Eigen::Vector3d::Zero();
};
AngleGradResult angle_between_grad(const Eigen::Vector3d& v1,
                                   const Eigen::Vector3d& v2);

/// Sum over frames and joints of per-joint Euclidean distance (not squared).
/// If grad is non-null, d(loss)/d(pred) is accumulated into it.
double pose_loss(const Seq3& gt, const Seq3& pred, Seq3* grad = nullptr);

/// Per-finger chain length discrepancy, summed over frames and fingers.
/// With per_bone set, compares individual bone lengths instead (20 terms).
double finger_length_loss(const Seq3& gt, const Seq3& pred,
                          const HandTopology& topo, bool per_bone = false,
                          Seq3* grad = nullptr);

/// Inter-bone angle discrepancy over the 15 consecutive pairs, radians.
double angle_loss(const Seq3& gt, const Seq3& pred, const HandTopology& topo,
                  Seq3* grad = nullptr, long* degenerate_tally = nullptr);

/// Angle between each ground-truth bone vector and its prediction, radians.
double direction_loss(const Seq3& gt, const Seq3& pred,
                      const HandTopology& topo, Seq3* grad = nullptr,
                      long* degenerate_tally = nullptr);

/// All four terms plus the exact weighted total. If grad is non-null it is
/// resized/zeroed and receives d(total)/d(pred).
LossReport total_loss(const Seq3& gt, const Seq3& pred,
                      const HandTopology& topo, const LossWeights& weights,
                      Seq3* grad = nullptr, bool finger_per_bone = false);

}  // namespace lghand
