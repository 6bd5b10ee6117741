// Shared test utilities: seeded pose generators, conditioning guards for
// finite-difference checks, and the gradient comparison metric.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "lghand/common.hpp"
#include "lghand/losses.hpp"
#include "lghand/topology.hpp"

namespace testsup {

using lghand::Coords3;
using lghand::HandTopology;
using lghand::Seq3;

inline Coords3 random_pose(std::mt19937_64& rng, double lo = -100.0,
                           double hi = 100.0, double min_bone_mm = 1.0) {
  static const HandTopology topo = lghand::build_topology();
  std::uniform_real_distribution<double> dist(lo, hi);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Coords3 pose(HandTopology::kNumJoints, 3);
    for (int i = 0; i < pose.rows(); ++i)
      for (int d = 0; d < 3; ++d) pose(i, d) = dist(rng);
    bool ok = true;
    for (const auto& b : topo.bones())
      if ((pose.row(b.child) - pose.row(b.parent)).norm() < min_bone_mm) {
        ok = false;
        break;
      }
    if (ok) return pose;
  }
  throw std::runtime_error("random_pose: rejection sampling failed");
}

inline Seq3 random_pose_seq(std::mt19937_64& rng, int frames,
                            double lo = -100.0, double hi = 100.0,
                            double min_bone_mm = 1.0) {
  Seq3 seq;
  for (int t = 0; t < frames; ++t)
    seq.push_back(random_pose(rng, lo, hi, min_bone_mm));
  return seq;
}

// Finite differences straddle the pose around kinks (|.| at equal angles,
// arccos clamps, zero-length bones), so gradient checks sample pairs that
// keep a margin from every non-smooth point.
inline bool well_conditioned_pair(const Seq3& gt, const Seq3& pred,
                                  const HandTopology& topo) {
  const double angle_margin = 1e-5;   // |cos| distance from the clamp
  const double diff_margin = 1e-4;    // |angle difference| from zero
  const double dist_margin = 1e-3;    // joint distance from zero

  Seq3 u = lghand::bone_vectors(gt, topo);
  Seq3 v = lghand::bone_vectors(pred, topo);
  for (size_t t = 0; t < gt.size(); ++t) {
    for (int i = 0; i < gt[t].rows(); ++i)
      if ((gt[t].row(i) - pred[t].row(i)).norm() < dist_margin) return false;

    auto cos_of = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
      return a.dot(b) / (a.norm() * b.norm());
    };
    for (int b = 0; b < HandTopology::kNumBones; ++b) {
      if (u[t].row(b).norm() < 1.0 || v[t].row(b).norm() < 1.0) return false;
      double c = cos_of(u[t].row(b).transpose(), v[t].row(b).transpose());
      if (std::abs(c) > 1.0 - angle_margin) return false;
    }
    for (auto [i, j] : topo.consecutive_pairs()) {
      double cg = cos_of(u[t].row(i).transpose(), u[t].row(j).transpose());
      double cp = cos_of(v[t].row(i).transpose(), v[t].row(j).transpose());
      if (std::abs(cg) > 1.0 - angle_margin) return false;
      if (std::abs(cp) > 1.0 - angle_margin) return false;
      if (std::abs(std::acos(cg) - std::acos(cp)) < diff_margin) return false;
    }
    // Finger-length differences away from the |.| kink.
    for (const auto& chain : topo.finger_chains()) {
      double lg = 0.0, lp = 0.0;
      for (int b : chain) {
        lg += u[t].row(b).norm();
        lp += v[t].row(b).norm();
      }
      if (std::abs(lg - lp) < diff_margin) return false;
    }
  }
  return true;
}

inline std::pair<Seq3, Seq3> random_conditioned_pair(std::mt19937_64& rng,
                                                     int frames,
                                                     const HandTopology& topo) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    Seq3 gt = random_pose_seq(rng, frames);
    Seq3 pred = random_pose_seq(rng, frames);
    if (well_conditioned_pair(gt, pred, topo)) return {gt, pred};
  }
  throw std::runtime_error("random_conditioned_pair: sampling failed");
}

/// l2-norm relative error between analytic and numerical gradients.
inline double grad_rel_error(const lghand::Vector& analytic,
                             const lghand::Vector& numeric) {
  double denom = std::max({analytic.norm(), numeric.norm(), 1e-12});
  return (analytic - numeric).norm() / denom;
}

inline lghand::Vector flatten(const Seq3& seq) {
  Eigen::Index total = 0;
  for (const auto& f : seq) total += f.size();
  lghand::Vector out(total);
  Eigen::Index at = 0;
  for (const auto& f : seq)
    for (Eigen::Index i = 0; i < f.rows(); ++i)
      for (int d = 0; d < 3; ++d) out[at++] = f(i, d);
  return out;
}

/// Central finite differences of f w.r.t. every coordinate of pred.
template <typename F>
lghand::Vector fd_gradient(Seq3& pred, F f, const double h = 1e-5) {
  Eigen::Index total = 0;
  for (const auto& fr : pred) total += fr.size();
  lghand::Vector g(total);
  Eigen::Index at = 0;
  for (auto& frame : pred)
    for (Eigen::Index i = 0; i < frame.rows(); ++i)
      for (int d = 0; d < 3; ++d) {
        const double orig = frame(i, d);
        frame(i, d) = orig + h;
        const double fp = f();
        frame(i, d) = orig - h;
        const double fm = f();
        frame(i, d) = orig;
        g[at++] = (fp - fm) / (2.0 * h);
      }
  return g;
}

inline Eigen::Matrix3d rotation_from(double ax, double ay, double az) {
  return (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace testsup
