#include "lghand/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

namespace lghand {

namespace {

constexpr double kPi = std::numbers::pi;

struct FingerShape {
  double spread = 0.0;                      // in-palm direction, radians
  std::array<double, 4> lengths{};          // wrist->MCP, prox, mid, dist (mm)
  std::array<double, 3> base{}, amp{}, freq{}, phase{};  // flexion params
};

struct MotionShape {
  std::array<double, 3> angle_base{}, angle_amp{}, angle_freq{},
      angle_phase{};
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d trans_amp = Eigen::Vector3d::Zero();
  std::array<double, 3> trans_freq{}, trans_phase{};
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Eigen::Matrix3d euler_rotation(double yaw, double pitch, double roll) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace

SyntheticDataset generate_synthetic(int num_sequences, int frames_per_seq,
                                    uint64_t seed) {
  require(num_sequences >= 0, "generate_synthetic: negative sequence count");
  require(frames_per_seq >= 1 || num_sequences == 0,
          "generate_synthetic: frames_per_seq must be positive");

  SyntheticDataset out;
  out.camera.fx = 600.0;
  out.camera.fy = 600.0;
  out.camera.u0 = 320.0;
  out.camera.v0 = 240.0;

  // Spread across the palm, thumb to pinky.
  const double base_spread[5] = {-1.05, -0.35, 0.0, 0.35, 0.70};
  const double palm_lo[5] = {40, 75, 78, 72, 62};
  const double palm_hi[5] = {50, 88, 90, 85, 76};

  for (int s = 0; s < num_sequences; ++s) {
    std::seed_seq ss{static_cast<unsigned long long>(seed),
                     static_cast<unsigned long long>(s + 1)};
    std::mt19937_64 rng(ss);

    std::array<FingerShape, 5> fingers;
    for (int f = 0; f < 5; ++f) {
      FingerShape& fs = fingers[f];
      fs.spread = base_spread[f] + uniform(rng, -0.08, 0.08);
      fs.lengths = {uniform(rng, palm_lo[f], palm_hi[f]),
                    uniform(rng, 30.0, 45.0), uniform(rng, 22.0, 32.0),
                    uniform(rng, 20.0, 25.0)};
      for (int j = 0; j < 3; ++j) {
        fs.base[j] = uniform(rng, 0.1, 0.45);
        fs.amp[j] = uniform(rng, 0.1, 0.55);
        fs.freq[j] = uniform(rng, 0.5, 2.0);
        fs.phase[j] = uniform(rng, 0.0, 2.0 * kPi);
      }
    }

    MotionShape mo;
    for (int a = 0; a < 3; ++a) {
      mo.angle_base[a] = uniform(rng, -0.4, 0.4);
      mo.angle_amp[a] = uniform(rng, 0.05, 0.35);
      mo.angle_freq[a] = uniform(rng, 0.3, 1.5);
      mo.angle_phase[a] = uniform(rng, 0.0, 2.0 * kPi);
    }
    mo.center = Eigen::Vector3d(uniform(rng, -35.0, 35.0),
                                uniform(rng, -30.0, 30.0),
                                uniform(rng, 470.0, 630.0));
    mo.trans_amp = Eigen::Vector3d(uniform(rng, 5.0, 25.0),
                                   uniform(rng, 5.0, 20.0),
                                   uniform(rng, 5.0, 25.0));
    for (int a = 0; a < 3; ++a) {
      mo.trans_freq[a] = uniform(rng, 0.3, 1.2);
      mo.trans_phase[a] = uniform(rng, 0.0, 2.0 * kPi);
    }

    SkeletonSequence seq;
    seq.subject = "Subject_1";
    seq.action = "synthetic_motion";
    seq.sequence_number = s + 1;

    for (int t = 0; t < frames_per_seq; ++t) {
      const double tau = static_cast<double>(t) /
                         std::max(1, frames_per_seq - 1);
      Coords3 joints(HandTopology::kNumJoints, 3);
      joints.row(0).setZero();  // wrist, hand-local frame

      for (int f = 0; f < 5; ++f) {
        const FingerShape& fs = fingers[f];
        Eigen::Vector3d dir(std::sin(fs.spread), std::cos(fs.spread), 0.0);
        Eigen::Vector3d axis(std::cos(fs.spread), -std::sin(fs.spread), 0.0);

        Eigen::Vector3d pos = fs.lengths[0] * dir;  // MCP
        joints.row(1 + f) = pos.transpose();

        double cum = 0.0;
        for (int j = 0; j < 3; ++j) {
          double flex = fs.base[j] +
                        fs.amp[j] * std::sin(2.0 * kPi * fs.freq[j] * tau +
                                             fs.phase[j]);
          cum += flex;
          Eigen::Vector3d seg_dir = Eigen::AngleAxisd(cum, axis) * dir;
          pos += fs.lengths[j + 1] * seg_dir;
          joints.row(6 + 3 * f + j) = pos.transpose();
        }
      }

      // Global rigid motion.
      double ang[3];
      for (int a = 0; a < 3; ++a)
        ang[a] = mo.angle_base[a] +
                 mo.angle_amp[a] *
                     std::sin(2.0 * kPi * mo.angle_freq[a] * tau +
                              mo.angle_phase[a]);
      Eigen::Matrix3d rot = euler_rotation(ang[0], ang[1], ang[2]);
      Eigen::Vector3d trans = mo.center;
      for (int a = 0; a < 3; ++a)
        trans[a] += mo.trans_amp[a] *
                    std::sin(2.0 * kPi * mo.trans_freq[a] * tau +
                             mo.trans_phase[a]);

      for (int i = 0; i < HandTopology::kNumJoints; ++i)
        joints.row(i) =
            (rot * joints.row(i).transpose() + trans).transpose();

      seq.frame_indices.push_back(t);
      seq.frames.push_back(std::move(joints));
    }
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

}  // namespace lghand
