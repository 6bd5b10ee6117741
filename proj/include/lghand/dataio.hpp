#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Geometry>

#include "lghand/common.hpp"
#include "lghand/topology.hpp"

namespace lghand {

/// One recorded sequence of 21-joint 3D skeletons, millimeters.
struct SkeletonSequence {
  std::vector<long> frame_indices;  // strictly increasing
  Seq3 frames;                      // one 21 x 3 matrix per frame
  std::string subject;
  std::string action;
  int sequence_number = 0;

  size_t size() const { return frames.size(); }
};

/// Pinhole camera with optional rigid extrinsics (world -> camera).
struct CameraModel {
  double fx = 0.0, fy = 0.0;  // focal lengths, pixels
  double u0 = 0.0, v0 = 0.0;  // principal point, pixels
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate() const;
};

CameraModel load_camera(const std::string& path);
void save_camera(const CameraModel& cam, const std::string& path);

/// One training/eval sample: a T-frame window of normalized 2D inputs and
/// the central frame's 3D target.
struct WindowSample {
  Matrix input;    // (T * 21) x 2, zero-mean/unit-std per window
  Coords3 target;  // 21 x 3, millimeters
  std::string action;
  int sequence_number = 0;
  long center_frame_index = 0;
  Eigen::Vector2d norm_mean = Eigen::Vector2d::Zero();
  double norm_scale = 1.0;
};

/// Parse the FPHAB skeleton text format: one line per frame, a frame index
/// followed by 63 floats (21 joints x xyz). Reports the offending line on
/// wrong column counts, non-numeric tokens, or non-increasing frame indices.
SkeletonSequence parse_fphab_skeleton(std::istream& in);
SkeletonSequence parse_fphab_skeleton_file(const std::string& path);

void write_skeleton(const SkeletonSequence& seq, std::ostream& out);
void write_skeleton_file(const SkeletonSequence& seq, const std::string& path);

/// 2D variant used by the predict workflow: frame index + 42 floats.
struct Skeleton2dSequence {
  std::vector<long> frame_indices;
  Seq2 frames;
};
Skeleton2dSequence parse_skeleton_2d_file(const std::string& path);
void write_skeleton_2d_file(const Skeleton2dSequence& seq,
                            const std::string& path);

/// Pinhole projection of every frame; all depths after extrinsics must be
/// positive, otherwise the offending frame and joint are named.
Seq2 project_to_2d(const SkeletonSequence& seq, const CameraModel& cam);

/// Slide a T-frame window over the sequence (no boundary padding), add
/// optional seeded i.i.d. Gaussian pixel noise, and normalize each window's
/// 2D coordinates to zero mean and unit pooled std (constants kept in the
/// sample). Sequences shorter than T yield an empty list.
std::vector<WindowSample> make_windows(const Seq2& seq2d,
                                       const SkeletonSequence& seq3d, int T,
                                       double noise_std,
                                       uint64_t noise_seed = 2024);

/// Normalize a raw window the same way make_windows does.
void normalize_window(Matrix& window, Eigen::Vector2d& mean, double& scale);

/// Paper split: sequence number 3 evaluates, everything else trains.
std::pair<std::vector<SkeletonSequence>, std::vector<SkeletonSequence>>
split_train_eval(const std::vector<SkeletonSequence>& sequences);

/// Walk a dataset root laid out as Subject/Action/SequenceNumber/skeleton.txt
/// (deterministic order). The root must also hold camera.json.
std::vector<SkeletonSequence> load_dataset(const std::string& root);

}  // namespace lghand
