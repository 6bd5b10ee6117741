#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lghand/dataio.hpp"
#include "lghand/losses.hpp"
#include "lghand/network.hpp"

namespace lghand {

/// Training schedule and optimization knobs. The learning rate follows
/// initial_lr * epoch_decay^(epoch-1) * step_decay^floor((epoch-1)/step_decay_every).
struct TrainConfig {
  int epochs = 30;
  int batch_size = 256;
  double initial_lr = 1e-3;
  double epoch_decay = 0.95;
  double step_decay = 0.5;
  int step_decay_every = 10;
  LossWeights weights;
  uint64_t seed = 1;
  double noise_std = 0.0;  // pixels, applied when windows are built
  bool grad_clip = false;
  double grad_clip_norm = 10.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool finger_per_bone = false;
  std::string topology_file;  // optional override, empty = canonical
  NetConfig net;              // net.window_frames is the window length T

  void validate() const;
};

/// Strict JSON config: unknown keys are rejected, every field optional with
/// the defaults above. Schema: see README. The LGHAND_SEED environment
/// variable, when set, overrides the seed.
TrainConfig load_train_config(const std::string& path);
void save_train_config(const TrainConfig& cfg, const std::string& path);

double learning_rate_at(int epoch, const TrainConfig& cfg);

/// Map between the network's raw 21x3 outputs and millimeter coordinates,
/// stored in checkpoints.
///
/// affine mode:      mm = raw * scale + mean.
/// camera_uvz mode:  raw is (u, v, z) per joint -- pixel coordinates in the
///   window's normalized 2D frame plus standardized camera depth; the
///   denormalization unprojects through the stored camera (and its inverse
///   extrinsics) back to millimeter coordinates. With per-window input
///   normalization this keeps the u/v targets in the input's own frame,
///   which absolute-XYZ regression lacks.
struct OutputNorm {
  std::string mode = "affine";  // or "camera_uvz"
  // affine
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  double scale = 1.0;
  // camera_uvz
  CameraModel camera;
  double depth_mean = 0.0;
  double depth_scale = 1.0;
};

OutputNorm compute_output_norm(const std::vector<WindowSample>& samples);
OutputNorm compute_output_norm_uvz(const std::vector<WindowSample>& samples,
                                   const CameraModel& camera);

/// Raw network output -> millimeter coordinates for one sample.
Coords3 denormalize_prediction(const OutputNorm& norm,
                               const WindowSample& sample,
                               const Coords3& raw);

/// Chain rule d(loss)/d(mm) -> d(loss)/d(raw) at the given raw output.
Coords3 denormalize_grad(const OutputNorm& norm, const WindowSample& sample,
                         const Coords3& raw, const Coords3& grad_mm);

/// Adaptive-moment optimizer over a fixed parameter list.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Param*> params, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step(double lr);

  long step_count() const { return step_count_; }
  const std::vector<Param*>& params() const { return params_; }
  std::vector<Matrix>& moment1() { return m_; }
  std::vector<Matrix>& moment2() { return v_; }
  void set_step_count(long n) { step_count_ = n; }

 private:
  std::vector<Param*> params_;
  double beta1_, beta2_, eps_;
  std::vector<Matrix> m_, v_;
  long step_count_ = 0;
};

/// Per-epoch means of the loss terms over the training set, plus the lr
/// used. total is exactly the weighted combination of the four terms.
struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double pose = 0.0;
  double finger = 0.0;
  double angle = 0.0;
  double direction = 0.0;
  double total = 0.0;
  long degenerate_bones = 0;
};

std::string epoch_log_header();                    // tab-separated
std::string format_epoch_log(const EpochStats&);   // one log line

/// Called after every epoch; return false to stop early.
using EpochCallback = std::function<bool(const EpochStats&)>;

struct TrainResult {
  std::vector<EpochStats> log;
  OutputNorm norm;
};

/// Shuffled mini-batch training minimizing the weighted four-term loss.
/// Batch reduction is the mean over samples; epoch numbering starts at
/// start_epoch so resumed runs continue the schedule. A non-finite loss
/// term aborts with TrainingDiverged naming the term and batch. If
/// optimizer is null a fresh Adam is used; if fixed_norm is null the output
/// normalization is computed from the samples.
TrainResult train(LocalToGlobalNet& net,
                  const std::vector<WindowSample>& samples,
                  const TrainConfig& cfg, AdamOptimizer* optimizer = nullptr,
                  int start_epoch = 1, const EpochCallback& callback = {},
                  const OutputNorm* fixed_norm = nullptr);

/// Denormalized millimeter predictions for a sample set (batched).
std::vector<Coords3> predict_samples(LocalToGlobalNet& net,
                                     const std::vector<WindowSample>& samples,
                                     const OutputNorm& norm);

}  // namespace lghand
