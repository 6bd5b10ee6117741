#pragma once

#include <cstdint>
#include <vector>

#include "lghand/dataio.hpp"
#include "lghand/topology.hpp"

namespace lghand {

struct SyntheticDataset {
  std::vector<SkeletonSequence> sequences;
  CameraModel camera;
};

/// Forward-kinematics hand sequences for desk-scale experiments: fixed
/// per-sequence bone lengths (20-90 mm), smoothly varying sinusoidal joint
/// flexion, and a slow global rigid motion that keeps the hand in front of
/// the camera. Bit-deterministic per seed; no bone ever has zero length.
///
/// Sequences are numbered 1..num_sequences under one action so the
/// 3rd-sequence evaluation split applies whenever num_sequences >= 3.
SyntheticDataset generate_synthetic(int num_sequences, int frames_per_seq,
                                    uint64_t seed);

}  // namespace lghand
