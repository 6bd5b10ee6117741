#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lghand/common.hpp"
#include "lghand/layers.hpp"
#include "lghand/st_graph.hpp"
#include "lghand/topology.hpp"

namespace lghand {

/// Architecture knobs of the local-to-global network.
struct NetConfig {
  int window_frames = 3;  // T, odd
  int input_channels = 2;
  int width21 = 64;
  int width6 = 128;
  int width1 = 256;
  int nonlocal_embed = 32;
  std::string skip_combine = "concat";  // or "add"

  void validate() const;
  bool operator==(const NetConfig&) const = default;
};

/// Encoder-decoder over the 21/6/1 graph scales with skip connections, a
/// non-local block, and a linear head that reads the temporally central
/// frame:
///
///   conv@21 x2 -> pool -> conv@6 x2 -> pool -> conv@1 x2
///     -> unpool + skip@6 -> conv@6 x2 -> unpool + skip@21 -> conv@21 x2
///     -> non-local -> head (width21 -> 3) on the central frame.
///
/// ReLU after every convolution; the skip joins by channel concatenation
/// followed by a 1x1 mix back to the scale's width (or by projected
/// addition with skip_combine = "add").
///
/// One logical stream per instance: forward_batch caches activations that
/// the next backward_batch consumes.
class LocalToGlobalNet {
 public:
  LocalToGlobalNet(const HandTopology& topo, const NetConfig& cfg,
                   uint64_t init_seed);

  LocalToGlobalNet(const LocalToGlobalNet&) = delete;
  LocalToGlobalNet& operator=(const LocalToGlobalNet&) = delete;

  /// x: (batch * T * 21) x input_channels stacked node features.
  /// Returns (batch * 21) x 3 central-frame coordinates.
  Matrix forward_batch(const Matrix& x, int batch);

  /// d_out: gradient w.r.t. the last forward_batch output; accumulates
  /// parameter gradients.
  void backward_batch(const Matrix& d_out, int batch);

  /// Single-window inference: T frames of 21 x 2 inputs -> 21 x 3.
  Coords3 forward(const Seq2& window);

  std::vector<Param*> parameters();
  void zero_grad();

  const NetConfig& config() const { return cfg_; }

  /// Smallest distance of the last forward pass to any ReLU or max-pool
  /// kink; finite-difference checks are only trustworthy above it.
  double kink_margin() const;

  const HandTopology& topology() const { return topo_; }
  int nodes21() const { return graph21_.num_nodes(); }
  int central_frame() const { return cfg_.window_frames / 2; }

 private:
  NetConfig cfg_;
  HandTopology topo_;
  STGraph graph21_, graph6_, graph1_;
  PoolingMap map216_, map61_;

  GraphConv enc21_a_, enc21_b_;
  GraphConv enc6_a_, enc6_b_;
  GraphConv enc1_a_, enc1_b_;
  GraphConv dec6_a_, dec6_b_;
  GraphConv dec21_a_, dec21_b_;
  Relu relu_[10];
  GraphMaxPool pool216_, pool61_;
  GraphUpsample up621_, up16_;
  Linear mix6_, mix21_;
  NonLocalBlock non_local_;
  Linear head_;

  // Forward caches for the skip joins and the head gather.
  Matrix skip21_, skip6_;
  Matrix up6_out_, up21_out_;
  Eigen::Index feat_rows_ = 0;
  int last_batch_ = 0;

  Matrix combine_skip(Linear& mix, const Matrix& upsampled,
                      const Matrix& skip);
  void split_skip_grad(Linear& mix, const Matrix& d_combined,
                       const Matrix& upsampled, const Matrix& skip,
                       Matrix& d_upsampled, Matrix& d_skip);
};

}  // namespace lghand
