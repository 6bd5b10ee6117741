#pragma once

#include <limits>
#include <string>
#include <vector>

#include "lghand/common.hpp"
#include "lghand/st_graph.hpp"

namespace lghand {

/// Named parameter array with its gradient accumulator.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)) {}
};

// All layers consume batch-stacked node features: a (batch * M) x C matrix
// where M is the per-sample node count and row b*M + t*N + i holds node
// (t, i) of sample b. forward caches what backward needs; backward
// accumulates parameter gradients and returns the input gradient. One
// logical stream per layer instance.

/// Partitioned graph convolution: Z = sum_k Ahat_k X Theta_k + bias.
class GraphConv {
 public:
  GraphConv(const std::string& name, const STGraph* graph, int in_channels,
            int out_channels, bool with_bias = true);

  Matrix forward(const Matrix& x, int batch);
  Matrix backward(const Matrix& dz, int batch);
  void collect_params(std::vector<Param*>& out);

  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }

 private:
  const STGraph* graph_;
  int in_channels_;
  int out_channels_;
  bool with_bias_;
  std::array<Param, kNumNeighborClasses> theta_;
  Param bias_;
  Matrix x_cache_;
};

/// Elementwise max(x, 0).
class Relu {
 public:
  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& dy) const;

  /// Distance of the last input to the activation kink at zero.
  double kink_margin() const { return x_cache_.cwiseAbs().minCoeff(); }

 private:
  Matrix x_cache_;
};

/// Per-group, per-channel, per-frame maximum over the pooling map.
class GraphMaxPool {
 public:
  GraphMaxPool(const PoolingMap* map, int num_frames);

  Matrix forward(const Matrix& x, int batch);
  Matrix backward(const Matrix& dy, int batch) const;

  /// Smallest top-1 vs top-2 gap seen in the last forward (inf for
  /// single-member groups); the argmax routing is non-smooth below it.
  double kink_margin() const { return margin_; }

 private:
  const PoolingMap* map_;
  int num_frames_;
  Eigen::MatrixXi argmax_;  // coarse row, channel -> fine row in x
  Eigen::Index fine_rows_ = 0;
  double margin_ = std::numeric_limits<double>::infinity();
};

/// Broadcast each coarse node's features to all its members.
class GraphUpsample {
 public:
  GraphUpsample(const PoolingMap* map, int num_frames);

  Matrix forward(const Matrix& x, int batch) const;
  Matrix backward(const Matrix& dy, int batch) const;

 private:
  const PoolingMap* map_;
  int num_frames_;
};

/// Node-wise affine map Y = X W + b.
class Linear {
 public:
  Linear(const std::string& name, int in_channels, int out_channels,
         bool with_bias = true);

  Matrix forward(const Matrix& x);
  Matrix backward(const Matrix& dy);
  void collect_params(std::vector<Param*>& out);

 private:
  int in_channels_;
  int out_channels_;
  bool with_bias_;
  Param weight_;
  Param bias_;
  Matrix x_cache_;
};

/// Embedded-Gaussian self-attention over all nodes of a sample with a
/// zero-initialized residual scale, so a fresh block is exactly the
/// identity map.
class NonLocalBlock {
 public:
  NonLocalBlock(const std::string& name, int channels, int embed_channels);

  Matrix forward(const Matrix& x, int batch);
  Matrix backward(const Matrix& dy, int batch);
  void collect_params(std::vector<Param*>& out);

  double residual_scale() const { return scale_.value(0, 0); }

 private:
  int channels_;
  int embed_channels_;
  Param w_query_, w_key_, w_value_, w_out_;
  Param scale_;  // 1x1
  Matrix x_cache_;
  std::vector<Matrix> q_, k_, v_, attn_, h_;
};

/// Multiply each per-sample block of x by the sparse matrix a.
Matrix block_apply(const SparseMatrix& a, const Matrix& x, int batch);

}  // namespace lghand
