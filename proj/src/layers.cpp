#include "lghand/layers.hpp"

#include <cmath>

namespace lghand {

namespace {

void check_batch_shape(const Matrix& x, int batch, Eigen::Index per_sample,
                       const char* who) {
  require(batch >= 1, std::string(who) + ": batch must be positive");
  require(x.rows() == batch * per_sample,
          std::string(who) + ": expected " +
              std::to_string(batch * per_sample) + " rows, got " +
              std::to_string(x.rows()));
}

}  // namespace

Matrix block_apply(const SparseMatrix& a, const Matrix& x, int batch) {
  const Eigen::Index m = a.rows();
  Matrix y(x.rows(), x.cols());
  for (int b = 0; b < batch; ++b)
    y.middleRows(b * m, m) = a * x.middleRows(b * m, m);
  return y;
}

// ---------------------------------------------------------------------------
// GraphConv

GraphConv::GraphConv(const std::string& name, const STGraph* graph,
                     int in_channels, int out_channels, bool with_bias)
    : graph_(graph),
      in_channels_(in_channels),
      out_channels_(out_channels),
      with_bias_(with_bias) {
  require(in_channels > 0 && out_channels > 0,
          "graph_conv: channel counts must be positive");
  for (int k = 0; k < kNumNeighborClasses; ++k)
    theta_[k] = Param(name + ".theta" + std::to_string(k), in_channels,
                      out_channels);
  if (with_bias_) bias_ = Param(name + ".bias", 1, out_channels);
}

Matrix GraphConv::forward(const Matrix& x, int batch) {
  check_batch_shape(x, batch, graph_->num_nodes(), "graph_conv");
  require(x.cols() == in_channels_, "graph_conv: channel mismatch");
  x_cache_ = x;

  Matrix z = Matrix::Zero(x.rows(), out_channels_);
  for (int k = 0; k < kNumNeighborClasses; ++k)
    z.noalias() += block_apply(graph_->normalized[k], x, batch) * theta_[k].value;
  if (with_bias_) z.rowwise() += bias_.value.row(0);
  return z;
}

Matrix GraphConv::backward(const Matrix& dz, int batch) {
  check_batch_shape(dz, batch, graph_->num_nodes(), "graph_conv");
  require(dz.cols() == out_channels_, "graph_conv: grad channel mismatch");

  Matrix dx = Matrix::Zero(x_cache_.rows(), in_channels_);
  for (int k = 0; k < kNumNeighborClasses; ++k) {
    Matrix propagated = block_apply(graph_->normalized[k], x_cache_, batch);
    theta_[k].grad.noalias() += propagated.transpose() * dz;
    SparseMatrix at = graph_->normalized[k].transpose();
    dx.noalias() += block_apply(at, dz, batch) * theta_[k].value.transpose();
  }
  if (with_bias_) bias_.grad.row(0) += dz.colwise().sum();
  return dx;
}

void GraphConv::collect_params(std::vector<Param*>& out) {
  for (auto& p : theta_) out.push_back(&p);
  if (with_bias_) out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// Relu

Matrix Relu::forward(const Matrix& x) {
  x_cache_ = x;
  return x.cwiseMax(0.0);
}

Matrix Relu::backward(const Matrix& dy) const {
  return (x_cache_.array() > 0.0).cast<double>() * dy.array();
}

// ---------------------------------------------------------------------------
// GraphMaxPool

GraphMaxPool::GraphMaxPool(const PoolingMap* map, int num_frames)
    : map_(map), num_frames_(num_frames) {}

Matrix GraphMaxPool::forward(const Matrix& x, int batch) {
  const Eigen::Index fine = num_frames_ * map_->fine_nodes;
  const Eigen::Index coarse = num_frames_ * map_->coarse_nodes;
  check_batch_shape(x, batch, fine, "graph_max_pool");
  fine_rows_ = x.rows();

  Matrix y(batch * coarse, x.cols());
  argmax_.resize(batch * coarse, x.cols());
  margin_ = std::numeric_limits<double>::infinity();
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < num_frames_; ++t)
      for (int g = 0; g < map_->coarse_nodes; ++g) {
        const Eigen::Index out_row =
            b * coarse + t * map_->coarse_nodes + g;
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
          double best = -std::numeric_limits<double>::infinity();
          double second = -std::numeric_limits<double>::infinity();
          Eigen::Index best_row = -1;
          for (int member : map_->members[g]) {
            const Eigen::Index row = b * fine + t * map_->fine_nodes + member;
            if (x(row, c) > best) {
              second = best;
              best = x(row, c);
              best_row = row;
            } else if (x(row, c) > second) {
              second = x(row, c);
            }
          }
          y(out_row, c) = best;
          argmax_(out_row, c) = static_cast<int>(best_row);
          // A tie between ReLU-clipped zeros is locally flat on both the
          // analytic and numeric side; any other near-tie is a kink.
          if (map_->members[g].size() > 1 && !(best == 0.0 && second == 0.0))
            margin_ = std::min(margin_, best - second);
        }
      }
  return y;
}

Matrix GraphMaxPool::backward(const Matrix& dy, int batch) const {
  const Eigen::Index coarse = num_frames_ * map_->coarse_nodes;
  check_batch_shape(dy, batch, coarse, "graph_max_pool");
  Matrix dx = Matrix::Zero(fine_rows_, dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r)
    for (Eigen::Index c = 0; c < dy.cols(); ++c)
      dx(argmax_(r, c), c) += dy(r, c);
  return dx;
}

// ---------------------------------------------------------------------------
// GraphUpsample

GraphUpsample::GraphUpsample(const PoolingMap* map, int num_frames)
    : map_(map), num_frames_(num_frames) {}

Matrix GraphUpsample::forward(const Matrix& x, int batch) const {
  const Eigen::Index coarse = num_frames_ * map_->coarse_nodes;
  const Eigen::Index fine = num_frames_ * map_->fine_nodes;
  check_batch_shape(x, batch, coarse, "graph_upsample");

  Matrix y(batch * fine, x.cols());
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < num_frames_; ++t)
      for (int i = 0; i < map_->fine_nodes; ++i)
        y.row(b * fine + t * map_->fine_nodes + i) =
            x.row(b * coarse + t * map_->coarse_nodes + map_->group_of[i]);
  return y;
}

Matrix GraphUpsample::backward(const Matrix& dy, int batch) const {
  const Eigen::Index coarse = num_frames_ * map_->coarse_nodes;
  const Eigen::Index fine = num_frames_ * map_->fine_nodes;
  check_batch_shape(dy, batch, fine, "graph_upsample");

  Matrix dx = Matrix::Zero(batch * coarse, dy.cols());
  for (int b = 0; b < batch; ++b)
    for (int t = 0; t < num_frames_; ++t)
      for (int i = 0; i < map_->fine_nodes; ++i)
        dx.row(b * coarse + t * map_->coarse_nodes + map_->group_of[i]) +=
            dy.row(b * fine + t * map_->fine_nodes + i);
  return dx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(const std::string& name, int in_channels, int out_channels,
               bool with_bias)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      with_bias_(with_bias),
      weight_(name + ".weight", in_channels, out_channels) {
  if (with_bias_) bias_ = Param(name + ".bias", 1, out_channels);
}

Matrix Linear::forward(const Matrix& x) {
  require(x.cols() == in_channels_, "linear: channel mismatch");
  x_cache_ = x;
  Matrix y = x * weight_.value;
  if (with_bias_) y.rowwise() += bias_.value.row(0);
  return y;
}

Matrix Linear::backward(const Matrix& dy) {
  require(dy.cols() == out_channels_, "linear: grad channel mismatch");
  weight_.grad.noalias() += x_cache_.transpose() * dy;
  if (with_bias_) bias_.grad.row(0) += dy.colwise().sum();
  return dy * weight_.value.transpose();
}

void Linear::collect_params(std::vector<Param*>& out) {
  out.push_back(&weight_);
  if (with_bias_) out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// NonLocalBlock

NonLocalBlock::NonLocalBlock(const std::string& name, int channels,
                             int embed_channels)
    : channels_(channels),
      embed_channels_(embed_channels),
      w_query_(name + ".w_query", channels, embed_channels),
      w_key_(name + ".w_key", channels, embed_channels),
      w_value_(name + ".w_value", channels, embed_channels),
      w_out_(name + ".w_out", embed_channels, channels),
      scale_(name + ".scale", 1, 1) {
  require(channels > 0 && embed_channels > 0,
          "non_local: channel counts must be positive");
}

Matrix NonLocalBlock::forward(const Matrix& x, int batch) {
  require(x.cols() == channels_, "non_local: channel mismatch");
  require(x.rows() % batch == 0, "non_local: rows not divisible by batch");
  const Eigen::Index m = x.rows() / batch;
  x_cache_ = x;
  q_.assign(batch, {});
  k_.assign(batch, {});
  v_.assign(batch, {});
  attn_.assign(batch, {});
  h_.assign(batch, {});

  const double s = scale_.value(0, 0);
  Matrix y = x;
  for (int b = 0; b < batch; ++b) {
    auto xb = x.middleRows(b * m, m);
    q_[b].noalias() = xb * w_query_.value;
    k_[b].noalias() = xb * w_key_.value;
    v_[b].noalias() = xb * w_value_.value;
    Matrix scores = q_[b] * k_[b].transpose();
    // Row softmax, shifted by the row max for stability.
    Matrix a(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::RowVectorXd row =
          (scores.row(i).array() - scores.row(i).maxCoeff()).exp();
      a.row(i) = row / row.sum();
    }
    attn_[b] = std::move(a);
    h_[b].noalias() = attn_[b] * v_[b];
    y.middleRows(b * m, m).noalias() += s * h_[b] * w_out_.value;
  }
  return y;
}

Matrix NonLocalBlock::backward(const Matrix& dy, int batch) {
  require(dy.rows() == x_cache_.rows() && dy.cols() == channels_,
          "non_local: grad shape mismatch");
  const Eigen::Index m = dy.rows() / batch;
  const double s = scale_.value(0, 0);

  Matrix dx = dy;
  double dscale = 0.0;
  for (int b = 0; b < batch; ++b) {
    auto xb = x_cache_.middleRows(b * m, m);
    auto dyb = dy.middleRows(b * m, m);

    dscale += (dyb.array() * (h_[b] * w_out_.value).array()).sum();
    w_out_.grad.noalias() += s * h_[b].transpose() * dyb;
    Matrix dh = s * dyb * w_out_.value.transpose();

    Matrix da = dh * v_[b].transpose();
    Matrix dv = attn_[b].transpose() * dh;

    // Softmax backward per row: ds = a .* (da - <da, a>).
    Matrix ds(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      double dot = da.row(i).dot(attn_[b].row(i));
      ds.row(i) =
          attn_[b].row(i).array() * (da.row(i).array() - dot);
    }

    Matrix dq = ds * k_[b];
    Matrix dk = ds.transpose() * q_[b];

    w_query_.grad.noalias() += xb.transpose() * dq;
    w_key_.grad.noalias() += xb.transpose() * dk;
    w_value_.grad.noalias() += xb.transpose() * dv;
    dx.middleRows(b * m, m).noalias() += dq * w_query_.value.transpose() +
                                         dk * w_key_.value.transpose() +
                                         dv * w_value_.value.transpose();
  }
  scale_.grad(0, 0) += dscale;
  return dx;
}

void NonLocalBlock::collect_params(std::vector<Param*>& out) {
  out.push_back(&w_query_);
  out.push_back(&w_key_);
  out.push_back(&w_value_);
  out.push_back(&w_out_);
  out.push_back(&scale_);
}

}  // namespace lghand
