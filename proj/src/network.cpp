#include "lghand/network.hpp"

#include <limits>
#include <random>

namespace lghand {

void NetConfig::validate() const {
  require(window_frames >= 1 && window_frames % 2 == 1,
          "net config: window_frames must be odd and positive");
  require(input_channels > 0, "net config: input_channels must be positive");
  require(width21 > 0 && width6 > 0 && width1 > 0,
          "net config: channel widths must be positive");
  require(nonlocal_embed > 0, "net config: nonlocal_embed must be positive");
  require(skip_combine == "concat" || skip_combine == "add",
          "net config: skip_combine must be 'concat' or 'add'");
}

LocalToGlobalNet::LocalToGlobalNet(const HandTopology& topo,
                                   const NetConfig& cfg, uint64_t init_seed)
    : cfg_(cfg),
      topo_(topo),
      graph21_(build_st_graph(topo_, cfg.window_frames, 21)),
      graph6_(build_st_graph(topo_, cfg.window_frames, 6)),
      graph1_(build_st_graph(topo_, cfg.window_frames, 1)),
      map216_(pooling_maps(topo_, 21, 6)),
      map61_(pooling_maps(topo_, 6, 1)),
      enc21_a_("enc21_a", &graph21_, cfg.input_channels, cfg.width21),
      enc21_b_("enc21_b", &graph21_, cfg.width21, cfg.width21),
      enc6_a_("enc6_a", &graph6_, cfg.width21, cfg.width6),
      enc6_b_("enc6_b", &graph6_, cfg.width6, cfg.width6),
      enc1_a_("enc1_a", &graph1_, cfg.width6, cfg.width1),
      enc1_b_("enc1_b", &graph1_, cfg.width1, cfg.width1),
      dec6_a_("dec6_a", &graph6_, cfg.width6, cfg.width6),
      dec6_b_("dec6_b", &graph6_, cfg.width6, cfg.width6),
      dec21_a_("dec21_a", &graph21_, cfg.width21, cfg.width21),
      dec21_b_("dec21_b", &graph21_, cfg.width21, cfg.width21),
      pool216_(&map216_, cfg.window_frames),
      pool61_(&map61_, cfg.window_frames),
      up621_(&map216_, cfg.window_frames),
      up16_(&map61_, cfg.window_frames),
      mix6_("mix6",
            cfg.skip_combine == "concat" ? cfg.width1 + cfg.width6 : cfg.width1,
            cfg.width6),
      mix21_("mix21",
             cfg.skip_combine == "concat" ? cfg.width6 + cfg.width21
                                          : cfg.width6,
             cfg.width21),
      non_local_("non_local", cfg.width21, cfg.nonlocal_embed),
      head_("head", cfg.width21, 3) {
  cfg_.validate();

  std::mt19937_64 rng(init_seed);
  for (Param* p : parameters()) {
    if (p->name.ends_with(".bias") || p->name.ends_with(".scale")) continue;
    // Uniform fan-in init with the ReLU variance correction; the five
    // graph-conv branches sum, so their filters count the branch factor in
    // the fan-in. Without the correction the ten-layer stack attenuates
    // activations to ~3^-10 and the head only ever sees its bias.
    double fan_in = static_cast<double>(p->value.rows());
    if (p->name.find(".theta") != std::string::npos)
      fan_in *= static_cast<double>(kNumNeighborClasses);
    double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < p->value.rows(); ++i)
      for (Eigen::Index j = 0; j < p->value.cols(); ++j)
        p->value(i, j) = dist(rng);
  }
}

std::vector<Param*> LocalToGlobalNet::parameters() {
  std::vector<Param*> out;
  enc21_a_.collect_params(out);
  enc21_b_.collect_params(out);
  enc6_a_.collect_params(out);
  enc6_b_.collect_params(out);
  enc1_a_.collect_params(out);
  enc1_b_.collect_params(out);
  mix6_.collect_params(out);
  dec6_a_.collect_params(out);
  dec6_b_.collect_params(out);
  mix21_.collect_params(out);
  dec21_a_.collect_params(out);
  dec21_b_.collect_params(out);
  non_local_.collect_params(out);
  head_.collect_params(out);
  return out;
}

void LocalToGlobalNet::zero_grad() {
  for (Param* p : parameters()) p->grad.setZero();
}

Matrix LocalToGlobalNet::combine_skip(Linear& mix, const Matrix& upsampled,
                                      const Matrix& skip) {
  if (cfg_.skip_combine == "concat") {
    Matrix cat(upsampled.rows(), upsampled.cols() + skip.cols());
    cat << upsampled, skip;
    return mix.forward(cat);
  }
  return mix.forward(upsampled) + skip;
}

void LocalToGlobalNet::split_skip_grad(Linear& mix, const Matrix& d_combined,
                                       const Matrix& upsampled,
                                       const Matrix& skip, Matrix& d_upsampled,
                                       Matrix& d_skip) {
  if (cfg_.skip_combine == "concat") {
    Matrix d_cat = mix.backward(d_combined);
    d_upsampled = d_cat.leftCols(upsampled.cols());
    d_skip = d_cat.rightCols(skip.cols());
  } else {
    d_upsampled = mix.backward(d_combined);
    d_skip = d_combined;
  }
}

Matrix LocalToGlobalNet::forward_batch(const Matrix& x, int batch) {
  require(batch >= 1, "forward: batch must be positive");
  require(x.rows() == batch * graph21_.num_nodes(),
          "forward: expected " + std::to_string(batch * graph21_.num_nodes()) +
              " rows, got " + std::to_string(x.rows()));
  require(x.cols() == cfg_.input_channels, "forward: channel mismatch");
  require(x.allFinite(), "forward: non-finite input");
  last_batch_ = batch;
  feat_rows_ = x.rows();

  Matrix a = relu_[0].forward(enc21_a_.forward(x, batch));
  skip21_ = relu_[1].forward(enc21_b_.forward(a, batch));

  Matrix p6 = pool216_.forward(skip21_, batch);
  Matrix b = relu_[2].forward(enc6_a_.forward(p6, batch));
  skip6_ = relu_[3].forward(enc6_b_.forward(b, batch));

  Matrix p1 = pool61_.forward(skip6_, batch);
  Matrix c = relu_[4].forward(enc1_a_.forward(p1, batch));
  c = relu_[5].forward(enc1_b_.forward(c, batch));

  up6_out_ = up16_.forward(c, batch);
  Matrix m6 = combine_skip(mix6_, up6_out_, skip6_);
  Matrix d = relu_[6].forward(dec6_a_.forward(m6, batch));
  d = relu_[7].forward(dec6_b_.forward(d, batch));

  up21_out_ = up621_.forward(d, batch);
  Matrix m21 = combine_skip(mix21_, up21_out_, skip21_);
  Matrix e = relu_[8].forward(dec21_a_.forward(m21, batch));
  e = relu_[9].forward(dec21_b_.forward(e, batch));

  Matrix attended = non_local_.forward(e, batch);

  // Gather the central frame's nodes of every sample for the head.
  const int n = graph21_.nodes_per_frame;
  const int m_sample = graph21_.num_nodes();
  const int tc = central_frame();
  Matrix central(batch * n, attended.cols());
  for (int b_i = 0; b_i < batch; ++b_i)
    central.middleRows(b_i * n, n) =
        attended.middleRows(b_i * m_sample + tc * n, n);
  return head_.forward(central);
}

void LocalToGlobalNet::backward_batch(const Matrix& d_out, int batch) {
  require(batch == last_batch_, "backward: batch mismatch with last forward");
  const int n = graph21_.nodes_per_frame;
  const int m_sample = graph21_.num_nodes();
  const int tc = central_frame();
  require(d_out.rows() == batch * n && d_out.cols() == 3,
          "backward: output grad shape mismatch");

  Matrix d_central = head_.backward(d_out);
  Matrix d_attended = Matrix::Zero(feat_rows_, d_central.cols());
  for (int b_i = 0; b_i < batch; ++b_i)
    d_attended.middleRows(b_i * m_sample + tc * n, n) =
        d_central.middleRows(b_i * n, n);

  Matrix d_e = non_local_.backward(d_attended, batch);
  d_e = dec21_b_.backward(relu_[9].backward(d_e), batch);
  Matrix d_m21 = dec21_a_.backward(relu_[8].backward(d_e), batch);

  Matrix d_u21, d_skip21;
  split_skip_grad(mix21_, d_m21, up21_out_, skip21_, d_u21, d_skip21);

  Matrix d_d = up621_.backward(d_u21, batch);
  d_d = dec6_b_.backward(relu_[7].backward(d_d), batch);
  Matrix d_m6 = dec6_a_.backward(relu_[6].backward(d_d), batch);

  Matrix d_u6, d_skip6;
  split_skip_grad(mix6_, d_m6, up6_out_, skip6_, d_u6, d_skip6);

  Matrix d_c = up16_.backward(d_u6, batch);
  d_c = enc1_b_.backward(relu_[5].backward(d_c), batch);
  Matrix d_p1 = enc1_a_.backward(relu_[4].backward(d_c), batch);

  Matrix d_b2 = pool61_.backward(d_p1, batch) + d_skip6;
  d_b2 = enc6_b_.backward(relu_[3].backward(d_b2), batch);
  Matrix d_p6 = enc6_a_.backward(relu_[2].backward(d_b2), batch);

  Matrix d_a2 = pool216_.backward(d_p6, batch) + d_skip21;
  d_a2 = enc21_b_.backward(relu_[1].backward(d_a2), batch);
  enc21_a_.backward(relu_[0].backward(d_a2), batch);
}

double LocalToGlobalNet::kink_margin() const {
  double margin = std::numeric_limits<double>::infinity();
  for (const Relu& r : relu_) margin = std::min(margin, r.kink_margin());
  margin = std::min(margin, pool216_.kink_margin());
  margin = std::min(margin, pool61_.kink_margin());
  return margin;
}

Coords3 LocalToGlobalNet::forward(const Seq2& window) {
  require(static_cast<int>(window.size()) == cfg_.window_frames,
          "forward: expected " + std::to_string(cfg_.window_frames) +
              " frames, got " + std::to_string(window.size()));
  const int n = graph21_.nodes_per_frame;
  Matrix x(cfg_.window_frames * n, 2);
  for (int t = 0; t < cfg_.window_frames; ++t) {
    require(window[t].rows() == n, "forward: expected 21 joints per frame");
    require(window[t].allFinite(), "forward: non-finite input");
    x.middleRows(t * n, n) = window[t];
  }
  Matrix y = forward_batch(x, 1);
  Coords3 out(n, 3);
  out = y;
  return out;
}

}  // namespace lghand
